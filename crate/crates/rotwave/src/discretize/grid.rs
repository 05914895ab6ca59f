use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform grid on [-R, R]^d with N points per axis; nodes are numbered row-major
/// with axis 0 slowest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub d: usize,
    pub r: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(d: usize, r: f64, n: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Invalid(format!("grid dimension {d} not in 1..=3")));
        }
        if n < 8 {
            return Err(Error::Invalid(format!("need N >= 8 points per axis, got {n}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Invalid(format!("half-width R = {r} must be positive")));
        }
        Ok(Self { d, r, n })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.r / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.r + i as f64 * self.h()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    pub fn multi_index(&self, node: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        let mut rest = node;
        for axis in (0..self.d).rev() {
            idx[axis] = rest % self.n;
            rest /= self.n;
        }
        idx
    }

    pub fn position(&self, node: usize) -> [f64; 3] {
        let idx = self.multi_index(node);
        let mut x = [0.0; 3];
        for axis in 0..self.d {
            x[axis] = self.coord(idx[axis]);
        }
        x
    }

    /// Cell volume h^d.
    pub fn cell(&self) -> f64 {
        self.h().powi(self.d as i32)
    }
}
