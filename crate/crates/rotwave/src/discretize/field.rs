use num_complex::Complex64 as C64;

use super::Grid;
use crate::{Error, Result};

/// Grid function with `m` components per node, stored node-major:
/// entry `node * m + component`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    pub grid: Grid,
    pub m: usize,
    pub data: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<C64>;

impl<T: Clone + Default> Field<T> {
    pub fn zeros(grid: Grid, m: usize) -> Self {
        Self { grid, m, data: vec![T::default(); m * grid.nodes()] }
    }

    pub fn from_vec(grid: Grid, m: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != m * grid.nodes() {
            return Err(Error::Dimension(format!(
                "field length {} != m * N^d = {}",
                data.len(),
                m * grid.nodes()
            )));
        }
        Ok(Self { grid, m, data })
    }

    pub fn from_fn(grid: Grid, m: usize, mut f: impl FnMut(&[f64], &mut [T])) -> Self {
        let mut out = Self::zeros(grid, m);
        for node in 0..grid.nodes() {
            let x = grid.position(node);
            f(&x[..grid.d], &mut out.data[node * m..(node + 1) * m]);
        }
        out
    }

    pub fn node(&self, node: usize) -> &[T] {
        &self.data[node * self.m..(node + 1) * self.m]
    }

    pub fn same_shape<U>(&self, other: &Field<U>) -> bool {
        self.grid == other.grid && self.m == other.m
    }
}

impl RealField {
    pub fn to_complex(&self) -> ComplexField {
        Field { grid: self.grid, m: self.m, data: self.data.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    /// Discrete L2 norm (sum |v|^2 h^d)^(1/2).
    pub fn l2(&self) -> f64 {
        (self.data.iter().map(|x| x * x).sum::<f64>() * self.grid.cell()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    /// Pointwise Euclidean norm over components.
    pub fn pointwise_norm(&self) -> Vec<f64> {
        self.data.chunks(self.m).map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect()
    }
}

impl ComplexField {
    pub fn l2(&self) -> f64 {
        (self.data.iter().map(|x| x.norm_sqr()).sum::<f64>() * self.grid.cell()).sqrt()
    }

    pub fn pointwise_norm(&self) -> Vec<f64> {
        self.data.chunks(self.m).map(|c| c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()).collect()
    }
}
