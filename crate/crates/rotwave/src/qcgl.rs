//! Cubic-quintic complex Ginzburg-Landau nonlinearity, in complex and real form.

use serde::{Deserialize, Serialize};

use crate::coeffs::SystemCoefficients;
use crate::linalg::{self, CMat};
use crate::{Error, Result, C64};

/// Reaction term of a real m-component system.
pub trait Nonlinearity: Sync {
    fn m(&self) -> usize;
    fn eval(&self, u: &[f64], out: &mut [f64]);
    /// Row-major m x m Jacobian.
    fn jacobian(&self, u: &[f64], out: &mut [f64]);
    /// Bound on the Jacobian norm, used for explicit step control.
    fn stiffness(&self, u: &[f64]) -> f64 {
        let m = self.m();
        let mut j = vec![0.0; m * m];
        self.jacobian(u, &mut j);
        j.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QcglParams {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
}

impl Default for QcglParams {
    fn default() -> Self {
        Self {
            alpha: C64::new(0.5, 0.5),
            beta: C64::new(2.5, 1.0),
            gamma: C64::new(-1.0, -0.1),
            delta: C64::new(-0.5, 0.0),
        }
    }
}

impl QcglParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.re <= 0.0 {
            return Err(Error::Invalid(format!("Re alpha = {} must be positive", self.alpha.re)));
        }
        if self.delta.re >= 0.0 {
            return Err(Error::Invalid(format!("Re delta = {} must be negative", self.delta.re)));
        }
        Ok(())
    }

    fn g(&self, r: f64) -> C64 {
        self.delta + self.beta * r + self.gamma * r * r
    }
}

pub fn f_complex(u: C64, p: &QcglParams) -> C64 {
    u * p.g(u.norm_sqr())
}

pub fn f_real(u: [f64; 2], p: &QcglParams) -> [f64; 2] {
    let (u1, u2) = (u[0], u[1]);
    let r = u1 * u1 + u2 * u2;
    let (d, b, g) = (p.delta, p.beta, p.gamma);
    [
        (u1 * d.re - u2 * d.im) + (u1 * b.re - u2 * b.im) * r + (u1 * g.re - u2 * g.im) * r * r,
        (u1 * d.im + u2 * d.re) + (u1 * b.im + u2 * b.re) * r + (u1 * g.im + u2 * g.re) * r * r,
    ]
}

pub fn jacobian_df(u: [f64; 2], p: &QcglParams) -> [[f64; 2]; 2] {
    let (u1, u2) = (u[0], u[1]);
    let r = u1 * u1 + u2 * u2;
    let g = p.g(r);
    let gp = p.beta + p.gamma * (2.0 * r);
    let a = gp.re * u1 - gp.im * u2;
    let b = gp.im * u1 + gp.re * u2;
    [[g.re + 2.0 * a * u1, -g.im + 2.0 * a * u2], [g.im + 2.0 * b * u1, g.re + 2.0 * b * u2]]
}

pub fn diffusion_matrix(p: &QcglParams) -> [[f64; 2]; 2] {
    [[p.alpha.re, -p.alpha.im], [p.alpha.im, p.alpha.re]]
}

pub fn diffusion_cmat(p: &QcglParams) -> CMat {
    let a = diffusion_matrix(p);
    linalg::from_real_rows(&[a[0].to_vec(), a[1].to_vec()])
}

/// Coefficients of the real 2-component system at v_inf = 0 with velocity matrix `s`.
pub fn system_coefficients(p: &QcglParams, s: Vec<Vec<f64>>) -> Result<SystemCoefficients> {
    let j = jacobian_df([0.0, 0.0], p);
    let dfinf = linalg::from_real_rows(&[j[0].to_vec(), j[1].to_vec()]);
    let mut c = SystemCoefficients::new(diffusion_cmat(p), s, dfinf)?;
    let f0 = f_real([0.0, 0.0], p);
    c.f_vinf_norm = f0[0].hypot(f0[1]);
    c.smooth_nonlinearity = true;
    Ok(c)
}

impl Nonlinearity for QcglParams {
    fn m(&self) -> usize {
        2
    }

    fn eval(&self, u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&f_real([u[0], u[1]], self));
    }

    fn jacobian(&self, u: &[f64], out: &mut [f64]) {
        let j = jacobian_df([u[0], u[1]], self);
        out.copy_from_slice(&[j[0][0], j[0][1], j[1][0], j[1][1]]);
    }

    fn stiffness(&self, u: &[f64]) -> f64 {
        let r = u[0] * u[0] + u[1] * u[1];
        self.delta.norm() + 3.0 * self.beta.norm() * r + 5.0 * self.gamma.norm() * r * r
    }
}

/// f(u) = B u with a constant real matrix.
#[derive(Clone, Debug)]
pub struct LinearReaction {
    pub m: usize,
    pub b: Vec<f64>,
}

impl Nonlinearity for LinearReaction {
    fn m(&self) -> usize {
        self.m
    }

    fn eval(&self, u: &[f64], out: &mut [f64]) {
        for r in 0..self.m {
            out[r] = (0..self.m).map(|c| self.b[r * self.m + c] * u[c]).sum();
        }
    }

    fn jacobian(&self, _u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.b);
    }
}
