use rayon::prelude::*;

use crate::coeffs::{joint_eigenvalues, simultaneous_diagonalization, SystemCoefficients};
use crate::discretize::ComplexField;
use crate::linalg::{self, CMat};
use crate::{Error, Result, C64};

/// Heat kernel of A Lap v + <Sx, grad v> - B v, diagonal in the joint eigenbasis of A and B.
#[derive(Clone, Debug)]
pub struct HeatKernel {
    pub d: usize,
    y: CMat,
    yinv: CMat,
    a: Vec<C64>,
    b: Vec<C64>,
    s: Vec<Vec<f64>>,
}

impl HeatKernel {
    pub fn new(a: &CMat, s: &[Vec<f64>], binf: &CMat) -> Result<Self> {
        let diag = simultaneous_diagonalization(a, binf);
        if !diag.ok {
            return Err(Error::NotSimultaneouslyDiagonalizable);
        }
        let joint = joint_eigenvalues(a, binf, &diag.y)?;
        if joint.iter().any(|(aj, _)| aj.norm() == 0.0) {
            return Err(Error::SingularDiffusion);
        }
        let yinv = linalg::inverse(&diag.y)?;
        Ok(Self {
            d: s.len(),
            y: diag.y,
            yinv,
            a: joint.iter().map(|p| p.0).collect(),
            b: joint.iter().map(|p| p.1).collect(),
            s: s.to_vec(),
        })
    }

    /// Kernel of the linearization at infinity, B = -Df(v_inf).
    pub fn from_coeffs(c: &SystemCoefficients) -> Result<Self> {
        Self::new(&c.a, &c.s, &linalg::scaled(&c.dfinf, C64::new(-1.0, 0.0)))
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn rotation(&self, t: f64) -> Result<Vec<Vec<f64>>> {
        linalg::expm_skew(&self.s, t)
    }

    /// Eigenvalues of H as functions of r2 = |e^{tS}x - xi|^2, principal branch.
    pub fn modes(&self, r2: f64, t: f64) -> Vec<C64> {
        let dh = self.d as f64 / 2.0;
        self.a
            .iter()
            .zip(&self.b)
            .map(|(&a, &b)| (-(C64::new(4.0 * std::f64::consts::PI * t, 0.0) * a).ln() * dh - b * t - r2 / (a * (4.0 * t))).exp())
            .collect()
    }

    fn assemble(&self, modes: &[C64]) -> CMat {
        let m = self.m();
        CMat::from_fn(m, m, |i, j| (0..m).map(|l| self.y[(i, l)] * modes[l] * self.yinv[(l, j)]).sum())
    }

    pub fn eval(&self, x: &[f64], xi: &[f64], t: f64) -> Result<CMat> {
        if !(t > 0.0) {
            return Err(Error::Invalid(format!("heat kernel needs t > 0, got {t}")));
        }
        if x.len() != self.d || xi.len() != self.d {
            return Err(Error::Dimension("x and xi must have d entries".into()));
        }
        let rot = self.rotation(t)?;
        Ok(self.assemble(&self.modes(dist2(&rot, x, xi), t)))
    }

    /// Fraction of the Gaussian envelope of each mode centred at y that lies outside [-r, r]^d.
    fn tail(&self, y: &[f64], r: f64, t: f64) -> f64 {
        self.a
            .iter()
            .map(|&a| {
                let c = (1.0 / (a * (4.0 * t))).re;
                let sq = c.sqrt();
                let inside: f64 =
                    y.iter().map(|&yk| 0.5 * (libm::erf(sq * (r - yk)) + libm::erf(sq * (r + yk)))).product();
                (1.0 - inside).max(0.0)
            })
            .fold(0.0, f64::max)
    }
}

fn dist2(rot: &[Vec<f64>], x: &[f64], xi: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| {
            let yi: f64 = (0..x.len()).map(|j| rot[i][j] * x[j]).sum();
            (yi - xi[i]).powi(2)
        })
        .sum()
}

pub fn heat_kernel(a: &CMat, s: &[Vec<f64>], binf: &CMat, x: &[f64], xi: &[f64], t: f64) -> Result<CMat> {
    HeatKernel::new(a, s, binf)?.eval(x, xi, t)
}

#[derive(Clone, Debug)]
pub struct SemigroupOutput {
    pub field: ComplexField,
    /// Largest kernel envelope mass outside the grid box, over all output nodes.
    pub truncation: f64,
    /// The same quantity per output node.
    pub node_truncation: Vec<f64>,
}

impl HeatKernel {
    /// Riemann-sum quadrature of the kernel integral over the grid nodes.
    pub fn apply(&self, v: &ComplexField, t: f64) -> Result<SemigroupOutput> {
        let g = v.grid;
        if g.d != self.d || v.m != self.m() {
            return Err(Error::GridMismatch);
        }
        if t == 0.0 {
            return Ok(SemigroupOutput { field: v.clone(), truncation: 0.0, node_truncation: vec![0.0; g.nodes()] });
        }
        if !(t > 0.0) {
            return Err(Error::Invalid(format!("t = {t} must be nonnegative")));
        }
        let m = self.m();
        let nodes = g.nodes();
        let rot = self.rotation(t)?;
        let w: Vec<C64> = (0..nodes)
            .flat_map(|k| {
                let vk = &v.data[k * m..(k + 1) * m];
                (0..m).map(move |l| (0..m).map(|j| self.yinv[(l, j)] * vk[j]).sum::<C64>())
            })
            .collect();
        let pos: Vec<[f64; 3]> = (0..nodes).map(|k| g.position(k)).collect();
        let cell = g.cell();
        let dh = self.d as f64 / 2.0;
        let pref: Vec<C64> = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(&a, &b)| (-(C64::new(4.0 * std::f64::consts::PI * t, 0.0) * a).ln() * dh - b * t).exp() * cell)
            .collect();
        let inv: Vec<C64> = self.a.iter().map(|&a| 1.0 / (a * (4.0 * t))).collect();
        let d = self.d;
        let rows: Vec<(Vec<C64>, f64)> = (0..nodes)
            .into_par_iter()
            .map(|i| {
                let x = &pos[i][..d];
                let y: Vec<f64> = (0..d).map(|r| (0..d).map(|c| rot[r][c] * x[c]).sum()).collect();
                let mut acc = vec![C64::new(0.0, 0.0); m];
                for (k, xk) in pos.iter().enumerate() {
                    let r2: f64 = (0..d).map(|q| (y[q] - xk[q]).powi(2)).sum();
                    for l in 0..m {
                        acc[l] += (-inv[l] * r2).exp() * w[k * m + l];
                    }
                }
                let out = (0..m)
                    .map(|r| (0..m).map(|l| self.y[(r, l)] * pref[l] * acc[l]).sum::<C64>())
                    .collect();
                (out, self.tail(&y, g.r, t))
            })
            .collect();
        let node_truncation: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let truncation = node_truncation.iter().cloned().fold(0.0, f64::max);
        let data = rows.into_iter().flat_map(|r| r.0).collect();
        Ok(SemigroupOutput { field: ComplexField::from_vec(g, m, data)?, truncation, node_truncation })
    }
}

/// T(t) v for the linearization at infinity of `coeffs`.
pub fn apply_semigroup(v: &ComplexField, t: f64, coeffs: &SystemCoefficients) -> Result<SemigroupOutput> {
    HeatKernel::from_coeffs(coeffs)?.apply(v, t)
}
