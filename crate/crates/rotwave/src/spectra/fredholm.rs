use serde::{Deserialize, Serialize};

use super::arnoldi::{eigs_near, ArnoldiConfig, RitzPair, ShiftInvert};
use crate::discretize::{CsrMatrix, DiscreteOperator};
use crate::discretize::{ComplexField, Field};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolvabilityConfig {
    /// Ritz values closer than this to the target count as kernel.
    pub kernel_tol: f64,
    /// |<psi, g>| <= ortho_tol |g| for every adjoint kernel vector psi.
    pub ortho_tol: f64,
    pub arnoldi: ArnoldiConfig,
}

impl Default for SolvabilityConfig {
    fn default() -> Self {
        Self { kernel_tol: 1e-6, ortho_tol: 1e-8, arnoldi: ArnoldiConfig::with_k(4) }
    }
}

#[derive(Clone, Debug)]
pub struct Solvability {
    pub solvable: bool,
    pub kernel_dim: usize,
    /// |<psi_j, g>| / |g| for the unit adjoint kernel vectors.
    pub projections: Vec<f64>,
    pub solution: Option<ComplexField>,
    /// |(lambda - L_h) v - g| / |g|
    pub residual: Option<f64>,
    /// |v| / |g|
    pub ratio: Option<f64>,
}

fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Unit vectors spanning the numerical kernel of (M - target) among the Ritz pairs near target.
fn kernel(m: &CsrMatrix, target: C64, cfg: &SolvabilityConfig) -> Result<Vec<RitzPair>> {
    let out = match eigs_near(m, target, &cfg.arnoldi) {
        Err(Error::Factorization(_)) => {
            let nudge = C64::new(0.0, 10.0 * cfg.kernel_tol * (1.0 + target.norm()));
            eigs_near(m, target + nudge, &cfg.arnoldi)?
        }
        other => other?,
    };
    let mut keep = Vec::new();
    for p in out.pairs {
        let dist = (p.lambda - target).norm();
        if dist > cfg.kernel_tol / 10.0 && dist < cfg.kernel_tol * 10.0 {
            return Err(Error::AmbiguousKernel { distance: dist, tol: cfg.kernel_tol });
        }
        if dist <= cfg.kernel_tol {
            keep.push(p);
        }
    }
    Ok(keep)
}

/// Fredholm alternative for (lambda - L_h) v = g: solvable iff g is orthogonal to the
/// kernel of the adjoint at conj(lambda). A solvable system returns the solution
/// orthogonal to the kernel of (lambda - L_h).
pub fn solvability_check(
    op: &DiscreteOperator,
    adjoint: &DiscreteOperator,
    lambda: C64,
    g: &ComplexField,
    b0: f64,
    cfg: &SolvabilityConfig,
) -> Result<Solvability> {
    if lambda.re + b0 <= 0.0 {
        return Err(Error::BelowSpectralBound(lambda.re + b0));
    }
    let n = op.dim();
    if adjoint.dim() != n || g.data.len() != n {
        return Err(Error::Dimension("operator, adjoint and right-hand side sizes differ".into()));
    }
    let gn = norm(&g.data);
    let psi = kernel(&adjoint.matrix, lambda.conj(), cfg)?;
    let projections: Vec<f64> = psi
        .iter()
        .map(|p| p.vector.iter().zip(&g.data).map(|(a, b)| a.conj() * b).sum::<C64>().norm() / gn.max(f64::MIN_POSITIVE))
        .collect();
    let solvable = projections.iter().all(|&x| x <= cfg.ortho_tol);
    if !solvable {
        return Ok(Solvability { solvable, kernel_dim: psi.len(), projections, solution: None, residual: None, ratio: None });
    }
    let v = if psi.is_empty() {
        let si = ShiftInvert::new(&op.matrix, lambda)?;
        let mut x = g.data.clone();
        si.solve(&mut x);
        x.iter_mut().for_each(|z| *z = -*z);
        x
    } else {
        let phi = kernel(&op.matrix, lambda, cfg)?;
        if phi.len() != psi.len() {
            return Err(Error::Residual { what: "kernel dimensions of operator and adjoint".into(), residual: phi.len() as f64 });
        }
        bordered_solve(&op.matrix, lambda, &phi, &psi, &g.data)?
    };
    // Residual from the stored matrix: (lambda - L) v - g.
    let lv = op.apply(&v);
    let r: f64 = lv.iter().zip(&v).zip(&g.data).map(|((a, b), c)| (lambda * b - a - c).norm_sqr()).sum::<f64>().sqrt();
    let vn = norm(&v);
    Ok(Solvability {
        solvable,
        kernel_dim: psi.len(),
        projections,
        solution: Some(Field::from_vec(op.grid, op.m, v)?),
        residual: Some(r / gn.max(f64::MIN_POSITIVE)),
        ratio: Some(vn / gn.max(f64::MIN_POSITIVE)),
    })
}

/// [lambda - L, Psi; Phi^H, 0] [v; c] = [g; 0]. Nonsingular for a kernel of index zero;
/// c vanishes when g is orthogonal to Psi and v is orthogonal to Phi.
fn bordered_solve(l: &CsrMatrix, lambda: C64, phi: &[RitzPair], psi: &[RitzPair], g: &[C64]) -> Result<Vec<C64>> {
    let n = l.n;
    let k = psi.len();
    let mut rows: Vec<Vec<(usize, C64)>> = (0..n)
        .map(|i| {
            let mut r: Vec<(usize, C64)> = l.row(i).map(|(c, v)| (c, -v)).collect();
            match r.iter_mut().find(|e| e.0 == i) {
                Some(e) => e.1 += lambda,
                None => r.push((i, lambda)),
            }
            r.sort_by_key(|e| e.0);
            r.extend(psi.iter().enumerate().map(|(j, p)| (n + j, p.vector[i])));
            r
        })
        .collect();
    for p in phi {
        rows.push(p.vector.iter().enumerate().map(|(c, z)| (c, z.conj())).collect());
    }
    let border = CsrMatrix::from_rows(rows);
    let si = ShiftInvert::new(&border, C64::default())?;
    let mut x: Vec<C64> = g.iter().copied().chain(std::iter::repeat_n(C64::default(), k)).collect();
    si.solve(&mut x);
    x.truncate(n);
    Ok(x)
}
