use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::stencil::{drift_coefficient, neighbours, DriftScheme};
use crate::discretize::{Grid, RealField};
use crate::{Error, Result};

/// Rotation rates for the coordinate planes (i, j), i < j, in lexicographic order, and translation rates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Velocities {
    pub rot: Vec<f64>,
    pub tau: Vec<f64>,
}

pub fn planes(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect()
}

impl Velocities {
    pub fn zero(d: usize) -> Self {
        Self { rot: vec![0.0; d * (d - 1) / 2], tau: vec![0.0; d] }
    }

    /// S = sum over planes of s_ij (E_ij - E_ji).
    pub fn s_matrix(&self, d: usize) -> Vec<Vec<f64>> {
        let mut s = vec![vec![0.0; d]; d];
        for (&(i, j), &r) in planes(d).iter().zip(&self.rot) {
            s[i][j] += r;
            s[j][i] -= r;
        }
        s
    }

    pub fn from_s_matrix(s: &[Vec<f64>], tau: Vec<f64>) -> Self {
        let d = s.len();
        Self { rot: planes(d).iter().map(|&(i, j)| 0.5 * (s[i][j] - s[j][i])).collect(), tau }
    }
}

/// Partial derivatives of every component along every axis. Upwind derivatives are
/// one-sided in the direction of the drift coefficient `dir` (centered where it vanishes).
pub fn derivatives(v: &RealField, scheme: DriftScheme, dir: &Velocities) -> Vec<Vec<f64>> {
    let g = v.grid;
    let (n, h, m, d) = (g.n, g.h(), v.m, g.d);
    let s = dir.s_matrix(d);
    (0..d)
        .map(|axis| {
            let st = g.stride(axis);
            let mut out = vec![0.0; v.data.len()];
            out.par_chunks_mut(m).enumerate().for_each(|(node, o)| {
                let i = g.multi_index(node)[axis];
                let base = node - i * st;
                let (lo, hi) = neighbours(i, n);
                let c = match scheme {
                    DriftScheme::Centered => 0.0,
                    DriftScheme::Upwind => drift_coefficient(&s, Some(&dir.tau), &g.position(node), d)[axis],
                };
                let at = |j: usize, k: usize| v.data[(base + j * st) * m + k];
                for k in 0..m {
                    o[k] = if c > 0.0 {
                        (at(hi, k) - at(i, k)) / h
                    } else if c < 0.0 {
                        (at(i, k) - at(lo, k)) / h
                    } else {
                        (at(hi, k) - at(lo, k)) / (2.0 * h)
                    };
                }
            });
            out
        })
        .collect()
}

/// Rotation generators x_j d_i v - x_i d_j v, then (optionally) translation generators d_i v.
pub fn generators(grid: &Grid, m: usize, deriv: &[Vec<f64>], translations: bool) -> Vec<Vec<f64>> {
    let d = grid.d;
    let mut out: Vec<Vec<f64>> = planes(d)
        .into_iter()
        .map(|(i, j)| {
            let mut g = vec![0.0; deriv[0].len()];
            g.par_chunks_mut(m).enumerate().for_each(|(node, o)| {
                let x = grid.position(node);
                for k in 0..m {
                    o[k] = x[j] * deriv[i][node * m + k] - x[i] * deriv[j][node * m + k];
                }
            });
            g
        })
        .collect();
    if translations {
        out.extend(deriv.iter().cloned());
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseSolution {
    pub velocities: Velocities,
    /// Condition number of the Gram matrix of the retained generators.
    pub gram_cond: f64,
    /// Generators dropped as numerically zero (indices into rotations then translations).
    pub dropped: Vec<usize>,
    /// max_j |<g_j, v_t>| / (|g_j| |v_t|).
    pub residual: f64,
}

/// Generators below this fraction of the largest one are treated as zero.
pub const DROP_TOL: f64 = 1e-8;
pub const MAX_GRAM_COND: f64 = 1e12;

/// Velocities minimizing |rhs + sum_j mu_j g_j|. Returns the solution and v_t.
pub fn solve_velocities(d: usize, gens: &[Vec<f64>], rhs: &[f64], translations: bool) -> Result<(PhaseSolution, Vec<f64>)> {
    let nrot = d * (d - 1) / 2;
    let norms: Vec<f64> = gens.iter().map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let top = norms.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..gens.len()).filter(|&j| top > 0.0 && norms[j] > DROP_TOL * top).collect();
    let dropped: Vec<usize> = (0..gens.len()).filter(|j| !keep.contains(j)).collect();
    let mut mu = vec![0.0; gens.len()];
    let mut vt = rhs.to_vec();
    let mut gram_cond = 1.0;
    if !keep.is_empty() {
        let k = keep.len();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        // Gram matrix of the unit-normalized generators.
        let gram = Mat::<f64>::from_fn(k, k, |r, c| dot(&gens[keep[r]], &gens[keep[c]]) / (norms[keep[r]] * norms[keep[c]]));
        let evd = gram.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigensolve(format!("{e:?}")))?;
        let ev: Vec<f64> = (0..k).map(|i| evd.S().column_vector()[i]).collect();
        let (emin, emax) = (ev.iter().cloned().fold(f64::INFINITY, f64::min), ev.iter().cloned().fold(0.0, f64::max));
        gram_cond = if emin > 0.0 { emax / emin } else { f64::INFINITY };
        if gram_cond > MAX_GRAM_COND {
            return Err(Error::OrbitDegenerate(gram_cond));
        }
        let u = evd.U();
        // Two passes: the second removes what roundoff left of the projection.
        for _ in 0..2 {
            let c: Vec<f64> = keep.iter().map(|&j| -dot(&gens[j], &vt) / norms[j]).collect();
            let y: Vec<f64> = (0..k)
                .map(|r| (0..k).map(|i| u[(r, i)] * (0..k).map(|q| u[(q, i)] * c[q]).sum::<f64>() / ev[i]).sum())
                .collect();
            for (ci, &j) in keep.iter().enumerate() {
                let coef = y[ci] / norms[j];
                mu[j] += coef;
                vt.iter_mut().zip(&gens[j]).for_each(|(o, gj)| *o += coef * gj);
            }
        }
    }
    let vt_norm = vt.iter().map(|x| x * x).sum::<f64>().sqrt();
    let residual = keep
        .iter()
        .map(|&j| {
            let dot: f64 = gens[j].iter().zip(&vt).map(|(a, b)| a * b).sum();
            if vt_norm > 0.0 { dot.abs() / (norms[j] * vt_norm) } else { 0.0 }
        })
        .fold(0.0, f64::max);
    let tau = if translations { mu[nrot..nrot + d].to_vec() } else { vec![0.0; d] };
    let velocities = Velocities { rot: mu[..nrot].to_vec(), tau };
    Ok((PhaseSolution { velocities, gram_cond, dropped, residual }, vt))
}
