//! Matrix-free finite-difference stencils on node-major fields.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Field, Grid, RealField};
use crate::linalg::CMat;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftScheme {
    /// First order, one-sided against the flow direction.
    #[default]
    Upwind,
    /// Second order central differences.
    Centered,
}

pub trait Scalar:
    Copy + Default + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
}
impl Scalar for f64 {}
impl Scalar for C64 {}

/// Mirror ghost index for Neumann boundaries.
#[inline]
pub fn neighbours(i: usize, n: usize) -> (usize, usize) {
    let lo = if i == 0 { 1 } else { i - 1 };
    let hi = if i == n - 1 { n - 2 } else { i + 1 };
    (lo, hi)
}

/// One-dimensional drift weights (offset index, weight) for coefficient `c`.
#[inline]
pub fn drift_weights(i: usize, n: usize, h: f64, c: f64, scheme: DriftScheme) -> [(usize, f64); 2] {
    let (lo, hi) = neighbours(i, n);
    match scheme {
        DriftScheme::Upwind if c > 0.0 => [(hi, c / h), (i, -c / h)],
        DriftScheme::Upwind if c < 0.0 => [(i, c / h), (lo, -c / h)],
        DriftScheme::Upwind => [(i, 0.0), (i, 0.0)],
        DriftScheme::Centered => [(hi, c / (2.0 * h)), (lo, -c / (2.0 * h))],
    }
}

/// Drift coefficient (M x + tau) at a node.
#[inline]
pub fn drift_coefficient(mat: &[Vec<f64>], tau: Option<&[f64]>, x: &[f64; 3], d: usize) -> [f64; 3] {
    let mut c = [0.0; 3];
    for i in 0..d {
        c[i] = (0..d).map(|k| mat[i][k] * x[k]).sum::<f64>() + tau.map_or(0.0, |t| t[i]);
    }
    c
}

/// Componentwise Neumann Laplacian.
pub fn laplacian<T: Scalar>(grid: &Grid, m: usize, u: &[T], out: &mut [T]) {
    let (n, d) = (grid.n, grid.d);
    let ih2 = 1.0 / (grid.h() * grid.h());
    out.par_chunks_mut(m).enumerate().for_each(|(node, o)| {
        let idx = grid.multi_index(node);
        for c in 0..m {
            o[c] = u[node * m + c] * (-2.0 * d as f64 * ih2);
        }
        for axis in 0..d {
            let st = grid.stride(axis);
            let (lo, hi) = neighbours(idx[axis], n);
            let base = node - idx[axis] * st;
            for c in 0..m {
                o[c] = o[c] + (u[(base + lo * st) * m + c] + u[(base + hi * st) * m + c]) * ih2;
            }
        }
    });
}

/// <M x + tau, grad u> componentwise.
pub fn drift<T: Scalar>(
    grid: &Grid,
    m: usize,
    scheme: DriftScheme,
    mat: &[Vec<f64>],
    tau: Option<&[f64]>,
    u: &[T],
    out: &mut [T],
) {
    let (n, d, h) = (grid.n, grid.d, grid.h());
    out.par_chunks_mut(m).enumerate().for_each(|(node, o)| {
        let idx = grid.multi_index(node);
        let c = drift_coefficient(mat, tau, &grid.position(node), d);
        o.iter_mut().for_each(|x| *x = T::default());
        for axis in 0..d {
            let st = grid.stride(axis);
            let base = node - idx[axis] * st;
            for (j, w) in drift_weights(idx[axis], n, h, c[axis], scheme) {
                if w != 0.0 {
                    for k in 0..m {
                        o[k] = o[k] + u[(base + j * st) * m + k] * w;
                    }
                }
            }
        }
    });
}

/// Node-local matrix product out_node = B_node u_node, B row-major m x m per node.
pub fn apply_blocks(m: usize, blocks: &[C64], u: &[C64], out: &mut [C64]) {
    out.par_chunks_mut(m).enumerate().for_each(|(node, o)| {
        let b = &blocks[node * m * m..(node + 1) * m * m];
        for r in 0..m {
            o[r] = (0..m).map(|c| b[r * m + c] * u[node * m + c]).sum();
        }
    });
}

/// Matrix-free L_h u = A lap u + <S x + tau, grad u> + reaction u.
#[allow(clippy::too_many_arguments)]
pub fn apply_linearized(
    grid: &Grid,
    a: &CMat,
    s: &[Vec<f64>],
    tau: Option<&[f64]>,
    reaction: &[C64],
    scheme: DriftScheme,
    u: &[C64],
) -> Vec<C64> {
    let m = a.nrows();
    let mut lap = vec![C64::default(); u.len()];
    laplacian(grid, m, u, &mut lap);
    let mut dr = vec![C64::default(); u.len()];
    drift(grid, m, scheme, s, tau, u, &mut dr);
    let mut re = vec![C64::default(); u.len()];
    apply_blocks(m, reaction, u, &mut re);
    let mut out = vec![C64::default(); u.len()];
    out.par_chunks_mut(m).enumerate().for_each(|(node, o)| {
        for r in 0..m {
            let al: C64 = (0..m).map(|c| a[(r, c)] * lap[node * m + c]).sum();
            o[r] = al + dr[node * m + r] + re[node * m + r];
        }
    });
    out
}

/// Partial derivatives of each component: central inside, second-order one-sided at the boundary.
pub fn gradient_fields(v: &RealField) -> Vec<RealField> {
    let grid = v.grid;
    let (n, h, m) = (grid.n, grid.h(), v.m);
    (0..grid.d)
        .map(|axis| {
            let st = grid.stride(axis);
            let mut out = Field::zeros(grid, m);
            out.data.par_chunks_mut(m).enumerate().for_each(|(node, o)| {
                let i = grid.multi_index(node)[axis];
                let base = node - i * st;
                let at = |j: usize, c: usize| v.data[(base + j * st) * m + c];
                for c in 0..m {
                    o[c] = if i == 0 {
                        (-3.0 * at(0, c) + 4.0 * at(1, c) - at(2, c)) / (2.0 * h)
                    } else if i == n - 1 {
                        (3.0 * at(n - 1, c) - 4.0 * at(n - 2, c) + at(n - 3, c)) / (2.0 * h)
                    } else {
                        (at(i + 1, c) - at(i - 1, c)) / (2.0 * h)
                    };
                }
            });
            out
        })
        .collect()
}
