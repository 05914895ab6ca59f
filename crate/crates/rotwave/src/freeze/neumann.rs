//! Solves (I - dt A Lap_h) u = r for the mirror-ghost Neumann Laplacian with DCT-I
//! along every axis, in the eigenbasis of A.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::discretize::Grid;
use crate::linalg::{self, CMat};
use crate::{Error, Result, C64};

pub struct NeumannSolver {
    grid: Grid,
    m: usize,
    eig: Vec<C64>,
    v: CMat,
    vinv: CMat,
    fft: Arc<dyn Fft<f64>>,
    /// Eigenvalues of the Neumann Laplacian at every node of the transformed grid.
    lambda: Vec<f64>,
    starts: Vec<Vec<usize>>,
    /// Modes actually solved, with weight 2 for one member of a conjugate pair.
    modes: Vec<(usize, f64)>,
}

impl NeumannSolver {
    pub fn new(grid: Grid, a: &CMat) -> Result<Self> {
        let (eig, v) = linalg::eigen(a)?;
        if linalg::cond2(&v)? > 1e8 {
            return Err(Error::Factorization("diffusion matrix is not diagonalizable".into()));
        }
        let vinv = linalg::inverse(&v)?;
        let n = grid.n;
        let fft = FftPlanner::new().plan_fft_forward(2 * (n - 1));
        let h = grid.h();
        let lam1: Vec<f64> = (0..n)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * (n - 1) as f64)).sin();
                -4.0 * s * s / (h * h)
            })
            .collect();
        let lambda = (0..grid.nodes())
            .map(|nd| {
                let idx = grid.multi_index(nd);
                (0..grid.d).map(|ax| lam1[idx[ax]]).sum()
            })
            .collect();
        let starts = (0..grid.d)
            .map(|ax| (0..grid.nodes()).filter(|&k| grid.multi_index(k)[ax] == 0).collect())
            .collect();
        // For real A the projector of conj(a) is the conjugate of the projector of a.
        let m = a.nrows();
        let real = linalg::is_real(a);
        let mut modes = Vec::new();
        let mut used = vec![false; m];
        for k in 0..m {
            if used[k] {
                continue;
            }
            used[k] = true;
            let tol = 1e-12 * eig[k].norm().max(1.0);
            let partner = if real && eig[k].im.abs() > tol {
                (0..m).find(|&j| !used[j] && (eig[j] - eig[k].conj()).norm() <= 1e3 * tol)
            } else {
                None
            };
            match partner {
                Some(j) => {
                    used[j] = true;
                    modes.push((k, 2.0));
                }
                None => modes.push((k, 1.0)),
            }
        }
        Ok(Self { grid, m, eig, v, vinv, fft, lambda, starts, modes })
    }

    /// Unnormalized DCT-I along one axis; applying it twice multiplies by 2(N-1).
    fn dct_axis(&self, z: &mut [C64], axis: usize) {
        let g = &self.grid;
        let n = g.n;
        let st = g.stride(axis);
        let starts = &self.starts[axis];
        let len = 2 * (n - 1);
        let mut buf = vec![C64::default(); len];
        let mut scratch = vec![C64::default(); self.fft.get_inplace_scratch_len()];
        for &s0 in starts {
            for i in 0..n {
                buf[i] = z[s0 + i * st];
            }
            for i in 1..n - 1 {
                buf[len - i] = buf[i];
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..n {
                z[s0 + i * st] = buf[i];
            }
        }
    }

    pub fn solve(&self, rhs: &[f64], dt: f64) -> Vec<f64> {
        let (m, nodes, d) = (self.m, self.grid.nodes(), self.grid.d);
        let scale = 1.0 / (2.0 * (self.grid.n - 1) as f64).powi(d as i32);
        let mut out = vec![0.0; rhs.len()];
        for &(k, weight) in &self.modes {
            let mut z: Vec<C64> =
                (0..nodes).map(|nd| (0..m).map(|c| self.vinv[(k, c)] * rhs[nd * m + c]).sum()).collect();
            for axis in 0..d {
                self.dct_axis(&mut z, axis);
            }
            let ak = self.eig[k];
            z.iter_mut().enumerate().for_each(|(nd, x)| {
                *x = *x * scale / (1.0 - ak * (dt * self.lambda[nd]));
            });
            for axis in 0..d {
                self.dct_axis(&mut z, axis);
            }
            for nd in 0..nodes {
                for r in 0..m {
                    out[nd * m + r] += weight * (self.v[(r, k)] * z[nd]).re;
                }
            }
        }
        out
    }
}
