//! Krylov-Schur Arnoldi on (L - target I)^{-1}.

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::MatMut;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretize::CsrMatrix;
use crate::linalg::{self, CMat};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArnoldiConfig {
    /// Number of eigenvalues wanted.
    pub k: usize,
    /// Krylov subspace dimension; 0 means 4k.
    pub subspace: usize,
    pub max_restarts: usize,
    /// Ritz estimate tolerance, relative to the shift-inverted eigenvalue.
    pub ritz_tol: f64,
    /// Bound on |(L - lambda) x| / |x| for a pair to be returned.
    pub residual_tol: f64,
    pub seed: u64,
}

impl Default for ArnoldiConfig {
    fn default() -> Self {
        Self { k: 12, subspace: 0, max_restarts: 50, ritz_tol: 1e-12, residual_tol: 1e-8, seed: 0 }
    }
}

impl ArnoldiConfig {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Default::default() }
    }

    fn subspace_for(&self, n: usize) -> usize {
        let p = if self.subspace == 0 { 4 * self.k } else { self.subspace };
        p.max(self.k + 2).min(n)
    }
}

/// Sparse LU of (L - target I).
pub struct ShiftInvert {
    lu: Lu<usize, C64>,
    pub n: usize,
    pub target: C64,
}

impl ShiftInvert {
    pub fn new(matrix: &CsrMatrix, target: C64) -> Result<Self> {
        let fail = || Error::Factorization(format!("{target}"));
        let lu = matrix.to_faer(target)?.sp_lu().map_err(|_| fail())?;
        let this = Self { lu, n: matrix.n, target };
        // A singular pivot shows up as a non-finite solve.
        let mut probe: Vec<C64> = (0..this.n).map(|i| C64::new(1.0, (i % 7) as f64 * 0.1)).collect();
        this.solve(&mut probe);
        if probe.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(fail());
        }
        Ok(this)
    }

    /// x <- (L - target I)^{-1} x
    pub fn solve(&self, x: &mut [C64]) {
        let n = x.len();
        self.lu.solve_in_place(MatMut::from_column_major_slice_mut(x, n, 1));
    }
}

/// A converged Ritz pair of L.
#[derive(Clone, Debug)]
pub struct RitzPair {
    pub lambda: C64,
    pub vector: Vec<C64>,
    /// |(L - lambda) x| / |x|, recomputed with the sparse matrix.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct ArnoldiOutput {
    /// Verified pairs, nearest to the target first.
    pub pairs: Vec<RitzPair>,
    /// Fewer than k pairs passed verification.
    pub partial: bool,
    pub restarts: usize,
    pub applications: usize,
}

fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

/// Classical Gram-Schmidt with one reorthogonalization pass. Returns the coefficients.
fn orthogonalize(basis: &[Vec<C64>], w: &mut [C64]) -> Vec<C64> {
    let mut h = vec![C64::default(); basis.len()];
    for _ in 0..2 {
        let c: Vec<C64> = basis.iter().map(|b| dot(b, w)).collect();
        for (b, &ci) in basis.iter().zip(&c) {
            axpy(w, -ci, b);
        }
        h.iter_mut().zip(&c).for_each(|(x, y)| *x += y);
    }
    h
}

/// Eigenvalues of `matrix` nearest `target`, by Krylov-Schur on the shift-inverted operator.
pub fn eigs_near(matrix: &CsrMatrix, target: C64, cfg: &ArnoldiConfig) -> Result<ArnoldiOutput> {
    let n = matrix.n;
    if cfg.k == 0 || cfg.k > n {
        return Err(Error::Invalid(format!("k = {} must lie in 1..={n}", cfg.k)));
    }
    let si = ShiftInvert::new(matrix, target)?;
    let p = cfg.subspace_for(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut v0: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let nv = norm(&v0);
    v0.iter_mut().for_each(|z| *z /= nv);

    let mut basis: Vec<Vec<C64>> = vec![v0];
    // Rows 0..=p, columns 0..p of the Krylov decomposition OP V = V H + v_{p+1} h_{p+1}^T.
    let mut h = CMat::zeros(p + 1, p);
    let mut kcur = 0;
    let mut applications = 0;
    let mut restarts = 0;
    loop {
        let mut width = p;
        for j in kcur..p {
            let mut w = basis[j].clone();
            si.solve(&mut w);
            applications += 1;
            let coef = orthogonalize(&basis, &mut w);
            for (i, c) in coef.iter().enumerate() {
                h[(i, j)] = *c;
            }
            let beta = norm(&w);
            let scale = coef.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if beta <= 1e-13 * scale || basis.len() == n {
                // Invariant subspace: the decomposition is exact.
                h[(j + 1, j)] = C64::default();
                width = j + 1;
                break;
            }
            h[(j + 1, j)] = C64::new(beta, 0.0);
            w.iter_mut().for_each(|z| *z /= beta);
            basis.push(w);
        }
        let exact = width < p || basis.len() <= width;
        let t = CMat::from_fn(width, width, |r, c| h[(r, c)]);
        let resid_row: Vec<C64> = (0..width).map(|c| if exact { C64::default() } else { h[(width, c)] }).collect();
        let (theta, y) = linalg::eigen(&t)?;
        let mut order: Vec<usize> = (0..width).collect();
        order.sort_by(|&a, &b| theta[b].norm().total_cmp(&theta[a].norm()).then(a.cmp(&b)));
        let want = cfg.k.min(width);
        let estimate = |i: usize| -> f64 { (0..width).map(|r| resid_row[r] * y[(r, i)]).sum::<C64>().norm() };
        let done = order[..want].iter().all(|&i| estimate(i) <= cfg.ritz_tol * theta[i].norm());
        if done || exact || restarts >= cfg.max_restarts {
            let mut pairs = Vec::new();
            for &i in &order[..want] {
                if theta[i].norm() == 0.0 {
                    continue;
                }
                let mut x = vec![C64::default(); n];
                for (r, b) in basis.iter().take(width).enumerate() {
                    axpy(&mut x, y[(r, i)], b);
                }
                let nx = norm(&x);
                x.iter_mut().for_each(|z| *z /= nx);
                let lambda = target + theta[i].inv();
                let residual = residual_of(matrix, lambda, &x);
                if residual <= cfg.residual_tol {
                    pairs.push(RitzPair { lambda, vector: x, residual });
                }
            }
            let partial = pairs.len() < cfg.k;
            return Ok(ArnoldiOutput { pairs, partial, restarts, applications });
        }
        // Keep the leading Ritz vectors and restart the decomposition on their span.
        let keep = (want + (width - want) / 2).min(width - 1).max(1);
        let mut q: Vec<Vec<C64>> = Vec::with_capacity(keep);
        for &i in &order[..keep] {
            let mut col: Vec<C64> = (0..width).map(|r| y[(r, i)]).collect();
            orthogonalize(&q, &mut col);
            let nc = norm(&col);
            if nc > 1e-8 {
                col.iter_mut().for_each(|z| *z /= nc);
                q.push(col);
            }
        }
        let kk = q.len();
        let mut fresh: Vec<Vec<C64>> = (0..kk)
            .map(|c| {
                let mut x = vec![C64::default(); n];
                for (r, b) in basis.iter().take(width).enumerate() {
                    axpy(&mut x, q[c][r], b);
                }
                x
            })
            .collect();
        fresh.push(basis[width].clone());
        let tq: Vec<Vec<C64>> = (0..kk).map(|c| (0..width).map(|r| (0..width).map(|s| t[(r, s)] * q[c][s]).sum()).collect()).collect();
        let mut hn = CMat::zeros(p + 1, p);
        for r in 0..kk {
            for c in 0..kk {
                hn[(r, c)] = dot(&q[r], &tq[c]);
            }
        }
        for c in 0..kk {
            hn[(kk, c)] = (0..width).map(|r| h[(width, r)] * q[c][r]).sum();
        }
        basis = fresh;
        h = hn;
        kcur = kk;
        restarts += 1;
    }
}

/// |(L - lambda) x| / |x| from the stored matrix.
pub fn residual_of(matrix: &CsrMatrix, lambda: C64, x: &[C64]) -> f64 {
    let lx = matrix.matvec(x);
    let r: f64 = lx.iter().zip(x).map(|(a, b)| (a - lambda * b).norm_sqr()).sum::<f64>().sqrt();
    r / norm(x)
}
