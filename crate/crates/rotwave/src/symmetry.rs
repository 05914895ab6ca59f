//! Skew decomposition of S, the symmetry set and the explicit eigentriples (lambda, E, b).

use faer::{Mat, Side};
use serde::Serialize;

use crate::discretize::{ComplexField, Field, Grid, RealField};
use crate::linalg::CMat;
use crate::{Error, Result, C64};

/// Unitary diagonalization S = U diag(lambda) U^H.
#[derive(Clone, Debug)]
pub struct SkewSpectrum {
    pub u: CMat,
    pub lambda: Vec<C64>,
    /// Angular velocities, descending.
    pub sigma: Vec<f64>,
    pub k: usize,
}

/// Eigenvalues of S^T S closer than this (relative) share a rotation plane cluster.
const CLUSTER_TOL: f64 = 1e-9;

pub fn skew_eigendecomposition(s: &[Vec<f64>]) -> Result<SkewSpectrum> {
    let d = s.len();
    let scale = s.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    if crate::coeffs::skew_defect(s) > 1e-12 * scale.max(1.0) {
        return Err(Error::NotSkew(crate::coeffs::skew_defect(s)));
    }
    let sm = Mat::<f64>::from_fn(d, d, |i, j| 0.5 * (s[i][j] - s[j][i]));
    let sts = sm.transpose() * &sm;
    let evd = sts.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigensolve(format!("{e:?}")))?;
    let vals: Vec<f64> = (0..d).map(|i| evd.S().column_vector()[i].max(0.0)).collect();
    let vecs = evd.U().to_owned();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let top = vals[order[0]].max(1e-300);
    let zero_thr = 1e-13 * top * d as f64;

    // Split into clusters of (numerically) equal sigma^2.
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match clusters.last_mut() {
            Some(c) if (vals[c[0]] - vals[i]).abs() <= CLUSTER_TOL * top || (vals[c[0]] <= zero_thr && vals[i] <= zero_thr) => {
                c.push(i)
            }
            _ => clusters.push(vec![i]),
        }
    }

    let mut cols: Vec<Vec<C64>> = Vec::new();
    let mut lambda = Vec::new();
    let mut sigma = Vec::new();
    let mut zero_cols: Vec<Vec<f64>> = Vec::new();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for c in &clusters {
        let mean = c.iter().map(|&i| vals[i]).sum::<f64>() / c.len() as f64;
        let is_zero = mean <= zero_thr;
        // Projector onto the cluster space does not depend on the solver's basis.
        let proj = |x: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; d];
            for &i in c {
                let coef: f64 = (0..d).map(|r| vecs[(r, i)] * x[r]).sum();
                for r in 0..d {
                    out[r] += coef * vecs[(r, i)];
                }
            }
            out
        };
        let mut chosen: Vec<Vec<f64>> = Vec::new();
        for j in 0..d {
            if chosen.len() >= c.len() {
                break;
            }
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            let mut q = proj(&e);
            for _ in 0..2 {
                for v in &chosen {
                    let a: f64 = q.iter().zip(v).map(|(x, y)| x * y).sum();
                    q.iter_mut().zip(v).for_each(|(x, y)| *x -= a * y);
                }
            }
            let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 0.1 {
                continue;
            }
            q.iter_mut().for_each(|x| *x /= n);
            if is_zero {
                chosen.push(q);
                continue;
            }
            let sg = mean.sqrt();
            let mut q2: Vec<f64> = (0..d).map(|r| -(0..d).map(|t| sm[(r, t)] * q[t]).sum::<f64>() / sg).collect();
            let n2 = q2.iter().map(|x| x * x).sum::<f64>().sqrt();
            q2.iter_mut().for_each(|x| *x /= n2);
            cols.push(q.iter().zip(&q2).map(|(&a, &b)| C64::new(a * h, b * h)).collect());
            cols.push(q.iter().zip(&q2).map(|(&a, &b)| C64::new(a * h, -b * h)).collect());
            lambda.push(C64::new(0.0, sg));
            lambda.push(C64::new(0.0, -sg));
            sigma.push(sg);
            chosen.push(q);
            chosen.push(q2);
        }
        if chosen.len() != c.len() {
            return Err(Error::Eigensolve("could not complete skew eigenbasis".into()));
        }
        if is_zero {
            zero_cols.extend(chosen);
        }
    }
    for q in zero_cols {
        cols.push(q.iter().map(|&a| C64::new(a, 0.0)).collect());
        lambda.push(C64::new(0.0, 0.0));
    }
    let u = Mat::from_fn(d, d, |i, j| cols[j][i]);
    let k = sigma.len();
    let out = SkewSpectrum { u, lambda, sigma, k };
    let rec = reconstruct(&out);
    let err = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| (rec[(i, j)] - C64::new(sm[(i, j)], 0.0)).norm())
        .fold(0.0, f64::max);
    if err > 1e-12 * scale.max(1.0) * 10.0 {
        return Err(Error::Residual { what: "skew decomposition".into(), residual: err });
    }
    Ok(out)
}

/// U diag(lambda) U^H.
pub fn reconstruct(sp: &SkewSpectrum) -> CMat {
    let d = sp.u.nrows();
    Mat::from_fn(d, d, |i, j| (0..d).map(|l| sp.u[(i, l)] * sp.lambda[l] * sp.u[(j, l)].conj()).sum())
}

/// Values within this distance are merged into one member of the symmetry set.
pub const MERGE_TOL: f64 = 1e-9;

/// sigma(S) together with all pairwise sums lambda_i + lambda_j (i < j), with multiplicities.
pub fn symmetry_set(s: &[Vec<f64>]) -> Result<Vec<(C64, usize)>> {
    let sp = skew_eigendecomposition(s)?;
    let l = &sp.lambda;
    let mut all: Vec<C64> = l.clone();
    for i in 0..l.len() {
        for j in i + 1..l.len() {
            all.push(l[i] + l[j]);
        }
    }
    Ok(merge(all))
}

pub fn merge(mut all: Vec<C64>) -> Vec<(C64, usize)> {
    all.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let mut out: Vec<(C64, usize)> = Vec::new();
    for z in all {
        match out.iter_mut().find(|(w, _)| (*w - z).norm() <= MERGE_TOL) {
            Some(e) => e.1 += 1,
            None => out.push((z, 1)),
        }
    }
    for e in &mut out {
        if e.0.re.abs() <= MERGE_TOL {
            e.0.re = 0.0;
        }
        if e.0.im.abs() <= MERGE_TOL {
            e.0.im = 0.0;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TripleKind {
    Translation,
    RotationPair,
}

#[derive(Clone, Debug)]
pub struct SymmetryEigentriple {
    pub lambda: C64,
    pub e: CMat,
    pub b: Vec<C64>,
    pub kind: TripleKind,
}

#[derive(Serialize)]
pub struct TripleJson {
    pub lambda: [f64; 2],
    #[serde(rename = "E")]
    pub e: Vec<Vec<[f64; 2]>>,
    pub b: Vec<[f64; 2]>,
    pub kind: TripleKind,
}

impl SymmetryEigentriple {
    pub fn to_json(&self) -> TripleJson {
        TripleJson {
            lambda: [self.lambda.re, self.lambda.im],
            e: crate::linalg::to_rows(&self.e),
            b: self.b.iter().map(|z| [z.re, z.im]).collect(),
            kind: self.kind,
        }
    }

    /// Max-norm residuals of lambda E - (ES - SE) and lambda b + S b.
    pub fn residuals(&self, s: &[Vec<f64>]) -> (f64, f64) {
        let d = s.len();
        let sm = Mat::<C64>::from_fn(d, d, |i, j| C64::new(s[i][j], 0.0));
        let lhs = &self.e * &sm - &sm * &self.e;
        let mut re = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                re = re.max((self.e[(i, j)] * self.lambda - lhs[(i, j)]).norm());
            }
        }
        let mut rb = 0.0f64;
        for i in 0..d {
            let sb: C64 = (0..d).map(|j| self.b[j] * s[i][j]).sum();
            rb = rb.max((self.b[i] * self.lambda + sb).norm());
        }
        (re, rb)
    }
}

/// d translation triples followed by d(d-1)/2 rotation triples, each checked
/// against its defining equations.
pub fn symmetry_eigentriples(s: &[Vec<f64>]) -> Result<Vec<SymmetryEigentriple>> {
    let sp = skew_eigendecomposition(s)?;
    let d = s.len();
    let u = &sp.u;
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for l in 0..d {
        out.push(SymmetryEigentriple {
            lambda: -sp.lambda[l],
            e: CMat::zeros(d, d),
            b: (0..d).map(|r| u[(r, l)]).collect(),
            kind: TripleKind::Translation,
        });
    }
    for i in 0..d {
        for j in i + 1..d {
            let e = Mat::from_fn(d, d, |r, c| u[(r, i)] * u[(c, j)] - u[(r, j)] * u[(c, i)]);
            out.push(SymmetryEigentriple {
                lambda: -(sp.lambda[i] + sp.lambda[j]),
                e,
                b: vec![C64::new(0.0, 0.0); d],
                kind: TripleKind::RotationPair,
            });
        }
    }
    let scale = s.iter().flatten().fold(1.0f64, |a, x| a.max(x.abs()));
    for t in &out {
        let (re, rb) = t.residuals(s);
        if re.max(rb) > 1e-10 * scale {
            return Err(Error::Residual { what: "symmetry eigentriple".into(), residual: re.max(rb) });
        }
    }
    Ok(out)
}

/// v(x) = <E x + b, grad v_star(x)> on the grid of the gradient fields.
pub fn eigenfunction_field(gradient: &[RealField], e: &CMat, b: &[C64], grid: &Grid) -> Result<ComplexField> {
    let d = grid.d;
    if gradient.len() != d || e.nrows() != d || e.ncols() != d || b.len() != d {
        return Err(Error::Dimension("gradient, E and b must match the grid dimension".into()));
    }
    let m = gradient[0].m;
    if gradient.iter().any(|g| g.grid != *grid || g.m != m) {
        return Err(Error::GridMismatch);
    }
    let mut out = Field::zeros(*grid, m);
    for node in 0..grid.nodes() {
        let x = grid.position(node);
        for i in 0..d {
            let coef: C64 = b[i] + (0..d).map(|j| e[(i, j)] * x[j]).sum::<C64>();
            let g = gradient[i].node(node);
            for c in 0..m {
                out.data[node * m + c] += coef * g[c];
            }
        }
    }
    Ok(out)
}
