use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use super::stencil::{drift_coefficient, drift_weights, neighbours, DriftScheme};
use super::Grid;
use crate::linalg::CMat;
use crate::{Error, Result};

/// Compressed sparse rows with complex entries.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<C64>,
}

impl CsrMatrix {
    pub fn from_rows(rows: Vec<Vec<(usize, C64)>>) -> Self {
        let n = rows.len();
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for r in rows {
            for (c, v) in r {
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self { n, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|&(c, _)| c == j).map_or(C64::default(), |(_, v)| v)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn conj_transpose(&self) -> Self {
        let mut count = vec![0usize; self.n + 1];
        for &c in &self.indices {
            count[c + 1] += 1;
        }
        for i in 0..self.n {
            count[i + 1] += count[i];
        }
        let indptr = count.clone();
        let mut next = count;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![C64::default(); self.nnz()];
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                let k = next[c];
                indices[k] = i;
                values[k] = v.conj();
                next[c] += 1;
            }
        }
        Self { n: self.n, indptr, indices, values }
    }

    /// (self - shift I) in faer's compressed-column format.
    pub fn to_faer(&self, shift: C64) -> Result<SparseColMat<usize, C64>> {
        let mut t = Vec::with_capacity(self.nnz() + self.n);
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                t.push(Triplet::new(i, c, v));
            }
            if shift != C64::default() {
                t.push(Triplet::new(i, i, -shift));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &t)
            .map_err(|e| Error::Factorization(format!("{shift} ({e:?})")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    Linearized,
    AdjointTranspose,
    AdjointDirect,
}

/// Sparse L_h or L*_h on a grid, unknowns numbered node * m + component.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub matrix: CsrMatrix,
    pub grid: Grid,
    pub m: usize,
    pub scheme: DriftScheme,
    pub kind: OperatorKind,
    pub shift: C64,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.matrix.n
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.matrix.matvec(x)
    }

    pub fn conj_transpose(&self) -> Self {
        Self {
            matrix: self.matrix.conj_transpose(),
            kind: match self.kind {
                OperatorKind::Linearized => OperatorKind::AdjointTranspose,
                _ => OperatorKind::Linearized,
            },
            shift: self.shift.conj(),
            ..self.clone()
        }
    }
}

fn check(grid: &Grid, a: &CMat, s: &[Vec<f64>], reaction: &[C64]) -> Result<usize> {
    let m = a.nrows();
    if a.ncols() != m || s.len() != grid.d || s.iter().any(|r| r.len() != grid.d) {
        return Err(Error::Dimension("A must be m x m and S must be d x d".into()));
    }
    if reaction.len() != grid.nodes() * m * m {
        return Err(Error::Dimension(format!(
            "reaction has {} entries, expected N^d m^2 = {}",
            reaction.len(),
            grid.nodes() * m * m
        )));
    }
    Ok(m)
}

/// A lap + <S x + tau, grad> + reaction, with reaction given as row-major m x m blocks per node.
pub fn assemble(
    grid: &Grid,
    a: &CMat,
    s: &[Vec<f64>],
    tau: Option<&[f64]>,
    reaction: &[C64],
    scheme: DriftScheme,
) -> Result<DiscreteOperator> {
    let m = check(grid, a, s, reaction)?;
    let (n, d, h) = (grid.n, grid.d, grid.h());
    let ih2 = 1.0 / (h * h);
    let rows: Vec<Vec<(usize, C64)>> = (0..grid.nodes())
        .into_par_iter()
        .flat_map_iter(|node| {
            let idx = grid.multi_index(node);
            // Scalar stencil on nodes, shared by all components.
            let mut lap: Vec<(usize, f64)> = vec![(node, -2.0 * d as f64 * ih2)];
            let mut adv: Vec<(usize, f64)> = Vec::new();
            let coef = drift_coefficient(s, tau, &grid.position(node), d);
            for axis in 0..d {
                let st = grid.stride(axis);
                let base = node - idx[axis] * st;
                let (lo, hi) = neighbours(idx[axis], n);
                lap.push((base + lo * st, ih2));
                lap.push((base + hi * st, ih2));
                for (j, w) in drift_weights(idx[axis], n, h, coef[axis], scheme) {
                    if w != 0.0 {
                        adv.push((base + j * st, w));
                    }
                }
            }
            let block = &reaction[node * m * m..(node + 1) * m * m];
            (0..m).map(move |r| {
                let mut e: Vec<(usize, C64)> = Vec::with_capacity(lap.len() * m + adv.len() + m);
                for &(nd, w) in &lap {
                    for c in 0..m {
                        if a[(r, c)] != C64::default() {
                            e.push((nd * m + c, a[(r, c)] * w));
                        }
                    }
                }
                for &(nd, w) in &adv {
                    e.push((nd * m + r, C64::new(w, 0.0)));
                }
                for c in 0..m {
                    if block[r * m + c] != C64::default() {
                        e.push((node * m + c, block[r * m + c]));
                    }
                }
                e.sort_by_key(|x| x.0);
                let mut merged: Vec<(usize, C64)> = Vec::with_capacity(e.len());
                for (c, v) in e {
                    match merged.last_mut() {
                        Some(last) if last.0 == c => last.1 += v,
                        _ => merged.push((c, v)),
                    }
                }
                merged.retain(|x| x.1 != C64::default());
                merged
            })
            .collect::<Vec<_>>()
        })
        .collect();
    Ok(DiscreteOperator {
        matrix: CsrMatrix::from_rows(rows),
        grid: *grid,
        m,
        scheme,
        kind: OperatorKind::Linearized,
        shift: C64::default(),
    })
}

pub fn assemble_linearized(
    grid: &Grid,
    a: &CMat,
    s: &[Vec<f64>],
    reaction: &[C64],
    scheme: DriftScheme,
) -> Result<DiscreteOperator> {
    assemble(grid, a, s, None, reaction, scheme)
}

pub struct AdjointPair {
    /// Exact conjugate transpose of the linearized matrix.
    pub transpose: DiscreteOperator,
    /// A^H lap - <S x, grad> + reaction^H assembled directly.
    pub direct: DiscreteOperator,
}

pub fn assemble_adjoint(
    grid: &Grid,
    a: &CMat,
    s: &[Vec<f64>],
    reaction: &[C64],
    scheme: DriftScheme,
) -> Result<AdjointPair> {
    let transpose = assemble_linearized(grid, a, s, reaction, scheme)?.conj_transpose();
    let m = check(grid, a, s, reaction)?;
    let ah = crate::linalg::adjoint(a);
    let neg: Vec<Vec<f64>> = s.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
    let mut rh = vec![C64::default(); reaction.len()];
    for node in 0..grid.nodes() {
        for r in 0..m {
            for c in 0..m {
                rh[node * m * m + r * m + c] = reaction[node * m * m + c * m + r].conj();
            }
        }
    }
    let mut direct = assemble(grid, &ah, &neg, None, &rh, scheme)?;
    direct.kind = OperatorKind::AdjointDirect;
    Ok(AdjointPair { transpose, direct })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::stencil::apply_linearized;
    use crate::discretize::Field;
    use crate::linalg::{c, from_real_rows, from_rows};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rot(s: f64) -> Vec<Vec<f64>> {
        vec![vec![0.0, s], vec![-s, 0.0]]
    }

    fn const_reaction(grid: &Grid, b: &CMat) -> Vec<C64> {
        let m = b.nrows();
        (0..grid.nodes()).flat_map(|_| (0..m * m).map(|k| b[(k / m, k % m)])).collect()
    }

    fn random_vec(n: usize, seed: u64) -> Vec<C64> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect()
    }

    fn qcgl_a() -> CMat {
        from_real_rows(&[vec![0.5, -0.5], vec![0.5, 0.5]])
    }

    #[test]
    fn constant_field_sees_only_reaction() {
        let g = Grid::new(2, 4.0, 12).unwrap();
        let b = from_real_rows(&[vec![-0.5, 0.2], vec![0.1, -0.7]]);
        for scheme in [DriftScheme::Upwind, DriftScheme::Centered] {
            let op = assemble_linearized(&g, &qcgl_a(), &rot(1.3), &const_reaction(&g, &b), scheme).unwrap();
            let v: Vec<C64> = (0..g.nodes()).flat_map(|_| [c(1.0, 0.0), c(-2.0, 0.5)]).collect();
            let out = op.apply(&v);
            let want = crate::linalg::matvec(&b, &[c(1.0, 0.0), c(-2.0, 0.5)]);
            for node in 0..g.nodes() {
                for k in 0..2 {
                    assert!((out[node * 2 + k] - want[k]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn csr_matches_matrix_free_path() {
        let g = Grid::new(2, 5.0, 14).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let reaction: Vec<C64> = (0..g.nodes() * 4).map(|_| c(rng.random_range(-1.0..1.0), 0.0)).collect();
        let tau = [0.2, -0.4];
        for scheme in [DriftScheme::Upwind, DriftScheme::Centered] {
            let op = assemble(&g, &qcgl_a(), &rot(0.9), Some(&tau), &reaction, scheme).unwrap();
            let x = random_vec(op.dim(), 9);
            let y1 = op.apply(&x);
            let y2 = apply_linearized(&g, &qcgl_a(), &rot(0.9), Some(&tau), &reaction, scheme, &x);
            let err = y1.iter().zip(&y2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-11, "{err}");
        }
    }

    #[test]
    fn nnz_bounds() {
        let g = Grid::new(2, 3.0, 10).unwrap();
        let diag = from_real_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let full = from_real_rows(&[vec![-0.5, 0.3], vec![0.3, -0.5]]);
        let op = assemble_linearized(&g, &diag, &rot(1.0), &const_reaction(&g, &full), DriftScheme::Upwind).unwrap();
        let (d, m, nd) = (2, 2, g.nodes());
        assert!(op.matrix.nnz() <= (2 * d + 1 + m) * m * nd);
        let op = assemble_linearized(&g, &qcgl_a(), &rot(1.0), &const_reaction(&g, &full), DriftScheme::Centered).unwrap();
        assert!(op.matrix.nnz() <= (2 * d * 2 + m) * m * nd);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let g = Grid::new(3, 2.0, 8).unwrap();
        let a = from_real_rows(&[vec![1.0]]);
        let op = assemble_linearized(&g, &a, &vec![vec![0.0; 3]; 3], &vec![C64::default(); g.nodes()], DriftScheme::Upwind)
            .unwrap();
        for i in 0..op.dim() {
            let s: C64 = op.matrix.row(i).map(|x| x.1).sum();
            assert!(s.norm() < 1e-10);
        }
    }

    #[test]
    fn upwind_m_matrix_sign_pattern() {
        let g = Grid::new(2, 6.0, 15).unwrap();
        let a = from_real_rows(&[vec![0.0]]);
        let op = assemble(&g, &a, &rot(-1.7), Some(&[0.3, -0.2]), &vec![C64::default(); g.nodes()], DriftScheme::Upwind)
            .unwrap();
        for i in 0..op.dim() {
            for (c, v) in op.matrix.row(i) {
                assert_eq!(v.im, 0.0);
                if c == i {
                    assert!(v.re <= 0.0);
                } else {
                    assert!(v.re >= 0.0);
                }
            }
        }
    }

    #[test]
    fn neumann_cosine_modes() {
        // 16-point slice with complex scalar A: eigenvalues -(2/h^2)(1 - cos(pi k/(N-1))) a.
        let g = Grid::new(1, 2.0, 16).unwrap();
        let alpha = c(0.5, 0.5);
        let a = from_rows(&[vec![alpha]]);
        let op = assemble_linearized(&g, &a, &[vec![0.0]], &vec![C64::default(); 16], DriftScheme::Upwind).unwrap();
        let dense = faer::Mat::<C64>::from_fn(16, 16, |i, j| op.matrix.get(i, j));
        let mut got = crate::linalg::eigenvalues(&dense).unwrap();
        let h = g.h();
        let mut want: Vec<C64> =
            (0..16).map(|k| alpha * (-(2.0 / (h * h)) * (1.0 - (std::f64::consts::PI * k as f64 / 15.0).cos()))).collect();
        got.sort_by(|x, y| x.re.total_cmp(&y.re));
        want.sort_by(|x, y| x.re.total_cmp(&y.re));
        for (x, y) in got.iter().zip(&want) {
            assert!((x - y).norm() < 1e-10 * (1.0 + y.norm()), "{x} {y}");
        }
    }

    #[test]
    fn consistency_orders() {
        // v = sin(pi x1 / R) w; L v analytic; error on nodes two cells from the boundary.
        let r = 3.0;
        let s = rot(0.8);
        let a = qcgl_a();
        let w = [c(1.0, 0.0), c(0.5, 0.0)];
        let k = std::f64::consts::PI / r;
        let err = |n: usize, scheme: DriftScheme| {
            let g = Grid::new(2, r, n).unwrap();
            let v = Field::from_fn(g, 2, |x, o| {
                o[0] = (k * x[0]).sin() * w[0].re;
                o[1] = (k * x[0]).sin() * w[1].re;
            })
            .to_complex();
            let op = assemble_linearized(&g, &a, &s, &vec![C64::default(); g.nodes() * 4], scheme).unwrap();
            let out = op.apply(&v.data);
            let mut e = 0.0f64;
            for node in 0..g.nodes() {
                let idx = g.multi_index(node);
                if idx[..2].iter().any(|&i| i < 2 || i > n - 3) {
                    continue;
                }
                let x = g.position(node);
                let lap = -k * k * (k * x[0]).sin();
                let dx1 = k * (k * x[0]).cos();
                let drift = (s[0][0] * x[0] + s[0][1] * x[1]) * dx1;
                for comp in 0..2 {
                    let exact = (0..2).map(|cc| a[(comp, cc)] * w[cc] * lap).sum::<C64>() + w[comp] * drift;
                    e = e.max((out[node * 2 + comp] - exact).norm());
                }
            }
            e
        };
        let up: Vec<f64> = [17, 33, 65].iter().map(|&n| err(n, DriftScheme::Upwind)).collect();
        let ce: Vec<f64> = [17, 33, 65].iter().map(|&n| err(n, DriftScheme::Centered)).collect();
        for i in 0..2 {
            let ru = up[i] / up[i + 1];
            let rc = ce[i] / ce[i + 1];
            assert!(ru > 1.6 && ru < 2.6, "upwind ratio {ru}");
            assert!(rc > 3.2, "centered ratio {rc}");
        }
    }

    #[test]
    fn transpose_identity_and_direct_adjoint() {
        let g = Grid::new(2, 4.0, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let reaction: Vec<C64> =
            (0..g.nodes() * 4).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let pair = assemble_adjoint(&g, &qcgl_a(), &rot(1.1), &reaction, DriftScheme::Upwind).unwrap();
        let op = assemble_linearized(&g, &qcgl_a(), &rot(1.1), &reaction, DriftScheme::Upwind).unwrap();
        for t in 0..10 {
            let psi = random_vec(op.dim(), 100 + t);
            let v = random_vec(op.dim(), 200 + t);
            let lhs = crate::linalg::dot(&pair.transpose.apply(&psi), &v);
            let rhs = crate::linalg::dot(&psi, &op.apply(&v));
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(rhs.norm()));
        }
        // The drift coefficient along axis i does not depend on x_i, so both
        // adjoints agree on nodes whose stencil stays two cells off the boundary.
        let psi = random_vec(op.dim(), 7);
        let (y1, y2) = (pair.transpose.apply(&psi), pair.direct.apply(&psi));
        for node in 0..g.nodes() {
            let idx = g.multi_index(node);
            if idx[..2].iter().all(|&i| (2..g.n - 2).contains(&i)) {
                for k in 0..2 {
                    assert!((y1[node * 2 + k] - y2[node * 2 + k]).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn hermitian_structure_without_drift() {
        // With S = 0 and Hermitian data the two paths differ only through the
        // non-symmetric mirror closure; the trapezoid-weighted transpose removes it.
        let g = Grid::new(2, 3.0, 10).unwrap();
        let a = from_rows(&[vec![c(1.0, 0.0), c(0.2, 0.3)], vec![c(0.2, -0.3), c(0.8, 0.0)]]);
        let b = from_rows(&[vec![c(-1.0, 0.0), c(0.1, 0.1)], vec![c(0.1, -0.1), c(-0.4, 0.0)]]);
        let zero = vec![vec![0.0; 2]; 2];
        let pair = assemble_adjoint(&g, &a, &zero, &const_reaction(&g, &b), DriftScheme::Upwind).unwrap();
        let wt = |node: usize| -> f64 {
            g.multi_index(node)[..2].iter().map(|&i| if i == 0 || i == g.n - 1 { 0.5 } else { 1.0 }).product()
        };
        for i in 0..pair.direct.dim() {
            for (cidx, v) in pair.direct.matrix.row(i) {
                let t = pair.transpose.matrix.get(i, cidx) * wt(cidx / 2) / wt(i / 2);
                assert!((t - v).norm() < 1e-12 * (1.0 + v.norm()));
            }
        }
        let psi: Vec<C64> = Field::from_fn(g, 2, |x, o| {
            let bump = (-(x[0] * x[0] + x[1] * x[1])).exp();
            o[0] = bump;
            o[1] = -bump * x[0];
        })
        .to_complex()
        .data;
        let mut psi = psi;
        for node in 0..g.nodes() {
            if g.multi_index(node)[..2].iter().any(|&i| i < 2 || i > g.n - 3) {
                psi[2 * node] = C64::default();
                psi[2 * node + 1] = C64::default();
            }
        }
        let (y1, y2) = (pair.transpose.apply(&psi), pair.direct.apply(&psi));
        for (u, v) in y1.iter().zip(&y2) {
            assert!((u - v).norm() < 1e-12);
        }
    }
}
