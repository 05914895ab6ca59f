//! Model matrices, assumption checks and the spectral constants of the linear theory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{self, CMat};
use crate::{Error, Result, C64};

/// Diffusion matrix, velocity matrix and limit Jacobian of a rotating-wave problem.
#[derive(Clone, Debug)]
pub struct SystemCoefficients {
    pub a: CMat,
    pub s: Vec<Vec<f64>>,
    pub dfinf: CMat,
    pub d: usize,
    pub m: usize,
    /// |f(v_inf)|; zero for purely linear problems.
    pub f_vinf_norm: f64,
    /// Whether the nonlinearity is known to be C^2.
    pub smooth_nonlinearity: bool,
}

impl SystemCoefficients {
    /// Validates shapes, exact skewness of `s` and Re eig(A) > 0.
    pub fn new(a: CMat, s: Vec<Vec<f64>>, dfinf: CMat) -> Result<Self> {
        let c = Self::unchecked(a, s, dfinf)?;
        let skew = skew_defect(&c.s);
        if skew != 0.0 {
            return Err(Error::NotSkew(skew));
        }
        let a0 = linalg::eigenvalues(&c.a)?.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if a0 <= 0.0 {
            return Err(Error::Invalid(format!("A has an eigenvalue with Re = {a0} <= 0")));
        }
        Ok(c)
    }

    /// Shape checks only; assumption failures are left for `check_conditions`.
    pub fn unchecked(a: CMat, s: Vec<Vec<f64>>, dfinf: CMat) -> Result<Self> {
        let d = s.len();
        let m = a.nrows();
        if d < 2 || s.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension(format!("S must be d x d with d >= 2, got {d} rows")));
        }
        if m < 1 || a.ncols() != m || dfinf.nrows() != m || dfinf.ncols() != m {
            return Err(Error::Dimension("A and Df(v_inf) must both be m x m".into()));
        }
        Ok(Self { a, s, dfinf, d, m, f_vinf_norm: 0.0, smooth_nonlinearity: true })
    }

    pub fn identity(m: usize, d: usize) -> Self {
        let minus_i = linalg::scaled(&linalg::identity(m), C64::new(-1.0, 0.0));
        Self::unchecked(linalg::identity(m), vec![vec![0.0; d]; d], minus_i).expect("identity model is well formed")
    }
}

pub fn skew_defect(s: &[Vec<f64>]) -> f64 {
    let mut r = 0.0f64;
    for i in 0..s.len() {
        for j in 0..s.len() {
            r = r.max((s[i][j] + s[j][i]).abs());
        }
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralConstants {
    pub a_min: f64,
    pub a_max: f64,
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub beta_inf: f64,
    pub beta_a: f64,
}

pub fn spectral_constants(coeffs: &SystemCoefficients) -> Result<SpectralConstants> {
    let sv = linalg::singular_values(&coeffs.a)?;
    if sv.iter().cloned().fold(f64::INFINITY, f64::min) <= 1e-14 * sv.iter().cloned().fold(0.0, f64::max) {
        return Err(Error::SingularDiffusion);
    }
    let ea = linalg::eigenvalues(&coeffs.a)?;
    let a_min = ea.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let a_max = ea.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let a0 = ea.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let a1 = (a_max * a_max / (a_min * a0)).powf(coeffs.d as f64 / 2.0);
    let b0 = -linalg::spectral_abscissa(&coeffs.dfinf)?;
    let beta_a = linalg::hermitian_part_eigenvalues(&coeffs.a)?[0];
    let beta_inf = -*linalg::hermitian_part_eigenvalues(&coeffs.dfinf)?.last().unwrap();
    Ok(SpectralConstants { a_min, a_max, a0, a1, b0, beta_inf, beta_a })
}

/// Re<w,Mw> / (|w||Mw|).
pub fn antieigen_quotient(m: &CMat, w: &[C64]) -> f64 {
    let mw = linalg::matvec(m, w);
    linalg::dot(w, &mw).re / (linalg::norm(w) * linalg::norm(&mw))
}

/// First antieigenvalue; closed form for normal matrices, multi-start search otherwise.
pub fn first_antieigenvalue(m: &CMat) -> Result<f64> {
    if linalg::fro(m) == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    if linalg::is_normal(m) {
        antieigenvalue_normal(m)
    } else {
        Ok(antieigenvalue_search(m, 64, 0x5eed))
    }
}

/// For normal M the quotient is x/sqrt(y) over the convex hull of the points
/// (Re l, |l|^2); it has no interior critical points, so the minimum sits on a
/// vertex or on a hull edge.
pub fn antieigenvalue_normal(m: &CMat) -> Result<f64> {
    let ev: Vec<C64> = linalg::eigenvalues(m)?.into_iter().filter(|z| z.norm() > 0.0).collect();
    if ev.is_empty() {
        return Err(Error::ZeroMatrix);
    }
    let pts: Vec<(f64, f64)> = ev.iter().map(|z| (z.re, z.norm_sqr())).collect();
    let g = |x: f64, y: f64| x / y.sqrt();
    let mut best = f64::INFINITY;
    for (i, &(bi, li)) in pts.iter().enumerate() {
        best = best.min(g(bi, li));
        for &(bj, lj) in &pts[i + 1..] {
            let (db, dl) = (bi - bj, li - lj);
            if db == 0.0 || dl == 0.0 {
                continue;
            }
            let t = (bj * dl / 2.0 - db * lj) / (db * dl / 2.0);
            if t > 0.0 && t < 1.0 {
                best = best.min(g(bj + t * db, lj + t * dl));
            }
        }
    }
    Ok(best)
}

/// Projected-gradient minimization of the quotient over the unit sphere of C^m.
pub fn antieigenvalue_search(m: &CMat, starts: usize, seed: u64) -> f64 {
    let n = m.nrows();
    let mh = linalg::adjoint(m);
    let mhm = &mh * m;
    let herm = linalg::hermitian_part(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..starts {
        let mut w: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        normalize(&mut w);
        let grad = |w: &[C64]| -> Option<(f64, Vec<C64>)> {
            let mw = linalg::matvec(m, w);
            let nmw = linalg::norm(&mw);
            if nmw == 0.0 {
                return None;
            }
            let hw = linalg::matvec(&herm, w);
            let num = linalg::dot(w, &hw).re;
            let nw = linalg::norm(w);
            let den = nw * nmw;
            let mhmw = linalg::matvec(&mhm, w);
            let g = (0..n)
                .map(|i| (hw[i] * 2.0 * den - (w[i] * (nmw / nw) + mhmw[i] * (nw / nmw)) * num) / (den * den))
                .collect();
            Some((num / den, g))
        };
        let Some((mut q, mut g)) = grad(&w) else { continue };
        let mut step = 1.0;
        for _ in 0..5000 {
            let gn = linalg::norm(&g);
            if gn < 1e-10 {
                break;
            }
            let mut accepted = false;
            while step > 1e-16 {
                let mut trial: Vec<C64> = w.iter().zip(&g).map(|(a, b)| a - b * step).collect();
                normalize(&mut trial);
                if let Some((qt, gt)) = grad(&trial) {
                    if qt <= q - 1e-4 * step * gn * gn {
                        w = trial;
                        q = qt;
                        g = gt;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            step *= 2.0;
        }
        best = best.min(q);
    }
    best
}

fn normalize(w: &mut [C64]) {
    let n = linalg::norm(w);
    w.iter_mut().for_each(|z| *z /= n);
}

/// Open interval of p with |p-2|/p < mu1(M); `None` when mu1 <= 0.
pub fn admissible_p_range(m: &CMat) -> Result<Option<(f64, f64)>> {
    Ok(p_range_from_mu1(first_antieigenvalue(m)?))
}

pub fn p_range_from_mu1(mu1: f64) -> Option<(f64, f64)> {
    if mu1 <= 0.0 {
        return None;
    }
    let p_max = if mu1 >= 1.0 { f64::INFINITY } else { 2.0 / (1.0 - mu1) };
    Some((2.0 / (1.0 + mu1), p_max))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionEntry {
    pub name: String,
    pub pass: bool,
    pub witness: Option<f64>,
    pub estimate: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub p: f64,
    pub q: f64,
    pub mu1_a: f64,
    pub mu1_ah: f64,
    pub conditions: Vec<ConditionEntry>,
    /// Constants that come from cited prior work and cannot be computed here.
    pub external: Vec<(&'static str, &'static str)>,
}

impl ConditionReport {
    pub fn get(&self, name: &str) -> Option<&ConditionEntry> {
        self.conditions.iter().find(|e| e.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|e| e.pass)
    }
}

/// Minimum of the L^p dissipativity form over `samples` random unit pairs (z, w).
pub fn sampled_dissipativity(a: &CMat, p: f64, samples: usize, seed: u64) -> f64 {
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let mut v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        normalize(&mut v);
        v
    };
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let z = draw(&mut rng);
        let w = draw(&mut rng);
        let aw = linalg::matvec(a, &w);
        let form = linalg::dot(&w, &aw).re + (p - 2.0) * linalg::dot(&w, &z).re * linalg::dot(&z, &aw).re;
        best = best.min(form);
    }
    best
}

fn entry(name: &str, pass: bool, witness: Option<f64>, estimate: Option<f64>, detail: String) -> ConditionEntry {
    ConditionEntry { name: name.into(), pass, witness, estimate, detail }
}

pub fn check_conditions(coeffs: &SystemCoefficients, p: f64) -> ConditionReport {
    let q = p / (p - 1.0);
    let ah = linalg::adjoint(&coeffs.a);
    let mu1_a = first_antieigenvalue(&coeffs.a).unwrap_or(f64::NAN);
    let mu1_ah = first_antieigenvalue(&ah).unwrap_or(f64::NAN);
    let invertible = spectral_constants(coeffs).is_ok();
    let mut out = Vec::new();

    let cond_a = linalg::eigen(&coeffs.a).and_then(|(_, y)| linalg::cond2(&y)).unwrap_or(f64::INFINITY);
    out.push(entry("A1", cond_a < 1e8, Some(cond_a), None, "eigenvector condition number < 1e8".into()));

    let a0 = linalg::eigenvalues(&coeffs.a)
        .map(|e| e.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
        .unwrap_or(f64::NAN);
    out.push(entry("A2", a0 > 0.0, Some(a0), None, "min Re eig(A) > 0".into()));

    let beta_a = linalg::hermitian_part_eigenvalues(&coeffs.a).map(|v| v[0]).unwrap_or(f64::NAN);
    out.push(entry("A3", beta_a > 0.0, Some(beta_a), Some(beta_a), "min eig((A+A^H)/2) > 0".into()));

    let thr_p = (p - 2.0).abs() / p;
    let thr_q = (q - 2.0).abs() / q;
    let a5p = invertible && mu1_a > thr_p;
    let a5q = invertible && mu1_ah > thr_q;
    let gamma = sampled_dissipativity(&coeffs.a, p, 10_000, 11);
    let delta = sampled_dissipativity(&ah, q, 10_000, 13);
    let agree = |pass: bool, est: f64| if pass == (est > 0.0) { "consistent" } else { "sampled form disagrees" };
    out.push(entry(
        "A4_p",
        a5p,
        Some(mu1_a),
        Some(gamma),
        format!("decided by A5_p; sampled min gamma_A over 1e4 pairs ({})", agree(a5p, gamma)),
    ));
    out.push(entry(
        "A4_q",
        a5q,
        Some(mu1_ah),
        Some(delta),
        format!("decided by A5_q; sampled min delta_A over 1e4 pairs ({})", agree(a5q, delta)),
    ));
    out.push(entry("A5_p", a5p, Some(mu1_a), Some(thr_p), format!("mu1(A) > |p-2|/p = {thr_p}")));
    out.push(entry("A5_q", a5q, Some(mu1_ah), Some(thr_q), format!("mu1(A^H) > |q-2|/q = {thr_q}")));

    let skew = skew_defect(&coeffs.s);
    out.push(entry("A6", skew == 0.0, Some(skew), None, "S + S^T = 0 entrywise".into()));
    out.push(entry("A7", coeffs.smooth_nonlinearity, None, None, "f in C^2".into()));
    out.push(entry(
        "A8",
        coeffs.f_vinf_norm <= 1e-12,
        Some(coeffs.f_vinf_norm),
        None,
        "f(v_inf) = 0".into(),
    ));

    let sd = simultaneous_diagonalization(&coeffs.a, &coeffs.dfinf);
    out.push(entry("A9", sd.ok, Some(sd.kappa), None, "A, Df(v_inf) simultaneously diagonalizable".into()));

    let s_df = linalg::spectral_abscissa(&coeffs.dfinf).unwrap_or(f64::NAN);
    out.push(entry("A10", s_df < 0.0, Some(s_df), None, "max Re eig(Df(v_inf)) < 0".into()));

    let beta_inf = linalg::hermitian_part_eigenvalues(&coeffs.dfinf)
        .map(|v| -*v.last().unwrap())
        .unwrap_or(f64::NAN);
    out.push(entry("A11", beta_inf > 0.0, Some(beta_inf), Some(beta_inf), "-max eig(Herm Df(v_inf)) > 0".into()));

    ConditionReport {
        p,
        q,
        mu1_a,
        mu1_ah,
        conditions: out,
        external: vec![("C_0_eps", "external"), ("K_1", "external")],
    }
}

#[derive(Clone, Debug)]
pub struct Diagonalization {
    pub ok: bool,
    pub y: CMat,
    pub kappa: f64,
}

/// Joint eigenbasis of two commuting diagonalizable matrices.
pub fn simultaneous_diagonalization(a: &CMat, b: &CMat) -> Diagonalization {
    let m = a.nrows();
    let fail = Diagonalization { ok: false, y: linalg::identity(m), kappa: f64::INFINITY };
    let (na, nb) = (linalg::fro(a), linalg::fro(b));
    if linalg::commutator_norm(a, b) > 1e-10 * na * nb {
        return fail;
    }
    let diagonalizable = |x: &CMat| linalg::eigen(x).and_then(|(_, y)| linalg::cond2(&y)).is_ok_and(|k| k < 1e8);
    if !diagonalizable(a) || !diagonalizable(b) {
        return fail;
    }
    // A generic combination separates the joint eigenvalues.
    let t = 0.754_877_666_246_692_7;
    let scale = if nb > 0.0 { na.max(1e-300) / nb } else { 0.0 };
    let comb = a + linalg::scaled(b, C64::new(t * scale, 0.0));
    let Ok((_, mut y)) = linalg::eigen(&comb) else { return fail };
    for j in 0..m {
        let piv = (0..m).find(|&i| y[(i, j)].norm() > 1e-12).unwrap_or(0);
        let ph = y[(piv, j)] / y[(piv, j)].norm();
        for i in 0..m {
            y[(i, j)] /= ph;
        }
    }
    let Ok(yi) = linalg::inverse(&y) else { return fail };
    let off = |x: &CMat| {
        let d = &yi * x * &y;
        let mut r = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    r = r.max(d[(i, j)].norm());
                }
            }
        }
        r
    };
    let kappa = linalg::cond2(&y).unwrap_or(f64::INFINITY);
    let tol = 1e-8 * kappa;
    let ok = off(a) <= tol * na.max(1.0) && off(b) <= tol * nb.max(1.0);
    Diagonalization { ok, y, kappa }
}

/// Joint eigenvalues (a_j, b_j) along the columns of `y`.
pub fn joint_eigenvalues(a: &CMat, b: &CMat, y: &CMat) -> Result<Vec<(C64, C64)>> {
    let yi = linalg::inverse(y)?;
    let da = &yi * a * y;
    let db = &yi * b * y;
    Ok((0..a.nrows()).map(|j| (da[(j, j)], db[(j, j)])).collect())
}
