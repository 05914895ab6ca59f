//! Dispersion relation and dispersion set, density of the cone tips, and the
//! constant-coefficient heat kernel used as an independent oracle.

mod density;
mod kernel;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

pub use density::{density_classifier, rational_approximation, Density, DensityReport, RatioCheck};
pub use kernel::{apply_semigroup, heat_kernel, HeatKernel, SemigroupOutput};

use crate::coeffs::{joint_eigenvalues, simultaneous_diagonalization, SystemCoefficients};
use crate::linalg::{self, CMat};
use crate::symmetry::skew_eigendecomposition;
use crate::{Error, Result, C64};

/// Evaluates eig(Df(v_inf) - eta^2 A) - i<n, sigma>.
#[derive(Clone, Debug)]
pub struct Dispersion {
    a: CMat,
    dfinf: CMat,
    sigma: Vec<f64>,
    joint: Option<Vec<(C64, C64)>>,
}

impl Dispersion {
    pub fn new(coeffs: &SystemCoefficients) -> Result<Self> {
        let sigma = skew_eigendecomposition(&coeffs.s)?.sigma;
        let diag = simultaneous_diagonalization(&coeffs.a, &coeffs.dfinf);
        let joint = if diag.ok { Some(joint_eigenvalues(&coeffs.a, &coeffs.dfinf, &diag.y)?) } else { None };
        Ok(Self { a: coeffs.a.clone(), dfinf: coeffs.dfinf.clone(), sigma, joint })
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn has_fast_path(&self) -> bool {
        self.joint.is_some()
    }

    /// d_j - eta^2 a_j from the joint eigenvalues, when A and Df(v_inf) are simultaneously diagonalizable.
    pub fn fast(&self, eta: f64) -> Option<Vec<C64>> {
        let e2 = eta * eta;
        self.joint.as_ref().map(|j| j.iter().map(|&(a, d)| d - a * e2).collect())
    }

    pub fn generic(&self, eta: f64) -> Result<Vec<C64>> {
        let m = &self.dfinf - linalg::scaled(&self.a, C64::new(eta * eta, 0.0));
        linalg::eigenvalues(&m)
    }

    /// Values at n = 0.
    pub fn base(&self, eta: f64) -> Result<Vec<C64>> {
        if !(eta >= 0.0) {
            return Err(Error::Invalid(format!("eta = {eta} must be nonnegative")));
        }
        match self.fast(eta) {
            Some(v) => Ok(v),
            None => self.generic(eta),
        }
    }

    pub fn shift(&self, n: &[i64]) -> Result<f64> {
        if n.len() != self.sigma.len() {
            return Err(Error::Dimension(format!("n has {} entries, S has {} rotation planes", n.len(), self.sigma.len())));
        }
        Ok(n.iter().zip(&self.sigma).map(|(&k, s)| k as f64 * s).sum())
    }

    pub fn eval(&self, eta: f64, n: &[i64]) -> Result<Vec<C64>> {
        let sh = self.shift(n)?;
        Ok(self.base(eta)?.into_iter().map(|z| C64::new(z.re, z.im - sh)).collect())
    }
}

pub fn dispersion_eigenvalues(coeffs: &SystemCoefficients, eta: f64, n: &[i64]) -> Result<Vec<C64>> {
    Dispersion::new(coeffs)?.eval(eta, n)
}

#[derive(Clone, Debug)]
pub struct DispersionQuery {
    pub coeffs: SystemCoefficients,
    pub eta_grid: Vec<f64>,
    /// Box |n_l| <= n_max in every rotation plane.
    pub n_max: i64,
}

impl DispersionQuery {
    pub fn new(coeffs: SystemCoefficients, eta_grid: Vec<f64>, n_max: i64) -> Result<Self> {
        if eta_grid.is_empty() || eta_grid[0] < 0.0 || eta_grid.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Invalid("eta grid must be nonempty, sorted and nonnegative".into()));
        }
        if n_max < 0 {
            return Err(Error::Invalid(format!("n_max = {n_max} must be nonnegative")));
        }
        Ok(Self { coeffs, eta_grid, n_max })
    }
}

/// `points` values on [0, eta_max] with Re lambda below `re_min` at eta_max.
pub fn default_eta_grid(coeffs: &SystemCoefficients, re_min: f64, points: usize) -> Result<Vec<f64>> {
    let s = linalg::spectral_abscissa(&coeffs.dfinf)?;
    let a0 = linalg::eigenvalues(&coeffs.a)?.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let beta = linalg::hermitian_part_eigenvalues(&coeffs.a)?[0];
    let rate = if beta > 0.0 { beta.min(a0) } else { a0 };
    let eta_max = (((s - re_min).max(0.0) / rate).sqrt() * 1.05).max(1e-3);
    let p = points.max(2);
    Ok((0..p).map(|i| eta_max * i as f64 / (p - 1) as f64).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct DispersionSample {
    pub eta: f64,
    pub lambda: Vec<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DispersionCurve {
    pub n: Vec<i64>,
    pub samples: Vec<DispersionSample>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Tip {
    pub n: Vec<i64>,
    pub lambda: C64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DispersionSet {
    pub sigma: Vec<f64>,
    pub curves: Vec<DispersionCurve>,
    pub tips: Vec<Tip>,
}

/// All n in the box, lexicographic.
fn n_box(k: usize, n_max: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-n_max..=n_max).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

pub fn sample_dispersion_set(query: &DispersionQuery) -> Result<DispersionSet> {
    let disp = Dispersion::new(&query.coeffs)?;
    let base: Vec<Vec<C64>> = query.eta_grid.iter().map(|&e| disp.base(e)).collect::<Result<_>>()?;
    let abscissa = linalg::spectral_abscissa(&query.coeffs.dfinf)?;
    let ns = n_box(disp.sigma.len(), query.n_max);
    let curves: Vec<DispersionCurve> = ns
        .par_iter()
        .map(|n| {
            let sh = disp.shift(n).expect("box matches the number of planes");
            let samples = query
                .eta_grid
                .iter()
                .zip(&base)
                .map(|(&eta, b)| DispersionSample { eta, lambda: b.iter().map(|z| C64::new(z.re, z.im - sh)).collect() })
                .collect();
            DispersionCurve { n: n.clone(), samples }
        })
        .collect();
    let tips = ns
        .iter()
        .map(|n| Tip { n: n.clone(), lambda: C64::new(abscissa, -disp.shift(n).expect("box matches")) })
        .collect();
    Ok(DispersionSet { sigma: disp.sigma, curves, tips })
}

impl DispersionSet {
    pub fn max_re(&self) -> f64 {
        self.points().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn points(&self) -> impl Iterator<Item = C64> + '_ {
        self.curves.iter().flat_map(|c| c.samples.iter().flat_map(|s| s.lambda.iter().copied()))
    }

    pub fn tips_in_window(&self, im_lo: f64, im_hi: f64) -> Vec<&Tip> {
        self.tips.iter().filter(|t| t.lambda.im >= im_lo && t.lambda.im <= im_hi).collect()
    }

    /// Distance from z to the sampled curves, treating consecutive samples as segments.
    pub fn distance(&self, z: C64) -> f64 {
        let seg = |a: C64, b: C64| {
            let ab = b - a;
            let l2 = ab.norm_sqr();
            let t = if l2 > 0.0 { ((z - a).re * ab.re + (z - a).im * ab.im) / l2 } else { 0.0 };
            (z - (a + ab * t.clamp(0.0, 1.0))).norm()
        };
        let mut best = f64::INFINITY;
        for c in &self.curves {
            for (i, s) in c.samples.iter().enumerate() {
                for (j, &l) in s.lambda.iter().enumerate() {
                    let d = match c.samples.get(i + 1) {
                        Some(nx) => seg(l, nx.lambda[j]),
                        None => (z - l).norm(),
                    };
                    best = best.min(d);
                }
            }
        }
        best
    }

    /// Columns n_1..n_k, eta, re_1, im_1, ..., re_m, im_m.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let k = self.sigma.len();
        let m = self.curves.first().and_then(|c| c.samples.first()).map_or(0, |s| s.lambda.len());
        let mut head: Vec<String> = (1..=k).map(|l| format!("n{l}")).collect();
        head.push("eta".into());
        for j in 1..=m {
            head.push(format!("re{j}"));
            head.push(format!("im{j}"));
        }
        wr.write_record(&head).map_err(csv_err)?;
        for c in &self.curves {
            for s in &c.samples {
                let mut rec: Vec<String> = c.n.iter().map(|v| v.to_string()).collect();
                rec.push(s.eta.to_string());
                for z in &s.lambda {
                    rec.push(z.re.to_string());
                    rec.push(z.im.to_string());
                }
                wr.write_record(&rec).map_err(csv_err)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Invalid(format!("csv: {e}"))
}
