use serde::Serialize;

use crate::{Error, Result};

pub const DENOMINATOR_CAP: i64 = 1_000_000;
pub const RESIDUAL_TOL: f64 = 1e-9;
/// A fraction p/q only counts if q^2 |x - p/q| stays below this. Irrational
/// numbers are approximated with q^2 |x - p/q| of order one.
pub const GAP_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Density {
    DenseHalfplane,
    DiscreteSubgroup,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioCheck {
    /// sigma[index] / sigma[0].
    pub index: usize,
    pub ratio: f64,
    pub fraction: Option<(i64, i64)>,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityReport {
    pub verdict: Density,
    pub ratios: Vec<RatioCheck>,
    pub denominator_cap: i64,
    pub residual_tol: f64,
    pub gap_tol: f64,
}

/// Continued-fraction convergent p/q of x > 0 with |x - p/q| <= RESIDUAL_TOL * max(1, x),
/// q <= DENOMINATOR_CAP and q^2 |x - p/q| <= GAP_TOL. Returns (p, q, residual).
pub fn rational_approximation(x: f64) -> Option<(i64, i64, f64)> {
    if !(x.is_finite() && x > 0.0) {
        return None;
    }
    let tol = RESIDUAL_TOL * x.max(1.0);
    let (mut h1, mut h2) = (1i64, 0i64);
    let (mut k1, mut k2) = (0i64, 1i64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a > 1e12 {
            return None;
        }
        let a = a as i64;
        let h = a.checked_mul(h1)?.checked_add(h2)?;
        let k = a.checked_mul(k1)?.checked_add(k2)?;
        if k > DENOMINATOR_CAP {
            return None;
        }
        let res = (x - h as f64 / k as f64).abs();
        if res <= tol {
            let kf = k as f64;
            return (kf * kf * res <= GAP_TOL).then_some((h, k, res));
        }
        let frac = y - a as f64;
        if frac <= 0.0 {
            return None;
        }
        y = 1.0 / frac;
        (h2, h1) = (h1, h);
        (k2, k1) = (k1, k);
    }
    None
}

/// Dense iff some angular velocity is not a rational multiple of the first one.
pub fn density_classifier(sigma: &[f64]) -> Result<DensityReport> {
    if sigma.is_empty() || sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Invalid("angular velocities must be positive and nonempty".into()));
    }
    let ratios: Vec<RatioCheck> = (1..sigma.len())
        .map(|i| {
            let ratio = sigma[i] / sigma[0];
            let approx = rational_approximation(ratio);
            RatioCheck {
                index: i,
                ratio,
                fraction: approx.map(|(p, q, _)| (p, q)),
                residual: approx.map_or(f64::NAN, |a| a.2),
            }
        })
        .collect();
    let verdict = if ratios.iter().all(|r| r.fraction.is_some()) { Density::DiscreteSubgroup } else { Density::DenseHalfplane };
    Ok(DensityReport { verdict, ratios, denominator_cap: DENOMINATOR_CAP, residual_tol: RESIDUAL_TOL, gap_tol: GAP_TOL })
}
