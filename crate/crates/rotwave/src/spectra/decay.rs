use serde::Serialize;

use crate::coeffs::SpectralConstants;
use crate::discretize::Grid;
use crate::{Error, Result, C64};

pub const MIN_SHELLS: usize = 10;

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub mu_fit: f64,
    pub c_fit: f64,
    pub r2: f64,
    pub window: (f64, f64),
    pub shells: usize,
}

/// Regresses log(max |v| over a radial shell) = log C - mu sqrt(r^2 + 1).
/// Shells have width h; each contributes the node where its maximum sits.
pub fn fit_decay_rate(magnitude: &[f64], grid: &Grid, window: (f64, f64)) -> Result<DecayFit> {
    if magnitude.len() != grid.nodes() {
        return Err(Error::GridMismatch);
    }
    let (lo, hi) = window;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::Invalid(format!("decay window ({lo}, {hi})")));
    }
    let h = grid.h();
    let count = (hi / h).ceil() as usize + 1;
    let mut best: Vec<Option<(f64, f64)>> = vec![None; count];
    for (node, &a) in magnitude.iter().enumerate() {
        let x = grid.position(node);
        let r = x[..grid.d].iter().map(|v| v * v).sum::<f64>().sqrt();
        if r < lo || r > hi || !a.is_finite() || a <= 0.0 {
            continue;
        }
        let slot = &mut best[(r / h) as usize];
        if slot.is_none_or(|(_, m)| a > m) {
            *slot = Some((r, a));
        }
    }
    let pts: Vec<(f64, f64)> = best.into_iter().flatten().map(|(r, a)| ((r * r + 1.0).sqrt(), a.ln())).collect();
    if pts.len() < MIN_SHELLS {
        return Err(Error::TooFewShells(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - icept - slope * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(DecayFit { mu_fit: -slope, c_fit: icept.exp(), r2, window, shells: pts.len() })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayBounds {
    pub p: f64,
    pub q: f64,
    /// sqrt(a0 (Re lambda + b0)) / (a_max p), the eps -> 1 limit.
    pub mu2_sup: f64,
    /// Same with q = p / (p - 1).
    pub mu4_sup: f64,
    /// The limits are not attained: the estimates hold for eps < 1 only.
    pub open_bound: bool,
}

fn gap(constants: &SpectralConstants, lambda: C64) -> Result<f64> {
    let g = lambda.re + constants.b0;
    if g <= 0.0 {
        return Err(Error::BelowSpectralBound(g));
    }
    Ok((constants.a0 * g).sqrt() / constants.a_max)
}

pub fn decay_bounds(constants: &SpectralConstants, lambda: C64, p: f64, _d: usize) -> Result<DecayBounds> {
    if p <= 1.0 {
        return Err(Error::Invalid(format!("p = {p} must exceed 1")));
    }
    let top = gap(constants, lambda)?;
    let q = p / (p - 1.0);
    Ok(DecayBounds { p, q, mu2_sup: top / p, mu4_sup: top / q, open_bound: true })
}

/// Bounds uniform over the admissible range: the eigenfunction rate uses max(p_min, d/2),
/// the adjoint rate uses p_min.
pub fn uniform_decay_bounds(constants: &SpectralConstants, lambda: C64, p_min: f64, d: usize) -> Result<DecayBounds> {
    let top = gap(constants, lambda)?;
    let p = p_min.max(d as f64 / 2.0);
    Ok(DecayBounds { p, q: p_min, mu2_sup: top / p, mu4_sup: top / p_min, open_bound: true })
}
