//! Numerical spectra of the linearization and their comparison with the analytical sets.

pub mod arnoldi;
pub mod decay;
pub mod fredholm;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{assemble_linearized, DiscreteOperator};
use crate::discretize::stencil::DriftScheme;
use crate::discretize::{ComplexField, Field, RealField};
use crate::dispersion::DispersionSet;
use crate::linalg::CMat;
use crate::qcgl::Nonlinearity;
use crate::symmetry::{eigenfunction_field, SymmetryEigentriple, TripleKind};
use crate::{Error, Result, C64};

pub use arnoldi::{eigs_near, ArnoldiConfig, ArnoldiOutput, RitzPair, ShiftInvert};
pub use decay::{decay_bounds, fit_decay_rate, uniform_decay_bounds, DecayBounds, DecayFit};
pub use fredholm::{solvability_check, Solvability, SolvabilityConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenClass {
    PointApprox,
    EssentialApprox,
    Unclassified,
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub lambda: C64,
    pub vector: ComplexField,
    /// |(L_h - lambda) v| / |v|
    pub residual: f64,
    pub class: EigenClass,
    /// Distance to the set that decided the class (the nearer one when unclassified).
    pub distance: f64,
}

/// Row-major m x m Jacobian blocks of f at every node of the profile.
pub fn reaction_blocks(profile: &RealField, nl: &dyn Nonlinearity) -> Vec<C64> {
    let m = profile.m;
    profile
        .data
        .par_chunks(m)
        .flat_map_iter(|u| {
            let mut jac = vec![0.0; m * m];
            nl.jacobian(u, &mut jac);
            jac.into_iter().map(|x| C64::new(x, 0.0))
        })
        .collect()
}

/// L_h = A lap + <S x, grad> + Df(v_star(x)) on the profile's grid.
pub fn linearize(profile: &RealField, a: &CMat, s: &[Vec<f64>], nl: &dyn Nonlinearity, scheme: DriftScheme) -> Result<DiscreteOperator> {
    if nl.m() != profile.m || a.nrows() != profile.m {
        return Err(Error::Dimension("profile, diffusion matrix and nonlinearity disagree on m".into()));
    }
    assemble_linearized(&profile.grid, a, s, &reaction_blocks(profile, nl), scheme)
}

/// Ritz pairs of `op` nearest `target`, each re-verified against the residual bound.
pub fn shift_invert_eigs(op: &DiscreteOperator, target: C64, cfg: &ArnoldiConfig) -> Result<(Vec<EigenResult>, ArnoldiOutput)> {
    let out = eigs_near(&op.matrix, target, cfg)?;
    let results = out
        .pairs
        .iter()
        .map(|p| {
            Ok(EigenResult {
                lambda: p.lambda,
                vector: Field::from_vec(op.grid, op.m, p.vector.clone())?,
                residual: p.residual,
                class: EigenClass::Unclassified,
                distance: f64::INFINITY,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((results, out))
}

/// Point-approx within tol_point of the symmetry set, else essential-approx within
/// tol_ess of a sampled dispersion curve, else unclassified.
pub fn classify(lambda: C64, sym: &[C64], disp: &DispersionSet, tol_point: f64, tol_ess: f64) -> (EigenClass, f64) {
    let dp = sym.iter().map(|z| (lambda - z).norm()).fold(f64::INFINITY, f64::min);
    if dp <= tol_point {
        return (EigenClass::PointApprox, dp);
    }
    let de = disp.distance(lambda);
    if de <= tol_ess {
        return (EigenClass::EssentialApprox, de);
    }
    (EigenClass::Unclassified, dp.min(de))
}

pub fn classify_spectrum(
    mut eigs: Vec<EigenResult>,
    sym: &[C64],
    disp: &DispersionSet,
    tol_point: f64,
    tol_ess: f64,
) -> Vec<EigenResult> {
    for e in &mut eigs {
        (e.class, e.distance) = classify(e.lambda, sym, disp, tol_point, tol_ess);
    }
    eigs
}

/// Columns re, im, residual, class, distance.
pub fn write_spectrum_csv<W: Write>(eigs: &[EigenResult], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["re", "im", "residual", "class", "distance"]).map_err(crate::dispersion::csv_err)?;
    for e in eigs {
        let class = match e.class {
            EigenClass::PointApprox => "point-approx",
            EigenClass::EssentialApprox => "essential-approx",
            EigenClass::Unclassified => "unclassified",
        };
        wr.write_record([
            format!("{:e}", e.lambda.re),
            format!("{:e}", e.lambda.im),
            format!("{:e}", e.residual),
            class.to_string(),
            format!("{:e}", e.distance),
        ])
        .map_err(crate::dispersion::csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenfunctionCheck {
    pub lambda: C64,
    pub kind: TripleKind,
    /// |(lambda - L_h) v| / |v|; None when v vanishes.
    pub residual: Option<f64>,
    pub degenerate: bool,
}

/// Relative size below which a built eigenfunction counts as zero.
pub const DEGENERATE_TOL: f64 = 1e-10;

/// Builds v = <E x + b, grad v_star> for every triple and measures how well it solves
/// the discrete eigenvalue problem.
pub fn verify_symmetry_eigenfunctions(
    op: &DiscreteOperator,
    gradient: &[RealField],
    triples: &[SymmetryEigentriple],
) -> Result<Vec<EigenfunctionCheck>> {
    let grid = op.grid;
    let l2 = |x: &[C64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let grad_scale: f64 = gradient.iter().map(|g| g.data.iter().map(|x| x * x).sum::<f64>().sqrt()).sum();
    let reach = grid.r * (grid.d as f64).sqrt();
    triples
        .iter()
        .map(|t| {
            let v = eigenfunction_field(gradient, &t.e, &t.b, &grid)?;
            if v.m != op.m {
                return Err(Error::Dimension("gradient fields do not match the operator".into()));
            }
            let coef = crate::linalg::fro(&t.e) * reach + l2(&t.b);
            let nv = l2(&v.data);
            if nv <= DEGENERATE_TOL * coef * grad_scale || nv == 0.0 {
                return Ok(EigenfunctionCheck { lambda: t.lambda, kind: t.kind, residual: None, degenerate: true });
            }
            let lv = op.apply(&v.data);
            let r = lv.iter().zip(&v.data).map(|(a, b)| (t.lambda * b - a).norm_sqr()).sum::<f64>().sqrt();
            Ok(EigenfunctionCheck { lambda: t.lambda, kind: t.kind, residual: Some(r / nv), degenerate: false })
        })
        .collect()
}
