//! Datasets behind the figures. fig1 and fig2 are analytical; fig4 and fig5 run the 2D pipeline.

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use rotwave::coeffs::SystemCoefficients;
use rotwave::discretize::io::write_complex_field;
use rotwave::discretize::stencil::gradient_fields;
use rotwave::discretize::{assemble_adjoint, ComplexField, Field, RealField};
use rotwave::dispersion::{default_eta_grid, sample_dispersion_set, DispersionQuery};
use rotwave::linalg::{c, from_rows};
use rotwave::spectra::{eigs_near, linearize, reaction_blocks, verify_symmetry_eigenfunctions, ArnoldiConfig};
use rotwave::symmetry::{eigenfunction_field, symmetry_eigentriples};
use rotwave::C64;

use crate::commands::{self, component_names, FreezeSummary};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::Out;

pub const NOTICE: &str = "2D analogue of the paper's 3D figure";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig4,
    Fig5,
}

impl Figure {
    fn name(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
        }
    }
}

pub fn rot(s: f64) -> Vec<Vec<f64>> {
    vec![vec![0.0, s], vec![-s, 0.0]]
}

/// Block-diagonal skew matrix with the given angular velocities.
pub fn blocks(sigma: &[f64]) -> Vec<Vec<f64>> {
    let d = 2 * sigma.len();
    let mut s = vec![vec![0.0; d]; d];
    for (k, &x) in sigma.iter().enumerate() {
        s[2 * k][2 * k + 1] = x;
        s[2 * k + 1][2 * k] = -x;
    }
    s
}

pub fn example_s3() -> Vec<Vec<f64>> {
    vec![vec![0.0, 0.6888, -0.0043], vec![-0.6888, 0.0, -0.0043], vec![0.0043, 0.0043, 0.0]]
}

pub fn random_skew(d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            let x = rng.random_range(-2.0..2.0);
            s[i][j] = x;
            s[j][i] = -x;
        }
    }
    s
}

/// Velocity matrices of the fig2 panels, d = 2..5.
pub fn fig2_matrices(seed: u64) -> Vec<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![rot(1.027), example_s3(), random_skew(4, &mut rng), random_skew(5, &mut rng)]
}

pub fn run(cfg: &RunConfig, fig: Figure) -> CliResult<()> {
    let out = Out::create(&cfg.out.join(fig.name()))?;
    let notes = match fig {
        Figure::Fig1 => fig1(cfg, &out)?,
        Figure::Fig2 => fig2(cfg, &out)?,
        Figure::Fig4 => fig4(cfg, &out)?,
        Figure::Fig5 => fig5(cfg, &out)?,
    };
    out.json("figure.json", &notes)?;
    out.meta(fig.name(), cfg, Value::Null)
}

/// Scalar A = (1+i)/2 and Df(v_inf) = -1/2 with three velocity matrices.
fn fig1(cfg: &RunConfig, out: &Out) -> CliResult<Value> {
    let a = from_rows(&[vec![c(0.5, 0.5)]]);
    let b = from_rows(&[vec![c(-0.5, 0.0)]]);
    let panels: [(&str, Vec<f64>, i64); 3] =
        [("a", vec![1.027], cfg.dispersion.n_max), ("b", vec![1.0, 1.5], 3), ("c", vec![1.0, std::f64::consts::E / 2.0], 3)];
    let mut docs = Vec::new();
    for (name, sigma, n_max) in panels {
        let sub = Out::create(&out.path(name))?;
        let coeffs = SystemCoefficients::new(a.clone(), blocks(&sigma), b.clone())?;
        let grid = default_eta_grid(&coeffs, cfg.dispersion.re_min, cfg.dispersion.eta_points)?;
        let set = sample_dispersion_set(&DispersionQuery::new(coeffs, grid, n_max)?)?;
        let doc = commands::write_dispersion(&sub, &set)?;
        println!("fig1({name}): sigma = {sigma:?}, density {}", doc["density"]["verdict"]);
        docs.push(json!({ "panel": name, "sigma": sigma, "n_max": n_max, "dispersion": doc }));
    }
    Ok(json!({ "figure": "fig1", "A": [[0.5, 0.5]], "Dfinf": [[-0.5, 0.0]], "panels": docs }))
}

/// Symmetry sets for d = 2..5, computed exactly as the `symmetry` command does.
fn fig2(cfg: &RunConfig, out: &Out) -> CliResult<Value> {
    let mut docs = Vec::new();
    for s in fig2_matrices(cfg.seed) {
        let d = s.len();
        let sub = Out::create(&out.path(&format!("d{d}")))?;
        let doc = commands::write_symmetry(&sub, &s)?;
        println!("fig2(d = {d}): {} markers (d(d+1)/2 = {})", doc["count"], d * (d + 1) / 2);
        docs.push(json!({ "d": d, "count": doc["count"], "expected": d * (d + 1) / 2 }));
    }
    Ok(json!({ "figure": "fig2", "seed": cfg.seed, "panels": docs }))
}

/// 2D soliton: reuses eigs.profile / eigs.state when given, otherwise freezes into `out`.
fn soliton(cfg: &RunConfig, out: &Out) -> CliResult<(RealField, FreezeSummary)> {
    if cfg.eigs.profile.is_some() {
        return commands::load_profile(cfg);
    }
    let mut fc = cfg.clone();
    fc.freeze.d = 2;
    let (res, sum) = commands::run_freeze(&fc, out)?;
    if !sum.converged {
        return Err(CliError::Numerical(format!("freezing did not converge: |v_t| = {:.3e}", sum.steady_residual)));
    }
    Ok((res.profile, sum))
}

fn fig4(cfg: &RunConfig, out: &Out) -> CliResult<Value> {
    println!("fig4: {NOTICE}");
    let (profile, sum) = soliton(cfg, out)?;
    if profile.grid.d != 2 {
        return Err(CliError::Validation("fig4 needs a 2D profile".into()));
    }
    let s = sum.velocities.s_matrix(2);
    let set = commands::dispersion_set(cfg, s.clone())?;
    let disp = commands::write_dispersion(out, &set)?;
    commands::write_symmetry(out, &s)?;
    let mut ec = cfg.clone();
    ec.eigs.write_vectors = false;
    let eigs = commands::run_eigs(&ec, out, &profile, &sum)?;
    let mut tips: Vec<f64> = set.tips.iter().map(|t| t.lambda.im).collect();
    tips.sort_by(f64::total_cmp);
    tips.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    let spacing = tips.windows(2).map(|w| w[1] - w[0]).fold(f64::NAN, f64::min);
    println!("fig4: s = {}, tip spacing {spacing}", sum.s);
    Ok(json!({
        "figure": "fig4",
        "notice": NOTICE,
        "s": sum.s,
        "tip_spacing": spacing,
        "dispersion": disp,
        "found": eigs["found"],
    }))
}

fn fig5(cfg: &RunConfig, out: &Out) -> CliResult<Value> {
    println!("fig5: {NOTICE}");
    let (profile, sum) = soliton(cfg, out)?;
    let model = cfg.model.model()?;
    let nl = model.nonlinearity()?;
    let d = profile.grid.d;
    let grid = profile.grid;
    let s = sum.velocities.s_matrix(d);
    let a = model.diffusion();
    let op = linearize(&profile, &a, &s, nl, cfg.eigs.drift)?;
    let adj = assemble_adjoint(&grid, &a, &s, &reaction_blocks(&profile, nl), cfg.eigs.drift)?;
    let grad = gradient_fields(&profile);
    let triples = symmetry_eigentriples(&s)?;
    let checks = verify_symmetry_eigenfunctions(&op, &grad, &triples)?;
    let names = component_names(profile.m);
    let acfg = cfg.eigs.arnoldi(cfg.seed);
    let as_real = |f: &ComplexField| -> RealField {
        Field { grid: f.grid, m: 2 * f.m, data: f.data.iter().flat_map(|z| [z.re, z.im]).collect() }
    };
    let mut modes = Vec::new();
    for (i, (t, chk)) in triples.iter().zip(&checks).enumerate() {
        let mut mode = json!({ "lambda": t.lambda, "kind": t.kind, "residual": chk.residual, "degenerate": chk.degenerate });
        if !chk.degenerate {
            let v = eigenfunction_field(&grad, &t.e, &t.b, &grid)?;
            write_complex_field(&out.path(&format!("eigfun_{i}")), &v, &names)?;
            mode["decay"] = serde_json::to_value(commands::decay_report(cfg, &as_real(&v), t.lambda)?)?;
        }
        // The adjoint eigenvalue sits at conj(lambda).
        let target = t.lambda.conj() + C64::new(1e-3, 0.0);
        let pairs = eigs_near(&adj.transpose.matrix, target, &ArnoldiConfig { k: 1, ..acfg.clone() })?.pairs;
        if let Some(p) = pairs.first() {
            let w = Field::from_vec(grid, profile.m, p.vector.clone())?;
            write_complex_field(&out.path(&format!("adjoint_{i}")), &w, &names)?;
            mode["adjoint"] = json!({
                "lambda": p.lambda,
                "residual": p.residual,
                "decay": serde_json::to_value(commands::decay_report(cfg, &as_real(&w), t.lambda)?)?,
            });
        }
        println!("fig5: lambda = {:.6}: eigenfunction residual {:?}", t.lambda, chk.residual);
        modes.push(mode);
    }
    Ok(json!({ "figure": "fig5", "notice": NOTICE, "s": sum.s, "modes": modes }))
}
