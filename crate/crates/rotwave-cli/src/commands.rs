use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use rotwave::coeffs::{admissible_p_range, check_conditions, spectral_constants, ConditionReport};
use rotwave::discretize::io::{read_field, write_complex_field, write_field};
use rotwave::discretize::stencil::gradient_fields;
use rotwave::discretize::RealField;
use rotwave::dispersion::{default_eta_grid, density_classifier, sample_dispersion_set, DispersionQuery, DispersionSet};
use rotwave::freeze::{initial_guess, run_freezing_from, winding_number, write_history_csv, FreezeResult, Velocities};
use rotwave::spectra::{
    classify_spectrum, decay_bounds, fit_decay_rate, linearize, shift_invert_eigs, uniform_decay_bounds,
    verify_symmetry_eigenfunctions, write_spectrum_csv, DecayBounds, DecayFit, EigenClass,
};
use rotwave::symmetry::{symmetry_eigentriples, symmetry_set};
use rotwave::C64;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, Out};

/// Mesh width at which the default matching tolerances are 0.05.
const REFERENCE_H: f64 = 32.0 / 127.0;
const DEFAULT_MATCH_TOL: f64 = 0.05;

pub fn component_names(m: usize) -> Vec<String> {
    if m == 2 {
        vec!["re".into(), "im".into()]
    } else {
        (1..=m).map(|i| format!("u{i}")).collect()
    }
}

pub fn check(cfg: &RunConfig) -> CliResult<()> {
    let out = Out::create(&cfg.out)?;
    let model = cfg.model.model()?;
    let coeffs = model.coefficients(cfg.model.s.clone())?;
    let range = admissible_p_range(&coeffs.a)?;
    let constants = spectral_constants(&coeffs).ok();
    let reports: Vec<ConditionReport> = cfg.check.p.iter().map(|&p| check_conditions(&coeffs, p)).collect();
    match range {
        Some((lo, hi)) => println!("admissible p-range: ({lo:.4}, {hi:.4})"),
        None => println!("admissible p-range: empty"),
    }
    for r in &reports {
        let failed: Vec<&str> = r.conditions.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        if failed.is_empty() {
            println!("p = {}: all conditions pass", r.p);
        } else {
            println!("p = {}: FAIL {}", r.p, failed.join(", "));
        }
    }
    let all_pass = reports.iter().all(|r| r.all_pass());
    out.json("check.json", &json!({ "p_range": range, "constants": constants, "all_pass": all_pass, "reports": reports }))?;
    out.meta("check", cfg, Value::Null)
}

/// JSON document and CSV rows (re, im, multiplicity) for one velocity matrix.
pub fn symmetry_bundle(s: &[Vec<f64>]) -> CliResult<(Value, Vec<Vec<String>>)> {
    let set = symmetry_set(s)?;
    let triples = symmetry_eigentriples(s)?;
    let count: usize = set.iter().map(|(_, k)| k).sum();
    let triples_json: Vec<Value> = triples
        .iter()
        .map(|t| {
            let (r_e, r_b) = t.residuals(s);
            let mut v = serde_json::to_value(t.to_json()).expect("triples serialize");
            v["residual_e"] = json!(r_e);
            v["residual_b"] = json!(r_b);
            v
        })
        .collect();
    let set_json: Vec<Value> = set.iter().map(|(z, k)| json!({ "lambda": [z.re, z.im], "multiplicity": k })).collect();
    let doc = json!({ "d": s.len(), "S": s, "count": count, "set": set_json, "triples": triples_json });
    let rows = set.iter().map(|(z, k)| vec![num(z.re), num(z.im), k.to_string()]).collect();
    Ok((doc, rows))
}

pub fn write_symmetry(out: &Out, s: &[Vec<f64>]) -> CliResult<Value> {
    let (doc, rows) = symmetry_bundle(s)?;
    out.json("symmetry.json", &doc)?;
    out.csv("symmetry.csv", &["re", "im", "multiplicity"], rows)?;
    Ok(doc)
}

pub fn symmetry(cfg: &RunConfig) -> CliResult<()> {
    let out = Out::create(&cfg.out)?;
    let doc = write_symmetry(&out, &cfg.model.s)?;
    println!("d = {}: {} eigenvalues with multiplicity", doc["d"], doc["count"]);
    for e in doc["set"].as_array().into_iter().flatten() {
        println!("  {} + {}i  x{}", e["lambda"][0], e["lambda"][1], e["multiplicity"]);
    }
    out.meta("symmetry", cfg, Value::Null)
}

pub fn dispersion_set(cfg: &RunConfig, s: Vec<Vec<f64>>) -> CliResult<DispersionSet> {
    let coeffs = cfg.model.model()?.coefficients(s)?;
    let grid = default_eta_grid(&coeffs, cfg.dispersion.re_min, cfg.dispersion.eta_points)?;
    Ok(sample_dispersion_set(&DispersionQuery::new(coeffs, grid, cfg.dispersion.n_max)?)?)
}

pub fn write_dispersion(out: &Out, set: &DispersionSet) -> CliResult<Value> {
    set.write_csv(out.writer("dispersion.csv")?)?;
    let k = set.sigma.len();
    let mut head: Vec<String> = (1..=k).map(|i| format!("n{i}")).collect();
    head.extend(["re".into(), "im".into()]);
    let head: Vec<&str> = head.iter().map(String::as_str).collect();
    let rows = set.tips.iter().map(|t| {
        let mut r: Vec<String> = t.n.iter().map(|n| n.to_string()).collect();
        r.extend([num(t.lambda.re), num(t.lambda.im)]);
        r
    });
    out.csv("tips.csv", &head, rows)?;
    let density = match density_classifier(&set.sigma) {
        Ok(r) => serde_json::to_value(r)?,
        Err(e) => json!({ "verdict": null, "reason": e.to_string() }),
    };
    let doc = json!({ "sigma": set.sigma, "max_re": set.max_re(), "curves": set.curves.len(), "density": density });
    out.json("dispersion.json", &doc)?;
    Ok(doc)
}

pub fn dispersion(cfg: &RunConfig) -> CliResult<()> {
    let out = Out::create(&cfg.out)?;
    let set = dispersion_set(cfg, cfg.model.s.clone())?;
    let doc = write_dispersion(&out, &set)?;
    println!("sigma = {:?}, {} curves, max Re = {}", set.sigma, set.curves.len(), set.max_re());
    println!("density: {}", doc["density"]["verdict"]);
    out.meta("dispersion", cfg, Value::Null)
}

/// Contents of freeze.json, read back by `eigs`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreezeSummary {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub converged: bool,
    pub t: f64,
    pub steps: usize,
    pub s: f64,
    pub velocities: Velocities,
    pub steady_residual: f64,
    pub max_abs: f64,
    pub winding: Option<f64>,
}

pub fn run_freeze(cfg: &RunConfig, out: &Out) -> CliResult<(FreezeResult, FreezeSummary)> {
    let model = cfg.model.model()?;
    let nl = model.nonlinearity()?;
    let fc = &cfg.freeze;
    let grid = fc.grid()?;
    let v0 = initial_guess(&grid, nl.m(), &fc.initial)?;
    let names = component_names(nl.m());
    let mut snap_err = None;
    let res = run_freezing_from(fc, &model.diffusion(), nl, v0, |st| {
        if fc.snapshot_every > 0 && snap_err.is_none() {
            let base = out.path(&format!("snapshot_{:08}", st.step));
            snap_err = write_field(&base, &st.v, &names).err();
        }
    })?;
    if let Some(e) = snap_err {
        return Err(e.into());
    }
    write_field(&out.path("profile"), &res.profile, &names)?;
    write_history_csv(&res.history, grid.d, out.writer("history.csv")?)?;
    let summary = FreezeSummary {
        d: grid.d,
        n: grid.n,
        r: grid.r,
        converged: res.converged,
        t: res.final_state.t,
        steps: res.final_state.step,
        s: res.s(),
        velocities: res.velocities.clone(),
        steady_residual: res.steady_residual,
        max_abs: res.profile.max_abs(),
        winding: (res.profile.m >= 2).then(|| winding_number(&res.profile, grid.r / 4.0, 720)),
    };
    out.json("freeze.json", &summary)?;
    Ok((res, summary))
}

pub fn freeze(cfg: &RunConfig) -> CliResult<()> {
    let out = Out::create(&cfg.out)?;
    let (_, sum) = run_freeze(cfg, &out)?;
    println!(
        "converged {} at t = {} after {} steps: s = {}, residual {:.3e}, max|v| {:.4}",
        sum.converged, sum.t, sum.steps, sum.s, sum.steady_residual, sum.max_abs
    );
    out.meta("freeze", cfg, Value::Null)?;
    if !sum.converged {
        return Err(CliError::Numerical(format!("freezing did not converge: |v_t| = {:.3e} at t = {}", sum.steady_residual, sum.t)));
    }
    Ok(())
}

pub fn load_profile(cfg: &RunConfig) -> CliResult<(RealField, FreezeSummary)> {
    let (profile, _) = read_field(&cfg.path_or(&cfg.eigs.profile, "profile"))?;
    let state_path = cfg.path_or(&cfg.eigs.state, "freeze.json");
    let text = std::fs::read_to_string(&state_path).map_err(|e| CliError::Validation(format!("{}: {e}", state_path.display())))?;
    let summary: FreezeSummary = serde_json::from_str(&text)?;
    if summary.d != profile.grid.d || summary.n != profile.grid.n {
        return Err(CliError::Validation("freeze summary does not match the profile grid".into()));
    }
    Ok((profile, summary))
}

#[derive(Serialize)]
struct EigenRow {
    lambda: C64,
    residual: f64,
    class: EigenClass,
    distance: f64,
}

pub fn run_eigs(cfg: &RunConfig, out: &Out, profile: &RealField, summary: &FreezeSummary) -> CliResult<Value> {
    let model = cfg.model.model()?;
    let nl = model.nonlinearity()?;
    let e = &cfg.eigs;
    let d = profile.grid.d;
    let s = summary.velocities.s_matrix(d);
    let op = linearize(profile, &model.diffusion(), &s, nl, e.drift)?;
    let (eigs, arn) = shift_invert_eigs(&op, e.target, &e.arnoldi(cfg.seed))?;
    if eigs.is_empty() {
        return Err(CliError::Numerical("no Ritz pair converged".into()));
    }
    let sym: Vec<C64> = symmetry_set(&s)?.into_iter().map(|(z, _)| z).collect();
    let disp = dispersion_set(cfg, s.clone())?;
    let scale = profile.grid.h() / REFERENCE_H;
    let tol_point = e.tol_point.unwrap_or(DEFAULT_MATCH_TOL * scale);
    let tol_ess = e.tol_ess.unwrap_or(DEFAULT_MATCH_TOL * scale);
    let eigs = classify_spectrum(eigs, &sym, &disp, tol_point, tol_ess);
    write_spectrum_csv(&eigs, out.writer("spectrum.csv")?)?;
    if e.write_vectors {
        let names = component_names(profile.m);
        for (i, ev) in eigs.iter().enumerate() {
            write_complex_field(&out.path(&format!("eigvec_{i:02}")), &ev.vector, &names)?;
        }
    }
    let checks = verify_symmetry_eigenfunctions(&op, &gradient_fields(profile), &symmetry_eigentriples(&s)?)?;
    let tau_norm = summary.velocities.tau.iter().map(|t| t * t).sum::<f64>().sqrt();
    for ev in &eigs {
        println!("{:>24} {:>24}  residual {:.2e}  {:?}", num(ev.lambda.re), num(ev.lambda.im), ev.residual, ev.class);
    }
    let rows: Vec<EigenRow> =
        eigs.iter().map(|x| EigenRow { lambda: x.lambda, residual: x.residual, class: x.class, distance: x.distance }).collect();
    let doc = json!({
        "target": e.target,
        "k": e.k,
        "found": eigs.len(),
        "partial": arn.partial,
        "restarts": arn.restarts,
        "applications": arn.applications,
        "tol_point": tol_point,
        "tol_ess": tol_ess,
        "S": s,
        "tau_norm": tau_norm,
        "eigenvalues": rows,
        "symmetry_set": sym,
        "eigenfunction_checks": checks,
    });
    out.json("eigs.json", &doc)?;
    if arn.partial {
        return Err(CliError::Numerical(format!("only {} of {} Ritz pairs converged", eigs.len(), e.k)));
    }
    Ok(doc)
}

pub fn eigs(cfg: &RunConfig) -> CliResult<()> {
    let out = Out::create(&cfg.out)?;
    let (profile, summary) = load_profile(cfg)?;
    let res = run_eigs(cfg, &out, &profile, &summary);
    out.meta("eigs", cfg, Value::Null)?;
    res.map(|_| ())
}

#[derive(Serialize)]
pub struct DecayReport {
    pub fit: DecayFit,
    pub bounds: DecayBounds,
    pub lambda: C64,
    pub fit_le_mu2_sup: bool,
}

/// Fits the radial decay of `field` and compares it with the bounds at `lambda`.
pub fn decay_report(cfg: &RunConfig, field: &RealField, lambda: C64) -> CliResult<DecayReport> {
    let d = field.grid.d;
    let mag = field.pointwise_norm();
    let fit = fit_decay_rate(&mag, &field.grid, (cfg.decay.window[0], cfg.decay.window[1]))?;
    // The constants do not depend on S.
    let coeffs = cfg.model.model()?.coefficients(vec![vec![0.0; d]; d])?;
    let constants = spectral_constants(&coeffs)?;
    let bounds = match cfg.decay.p {
        Some(p) => decay_bounds(&constants, lambda, p, d)?,
        None => {
            let (p_min, _) = admissible_p_range(&coeffs.a)?
                .ok_or_else(|| CliError::Validation("the admissible p-range is empty".into()))?;
            uniform_decay_bounds(&constants, lambda, p_min, d)?
        }
    };
    let fit_le_mu2_sup = fit.mu_fit <= bounds.mu2_sup;
    Ok(DecayReport { fit, bounds, lambda, fit_le_mu2_sup })
}

pub fn decay(cfg: &RunConfig) -> CliResult<()> {
    let out = Out::create(&cfg.out)?;
    let (field, _) = read_field(&cfg.path_or(&cfg.decay.field, "profile"))?;
    let rep = decay_report(cfg, &field, cfg.decay.lambda)?;
    println!(
        "mu_fit = {} (r^2 {:.4}, {} shells); mu2_sup = {} at p = {}, mu4_sup = {} at q = {}",
        rep.fit.mu_fit, rep.fit.r2, rep.fit.shells, rep.bounds.mu2_sup, rep.bounds.p, rep.bounds.mu4_sup, rep.bounds.q
    );
    out.json("decay.json", &rep)?;
    out.meta("decay", cfg, Value::Null)
}

