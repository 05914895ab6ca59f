//! Freezing method: co-moving IMEX evolution whose rotation and translation
//! velocities are fixed each step by an orthogonality phase condition.

mod neumann;
mod phase;

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use neumann::NeumannSolver;
pub use phase::{derivatives, generators, planes, solve_velocities, PhaseSolution, Velocities, DROP_TOL, MAX_GRAM_COND};

use crate::discretize::stencil::{drift_coefficient, laplacian, DriftScheme};
use crate::discretize::{io, Field, Grid, RealField};
use crate::linalg::{self, CMat};
use crate::qcgl::{diffusion_cmat, Nonlinearity, QcglParams};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialCondition {
    /// a (x1 + i x2) exp(-|x|^2 / w^2) in the first two components.
    Vortex {
        #[serde(default = "default_amp")]
        a: f64,
        #[serde(default = "default_width")]
        w: f64,
    },
    /// a exp(-|x|^2 / w^2) in the first component.
    Gaussian {
        #[serde(default = "default_amp")]
        a: f64,
        #[serde(default = "default_width")]
        w: f64,
    },
    File {
        path: PathBuf,
    },
}

fn default_amp() -> f64 {
    3.0
}

fn default_width() -> f64 {
    4.0
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self::Vortex { a: default_amp(), w: default_width() }
    }
}

impl InitialCondition {
    pub fn from_kind(kind: &str) -> Result<Self> {
        match kind {
            "vortex" => Ok(Self::default()),
            "gaussian" => Ok(Self::Gaussian { a: default_amp(), w: default_width() }),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

pub fn initial_guess(grid: &Grid, m: usize, ic: &InitialCondition) -> Result<RealField> {
    match ic {
        InitialCondition::Vortex { a, w } => {
            if m < 2 || grid.d < 2 {
                return Err(Error::Dimension("vortex needs two components and d >= 2".into()));
            }
            Ok(Field::from_fn(*grid, m, |x, o| {
                let e = a * (-x.iter().map(|v| v * v).sum::<f64>() / (w * w)).exp();
                o[0] = x[0] * e;
                o[1] = x[1] * e;
            }))
        }
        InitialCondition::Gaussian { a, w } => Ok(Field::from_fn(*grid, m, |x, o| {
            o[0] = a * (-x.iter().map(|v| v * v).sum::<f64>() / (w * w)).exp();
        })),
        InitialCondition::File { path } => {
            let (f, _) = io::read_field(path)?;
            if f.grid != *grid || f.m != m {
                return Err(Error::GridMismatch);
            }
            Ok(f)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeScheme {
    ImexEuler,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreezeConfig {
    pub d: usize,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Largest admissible step; the stability bounds may shrink it.
    pub dt: f64,
    pub t_end: f64,
    pub phase_tolerance: f64,
    pub scheme: TimeScheme,
    pub drift: DriftScheme,
    pub translations: bool,
    pub initial: InitialCondition,
    /// History rows are kept every this many steps (and at the end).
    pub record_every: usize,
    /// Snapshots are offered to the observer every this many steps; 0 disables them.
    pub snapshot_every: usize,
    pub max_steps: usize,
}

impl Default for FreezeConfig {
    fn default() -> Self {
        Self {
            d: 2,
            r: 16.0,
            n: 128,
            dt: 0.01,
            t_end: 300.0,
            phase_tolerance: 1e-6,
            scheme: TimeScheme::ImexEuler,
            drift: DriftScheme::Centered,
            translations: true,
            initial: InitialCondition::default(),
            record_every: 100,
            snapshot_every: 0,
            max_steps: 10_000_000,
        }
    }
}

impl FreezeConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.d, self.r, self.n)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !(self.phase_tolerance > 0.0) {
            return Err(Error::Invalid("dt and phase_tolerance must be positive, t_end nonnegative".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Invalid("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FreezeState {
    pub v: RealField,
    pub velocities: Velocities,
    pub t: f64,
    pub step: usize,
    /// Discrete L2 norm of v_t at the start of the last step.
    pub vt_norm: f64,
    pub dt: f64,
    pub phase: Option<PhaseSolution>,
}

impl FreezeState {
    pub fn new(v: RealField) -> Self {
        let d = v.grid.d;
        Self { v, velocities: Velocities::zero(d), t: 0.0, step: 0, vt_norm: f64::NAN, dt: 0.0, phase: None }
    }
}

/// Everything that stays fixed along a run.
pub struct Stepper<'a> {
    pub grid: Grid,
    pub m: usize,
    pub a: CMat,
    a_real: Vec<f64>,
    a0: f64,
    pub nl: &'a dyn Nonlinearity,
    pub drift: DriftScheme,
    pub translations: bool,
    pub dt_max: f64,
    solver: NeumannSolver,
}

/// Right-hand side pieces at the current state.
pub struct Evaluation {
    pub phase: PhaseSolution,
    /// A Lap v + drift + f(v) with the solved velocities.
    pub vt: Vec<f64>,
    pub vt_norm: f64,
    /// drift + f(v), the explicit part.
    pub explicit: Vec<f64>,
    pub stiffness: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(grid: Grid, a: &CMat, nl: &'a dyn Nonlinearity, drift: DriftScheme, translations: bool, dt_max: f64) -> Result<Self> {
        let m = a.nrows();
        if nl.m() != m {
            return Err(Error::Dimension("nonlinearity and diffusion matrix sizes differ".into()));
        }
        if !linalg::is_real(a) {
            return Err(Error::Invalid("the freezing stepper needs a real diffusion matrix".into()));
        }
        let a0 = linalg::eigenvalues(a)?.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if a0 <= 0.0 {
            return Err(Error::Invalid("diffusion matrix must have eigenvalues with positive real part".into()));
        }
        let a_real = (0..m * m).map(|k| a[(k / m, k % m)].re).collect();
        let solver = NeumannSolver::new(grid, a)?;
        Ok(Self { grid, m, a: a.clone(), a_real, a0, nl, drift, translations, dt_max, solver })
    }

    pub fn evaluate(&self, v: &RealField, prev: &Velocities) -> Result<Evaluation> {
        let (m, d) = (self.m, self.grid.d);
        let mut lap = vec![0.0; v.data.len()];
        laplacian(&self.grid, m, &v.data, &mut lap);
        let mut fv = vec![0.0; v.data.len()];
        fv.par_chunks_mut(m).zip(v.data.par_chunks(m)).for_each(|(o, u)| self.nl.eval(u, o));
        let stiffness = v.data.par_chunks(m).map(|u| self.nl.stiffness(u)).reduce(|| 0.0, f64::max);
        let mut rhs = fv.clone();
        rhs.par_chunks_mut(m).zip(lap.par_chunks(m)).for_each(|(o, l)| {
            for r in 0..m {
                o[r] += (0..m).map(|c| self.a_real[r * m + c] * l[c]).sum::<f64>();
            }
        });
        let der = derivatives(v, self.drift, prev);
        let gens = generators(&self.grid, m, &der, self.translations);
        let (phase, vt) = solve_velocities(d, &gens, &rhs, self.translations)?;
        let explicit: Vec<f64> = vt
            .par_chunks(m)
            .zip(lap.par_chunks(m))
            .flat_map_iter(|(w, l)| {
                (0..m).map(move |r| w[r] - (0..m).map(|c| self.a_real[r * m + c] * l[c]).sum::<f64>())
            })
            .collect();
        let vt_norm = (vt.iter().map(|x| x * x).sum::<f64>() * self.grid.cell()).sqrt();
        Ok(Evaluation { phase, vt, vt_norm, explicit, stiffness })
    }

    /// Largest step allowed by the reaction, the advection CFL bound and, for centered
    /// drift, explicit-advection stability against implicit diffusion.
    pub fn stable_dt(&self, vel: &Velocities, stiffness: f64) -> f64 {
        let (d, h) = (self.grid.d, self.grid.h());
        let s = vel.s_matrix(d);
        let r = self.grid.r;
        let (mut l1, mut l2) = (0.0f64, 0.0f64);
        for corner in 0..(1usize << d) {
            let mut x = [0.0; 3];
            for (k, xk) in x.iter_mut().enumerate().take(d) {
                *xk = if corner >> k & 1 == 1 { r } else { -r };
            }
            let c = drift_coefficient(&s, Some(&vel.tau), &x, d);
            l1 = l1.max(c[..d].iter().map(|v| v.abs()).sum());
            l2 = l2.max(c[..d].iter().map(|v| v * v).sum());
        }
        let mut dt = self.dt_max;
        if stiffness > 0.0 {
            dt = dt.min(0.5 / stiffness);
        }
        if l1 > 0.0 {
            dt = dt.min(0.9 * h / l1);
        }
        if self.drift == DriftScheme::Centered && l2 > 0.0 {
            dt = dt.min(0.9 * 2.0 * self.a0 / l2);
        }
        dt
    }

    /// One IMEX Euler step: v' = (I - dt A Lap)^{-1} (v + dt (drift + f(v))).
    pub fn step(&self, state: &FreezeState) -> Result<(FreezeState, Evaluation)> {
        let ev = self.evaluate(&state.v, &state.velocities)?;
        self.step_with(state, ev)
    }

    /// Same as `step`, reusing an evaluation of `state`.
    pub fn step_with(&self, state: &FreezeState, ev: Evaluation) -> Result<(FreezeState, Evaluation)> {
        let vel = ev.phase.velocities.clone();
        let dt = self.stable_dt(&vel, ev.stiffness);
        let rhs: Vec<f64> = state.v.data.par_iter().zip(&ev.explicit).map(|(u, e)| u + dt * e).collect();
        let data = self.solver.solve(&rhs, dt);
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Step { step: state.step + 1, t: state.t + dt, reason: "non-finite field".into() });
        }
        let next = FreezeState {
            v: Field::from_vec(self.grid, self.m, data)?,
            velocities: vel,
            t: state.t + dt,
            step: state.step + 1,
            vt_norm: ev.vt_norm,
            dt,
            phase: Some(ev.phase.clone()),
        };
        Ok((next, ev))
    }
}

pub fn step_imex(state: &FreezeState, stepper: &Stepper) -> Result<FreezeState> {
    stepper.step(state).map(|r| r.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct HistoryRow {
    pub t: f64,
    pub rot: Vec<f64>,
    pub tau: Vec<f64>,
    pub vt_norm: f64,
}

#[derive(Clone, Debug)]
pub struct FreezeResult {
    pub profile: RealField,
    pub velocities: Velocities,
    pub history: Vec<HistoryRow>,
    pub final_state: FreezeState,
    pub converged: bool,
    /// |A Lap v + drift + f(v)| at the returned profile.
    pub steady_residual: f64,
}

impl FreezeResult {
    /// Rotation rate of the first plane.
    pub fn s(&self) -> f64 {
        self.velocities.rot.first().copied().unwrap_or(0.0)
    }
}

/// Runs from `v0` until |v_t| < tolerance, t_end or max_steps. `observer` sees every state.
pub fn run_freezing_from(
    cfg: &FreezeConfig,
    a: &CMat,
    nl: &dyn Nonlinearity,
    v0: RealField,
    mut observer: impl FnMut(&FreezeState),
) -> Result<FreezeResult> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    if v0.grid != grid {
        return Err(Error::GridMismatch);
    }
    let stepper = Stepper::new(grid, a, nl, cfg.drift, cfg.translations, cfg.dt)?;
    let mut state = FreezeState::new(v0);
    let mut history = Vec::new();
    let row = |st: &FreezeState, vel: &Velocities, vt: f64| HistoryRow { t: st.t, rot: vel.rot.clone(), tau: vel.tau.clone(), vt_norm: vt };
    loop {
        let ev = stepper.evaluate(&state.v, &state.velocities)?;
        let done = ev.vt_norm < cfg.phase_tolerance;
        if done || state.t >= cfg.t_end || state.step >= cfg.max_steps {
            history.push(row(&state, &ev.phase.velocities, ev.vt_norm));
            state.vt_norm = ev.vt_norm;
            state.velocities = ev.phase.velocities.clone();
            state.phase = Some(ev.phase);
            observer(&state);
            return Ok(FreezeResult {
                profile: state.v.clone(),
                velocities: state.velocities.clone(),
                history,
                steady_residual: ev.vt_norm,
                final_state: state,
                converged: done,
            });
        }
        if state.step % cfg.record_every == 0 {
            history.push(row(&state, &ev.phase.velocities, ev.vt_norm));
        }
        let (next, _) = stepper.step_with(&state, ev)?;
        state = next;
        if cfg.snapshot_every > 0 && state.step % cfg.snapshot_every == 0 {
            observer(&state);
        }
    }
}

pub fn run_freezing(cfg: &FreezeConfig, params: &QcglParams) -> Result<FreezeResult> {
    run_freezing_observed(cfg, params, |_| {})
}

pub fn run_freezing_observed(cfg: &FreezeConfig, params: &QcglParams, observer: impl FnMut(&FreezeState)) -> Result<FreezeResult> {
    params.validate()?;
    let grid = cfg.grid()?;
    let v0 = initial_guess(&grid, 2, &cfg.initial)?;
    run_freezing_from(cfg, &diffusion_cmat(params), params, v0, observer)
}

/// Columns t, rotation rates, translation rates, vt_norm. In 2D: t, s, tau1, tau2, vt_norm.
pub fn write_history_csv<W: Write>(rows: &[HistoryRow], d: usize, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut head = vec!["t".to_string()];
    if d == 2 {
        head.push("s".into());
    } else {
        head.extend(planes(d).iter().map(|(i, j)| format!("s{}{}", i + 1, j + 1)));
    }
    head.extend((1..=d).map(|i| format!("tau{i}")));
    head.push("vt_norm".into());
    wr.write_record(&head).map_err(crate::dispersion::csv_err)?;
    for r in rows {
        let mut rec = vec![r.t.to_string()];
        rec.extend(r.rot.iter().map(|x| x.to_string()));
        rec.extend(r.tau.iter().map(|x| x.to_string()));
        rec.push(r.vt_norm.to_string());
        wr.write_record(&rec).map_err(crate::dispersion::csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Winding number of the first two components along the circle |x| = radius in the (x1, x2) plane.
pub fn winding_number(v: &RealField, radius: f64, samples: usize) -> f64 {
    let g = v.grid;
    let interp = |p: [f64; 2]| -> (f64, f64) {
        let h = g.h();
        let fx = ((p[0] + g.r) / h).clamp(0.0, (g.n - 1) as f64 - 1e-9);
        let fy = ((p[1] + g.r) / h).clamp(0.0, (g.n - 1) as f64 - 1e-9);
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let mid = if g.d == 3 { (g.n / 2) * g.stride(2) } else { 0 };
        let at = |a: usize, b: usize, c: usize| v.data[(a * g.stride(0) + b * g.stride(1) + mid) * v.m + c];
        let bil = |c: usize| {
            (1.0 - tx) * (1.0 - ty) * at(i, j, c)
                + tx * (1.0 - ty) * at(i + 1, j, c)
                + (1.0 - tx) * ty * at(i, j + 1, c)
                + tx * ty * at(i + 1, j + 1, c)
        };
        (bil(0), bil(1))
    };
    let mut total = 0.0;
    let mut last: Option<f64> = None;
    for k in 0..=samples {
        let th = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
        let (a, b) = interp([radius * th.cos(), radius * th.sin()]);
        let ph = b.atan2(a);
        if let Some(l) = last {
            let mut dph = ph - l;
            while dph > std::f64::consts::PI {
                dph -= 2.0 * std::f64::consts::PI;
            }
            while dph < -std::f64::consts::PI {
                dph += 2.0 * std::f64::consts::PI;
            }
            total += dph;
        }
        last = Some(ph);
    }
    total / (2.0 * std::f64::consts::PI)
}
