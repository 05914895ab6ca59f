//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
//! Exits 0 unless ACCEPTANCE_STRICT is set, in which case any FAIL exits 1.
//! ACCEPTANCE_ONLY=1,5,9 runs a subset.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rotwave::coeffs::{admissible_p_range, check_conditions, spectral_constants, SystemCoefficients};
use rotwave::discretize::stencil::{gradient_fields, DriftScheme};
use rotwave::discretize::{assemble_adjoint, assemble_linearized, Field, Grid, RealField};
use rotwave::dispersion::{
    apply_semigroup, default_eta_grid, density_classifier, sample_dispersion_set, Density, DispersionQuery, HeatKernel,
};
use rotwave::freeze::{initial_guess, run_freezing, run_freezing_from, winding_number, FreezeConfig, FreezeResult, FreezeState, Stepper};
use rotwave::linalg::{self, from_real_rows, from_rows};
use rotwave::qcgl::{diffusion_cmat, system_coefficients, LinearReaction, QcglParams};
use rotwave::spectra::{
    fit_decay_rate, linearize, shift_invert_eigs, solvability_check, uniform_decay_bounds, verify_symmetry_eigenfunctions,
    ArnoldiConfig, SolvabilityConfig,
};
use rotwave::symmetry::{symmetry_eigentriples, symmetry_set};
use rotwave::C64;

// Tolerances.
const P_RANGE: (f64, f64) = (1.1716, 6.8284);
const P_RANGE_TOL: f64 = 1e-3;
const A_EXTREME: f64 = 0.70711;
const A_EXTREME_TOL: f64 = 1e-5;
const A1_D3: f64 = 1.6818;
const A1_TOL: f64 = 1e-3;
const RANDOM_SKEW_PER_D: usize = 200;
const SIGMA_3D: f64 = 0.6888;
const SIGMA_3D_TOL: f64 = 1e-5;
const TRIPLE_TOL: f64 = 1e-10;
/// Half a unit in the last digit of the four-digit sigma, per unit of |n|.
const TIP_TOL_PER_N: f64 = 5e-5;
const ABSCISSA_TOL: f64 = 1e-12;
const MU2_SUP: f64 = 0.471_404_520_791_031_7;
const MU2_TOL: f64 = 1e-4;
const MU4_SUP: f64 = 1.6569;
const MU4_TOL: f64 = 1e-3;
const MASS_TOL: f64 = 1e-6;
const CK_TOL: f64 = 1e-4;
const IMEX_GAP: f64 = 1e-3;
const SIGMA_2D: f64 = 1.027;
const S_REL_TOL: f64 = 0.10;
const STEADY_TOL: f64 = 1e-5;
const RITZ_DIST: f64 = 0.05;
const RITZ_RESIDUAL: f64 = 1e-8;
const EIGENFUNCTION_TOL: f64 = 0.05;
const REFINE_RATIO: f64 = 1.5;
const ADJOINT_TOL: f64 = 1e-12;
const ADJOINT_PAIRS: usize = 100;
const FREDHOLM_RESIDUAL: f64 = 1e-8;
const SYNTHETIC_MU: f64 = 0.3;
const SYNTHETIC_TOL: f64 = 0.01;
const SOLITON_MU_MAX: f64 = 0.353_553_390_593_273_8;
const DECAY_WINDOW: (f64, f64) = (6.0, 14.0);

struct Suite {
    passed: usize,
    failed: Vec<u32>,
}

impl Suite {
    fn record(&mut self, id: u32, name: &str, ok: bool, took: Duration, limit: Option<f64>, detail: &str) {
        let fast = limit.is_none_or(|l| took.as_secs_f64() < l);
        let ok = ok && fast;
        let lim = limit.map_or(String::new(), |l| format!(" < {l} s"));
        println!("{} {id:>2} {name}: {detail} [{:.2} s{lim}]", if ok { "PASS" } else { "FAIL" }, took.as_secs_f64());
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id);
        }
    }
}

fn note(s: &str) {
    println!("        {s}");
}

fn rot(s: f64) -> Vec<Vec<f64>> {
    vec![vec![0.0, s], vec![-s, 0.0]]
}

fn example_s3() -> Vec<Vec<f64>> {
    vec![vec![0.0, 0.6888, -0.0043], vec![-0.6888, 0.0, -0.0043], vec![0.0043, 0.0043, 0.0]]
}

fn qcgl3d() -> SystemCoefficients {
    system_coefficients(&QcglParams::default(), example_s3()).unwrap()
}

fn c1_conditions(suite: &mut Suite) {
    let t = Instant::now();
    let c = qcgl3d();
    let mut ok = true;
    for p in [2.0, 3.0, 4.0, 5.0, 6.0] {
        let r = check_conditions(&c, p);
        let bad: Vec<&str> = r.conditions.iter().filter(|e| !e.pass).map(|e| e.name.as_str()).collect();
        let a4 = r.get("A4_p").is_some_and(|e| e.pass) && r.get("A4_q").is_some_and(|e| e.pass);
        ok &= bad.is_empty() && a4 && r.conditions.len() >= 13;
        note(&format!("p = {p}: {} conditions, failing {bad:?}", r.conditions.len()));
    }
    let range = admissible_p_range(&c.a).unwrap();
    let range_ok = range.is_some_and(|(lo, hi)| (lo - P_RANGE.0).abs() <= P_RANGE_TOL && (hi - P_RANGE.1).abs() <= P_RANGE_TOL);
    let detail = format!("A1-A11, A4_p/A4_q hold for p = 2..6; p-range {range:?} vs {P_RANGE:?} (tol {P_RANGE_TOL})");
    suite.record(1, "condition suite", ok && range_ok, t.elapsed(), Some(1.0), &detail);
}

fn c2_constants(suite: &mut Suite) {
    let t = Instant::now();
    let k = spectral_constants(&qcgl3d()).unwrap();
    let ok = (k.a0 - 0.5).abs() <= 1e-12
        && (k.a_max - A_EXTREME).abs() <= A_EXTREME_TOL
        && (k.a_min - A_EXTREME).abs() <= A_EXTREME_TOL
        && (k.b0 - 0.5).abs() <= 1e-12
        && (k.a1 - A1_D3).abs() <= A1_TOL;
    let detail = format!(
        "a0 = {}, a_min = {:.6}, a_max = {:.6} (tol {A_EXTREME_TOL}), b0 = {}, a1(d=3) = {:.6} vs {A1_D3} (tol {A1_TOL})",
        k.a0, k.a_min, k.a_max, k.b0, k.a1
    );
    suite.record(2, "constants", ok, t.elapsed(), Some(1.0), &detail);
}

fn c3_symmetry(suite: &mut Suite) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut count_ok = true;
    let mut worst = 0.0f64;
    for d in 2..=5 {
        for _ in 0..RANDOM_SKEW_PER_D {
            let mut s = vec![vec![0.0; d]; d];
            for i in 0..d {
                for j in i + 1..d {
                    let x = rng.random_range(-2.0..2.0);
                    s[i][j] = x;
                    s[j][i] = -x;
                }
            }
            let total: usize = symmetry_set(&s).unwrap().iter().map(|e| e.1).sum();
            let triples = symmetry_eigentriples(&s).unwrap();
            count_ok &= total == d * (d + 1) / 2 && triples.len() == total;
            for tr in &triples {
                let (re, rb) = tr.residuals(&s);
                worst = worst.max(re).max(rb);
            }
        }
    }
    let set = symmetry_set(&example_s3()).unwrap();
    let mut s3_gap = 0.0f64;
    let mut s3_ok = set.len() == 3;
    for (z, mult) in &set {
        s3_ok &= *mult == 2 && z.re == 0.0;
        let want = if z.im.abs() < 0.1 { 0.0 } else { SIGMA_3D * z.im.signum() };
        s3_gap = s3_gap.max((z.im - want).abs());
    }
    s3_ok &= s3_gap <= SIGMA_3D_TOL;
    for (z, mult) in &set {
        note(&format!("3D example S: {:.8} x {mult}", z));
    }
    let detail = format!(
        "multiplicity d(d+1)/2 for {} random S per d = 2..5: {count_ok}; triple residual max {worst:.2e} (tol {TRIPLE_TOL:.0e}); \
         d=3 example set vs {{0x2, +-{SIGMA_3D}i x2}}: gap {s3_gap:.2e} (tol {SIGMA_3D_TOL:.0e})",
        RANDOM_SKEW_PER_D
    );
    suite.record(3, "symmetry sets", count_ok && worst <= TRIPLE_TOL && s3_ok, t.elapsed(), Some(5.0), &detail);
}

fn c4_dispersion(suite: &mut Suite) {
    let t = Instant::now();
    let c = qcgl3d();
    let grid = default_eta_grid(&c, -8.0, 400).unwrap();
    let set = sample_dispersion_set(&DispersionQuery::new(c, grid, 5).unwrap()).unwrap();
    let mut tips_ok = set.tips.len() == 11;
    let mut tip_gap = 0.0f64;
    for tip in &set.tips {
        let n = tip.n[0] as f64;
        // Tips sit at -b0 - i n sigma; n runs over both signs.
        let want = C64::new(-0.5, -SIGMA_3D * n);
        tips_ok &= (tip.lambda.re - want.re).abs() <= ABSCISSA_TOL && (tip.lambda.im - want.im).abs() <= n.abs() * TIP_TOL_PER_N;
        tip_gap = tip_gap.max((tip.lambda.im - want.im).abs());
    }
    let max_re = set.max_re();
    let b = density_classifier(&[1.0, 1.5]).unwrap().verdict;
    let c = density_classifier(&[1.0, std::f64::consts::E / 2.0]).unwrap().verdict;
    let ok = tips_ok && (max_re + 0.5).abs() <= ABSCISSA_TOL && b == Density::DiscreteSubgroup && c == Density::DenseHalfplane;
    let detail = format!(
        "11 tips, max |Im gap| {tip_gap:.2e} (tol |n| {TIP_TOL_PER_N:.0e}); max Re = {max_re} (tol {ABSCISSA_TOL:.0e}); \
         (1, 1.5) -> {b:?}; (1, e/2) -> {c:?}"
    );
    suite.record(4, "dispersion set", ok, t.elapsed(), Some(5.0), &detail);
}

fn c5_decay_bounds(suite: &mut Suite) {
    let t = Instant::now();
    let c = qcgl3d();
    let k = spectral_constants(&c).unwrap();
    let (p_min, _) = admissible_p_range(&c.a).unwrap().unwrap();
    let mut mu2_ok = true;
    let mut mu4_ok = true;
    let mut last = None;
    for (z, _) in symmetry_set(&example_s3()).unwrap() {
        let b = uniform_decay_bounds(&k, z, p_min, 3).unwrap();
        mu2_ok &= (b.mu2_sup - MU2_SUP).abs() <= MU2_TOL;
        mu4_ok &= (b.mu4_sup - MU4_SUP).abs() <= MU4_TOL;
        last = Some(b);
    }
    let b = last.unwrap();
    let detail = format!(
        "mu2_sup = {:.6} vs sqrt(2)/3 (tol {MU2_TOL:.0e}); mu4_sup = {:.6} vs {MU4_SUP} (tol {MU4_TOL:.0e})",
        b.mu2_sup, b.mu4_sup
    );
    suite.record(5, "decay bounds", mu2_ok && mu4_ok, t.elapsed(), Some(1.0), &detail);
    if !mu4_ok {
        note(&format!(
            "sqrt(a0 gamma)/(a_max p_min) = {:.6} = (1+sqrt 2)/4; the expected 1.6569 = 4/(1+sqrt 2) is its reciprocal",
            b.mu4_sup
        ));
    }
}

fn c6_heat_kernel(suite: &mut Suite) {
    let t = Instant::now();
    let one = from_rows(&[vec![C64::new(1.0, 0.0)]]);
    let zero = from_rows(&[vec![C64::new(0.0, 0.0)]]);
    let k = HeatKernel::new(&one, &rot(SIGMA_2D), &zero).unwrap();
    let (n, r) = (161, 16.0);
    let h = 2.0 * r / (n - 1) as f64;
    let x = [0.3, -0.7];
    let mut mass = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let xi = [-r + i as f64 * h, -r + j as f64 * h];
            mass += k.eval(&x, &xi, 1.0).unwrap()[(0, 0)] * h * h;
        }
    }
    let mass_err = (mass - 1.0).norm();

    let alpha = from_rows(&[vec![C64::new(0.5, 0.5)]]);
    let half = from_rows(&[vec![C64::new(0.5, 0.0)]]);
    let k = HeatKernel::new(&alpha, &rot(SIGMA_2D), &half).unwrap();
    let (ta, tb) = (0.5, 0.7);
    let (x, xi) = ([0.5, -0.3], [-0.4, 0.2]);
    let (n, r) = (64, 8.0);
    let h = 2.0 * r / (n - 1) as f64;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let z = [-r + i as f64 * h, -r + j as f64 * h];
            acc += k.eval(&x, &z, ta).unwrap()[(0, 0)] * k.eval(&z, &xi, tb).unwrap()[(0, 0)] * h * h;
        }
    }
    let want = k.eval(&x, &xi, ta + tb).unwrap()[(0, 0)];
    let ck = (acc - want).norm() / want.norm();

    // u_t = lap u - b u on a 64^2 grid against the whole-space semigroup.
    let (b, w, t_end) = (0.5, 4.0, 0.5);
    let g = Grid::new(2, 13.0, 64).unwrap();
    let u0 = Field::from_fn(g, 1, |x, o| o[0] = (-(x[0] * x[0] + x[1] * x[1]) / (w * w)).exp());
    let damp = LinearReaction { m: 1, b: vec![-b] };
    let st = Stepper::new(g, &from_real_rows(&[vec![1.0]]), &damp, DriftScheme::Centered, true, 1e-3).unwrap();
    let mut state = FreezeState::new(u0.clone());
    while state.t < t_end - 1e-12 {
        state = st.step(&state).unwrap().0;
    }
    let mut c = SystemCoefficients::identity(1, 2);
    c.dfinf = from_rows(&[vec![C64::new(-b, 0.0)]]);
    let exact = apply_semigroup(&u0.to_complex(), t_end, &c).unwrap();
    let gap = state.v.data.iter().zip(&exact.field.data).map(|(x, y)| (x - y.re).abs()).fold(0.0, f64::max);

    let ok = mass_err <= MASS_TOL && ck <= CK_TOL && gap <= IMEX_GAP;
    let detail = format!(
        "mass error {mass_err:.2e} (tol {MASS_TOL:.0e}); Chapman-Kolmogorov {ck:.2e} (tol {CK_TOL:.0e}); \
         semigroup vs IMEX {gap:.2e} (tol {IMEX_GAP:.0e})"
    );
    suite.record(6, "heat-kernel oracle", ok, t.elapsed(), Some(30.0), &detail);
}

struct Soliton {
    result: FreezeResult,
    took: Duration,
}

fn freeze(n: usize) -> Soliton {
    let t = Instant::now();
    let cfg = FreezeConfig { n, ..Default::default() };
    let result = run_freezing(&cfg, &QcglParams::default()).unwrap();
    Soliton { result, took: t.elapsed() }
}

fn c7_freezing(suite: &mut Suite, sol: &Soliton) {
    let r = &sol.result;
    let s = r.s().abs();
    let rel = (s - SIGMA_2D).abs() / SIGMA_2D;
    let wind = winding_number(&r.profile, 4.0, 720);
    let ok = r.converged && rel <= S_REL_TOL && r.steady_residual <= STEADY_TOL && (wind.abs() - 1.0).abs() < 1e-6;
    let detail = format!(
        "N = 128 on [-16,16]^2: converged {} at t = {:.2}, s = {:.6} ({:.2}% from {SIGMA_2D}, tol {}%), \
         residual {:.2e} (tol {STEADY_TOL:.0e}), winding {wind:.3}, max|v| {:.4}",
        r.converged,
        r.final_state.t,
        r.s(),
        100.0 * rel,
        100.0 * S_REL_TOL,
        r.steady_residual,
        r.profile.max_abs()
    );
    suite.record(7, "freezing reproduction", ok, sol.took, None, &detail);
}

fn eigenfunction_residuals(profile: &RealField, s: f64) -> Vec<f64> {
    let p = QcglParams::default();
    let op = linearize(profile, &diffusion_cmat(&p), &rot(s), &p, DriftScheme::Centered).unwrap();
    let triples = symmetry_eigentriples(&rot(s)).unwrap();
    verify_symmetry_eigenfunctions(&op, &gradient_fields(profile), &triples)
        .unwrap()
        .iter()
        .map(|c| c.residual.unwrap_or(f64::INFINITY))
        .collect()
}

fn c8_spectra(suite: &mut Suite, fine: &Soliton, coarse: &Soliton) {
    let t = Instant::now();
    let p = QcglParams::default();
    let s = fine.result.s();
    let op = linearize(&fine.result.profile, &diffusion_cmat(&p), &rot(s), &p, DriftScheme::Centered).unwrap();
    let (eigs, out) = shift_invert_eigs(&op, C64::new(0.1, 0.0), &ArnoldiConfig::with_k(16)).unwrap();
    let mut ritz_ok = true;
    for want in [C64::new(0.0, 0.0), C64::new(0.0, s), C64::new(0.0, -s)] {
        let best = eigs.iter().min_by(|a, b| (a.lambda - want).norm().total_cmp(&(b.lambda - want).norm()));
        match best {
            Some(e) => {
                let dist = (e.lambda - want).norm();
                ritz_ok &= dist <= RITZ_DIST && e.residual <= RITZ_RESIDUAL;
                note(&format!("target {want:.6}: Ritz {:.6}, distance {dist:.2e}, residual {:.2e}", e.lambda, e.residual));
            }
            None => ritz_ok = false,
        }
    }
    let fine_res = eigenfunction_residuals(&fine.result.profile, s);
    let coarse_res = eigenfunction_residuals(&coarse.result.profile, coarse.result.s());
    let mut ef_ok = fine_res.len() == 3;
    for (k, (f, c)) in fine_res.iter().zip(&coarse_res).enumerate() {
        let ratio = c / f;
        ef_ok &= *f <= EIGENFUNCTION_TOL && ratio >= REFINE_RATIO;
        note(&format!("eigenfunction {k}: residual N=64 {c:.4}, N=128 {f:.4} (tol {EIGENFUNCTION_TOL}), ratio {ratio:.2} (min {REFINE_RATIO})"));
    }
    let detail = format!(
        "{} Ritz pairs ({} applications); Ritz within {RITZ_DIST} of {{0, +-is}} with residual <= {RITZ_RESIDUAL:.0e}: {ritz_ok}; \
         eigenfunction residuals and refinement: {ef_ok}",
        eigs.len(),
        out.applications
    );
    suite.record(8, "spectral cross-validation", ritz_ok && ef_ok, t.elapsed(), None, &detail);
}

fn c9_adjoint(suite: &mut Suite) {
    let t = Instant::now();
    let a = diffusion_cmat(&QcglParams::default());
    let s = rot(SIGMA_2D);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = Grid::new(2, 6.0, 32).unwrap();
    let reaction: Vec<C64> =
        (0..g.nodes() * 4).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let mut worst = 0.0f64;
    for scheme in [DriftScheme::Upwind, DriftScheme::Centered] {
        let op = assemble_linearized(&g, &a, &s, &reaction, scheme).unwrap();
        let adj = assemble_adjoint(&g, &a, &s, &reaction, scheme).unwrap();
        for _ in 0..ADJOINT_PAIRS / 2 {
            let psi: Vec<C64> = (0..op.dim()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let v: Vec<C64> = (0..op.dim()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let lhs = linalg::dot(&adj.transpose.apply(&psi), &v);
            let rhs = linalg::dot(&psi, &op.apply(&v));
            worst = worst.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()));
        }
    }

    // Both adjoint paths against the continuum adjoint A^H lap - <Sx, grad> + B^H on a
    // smooth off-centre Gaussian, interior nodes only.
    let b = from_rows(&[vec![C64::new(-0.5, 0.1), C64::new(0.2, 0.0)], vec![C64::new(-0.3, 0.0), C64::new(-0.4, -0.2)]]);
    let (x0, w) = ([0.7, -0.4], 1.0);
    let amp = [C64::new(1.0, 0.0), C64::new(0.5, -0.3)];
    let ah = linalg::adjoint(&a);
    let bh = linalg::adjoint(&b);
    let mut gaps = Vec::new();
    let mut errs = Vec::new();
    for n in [21, 41, 81] {
        let g = Grid::new(2, 4.0, n).unwrap();
        let reaction: Vec<C64> = (0..g.nodes()).flat_map(|_| (0..4).map(|k| b[(k / 2, k % 2)])).collect();
        let pair = assemble_adjoint(&g, &a, &s, &reaction, DriftScheme::Upwind).unwrap();
        let psi = Field::from_fn(g, 2, |x, o: &mut [C64]| {
            let e = (-((x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2)) / (w * w)).exp();
            o[0] = amp[0] * e;
            o[1] = amp[1] * e;
        });
        let exact = |x: [f64; 3]| -> [C64; 2] {
            let y = [x[0] - x0[0], x[1] - x0[1]];
            let r2 = y[0] * y[0] + y[1] * y[1];
            let e = (-r2 / (w * w)).exp();
            let lap = e * (4.0 * r2 / w.powi(4) - 4.0 / (w * w));
            let sx = [s[0][0] * x[0] + s[0][1] * x[1], s[1][0] * x[0] + s[1][1] * x[1]];
            let drift = -2.0 / (w * w) * e * (sx[0] * y[0] + sx[1] * y[1]);
            let mut out = [C64::default(); 2];
            for (r, o) in out.iter_mut().enumerate() {
                for c in 0..2 {
                    *o += ah[(r, c)] * amp[c] * lap + bh[(r, c)] * amp[c] * e;
                }
                *o -= amp[r] * drift;
            }
            out
        };
        let yt = pair.transpose.apply(&psi.data);
        let yd = pair.direct.apply(&psi.data);
        let (mut gap, mut et, mut ed, mut scale) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for node in 0..g.nodes() {
            let idx = g.multi_index(node);
            if !idx[..2].iter().all(|&i| (2..n - 2).contains(&i)) {
                continue;
            }
            let ex = exact(g.position(node));
            for k in 0..2 {
                gap = gap.max((yt[node * 2 + k] - yd[node * 2 + k]).norm());
                et = et.max((yt[node * 2 + k] - ex[k]).norm());
                ed = ed.max((yd[node * 2 + k] - ex[k]).norm());
                scale = scale.max(ex[k].norm());
            }
        }
        gaps.push(gap / scale);
        errs.push((et / scale, ed / scale));
    }
    let mut refine_ok = true;
    for k in 0..gaps.len() {
        refine_ok &= gaps[k] <= errs[k].0 + errs[k].1;
        note(&format!(
            "h = {:.3}: interior gap {:.2e}, transpose error {:.3e}, direct error {:.3e}",
            8.0 / (20 * (1 << k)) as f64,
            gaps[k],
            errs[k].0,
            errs[k].1
        ));
    }
    let ratios: Vec<f64> = errs.windows(2).map(|e| (e[0].0 + e[0].1) / (e[1].0 + e[1].1)).collect();
    refine_ok &= ratios.iter().all(|&r| r >= REFINE_RATIO);
    let detail = format!(
        "transpose identity max {worst:.2e} over {ADJOINT_PAIRS} pairs (tol {ADJOINT_TOL:.0e}); \
         direct vs transpose within the O(h) consistency error, ratios {ratios:.2?} (min {REFINE_RATIO})"
    );
    suite.record(9, "adjoint identity", worst <= ADJOINT_TOL && refine_ok, t.elapsed(), Some(30.0), &detail);
}

fn c10_fredholm(suite: &mut Suite) {
    let t = Instant::now();
    let p = QcglParams::default();
    let cfg = FreezeConfig { r: 8.0, n: 48, ..Default::default() };
    let grid = cfg.grid().unwrap();
    let v0 = initial_guess(&grid, 2, &cfg.initial).unwrap();
    let sol = run_freezing_from(&cfg, &diffusion_cmat(&p), &p, v0, |_| {}).unwrap();
    let op = linearize(&sol.profile, &diffusion_cmat(&p), &rot(sol.s()), &p, DriftScheme::Centered).unwrap();
    let adj = op.conj_transpose();
    let b0 = 0.5;
    let scfg = SolvabilityConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ok = sol.converged;
    // The profile solves the discrete equation only to the phase tolerance, so the gauge
    // eigenvalue of L_h sits near, not at, 0. Its Ritz value stands in for lambda = 0.
    let lambda0 = rotwave::spectra::eigs_near(&op.matrix, C64::new(1e-3, 0.0), &ArnoldiConfig::with_k(1)).unwrap().pairs[0].lambda;
    note(&format!("discrete representative of lambda = 0: {lambda0:.3e}"));
    for lambda in [lambda0, C64::new(0.3, 0.2)] {
        let w: Vec<C64> = (0..op.dim()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let lw = op.apply(&w);
        let g: Vec<C64> = lw.iter().zip(&w).map(|(a, b)| lambda * b - a).collect();
        let g = Field::from_vec(op.grid, op.m, g).unwrap();
        let range = solvability_check(&op, &adj, lambda, &g, b0, &scfg);
        let (accepted, residual, kernel) = match &range {
            Ok(r) => (r.solvable, r.residual.unwrap_or(f64::INFINITY), r.kernel_dim),
            Err(e) => {
                note(&format!("lambda = {lambda:.3e}: {e}"));
                (false, f64::INFINITY, 0)
            }
        };
        ok &= accepted && residual <= FREDHOLM_RESIDUAL;
        let mut line = format!("lambda = {lambda:.3e}: kernel dim {kernel}, range rhs accepted {accepted}, residual {residual:.2e}");
        if kernel > 0 {
            // An adjoint kernel vector as the right-hand side.
            let psi = rotwave::spectra::eigs_near(&adj.matrix, lambda.conj() + C64::new(1e-3, 0.0), &ArnoldiConfig::with_k(1))
                .unwrap()
                .pairs
                .remove(0);
            let gpsi = Field::from_vec(op.grid, op.m, psi.vector).unwrap();
            let rejected = solvability_check(&op, &adj, lambda, &gpsi, b0, &scfg).is_ok_and(|r| !r.solvable);
            ok &= rejected;
            line.push_str(&format!(", adjoint kernel rhs rejected {rejected}"));
        } else {
            ok &= lambda != lambda0;
        }
        note(&line);
    }
    note(&format!("freeze: converged {} at t = {:.1}, residual {:.2e}", sol.converged, sol.final_state.t, sol.steady_residual));
    let detail = format!(
        "48^2 soliton (s = {:.4}): range accepted with residual <= {FREDHOLM_RESIDUAL:.0e}, adjoint kernel rejected, at lambda_0 ~ 0 and 0.3+0.2i",
        sol.s()
    );
    suite.record(10, "Fredholm alternative", ok, t.elapsed(), Some(60.0), &detail);
}

fn c11_decay_fit(suite: &mut Suite, sol: &Soliton) {
    let t = Instant::now();
    let g = Grid::new(2, 20.0, 161).unwrap();
    let mag: Vec<f64> = (0..g.nodes())
        .map(|k| {
            let x = g.position(k);
            2.5 * (-SYNTHETIC_MU * (x[0] * x[0] + x[1] * x[1] + 1.0).sqrt()).exp()
        })
        .collect();
    let synth = fit_decay_rate(&mag, &g, (2.0, 18.0)).unwrap();
    let profile = &sol.result.profile;
    let fit = fit_decay_rate(&profile.pointwise_norm(), &profile.grid, DECAY_WINDOW).unwrap();
    let ok = (synth.mu_fit - SYNTHETIC_MU).abs() <= SYNTHETIC_TOL && fit.mu_fit > 0.0 && fit.mu_fit <= SOLITON_MU_MAX;
    let detail = format!(
        "synthetic {:.6} vs {SYNTHETIC_MU} (tol {SYNTHETIC_TOL}); soliton mu_fit = {:.4} (r^2 {:.4}, window {DECAY_WINDOW:?}) vs (0, {SOLITON_MU_MAX:.4}]",
        synth.mu_fit, fit.mu_fit, fit.r2
    );
    suite.record(11, "decay fitting", ok, t.elapsed(), Some(10.0), &detail);
}

fn main() {
    // The libtest flags cargo passes (--nocapture, filters) are ignored.
    let only: Option<Vec<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let run = |id: u32| only.as_ref().is_none_or(|o| o.contains(&id));
    let start = Instant::now();
    let mut suite = Suite { passed: 0, failed: Vec::new() };
    let quick: [(u32, fn(&mut Suite)); 8] = [
        (1, c1_conditions),
        (2, c2_constants),
        (3, c3_symmetry),
        (4, c4_dispersion),
        (5, c5_decay_bounds),
        (6, c6_heat_kernel),
        (9, c9_adjoint),
        (10, c10_fredholm),
    ];
    for (id, f) in quick {
        if run(id) {
            f(&mut suite);
        }
    }
    if run(7) || run(8) || run(11) {
        let fine = freeze(128);
        if run(7) {
            c7_freezing(&mut suite, &fine);
        }
        if run(8) {
            let coarse = freeze(64);
            note(&format!(
                "N = 64 refinement run: s = {:.6}, converged {} in {:.1} s",
                coarse.result.s(),
                coarse.result.converged,
                coarse.took.as_secs_f64()
            ));
            c8_spectra(&mut suite, &fine, &coarse);
        }
        if run(11) {
            c11_decay_fit(&mut suite, &fine);
        }
    }
    println!(
        "acceptance: {} passed, {} failed {:?} in {:.1} s",
        suite.passed,
        suite.failed.len(),
        suite.failed,
        start.elapsed().as_secs_f64()
    );
    if std::env::var_os("ACCEPTANCE_STRICT").is_some() && !suite.failed.is_empty() {
        std::process::exit(1);
    }
}
