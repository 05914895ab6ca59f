use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn rotwave(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotwave")).current_dir(dir).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_defaults_pass_and_print_the_p_range() {
    let t = TempDir::new().unwrap();
    let o = rotwave(t.path(), &["check", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("admissible p-range: (1.1716, 6.8284)"), "{}", stdout(&o));
    let rep = json(&t.path().join("o/check.json"));
    assert_eq!(rep["all_pass"], true);
    assert_eq!(rep["reports"].as_array().unwrap().len(), 5);
    assert!(t.path().join("o/check.meta.json").exists());
}

#[test]
fn p_seven_fails_a5p() {
    let t = TempDir::new().unwrap();
    let o = rotwave(t.path(), &["check", "--out", "o", "--override", "check.p=[7]"]);
    assert_eq!(o.status.code(), Some(0));
    let rep = json(&t.path().join("o/check.json"));
    let conds = rep["reports"][0]["conditions"].as_array().unwrap();
    let a5p = conds.iter().find(|c| c["name"] == "A5_p").unwrap();
    assert_eq!(a5p["pass"], false);
    assert_eq!(rep["all_pass"], false);
}

#[test]
fn identity_model_passes() {
    let t = TempDir::new().unwrap();
    let o = rotwave(t.path(), &["check", "--out", "o", "--override", "model.kind=identity", "--override", "model.S=[[0,1],[-1,0]]"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&t.path().join("o/check.json"))["all_pass"], true);
}

#[test]
fn matrix_model_reads_complex_entries() {
    let t = TempDir::new().unwrap();
    std::fs::write(
        t.path().join("c.toml"),
        "[model]\nkind = \"matrix\"\nA = [[[0.5, 0.5]]]\nDfinf = [[[-0.5, 0.0]]]\nS = [[0.0, 1.027], [-1.027, 0.0]]\n",
    )
    .unwrap();
    let o = rotwave(t.path(), &["dispersion", "--config", "c.toml", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&t.path().join("o/dispersion.json"))["max_re"], -0.5);
    let o = rotwave(t.path(), &["freeze", "--config", "c.toml", "--out", "o"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validation_failures_exit_two() {
    let t = TempDir::new().unwrap();
    for args in [
        vec!["check", "--override", "freeze.bogus=1"],
        vec!["check", "--override", "nokey"],
        vec!["check", "--override", "model.S=[[0,1],[1,0]]"],
        vec!["check", "--override", "freeze.N=1"],
        vec!["check", "--config", "missing.toml"],
        vec!["eigs", "--out", "empty"],
        vec!["bogus-command"],
    ] {
        let o = rotwave(t.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn symmetry_3d_has_six_triples() {
    let t = TempDir::new().unwrap();
    let o = rotwave(t.path(), &["symmetry", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&t.path().join("o/symmetry.json"));
    assert_eq!(doc["triples"].as_array().unwrap().len(), 6);
    assert_eq!(doc["count"], 6);
    for tr in doc["triples"].as_array().unwrap() {
        assert!(tr["residual_e"].as_f64().unwrap() <= 1e-10);
        assert!(tr["residual_b"].as_f64().unwrap() <= 1e-10);
    }
    let csv = std::fs::read_to_string(t.path().join("o/symmetry.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().all(|l| l.starts_with("re,") || l.ends_with(",2")));
}

#[test]
fn zero_velocity_gives_only_zero() {
    let t = TempDir::new().unwrap();
    let o = rotwave(t.path(), &["symmetry", "--out", "o", "--override", "model.S=[[0,0],[0,0]]"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&t.path().join("o/symmetry.json"));
    assert_eq!(doc["set"].as_array().unwrap().len(), 1);
    assert_eq!(doc["set"][0]["multiplicity"], 3);
}

#[test]
fn dispersion_tips_sit_on_the_abscissa() {
    let t = TempDir::new().unwrap();
    let o = rotwave(t.path(), &["dispersion", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0));
    let tips = std::fs::read_to_string(t.path().join("o/tips.csv")).unwrap();
    let rows: Vec<Vec<f64>> = tips.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 11);
    let sigma = json(&t.path().join("o/dispersion.json"))["sigma"][0].as_f64().unwrap();
    for r in rows {
        assert_eq!(r[1], -0.5);
        assert!((r[2].abs() - r[0].abs() * sigma).abs() < 1e-12);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let t = TempDir::new().unwrap();
    for o in ["a", "b"] {
        assert_eq!(rotwave(t.path(), &["dispersion", "--out", o]).status.code(), Some(0));
        assert_eq!(rotwave(t.path(), &["reproduce", "fig2", "--out", o, "--seed", "5"]).status.code(), Some(0));
    }
    for f in ["dispersion.csv", "tips.csv", "dispersion.json", "fig2/d4/symmetry.csv", "fig2/d5/symmetry.json"] {
        let a = std::fs::read(t.path().join("a").join(f)).unwrap();
        let b = std::fs::read(t.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn fig2_is_the_symmetry_command() {
    let t = TempDir::new().unwrap();
    assert_eq!(rotwave(t.path(), &["reproduce", "fig2", "--out", "o"]).status.code(), Some(0));
    let s3 = "model.S=[[0.0, 0.6888, -0.0043], [-0.6888, 0.0, -0.0043], [0.0043, 0.0043, 0.0]]";
    assert_eq!(rotwave(t.path(), &["symmetry", "--out", "s3", "--override", s3]).status.code(), Some(0));
    assert_eq!(rotwave(t.path(), &["symmetry", "--out", "s2", "--override", "model.S=[[0,1.027],[-1.027,0]]"]).status.code(), Some(0));
    for (d, dir) in [(3, "s3"), (2, "s2")] {
        for f in ["symmetry.csv", "symmetry.json"] {
            let a = std::fs::read(t.path().join(format!("o/fig2/d{d}/{f}"))).unwrap();
            let b = std::fs::read(t.path().join(dir).join(f)).unwrap();
            assert_eq!(a, b, "d = {d} {f}");
        }
    }
    let fig = json(&t.path().join("o/fig2/figure.json"));
    for p in fig["panels"].as_array().unwrap() {
        assert_eq!(p["count"], p["expected"]);
    }
    // No simulation output.
    assert!(!t.path().join("o/fig2/profile.bin").exists());
}

#[test]
fn fig1_tips_are_spaced_by_sigma() {
    let t = TempDir::new().unwrap();
    assert_eq!(rotwave(t.path(), &["reproduce", "fig1", "--out", "o"]).status.code(), Some(0));
    let tips = std::fs::read_to_string(t.path().join("o/fig1/a/tips.csv")).unwrap();
    let mut im: Vec<f64> = tips.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    im.sort_by(f64::total_cmp);
    assert!(im.windows(2).all(|w| (w[1] - w[0] - 1.027).abs() < 1e-12));
    let fig = json(&t.path().join("o/fig1/figure.json"));
    assert_eq!(fig["panels"][1]["dispersion"]["density"]["verdict"], "discrete-subgroup");
    assert_eq!(fig["panels"][2]["dispersion"]["density"]["verdict"], "dense-halfplane");
}

#[test]
fn small_pipeline_freeze_eigs_decay_fig4() {
    let t = TempDir::new().unwrap();
    let grid = ["--override", "freeze.N=32", "--override", "freeze.R=8"];
    let run = |args: &[&str]| {
        let mut all = args.to_vec();
        all.extend(["--out", "p"]);
        all.extend(grid);
        rotwave(t.path(), &all)
    };
    let o = run(&["freeze"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let sum = json(&t.path().join("p/freeze.json"));
    assert_eq!(sum["converged"], true);
    assert!((sum["winding"].as_f64().unwrap().abs() - 1.0).abs() < 1e-6);
    let s = sum["s"].as_f64().unwrap();

    let o = run(&["eigs", "--override", "eigs.k=4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let eigs = json(&t.path().join("p/eigs.json"));
    let first = &eigs["eigenvalues"][0];
    assert!(first["lambda"][0].as_f64().unwrap().abs() < 1e-4);
    assert_eq!(first["class"], "point-approx");
    assert!(t.path().join("p/eigvec_00.bin").exists());
    let spectrum = std::fs::read_to_string(t.path().join("p/spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 5);

    let o = run(&["decay", "--override", "decay.window=[1,7.5]", "--override", "decay.p=2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&t.path().join("p/decay.json"));
    assert!((rep["bounds"]["mu2_sup"].as_f64().unwrap() - 0.35355339059327373).abs() < 1e-12);

    let o = run(&["reproduce", "fig4", "--override", "eigs.k=4", "--override", "eigs.profile=\"p/profile\""]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("2D analogue of the paper's 3D figure"));
    let fig = json(&t.path().join("p/fig4/figure.json"));
    assert!((fig["tip_spacing"].as_f64().unwrap() - s.abs()).abs() < 1e-12);
    assert!(t.path().join("p/fig4/spectrum.csv").exists());
}
