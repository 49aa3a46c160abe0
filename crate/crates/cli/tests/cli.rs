use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BRANCH_CONFIG: &str = r#"{
  "phi0": 2.5, "mu0": 0.2, "mu_list": [0.15, 0.2, 0.25],
  "boundary": {"modes": {"vr": [[0,0],[0,0],[0.01,0]], "vtheta": [[0,0],[0.01,0],[0,0]]}}
}"#;

fn hamel(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamel"))
        .args(args)
        .current_dir(dir)
        .env("HAMEL_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zero_perturbation_solve_writes_zero_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = hamel(&["solve", "--phi0", "2.5", "--mu0", "0.3", "--out", "z"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("z/solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("n,r,gamma_re"));
    for line in lines {
        assert!(
            line.split(',').skip(2).all(|v| v.parse::<f64>().unwrap() == 0.0),
            "{line}"
        );
    }
    assert!(tmp.path().join("z/field.csv").exists());
}

#[test]
fn acceptance_case_solves_with_small_residual() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.json"), BRANCH_CONFIG).unwrap();
    let out = hamel(&["solve", "--config", "c.json", "--out", "s"], tmp.path());
    assert_eq!(code(&out), 0);
    let report = json(&tmp.path().join("s/report.json"));
    assert_eq!(report["converged"], true);
    assert!(report["report"]["ns_residual"].as_f64().unwrap() < 1e-4);
    assert_eq!(report["report"]["mu_final"].as_f64(), Some(0.2));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.json"), BRANCH_CONFIG).unwrap();
    let mut reports = Vec::new();
    for threads in ["1", "4"] {
        let out = Command::new(env!("CARGO_BIN_EXE_hamel"))
            .args(["solve", "--config", "c.json", "--mu", "0.25", "--out", "d"])
            .current_dir(tmp.path())
            .env("HAMEL_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        reports.push(fs::read(tmp.path().join("d/report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let a = hamel(&["verify", "--quick", "--seed", "7", "--out", "v"], tmp.path());
    let first = fs::read(tmp.path().join("v/verify.json")).unwrap();
    let b = hamel(&["verify", "--quick", "--seed", "7", "--out", "v"], tmp.path());
    assert_eq!((code(&a), code(&b)), (0, 0));
    assert_eq!(first, fs::read(tmp.path().join("v/verify.json")).unwrap());
}

#[test]
fn config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("bad.json"),
        r#"{"phi0": 2.5, "mu0": 0.2, "tolerance": 1}"#,
    )
    .unwrap();
    fs::write(tmp.path().join("broken.json"), "{ not json").unwrap();
    for args in [
        vec!["solve", "--config", "bad.json"],
        vec!["solve", "--config", "broken.json"],
        vec!["solve", "--config", "missing.json"],
        vec!["solve"],
        vec!["shoot", "--phi0", "2.5", "--mu0", "0.2"],
        vec!["branch", "--phi0", "2.5", "--mu0", "0.2"],
        vec!["solve", "--phi0", "2.0000005", "--mu0", "0.2"],
        vec!["frobnicate"],
    ] {
        let out = hamel(&args, tmp.path());
        assert_eq!(code(&out), 1, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = hamel(&["solve", "--config", "bad.json"], tmp.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field `tolerance`"));
}

#[test]
fn non_convergence_exits_two_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = BRANCH_CONFIG.replace("0.01", "3.0");
    fs::write(tmp.path().join("big.json"), cfg).unwrap();
    let out = hamel(&["solve", "--config", "big.json", "--out", "big"], tmp.path());
    assert_eq!(code(&out), 2);
    let report = json(&tmp.path().join("big/report.json"));
    assert_eq!(report["converged"], false);
    assert!(report["report"]["contraction_ratio"].as_f64().unwrap() > 1.0);

    let out = hamel(&["branch", "--config", "big.json", "--out", "bb"], tmp.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed at mu"));
}

#[test]
fn branch_emits_comparison_table() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.json"), BRANCH_CONFIG).unwrap();
    let out = hamel(&["branch", "--config", "c.json", "--out", "b"], tmp.path());
    assert_eq!(code(&out), 0);
    let table = fs::read_to_string(tmp.path().join("b/branch.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let doc = json(&tmp.path().join("b/branch.json"));
    for m in doc["members"].as_array().unwrap() {
        assert!(m["trace_difference"].as_f64().unwrap() < 1e-6);
        let mu = m["mu"].as_f64().unwrap();
        assert!((m["mu_eff"].as_f64().unwrap() - mu).abs() < 0.05 * mu);
    }
}

#[test]
fn shooting_command_moves_mu() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"phi0": 1.0, "mu0": 5.0, "boundary": {"modes": {"vr": [[0,0],[0,0]], "vtheta": [[0,0],[0.01,0]]}}}"#;
    fs::write(tmp.path().join("s.json"), cfg).unwrap();
    let out = hamel(&["shoot", "--config", "s.json", "--out", "sh"], tmp.path());
    assert_eq!(code(&out), 0);
    let report = json(&tmp.path().join("sh/report.json"));
    let mu = report["report"]["mu_final"].as_f64().unwrap();
    assert!(mu != 5.0 && (mu - 5.0).abs() < 1e-3);
}

#[test]
fn theta_sample_file_boundary() {
    let tmp = tempfile::tempdir().unwrap();
    let m = 40;
    let mut csv = String::from("ur,utheta\n");
    for k in 0..m {
        let t = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        csv.push_str(&format!("{},{}\n", -2.5 + 0.02 * t.cos(), 0.2 + 0.01 * (2.0 * t).sin()));
    }
    fs::write(tmp.path().join("samples.csv"), csv).unwrap();
    let cfg = r#"{"boundary": {"sample_file": {"path": "samples.csv"}}, "solver": {"n_max": 8}}"#;
    fs::write(tmp.path().join("f.json"), cfg).unwrap();
    let out = hamel(&["solve", "--config", "f.json", "--out", "f"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&tmp.path().join("f/report.json"));
    assert!(report["trace_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn export_round_trip_and_decay_table() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.json"), BRANCH_CONFIG).unwrap();
    assert_eq!(
        code(&hamel(&["solve", "--config", "c.json", "--out", "s"], tmp.path())),
        0
    );
    assert_eq!(
        code(&hamel(
            &["export", "--input", "s", "--format", "json", "--out", "j"],
            tmp.path()
        )),
        0
    );
    assert_eq!(
        code(&hamel(
            &["export", "--input", "j", "--format", "csv", "--out", "c"],
            tmp.path()
        )),
        0
    );
    let original = fs::read(tmp.path().join("s/solution.csv")).unwrap();
    assert_eq!(original, fs::read(tmp.path().join("c/solution.csv")).unwrap());

    let decay = fs::read_to_string(tmp.path().join("c/decay.csv")).unwrap();
    let modes = fs::read_to_string(tmp.path().join("s/solution.csv")).unwrap();
    assert_eq!(decay.lines().count(), modes.lines().count());
    assert_eq!(decay.lines().next(), Some("n,r,abs_gamma,abs_w,predicted_slope"));
    let rows = json(&tmp.path().join("j/decay.json"));
    assert_eq!(rows.as_array().unwrap().len(), modes.lines().count() - 1);
}

#[test]
fn export_failures_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir(tmp.path().join("empty")).unwrap();
    assert_eq!(
        code(&hamel(
            &["export", "--input", "empty", "--format", "csv", "--out", "x"],
            tmp.path()
        )),
        1
    );
    assert_eq!(
        code(&hamel(
            &["export", "--input", "empty", "--format", "xml", "--out", "x"],
            tmp.path()
        )),
        1
    );
}
