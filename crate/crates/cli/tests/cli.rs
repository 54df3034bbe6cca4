use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pd3o(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pd3o"))
        .args(args)
        .current_dir(dir)
        .env_remove("PD3O_REFERENCE_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// CSV rows with the wall-clock column dropped.
fn rows_without_time(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap())
        .collect()
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &[&str] = &["--problem", "fused-lasso", "--n", "20", "--p", "60", "--seed", "3"];

#[test]
fn toy_quadratic_defaults_converge() {
    let dir = tempfile::tempdir().unwrap();
    let o = pd3o(dir.path(), &["run", "--problem", "toy-quadratic", "--output", "toy.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("toy.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "iter,objective,residual_im,dist_to_ref,gap,wall_time_s");
    let res = column(&csv, "residual_im");
    assert!(*res.last().unwrap() <= 1e-8);
    let meta = json(&dir.path().join("toy.json"));
    assert_eq!(meta["run"]["converged"], Value::Bool(true));
    assert!(stdout(&o).contains("iterations"));
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    let o = pd3o(dir.path(), &["run", "--problem", "toy-quadratic", "--output", "t.csv"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let first = csv.lines().nth(1).unwrap();
    let residual = first.split(',').nth(2).unwrap();
    let mantissa = residual.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{residual}");
}

fn verdicts(text: &str) -> Vec<(String, bool)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let mut parts = l.trim_start_matches(['*', ' ']).split_whitespace();
            let name = parts.next().unwrap().to_string();
            (name, parts.next().unwrap() == "admissible")
        })
        .collect()
}

#[test]
fn validate_reproduces_the_admissibility_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = pd3o(dir.path(), &["validate", "--gamma-factor", "1.5", "--lambda", "0.125"]);
    assert_eq!(o.status.code(), Some(0));
    let v = verdicts(&stdout(&o));
    let expect = [("pd3o", true), ("pdfp", true), ("condat-vu", false), ("afba", false)];
    for (name, ok) in expect {
        assert!(v.contains(&(name.to_string(), ok)), "{name}: {v:?}");
    }

    let o = pd3o(dir.path(), &["validate", "--gamma-factor", "1", "--lambda", "0.125"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(verdicts(&stdout(&o)).iter().all(|(_, ok)| *ok));

    let o = pd3o(dir.path(), &["validate", "--algorithm", "afba", "--gamma-factor", "1.99"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_rejects_everything_past_the_operator_bound() {
    let dir = tempfile::tempdir().unwrap();
    // |DD^T| is just below 4 at p = 500, so lambda = 1.01/4 puts lambda*|DD^T| above 1
    let o = pd3o(dir.path(), &["validate", "--lambda", "0.2525"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(verdicts(&stdout(&o)).iter().all(|(_, ok)| !*ok));
}

#[test]
fn desk_run_has_monotone_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let o = pd3o(
        dir.path(),
        &[
            "run", "--gamma-factor", "1.9", "--lambda", "0.125", "--max-iters", "3000", "--tol", "1e-6",
            "--reference-iters", "0", "--output", "desk.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("desk.csv")).unwrap();
    let r = column(&csv, "residual_im");
    assert!(r.len() > 100);
    assert!(r.windows(2).all(|w| w[1] <= w[0] + 1e-12 * r[0]));
}

#[test]
fn inadmissible_runs_need_force() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--algorithm", "condat-vu", "--gamma-factor", "1.99", "--max-iters", "20"];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(&["--reference-iters", "0", "--output", "cv.csv"]);
    let o = pd3o(dir.path(), &args);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("cv.csv").exists());

    args.push("--force");
    let o = pd3o(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta = json(&dir.path().join("cv.json"));
    assert_eq!(meta["run"]["forced"], Value::Bool(true));
}

#[test]
fn divergence_exits_with_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = pd3o(
        dir.path(),
        &["run", "--problem", "toy-quadratic", "--gamma-factor", "50", "--force", "--reference-iters", "0"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("iteration"), "{}", stderr(&o));
}

#[test]
fn parse_errors_exit_one_with_position() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "seed = 1\nlambda = x\n").unwrap();
    let o = pd3o(dir.path(), &["validate", "--config", "bad.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2, column 10"), "{}", stderr(&o));

    let o = pd3o(dir.path(), &["run", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    let o = pd3o(dir.path(), &["run", "--algorithm", "newton"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "problem = toy-quadratic\np = 4\nalgorithm = pdfp\noutput = from-file.csv\nreference-iters = 0\n",
    )
    .unwrap();
    let o = pd3o(dir.path(), &["run", "--config", "run.cfg", "--output", "override.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("override.csv").exists());
    assert!(!dir.path().join("from-file.csv").exists());
    let meta = json(&dir.path().join("override.json"));
    assert_eq!(meta["run"]["algorithm"], "pdfp");
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut base = vec!["run", "--max-iters", "300", "--tol", "0", "--reference-iters", "500", "--log-every", "7"];
    base.extend_from_slice(SMALL);
    let mut a = base.clone();
    a.extend_from_slice(&["--output", "a.csv"]);
    let mut b = base.clone();
    b.extend_from_slice(&["--output", "b.csv"]);
    assert_eq!(pd3o(dir.path(), &a).status.code(), Some(0));
    assert_eq!(pd3o(dir.path(), &b).status.code(), Some(0));
    let ta = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let tb = fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(rows_without_time(&ta), rows_without_time(&tb));
    // iterations 0 to 10 are always logged, then every 7th, then the last
    let iters: Vec<usize> = ta.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(&iters[..12], &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 14]);
    assert_eq!(*iters.last().unwrap(), 299);
}

#[test]
fn single_cell_compare_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut common = vec!["--max-iters", "200", "--reference-iters", "500", "--gamma-factor", "1.5"];
    common.extend_from_slice(SMALL);

    let mut run = vec!["run", "--output", "run.csv"];
    run.extend_from_slice(&common);
    assert_eq!(pd3o(dir.path(), &run).status.code(), Some(0));

    let mut cmp = vec!["compare", "--algorithms", "pd3o", "--output", "cmp.csv"];
    cmp.extend_from_slice(&common);
    let o = pd3o(dir.path(), &cmp);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let run_rows = rows_without_time(&fs::read_to_string(dir.path().join("run.csv")).unwrap());
    let cmp_text = fs::read_to_string(dir.path().join("cmp.csv")).unwrap();
    let cmp_rows: Vec<String> = rows_without_time(&cmp_text)
        .into_iter()
        .map(|l| l.split_once(',').unwrap().1.to_string())
        .collect();
    assert_eq!(run_rows, cmp_rows);
    assert!(cmp_text.lines().nth(1).unwrap().starts_with("pd3o_g1.5_l0.125,"));
}

#[test]
fn gamma_sweep_emits_admissible_series_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "compare", "--gamma-factors", "1,1.5,1.99", "--lambdas", "0.125", "--max-iters", "100",
        "--reference-iters", "300", "--output", "sweep.csv",
    ];
    args.extend_from_slice(SMALL);
    let o = pd3o(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = json(&dir.path().join("sweep.json"));
    let series: Vec<&str> = manifest["series"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["series"].as_str().unwrap())
        .collect();
    assert_eq!(
        series,
        [
            "pd3o_g1_l0.125",
            "pdfp_g1_l0.125",
            "condat-vu_g1_l0.125",
            "afba_g1_l0.125",
            "pd3o_g1.5_l0.125",
            "pdfp_g1.5_l0.125",
            "pd3o_g1.99_l0.125",
            "pdfp_g1.99_l0.125",
        ]
    );
    assert_eq!(manifest["skipped"].as_array().unwrap().len(), 4);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("series,iter,objective,residual_im,dist_to_ref,gap,wall_time_s\n"));
    for s in &series {
        assert!(dir.path().join("sweep-cells").join(format!("{s}.csv")).exists());
    }
    // the distance column is populated from the reference
    let first = csv.lines().nth(1).unwrap();
    assert!(!first.split(',').nth(4).unwrap().is_empty());
}

#[test]
fn lambda_sweep_at_fixed_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "compare", "--algorithms", "pd3o,pdfp", "--gamma-factors", "1.9", "--lambdas", "0.0125,0.125,0.25",
        "--max-iters", "50", "--reference-iters", "0", "--output", "lam.csv",
    ];
    args.extend_from_slice(SMALL);
    let o = pd3o(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = json(&dir.path().join("lam.json"));
    assert_eq!(manifest["series"].as_array().unwrap().len(), 6);
}
