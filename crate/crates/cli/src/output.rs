//! CSV and JSON writers. Files are written to a temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use pd3o::metrics::{ConvergenceRecord, RecordRow};
use serde_json::{json, Value};

pub const CSV_HEADER: &str = "iter,objective,residual_im,dist_to_ref,gap,wall_time_s";

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn csv_row(row: &RecordRow) -> String {
    format!(
        "{},{},{},{},{},{}",
        row.iter,
        num(row.objective),
        num(row.residual_im),
        opt(row.dist_to_ref),
        opt(row.gap),
        num(row.wall_time_s)
    )
}

pub fn record_csv(record: &ConvergenceRecord) -> String {
    let mut out = String::with_capacity(64 * (record.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &record.rows {
        out.push_str(&csv_row(row));
        out.push('\n');
    }
    out
}

pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// `run.csv` → `run.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn meta_json(record: &ConvergenceRecord) -> Value {
    let m = &record.meta;
    let last = record.final_row();
    json!({
        "algorithm": m.algorithm.name(),
        "gamma": m.gamma,
        "delta": m.delta,
        "lambda": m.gamma * m.delta,
        "theta": m.theta,
        "beta": m.beta,
        "norm_aat": m.norm_aat,
        "forced": m.forced,
        "iterations": m.iterations,
        "converged": m.converged,
        "final_objective": last.map(|r| r.objective).filter(|v| v.is_finite()),
        "final_residual": last.map(|r| r.residual_im),
        "oracle_calls": {
            "prox_g": m.counts.prox_g,
            "prox_hstar": m.counts.prox_hstar,
            "grad_f": m.counts.grad_f,
            "forward": m.counts.forward,
            "adjoint": m.counts.adjoint,
        },
    })
}

pub fn combined_csv(series: &[(String, String)]) -> String {
    let mut out = format!("series,{CSV_HEADER}\n");
    for (id, csv) in series {
        for line in csv.lines().skip(1) {
            let _ = writeln!(out, "{id},{line}");
        }
    }
    out
}
