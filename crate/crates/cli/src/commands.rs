use std::io::Write;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde_json::{json, Value};

use pd3o::algorithms::{solve, validate_stepsizes, SolveOptions, StepSizeVerdict};
use pd3o::metrics::ConvergenceRecord;
use pd3o::problems::{cache_dir_from_env, reference_solution, ReferenceSolution};
use pd3o::{AlgorithmId, Error, SolverState, StepSizes};

use crate::config::RunConfig;
use crate::instance::{build, Instance};
use crate::output;

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARSE: u8 = 1;
pub const EXIT_INADMISSIBLE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// A failure with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::StepSizeRejected { .. } => EXIT_INADMISSIBLE,
            Error::NumericalFailure { .. } | Error::ConvergenceFailure { .. } | Error::GeometryViolation { .. } => {
                EXIT_NUMERICAL
            }
            _ => EXIT_PARSE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(EXIT_PARSE, e.to_string())
    }
}

fn steps_for(cfg: &RunConfig, beta: f64) -> Result<StepSizes<f64>, Failure> {
    Ok(StepSizes::from_factors(cfg.gamma_factor, cfg.lambda, beta)?.with_theta(cfg.theta)?)
}

fn verdict(cfg: &RunConfig, inst: &Instance) -> Result<StepSizeVerdict, Failure> {
    let steps = steps_for(cfg, inst.beta)?;
    Ok(validate_stepsizes(cfg.algorithm, &steps, inst.beta, inst.norm_aat))
}

/// Reports admissibility for PD3O, PDFP, Condat-Vu and AFBA (plus the configured
/// algorithm if it is not one of them). Returns 0 if the configured algorithm is
/// admissible and 2 otherwise.
pub fn validate(cfg: &RunConfig, out: &mut dyn Write) -> Result<u8, Failure> {
    let inst = build(cfg)?;
    let steps = steps_for(cfg, inst.beta)?;
    writeln!(
        out,
        "beta = {:.6e}, |AA^T| = {:.6e}, gamma = {:.6e}, delta = {:.6e}, lambda*|AA^T| = {:.6}",
        inst.beta,
        inst.norm_aat,
        steps.gamma(),
        steps.delta(),
        cfg.lambda * inst.norm_aat
    )?;
    let mut algs = AlgorithmId::THREE_TERM.to_vec();
    if !algs.contains(&cfg.algorithm) {
        algs.push(cfg.algorithm);
    }
    let plain = StepSizes::new(steps.gamma(), steps.delta())?;
    let mut configured_ok = false;
    for alg in algs {
        // relaxation only applies to the configured algorithm
        let s = if alg == cfg.algorithm { &steps } else { &plain };
        let v = validate_stepsizes(alg, s, inst.beta, inst.norm_aat);
        let status = if v.is_valid() { "admissible" } else { "rejected" };
        let cond = v.violated().unwrap_or_else(|| v.binding());
        let marker = if alg == cfg.algorithm { "*" } else { " " };
        writeln!(out, "{marker} {:<10} {:<10} {cond}", alg.name(), status)?;
        if alg == cfg.algorithm {
            configured_ok = v.is_valid();
        }
    }
    Ok(if configured_ok { EXIT_OK } else { EXIT_INADMISSIBLE })
}

fn reference(cfg: &RunConfig, inst: &Instance) -> Result<Option<ReferenceSolution<f64>>, Failure> {
    if cfg.reference_iters == 0 {
        return Ok(None);
    }
    let cache = cache_dir_from_env();
    info!("computing reference solution ({} iterations)", cfg.reference_iters);
    Ok(Some(reference_solution(
        &inst.spec,
        &inst.hash,
        cfg.reference_iters,
        cache.as_deref(),
    )?))
}

/// Runs one configuration from zero. Shared by `run` and every `compare` cell so the two
/// produce identical records.
pub fn execute(
    cfg: &RunConfig,
    inst: &Instance,
    reference: Option<&ReferenceSolution<f64>>,
) -> Result<ConvergenceRecord, Error> {
    let steps = StepSizes::from_factors(cfg.gamma_factor, cfg.lambda, inst.beta)?.with_theta(cfg.theta)?;
    let init = SolverState::zeros(&inst.spec, cfg.algorithm, &steps)?;
    let options = SolveOptions {
        max_iters: cfg.max_iters,
        residual_tol: cfg.tol,
        force: cfg.force,
        log_every: cfg.log_every,
        norm_aat: Some(inst.norm_aat),
        reference: reference.map(|r| (r.x.clone(), r.s.clone())),
    };
    let out = solve(&inst.spec, cfg.algorithm, &steps, init, &options, |_| ControlFlow::Continue(()))?;
    Ok(out.record)
}

fn sidecar(cfg: &RunConfig, inst: &Instance, record: &ConvergenceRecord, reference: Option<&ReferenceSolution<f64>>) -> Value {
    json!({
        "config": cfg.to_text().lines().collect::<Vec<_>>(),
        "instance_hash": inst.hash,
        "reference": reference.map(|r| json!({
            "iterations": r.iters,
            "objective": Some(r.objective).filter(|v| v.is_finite()),
        })),
        "run": output::meta_json(record),
    })
}

/// Summary printed by `run`.
pub struct RunSummary {
    pub record: ConvergenceRecord,
    pub csv: PathBuf,
}

pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<RunSummary, Failure> {
    let inst = build(cfg)?;
    let v = verdict(cfg, &inst)?;
    if !cfg.force {
        v.into_result()?;
    }
    let reference = reference(cfg, &inst)?;
    let record = execute(cfg, &inst, reference.as_ref())?;

    output::write_atomic(&cfg.output, &output::record_csv(&record))?;
    let meta = sidecar(cfg, &inst, &record, reference.as_ref());
    output::write_atomic(
        &output::sidecar_path(&cfg.output),
        &serde_json::to_string_pretty(&meta).expect("json values serialize"),
    )?;

    let last = record.final_row().expect("a run logs at least one row");
    let objective = if last.objective.is_finite() {
        format!("{:.10e}", last.objective)
    } else {
        "n/a".into()
    };
    writeln!(
        out,
        "{}: objective {objective}, iterations {}, residual {:.3e}{}{}",
        record.meta.algorithm,
        record.meta.iterations,
        last.residual_im,
        if record.meta.converged { "" } else { " (not converged)" },
        if record.meta.forced { ", forced" } else { "" },
    )?;
    writeln!(out, "wrote {}", cfg.output.display())?;
    Ok(RunSummary {
        record,
        csv: cfg.output.clone(),
    })
}

/// Grid swept by `compare`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub algorithms: Vec<AlgorithmId>,
    pub gamma_factors: Vec<f64>,
    pub lambdas: Vec<f64>,
}

pub fn series_id(alg: AlgorithmId, gamma_factor: f64, lambda: f64) -> String {
    format!("{}_g{gamma_factor}_l{lambda}", alg.name())
}

fn cells_dir(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    output.with_file_name(format!("{stem}-cells"))
}

/// Runs every admissible cell of the grid (concurrently) on one shared instance and
/// merges the per-cell CSVs into `cfg.output`, with a JSON manifest alongside.
pub fn compare(base: &RunConfig, sweep: &Sweep, out: &mut dyn Write) -> Result<u8, Failure> {
    let inst = build(base)?;
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for &gf in &sweep.gamma_factors {
        for &lam in &sweep.lambdas {
            for &alg in &sweep.algorithms {
                let cfg = RunConfig {
                    algorithm: alg,
                    gamma_factor: gf,
                    lambda: lam,
                    ..base.clone()
                };
                let id = series_id(alg, gf, lam);
                let v = verdict(&cfg, &inst)?;
                match v.violated() {
                    Some(c) if !base.force => {
                        warn!("skipping {id}: {c}");
                        skipped.push(json!({ "series": id, "reason": c.to_string() }));
                    }
                    _ => cells.push((id, cfg)),
                }
            }
        }
    }
    if cells.is_empty() {
        writeln!(out, "no admissible cells in the grid")?;
        return Ok(EXIT_INADMISSIBLE);
    }

    let reference = reference(base, &inst)?;
    let dir = cells_dir(&base.output);
    let results: Vec<_> = cells
        .par_iter()
        .map(|(id, cfg)| {
            let res = execute(cfg, &inst, reference.as_ref());
            if let Ok(record) = &res {
                let path = dir.join(format!("{id}.csv"));
                output::write_atomic(&path, &output::record_csv(record))?;
            }
            Ok::<_, std::io::Error>((id.clone(), cfg.clone(), res))
        })
        .collect::<Result<_, _>>()?;

    let mut merged = Vec::new();
    let mut series = Vec::new();
    let mut failed = Vec::new();
    let mut code = EXIT_OK;
    for (id, cfg, res) in results {
        match res {
            Ok(record) => {
                writeln!(
                    out,
                    "{id}: {} iterations, residual {:.3e}{}",
                    record.meta.iterations,
                    record.residuals.last().copied().unwrap_or(f64::NAN),
                    if record.meta.converged { "" } else { " (not converged)" }
                )?;
                series.push(json!({
                    "series": id,
                    "algorithm": cfg.algorithm.name(),
                    "gamma_factor": cfg.gamma_factor,
                    "lambda": cfg.lambda,
                    "csv": dir.join(format!("{id}.csv")).display().to_string(),
                    "run": output::meta_json(&record),
                }));
                merged.push((id, output::record_csv(&record)));
            }
            Err(e) => {
                let f = Failure::from(e);
                writeln!(out, "{id}: failed: {}", f.message)?;
                code = code.max(f.code);
                failed.push(json!({ "series": id, "error": f.message }));
            }
        }
    }

    output::write_atomic(&base.output, &output::combined_csv(&merged))?;
    let manifest = json!({
        "config": base.to_text().lines().collect::<Vec<_>>(),
        "instance_hash": inst.hash,
        "reference_iterations": reference.as_ref().map(|r| r.iters),
        "series": series,
        "skipped": skipped,
        "failed": failed,
    });
    output::write_atomic(
        &output::sidecar_path(&base.output),
        &serde_json::to_string_pretty(&manifest).expect("json values serialize"),
    )?;
    writeln!(out, "wrote {} ({} series)", base.output.display(), merged.len())?;
    Ok(code)
}
