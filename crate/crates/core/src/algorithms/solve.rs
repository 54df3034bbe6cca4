use std::ops::ControlFlow;
use std::time::Instant;

use log::warn;

use crate::algorithms::{relax, step, validate_stepsizes, AlgorithmId, SolverState, StepSizes};
use crate::error::{Error, Result};
use crate::linops::norm_aat_upper_bound;
use crate::metrics::{lagrangian, ConvergenceRecord, ErgodicAverager, MNormContext, RecordMeta, RecordRow};
use crate::problem::{evaluate_objective, ProblemSpec};
use crate::scalar::Scalar;
use crate::vector::Vector;

#[derive(Debug, Clone)]
pub struct SolveOptions<T> {
    pub max_iters: usize,
    /// Stop once the `(I, M)` fixed-point residual is at most this.
    pub residual_tol: T,
    /// Run even when the step sizes are inadmissible.
    pub force: bool,
    /// Log every `log_every`-th iteration; iterations 0 to 10 and the last are always logged.
    pub log_every: usize,
    /// `‖AAᵀ‖`; estimated by power iteration when absent.
    pub norm_aat: Option<T>,
    /// Saddle pair `(x*, s*)` used for the distance and ergodic-gap columns.
    pub reference: Option<(Vector<T>, Vector<T>)>,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            max_iters: 1000,
            residual_tol: T::of(1e-8),
            force: false,
            log_every: 1,
            norm_aat: None,
            reference: None,
        }
    }
}

/// What a hook sees after each iteration: `next` is one step from `state`.
#[derive(Debug)]
pub struct IterationView<'a, T> {
    pub iter: usize,
    pub state: &'a SolverState<T>,
    pub next: &'a SolverState<T>,
    pub residual: T,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome<T> {
    pub record: ConvergenceRecord,
    pub state: SolverState<T>,
}

/// Runs `alg` from `init` until the residual drops to `residual_tol` or `max_iters` steps.
///
/// Row `k` of the record describes iterate `k`: its objective, the residual
/// `‖T(uᵏ) − uᵏ‖_{I,M}`, and, when a reference pair is supplied, `‖xᵏ − x*‖` and the
/// ergodic gap `L(x̄ᵏ, s*) − L(x*, s̄ᵏ⁺¹)`. With `θ ≠ 1` (PD3O only) the iterate moves to
/// `θ·T(uᵏ) + (1 − θ)·uᵏ`; the residual is still that of the unrelaxed step.
pub fn solve<T, H>(
    spec: &ProblemSpec<T>,
    alg: AlgorithmId,
    steps: &StepSizes<T>,
    init: SolverState<T>,
    options: &SolveOptions<T>,
    mut hook: H,
) -> Result<SolveOutcome<T>>
where
    T: Scalar,
    H: FnMut(&IterationView<'_, T>) -> ControlFlow<()>,
{
    let theta = steps.theta();
    if theta != T::one() && alg != AlgorithmId::Pd3o {
        return Err(Error::Misuse {
            algorithm: alg.name(),
            reason: "relaxation is supported for PD3O only",
        });
    }
    if alg.uses_xbar() != init.xbar().is_some() {
        return Err(Error::Misuse {
            algorithm: alg.name(),
            reason: "initial state was built for a different algorithm",
        });
    }
    let norm_aat = match options.norm_aat {
        Some(v) => v,
        None => norm_aat_upper_bound(spec.operator(), T::of(1e-6), 100_000, 0)?,
    };
    let beta = spec.f().beta();
    let verdict = validate_stepsizes(alg, steps, beta, norm_aat);
    if !options.force {
        verdict.clone().into_result()?;
    } else if let Some(c) = verdict.violated() {
        warn!("{alg}: running with inadmissible step sizes ({c})");
    }
    let ctx = MNormContext::from_spec(spec, steps, norm_aat);
    if ctx.is_semidefinite() {
        warn!("{alg}: M is only positive semidefinite; the residual is a seminorm");
    }

    let score_objective = spec.lstar().is_zero();
    let score_gap = options.reference.is_some()
        && spec.h().conjugate_value(&Vector::zeros(spec.dual_dim())).is_some()
        && spec.lstar().value(&Vector::zeros(spec.dual_dim())).is_some();
    let mut averages = ErgodicAverager::new(spec.primal_dim(), spec.dual_dim());
    let log_every = options.log_every.max(1);

    let start = Instant::now();
    let mut rows = Vec::new();
    let mut residuals = Vec::new();
    let mut state = init;
    let mut converged = false;
    let mut geometry_warned = false;

    for k in 0..options.max_iters {
        let next = step(alg, &state, spec, steps).map_err(|e| e.at_iteration(k))?;
        let residual = match residual(alg, &ctx, &state, &next) {
            Ok(r) => r,
            Err(e @ Error::GeometryViolation { .. }) if options.force => {
                if !geometry_warned {
                    warn!("{alg}: {e}; residual reported without the negative M part");
                    geometry_warned = true;
                }
                residual_clamped(alg, &ctx, &state, &next)
            }
            Err(e) => return Err(e.at_iteration(k)),
        };
        if !residual.is_finite() {
            return Err(Error::NumericalFailure {
                stage: "residual",
                iteration: Some(k),
            });
        }
        residuals.push(residual.as_f64());
        if score_gap {
            averages.push(state.x(), next.s());
        }

        converged = residual <= options.residual_tol;
        let last = converged || k + 1 == options.max_iters;
        if k <= 10 || k % log_every == 0 || last {
            let objective = if score_objective {
                evaluate_objective(spec, state.x())?.as_f64()
            } else {
                f64::NAN
            };
            let (dist_to_ref, gap) = match &options.reference {
                Some((xs, ss)) => {
                    let d = state.x().dist_sq(xs).sqrt().as_f64();
                    let g = if score_gap {
                        Some(
                            (lagrangian(spec, averages.x_mean(), ss)?
                                - lagrangian(spec, xs, averages.s_mean())?)
                            .as_f64(),
                        )
                    } else {
                        None
                    };
                    (Some(d), g)
                }
                None => (None, None),
            };
            rows.push(RecordRow {
                iter: k,
                objective,
                residual_im: residual.as_f64(),
                dist_to_ref,
                gap,
                wall_time_s: start.elapsed().as_secs_f64(),
            });
        }

        let flow = hook(&IterationView {
            iter: k,
            state: &state,
            next: &next,
            residual,
        });
        state = if theta != T::one() {
            relax(spec, steps, &state, &next, theta).map_err(|e| e.at_iteration(k))?
        } else {
            next
        };
        if converged || flow.is_break() {
            break;
        }
    }

    let iterations = residuals.len();
    Ok(SolveOutcome {
        record: ConvergenceRecord {
            rows,
            residuals,
            meta: RecordMeta {
                algorithm: alg,
                gamma: steps.gamma().as_f64(),
                delta: steps.delta().as_f64(),
                theta: theta.as_f64(),
                beta: beta.as_f64(),
                norm_aat: norm_aat.as_f64(),
                forced: options.force,
                iterations,
                converged,
                counts: state.counts(),
            },
        },
        state,
    })
}

fn residual<T: Scalar>(
    alg: AlgorithmId,
    ctx: &MNormContext<T>,
    state: &SolverState<T>,
    next: &SolverState<T>,
) -> Result<T> {
    crate::metrics::residual_for(alg, ctx, state, next)
}

fn residual_clamped<T: Scalar>(
    alg: AlgorithmId,
    _ctx: &MNormContext<T>,
    state: &SolverState<T>,
    next: &SolverState<T>,
) -> T {
    let dp = if alg.residual_on_z() {
        next.z().dist_sq(state.z())
    } else {
        next.x().dist_sq(state.x())
    };
    dp.sqrt()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::problem::SquaredDistance;

    #[test]
    fn trivial_quadratic_converges() {
        let c = Vector::from(vec![1.0, -2.0, 0.5]);
        let spec = ProblemSpec::<f64>::identity(3)
            .with_f(Arc::new(SquaredDistance::new(c.clone())))
            .unwrap();
        let steps = StepSizes::new(1.0, 0.5).unwrap();
        let init = SolverState::zeros(&spec, AlgorithmId::Pd3o, &steps).unwrap();
        let opts = SolveOptions {
            max_iters: 200,
            residual_tol: 1e-10,
            ..SolveOptions::default()
        };
        let out = solve(&spec, AlgorithmId::Pd3o, &steps, init, &opts, |_| ControlFlow::Continue(())).unwrap();
        assert!(out.record.meta.converged);
        assert!(out.state.x().max_abs_diff(&c) < 1e-10);
        // s stays at zero, so the first residual is ‖z¹ − z⁰‖ = ‖c‖
        assert!((out.record.residuals[0] - c.norm()).abs() < 1e-15);
    }

    #[test]
    fn rejects_inadmissible_unless_forced() {
        let spec = ProblemSpec::<f64>::identity(2)
            .with_f(Arc::new(SquaredDistance::new(Vector::zeros(2))))
            .unwrap();
        let steps = StepSizes::new(2.5, 0.1).unwrap();
        let init = SolverState::zeros(&spec, AlgorithmId::Pd3o, &steps).unwrap();
        let mut opts = SolveOptions {
            max_iters: 5,
            ..SolveOptions::default()
        };
        let err = solve(&spec, AlgorithmId::Pd3o, &steps, init.clone(), &opts, |_| ControlFlow::Continue(()));
        assert!(matches!(err, Err(Error::StepSizeRejected { .. })));
        opts.force = true;
        let out = solve(&spec, AlgorithmId::Pd3o, &steps, init, &opts, |_| ControlFlow::Continue(())).unwrap();
        assert!(out.record.meta.forced);
    }
}
