//! One iteration of each splitting scheme.
//!
//! Every step maps a consistent [`SolverState`] to the next one and reports a
//! non-finite intermediate as a numerical failure naming the sub-step.

use crate::algorithms::state::forward_point;
use crate::algorithms::{AlgorithmId, OracleCounts, SolverState, StepSizes};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::prox::prox_conjugate_into;
use crate::scalar::Scalar;
use crate::vector::Vector;

fn finite<T: Scalar>(v: Vector<T>, stage: &'static str) -> Result<Vector<T>> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericalFailure {
            stage,
            iteration: None,
        })
    }
}

fn misuse(algorithm: AlgorithmId, reason: &'static str) -> Error {
    Error::Misuse {
        algorithm: algorithm.name(),
        reason,
    }
}

fn require_xbar<T>(alg: AlgorithmId, state: &SolverState<T>) -> Result<&Vector<T>> {
    state
        .xbar
        .as_ref()
        .ok_or_else(|| misuse(alg, "state has no extrapolated point; build it for this algorithm"))
}

fn require_zero_lstar<T: Scalar>(alg: AlgorithmId, spec: &ProblemSpec<T>) -> Result<()> {
    if spec.lstar().is_zero() {
        Ok(())
    } else {
        Err(misuse(alg, "requires l* = 0"))
    }
}

fn check_dims<T: Scalar>(spec: &ProblemSpec<T>, state: &SolverState<T>) -> Result<()> {
    spec.check_primal("state z", &state.z)?;
    spec.check_dual("state s", &state.s)
}

/// `s⁺ = prox_{δh*}(s − δ∇l*(s) + δ·A·p)`.
fn dual_update<T: Scalar>(
    spec: &ProblemSpec<T>,
    delta: T,
    s: &Vector<T>,
    p: &Vector<T>,
    use_lstar: bool,
    counts: &mut OracleCounts,
) -> Result<Vector<T>> {
    let mut v = spec.operator().forward(p);
    counts.forward += 1;
    if use_lstar && !spec.lstar().is_zero() {
        let gl = spec.lstar().gradient(s);
        for ((vi, &si), &gi) in v.iter_mut().zip(s.iter()).zip(gl.iter()) {
            *vi = si - delta * gi + delta * *vi;
        }
    } else {
        for (vi, &si) in v.iter_mut().zip(s.iter()) {
            *vi = si + delta * *vi;
        }
    }
    let mut out = Vector::zeros(v.dim());
    prox_conjugate_into(spec.h(), &v, delta, &mut out);
    counts.prox_hstar += 1;
    finite(out, "dual update")
}

/// Prox, gradient and adjoint caches for the primal point produced from `z⁺` and `s⁺`.
struct Primal<T> {
    z: Vector<T>,
    x: Vector<T>,
    grad: Vector<T>,
    adjoint_s: Vector<T>,
}

fn primal_update<T: Scalar>(
    spec: &ProblemSpec<T>,
    gamma: T,
    x: &Vector<T>,
    grad: &Vector<T>,
    s_next: &Vector<T>,
    apply_g: bool,
    counts: &mut OracleCounts,
) -> Result<Primal<T>> {
    let adjoint_s = spec.operator().adjoint(s_next);
    counts.adjoint += 1;
    let z = finite(forward_point(x, grad, &adjoint_s, gamma), "primal update")?;
    let x_next = if apply_g {
        counts.prox_g += 1;
        finite(spec.g().prox(&z, gamma), "primal prox")?
    } else {
        z.clone()
    };
    let grad_next = finite(spec.f().gradient(&x_next), "gradient")?;
    counts.grad_f += 1;
    Ok(Primal {
        z,
        x: x_next,
        grad: grad_next,
        adjoint_s,
    })
}

/// `(z, s) ↦ (z⁺, s⁺)` with
/// `x = prox_{γg}(z)`,
/// `s⁺ = prox_{δh*}((I − γδAAᵀ)s − δ∇l*(s) + δA(2x − z − γ∇f(x)))`,
/// `z⁺ = x − γ∇f(x) − γAᵀs⁺`.
///
/// `x` and `∇f(x)` come from the state's caches, so each step costs one prox of `g`,
/// one prox of `h*` and one gradient.
pub fn pd3o_step<T: Scalar>(
    state: &SolverState<T>,
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
) -> Result<SolverState<T>> {
    check_dims(spec, state)?;
    let (gamma, delta) = (steps.gamma(), steps.delta());
    let mut counts = state.counts;
    // 2x − z − γ∇f(x) − γAᵀs folds (I − γδAAᵀ)s into the A-application.
    let xbar: Vector<T> = state
        .x
        .iter()
        .zip(state.z.iter())
        .zip(state.grad_f.iter().zip(state.adjoint_s.iter()))
        .map(|((&xi, &zi), (&gi, &ai))| (xi + xi) - zi - gamma * gi - gamma * ai)
        .collect();
    let s = dual_update(spec, delta, &state.s, &xbar, true, &mut counts)?;
    let p = primal_update(spec, gamma, &state.x, &state.grad_f, &s, true, &mut counts)?;
    Ok(SolverState {
        z: p.z,
        s,
        x: p.x,
        grad_f: p.grad,
        adjoint_s: p.adjoint_s,
        xbar: None,
        counts,
    })
}

/// The same iteration written on `(x, s, x̄)`:
/// `s⁺ = prox_{δh*}(s − δ∇l*(s) + δAx̄)`, `x⁺ = prox_{γg}(x − γ∇f(x) − γAᵀs⁺)`,
/// `x̄⁺ = 2x⁺ − x + γ∇f(x) − γ∇f(x⁺)`.
pub fn pd3o_step_reformulated<T: Scalar>(
    state: &SolverState<T>,
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
) -> Result<SolverState<T>> {
    extrapolated_step(AlgorithmId::Pd3oReformulated, state, spec, steps)
}

/// `f = 0`: `s⁺ = prox_{δh*}(s + δAx̄)`, `x⁺ = prox_{γg}(x − γAᵀs⁺)`, `x̄⁺ = 2x⁺ − x`.
pub fn chambolle_pock_step<T: Scalar>(
    state: &SolverState<T>,
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
) -> Result<SolverState<T>> {
    if !spec.f().is_zero() {
        return Err(misuse(AlgorithmId::ChambollePock, "requires f = 0"));
    }
    require_zero_lstar(AlgorithmId::ChambollePock, spec)?;
    extrapolated_step(AlgorithmId::ChambollePock, state, spec, steps)
}

/// Condat-Vu: as PD3O reformulated but with `x̄⁺ = 2x⁺ − x`.
pub fn condat_vu_step<T: Scalar>(
    state: &SolverState<T>,
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
) -> Result<SolverState<T>> {
    require_zero_lstar(AlgorithmId::CondatVu, spec)?;
    extrapolated_step(AlgorithmId::CondatVu, state, spec, steps)
}

/// PDFP: `x̄⁺ = prox_{γg}(x⁺ − γ∇f(x⁺) − γAᵀs⁺)`, a second prox of `g` per iteration.
pub fn pdfp_step<T: Scalar>(
    state: &SolverState<T>,
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
) -> Result<SolverState<T>> {
    require_zero_lstar(AlgorithmId::Pdfp, spec)?;
    extrapolated_step(AlgorithmId::Pdfp, state, spec, steps)
}

fn extrapolated_step<T: Scalar>(
    alg: AlgorithmId,
    state: &SolverState<T>,
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
) -> Result<SolverState<T>> {
    check_dims(spec, state)?;
    let xbar = require_xbar(alg, state)?;
    let (gamma, delta) = (steps.gamma(), steps.delta());
    let mut counts = state.counts;
    let s = dual_update(
        spec,
        delta,
        &state.s,
        xbar,
        alg == AlgorithmId::Pd3oReformulated,
        &mut counts,
    )?;
    let p = primal_update(spec, gamma, &state.x, &state.grad_f, &s, true, &mut counts)?;
    let two = T::of(2.0);
    let xbar_next: Vector<T> = match alg {
        AlgorithmId::Pd3oReformulated => p
            .x
            .iter()
            .zip(state.x.iter())
            .zip(state.grad_f.iter().zip(p.grad.iter()))
            .map(|((&xn, &xo), (&go, &gn))| two * xn - xo + gamma * go - gamma * gn)
            .collect(),
        AlgorithmId::ChambollePock | AlgorithmId::CondatVu => {
            Vector::lincomb(two, &p.x, -T::one(), &state.x)
        }
        AlgorithmId::Pdfp => {
            counts.prox_g += 1;
            spec.g()
                .prox(&forward_point(&p.x, &p.grad, &p.adjoint_s, gamma), gamma)
        }
        _ => unreachable!("not an extrapolated form"),
    };
    Ok(SolverState {
        z: p.z,
        s,
        x: p.x,
        grad_f: p.grad,
        adjoint_s: p.adjoint_s,
        xbar: Some(finite(xbar_next, "extrapolation")?),
        counts,
    })
}

/// AFBA: `s⁺ = prox_{δh*}(s + δAx̄)`, `x⁺ = x̄ − γAᵀ(s⁺ − s)`,
/// `x̄⁺ = prox_{γg}(x⁺ − γ∇f(x⁺) − γAᵀs⁺)`.
pub fn afba_step<T: Scalar>(
    state: &SolverState<T>,
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
) -> Result<SolverState<T>> {
    let alg = AlgorithmId::Afba;
    require_zero_lstar(alg, spec)?;
    check_dims(spec, state)?;
    let xbar = require_xbar(alg, state)?;
    let (gamma, delta) = (steps.gamma(), steps.delta());
    let mut counts = state.counts;
    let s = dual_update(spec, delta, &state.s, xbar, false, &mut counts)?;
    let adjoint_s = spec.operator().adjoint(&s);
    counts.adjoint += 1;
    let x: Vector<T> = xbar
        .iter()
        .zip(adjoint_s.iter().zip(state.adjoint_s.iter()))
        .map(|(&b, (&an, &ao))| b - gamma * (an - ao))
        .collect();
    let x = finite(x, "primal update")?;
    let grad = finite(spec.f().gradient(&x), "gradient")?;
    counts.grad_f += 1;
    let xbar_next = spec
        .g()
        .prox(&forward_point(&x, &grad, &adjoint_s, gamma), gamma);
    counts.prox_g += 1;
    Ok(SolverState {
        z: x.clone(),
        s,
        x,
        grad_f: grad,
        adjoint_s,
        xbar: Some(finite(xbar_next, "extrapolation")?),
        counts,
    })
}

/// `g = 0`: `s⁺ = prox_{δh*}((I − γδAAᵀ)s + δA(x − γ∇f(x)))`, `x⁺ = x − γ∇f(x) − γAᵀs⁺`.
pub fn papc_step<T: Scalar>(
    state: &SolverState<T>,
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
) -> Result<SolverState<T>> {
    let alg = AlgorithmId::Papc;
    if !spec.g().is_zero() {
        return Err(misuse(alg, "requires g = 0"));
    }
    require_zero_lstar(alg, spec)?;
    check_dims(spec, state)?;
    let (gamma, delta) = (steps.gamma(), steps.delta());
    let mut counts = state.counts;
    let p0 = forward_point(&state.x, &state.grad_f, &state.adjoint_s, gamma);
    let s = dual_update(spec, delta, &state.s, &p0, false, &mut counts)?;
    let p = primal_update(spec, gamma, &state.x, &state.grad_f, &s, false, &mut counts)?;
    Ok(SolverState {
        z: p.z,
        s,
        x: p.x,
        grad_f: p.grad,
        adjoint_s: p.adjoint_s,
        xbar: None,
        counts,
    })
}

/// `A = I`, `γδ = 1`: `z⁺ = z + prox_{γh}(2x − z − γ∇f(x)) − x` with `x = prox_{γg}(z)`.
/// The dual iterate `s⁺ = δ(u − prox_{γh}(u))`, `u = 2x − z − γ∇f(x)`, is kept for
/// diagnostics.
pub fn davis_yin_step<T: Scalar>(
    state: &SolverState<T>,
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
) -> Result<SolverState<T>> {
    let alg = AlgorithmId::DavisYin;
    if !spec.operator().is_identity() {
        return Err(misuse(alg, "requires A = I"));
    }
    if (steps.lambda() - T::one()).abs() > T::of(1e-12) {
        return Err(misuse(alg, "requires gamma * delta = 1"));
    }
    require_zero_lstar(alg, spec)?;
    check_dims(spec, state)?;
    let gamma = steps.gamma();
    let delta = steps.delta();
    let mut counts = state.counts;
    let u: Vector<T> = state
        .x
        .iter()
        .zip(state.z.iter().zip(state.grad_f.iter()))
        .map(|(&xi, (&zi, &gi))| (xi + xi) - zi - gamma * gi)
        .collect();
    let ph = finite(spec.h().prox(&u, gamma), "prox of h")?;
    counts.prox_hstar += 1;
    let z: Vector<T> = state
        .z
        .iter()
        .zip(ph.iter().zip(state.x.iter()))
        .map(|(&zi, (&pi, &xi))| zi + pi - xi)
        .collect();
    let s: Vector<T> = u
        .iter()
        .zip(ph.iter())
        .map(|(&ui, &pi)| delta * (ui - pi))
        .collect();
    let x = finite(spec.g().prox(&finite(z.clone(), "primal update")?, gamma), "primal prox")?;
    counts.prox_g += 1;
    let grad = finite(spec.f().gradient(&x), "gradient")?;
    counts.grad_f += 1;
    Ok(SolverState {
        z,
        adjoint_s: s.clone(),
        s,
        x,
        grad_f: grad,
        xbar: None,
        counts,
    })
}

/// Dispatches one step of `alg`.
pub fn step<T: Scalar>(
    alg: AlgorithmId,
    state: &SolverState<T>,
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
) -> Result<SolverState<T>> {
    match alg {
        AlgorithmId::Pd3o => pd3o_step(state, spec, steps),
        AlgorithmId::Pd3oReformulated => pd3o_step_reformulated(state, spec, steps),
        AlgorithmId::ChambollePock => chambolle_pock_step(state, spec, steps),
        AlgorithmId::Papc => papc_step(state, spec, steps),
        AlgorithmId::DavisYin => davis_yin_step(state, spec, steps),
        AlgorithmId::Pdfp => pdfp_step(state, spec, steps),
        AlgorithmId::CondatVu => condat_vu_step(state, spec, steps),
        AlgorithmId::Afba => afba_step(state, spec, steps),
    }
}

/// Relaxed PD3O update `(z, s) ← θ·T(z, s) + (1 − θ)·(z, s)`, recomputing the caches.
pub fn relax<T: Scalar>(
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
    state: &SolverState<T>,
    next: &SolverState<T>,
    theta: T,
) -> Result<SolverState<T>> {
    if next.xbar.is_some() {
        return Err(misuse(
            AlgorithmId::Pd3oReformulated,
            "relaxation is defined on the (z, s) iteration only",
        ));
    }
    let one_m = T::one() - theta;
    let z = Vector::lincomb(theta, &next.z, one_m, &state.z);
    let s = Vector::lincomb(theta, &next.s, one_m, &state.s);
    let mut counts = next.counts;
    let x = finite(spec.g().prox(&z, steps.gamma()), "primal prox")?;
    counts.prox_g += 1;
    let grad_f = finite(spec.f().gradient(&x), "gradient")?;
    counts.grad_f += 1;
    let adjoint_s = spec.operator().adjoint(&s);
    counts.adjoint += 1;
    Ok(SolverState {
        z,
        s,
        x,
        grad_f,
        adjoint_s,
        xbar: None,
        counts,
    })
}
