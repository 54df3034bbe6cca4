use std::ops::AddAssign;

use crate::algorithms::{AlgorithmId, StepSizes};
use crate::error::Result;
use crate::problem::ProblemSpec;
use crate::scalar::Scalar;
use crate::vector::Vector;

/// Cumulative oracle calls made while producing a state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OracleCounts {
    pub prox_g: u64,
    pub prox_hstar: u64,
    pub grad_f: u64,
    pub forward: u64,
    pub adjoint: u64,
}

impl AddAssign for OracleCounts {
    fn add_assign(&mut self, o: Self) {
        self.prox_g += o.prox_g;
        self.prox_hstar += o.prox_hstar;
        self.grad_f += o.grad_f;
        self.forward += o.forward;
        self.adjoint += o.adjoint;
    }
}

/// Iterate carried between splitting steps.
///
/// Always internally consistent: `x = prox_{γg}(z)` (except for AFBA, whose `x` is not a
/// prox output and which stores `z = x`), `grad_f = ∇f(x)` and `adjoint_s = Aᵀs`.
/// States are produced only by [`SolverState::new`] and the step functions, so these
/// caches can never go stale.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T> {
    pub(crate) z: Vector<T>,
    pub(crate) s: Vector<T>,
    pub(crate) x: Vector<T>,
    pub(crate) grad_f: Vector<T>,
    pub(crate) adjoint_s: Vector<T>,
    pub(crate) xbar: Option<Vector<T>>,
    pub(crate) counts: OracleCounts,
}

impl<T: Scalar> SolverState<T> {
    /// Builds the starting state of `alg` from `(z⁰, s⁰)`.
    ///
    /// `x⁰ = prox_{γg}(z⁰)`. Forms that carry `x̄` start from
    /// `x̄⁰ = 2x⁰ − z⁰ − γ∇f(x⁰) − γAᵀs⁰` (PD3O reformulated, Chambolle-Pock, Condat-Vu)
    /// or `x̄⁰ = prox_{γg}(x⁰ − γ∇f(x⁰) − γAᵀs⁰)` (PDFP, AFBA), which makes every
    /// reduction reproduce its parent trajectory exactly.
    pub fn new(
        spec: &ProblemSpec<T>,
        alg: AlgorithmId,
        steps: &StepSizes<T>,
        z0: Vector<T>,
        s0: Vector<T>,
    ) -> Result<Self> {
        spec.check_primal("initial z", &z0)?;
        spec.check_dual("initial s", &s0)?;
        let gamma = steps.gamma();
        let mut counts = OracleCounts::default();
        let x = spec.g().prox(&z0, gamma);
        counts.prox_g += 1;
        let grad_f = spec.f().gradient(&x);
        counts.grad_f += 1;
        let adjoint_s = spec.operator().adjoint(&s0);
        counts.adjoint += 1;

        let xbar = match alg {
            AlgorithmId::Pd3o | AlgorithmId::Papc | AlgorithmId::DavisYin => None,
            AlgorithmId::Pd3oReformulated | AlgorithmId::ChambollePock | AlgorithmId::CondatVu => {
                Some(
                    x.iter()
                        .zip(z0.iter())
                        .zip(grad_f.iter().zip(adjoint_s.iter()))
                        .map(|((&xi, &zi), (&gi, &ai))| {
                            (xi + xi) - zi - gamma * gi - gamma * ai
                        })
                        .collect(),
                )
            }
            AlgorithmId::Pdfp | AlgorithmId::Afba => {
                let arg = forward_point(&x, &grad_f, &adjoint_s, gamma);
                counts.prox_g += 1;
                Some(spec.g().prox(&arg, gamma))
            }
        };
        let z = if alg == AlgorithmId::Afba { x.clone() } else { z0 };
        Ok(SolverState {
            z,
            s: s0,
            x,
            grad_f,
            adjoint_s,
            xbar,
            counts,
        })
    }

    /// The zero start `z⁰ = 0`, `s⁰ = 0`.
    pub fn zeros(spec: &ProblemSpec<T>, alg: AlgorithmId, steps: &StepSizes<T>) -> Result<Self> {
        Self::new(
            spec,
            alg,
            steps,
            Vector::zeros(spec.primal_dim()),
            Vector::zeros(spec.dual_dim()),
        )
    }

    pub fn z(&self) -> &Vector<T> {
        &self.z
    }

    pub fn s(&self) -> &Vector<T> {
        &self.s
    }

    pub fn x(&self) -> &Vector<T> {
        &self.x
    }

    /// `∇f(x)` for the current `x`.
    pub fn grad_f(&self) -> &Vector<T> {
        &self.grad_f
    }

    /// `Aᵀs` for the current `s`.
    pub fn adjoint_s(&self) -> &Vector<T> {
        &self.adjoint_s
    }

    pub fn xbar(&self) -> Option<&Vector<T>> {
        self.xbar.as_ref()
    }

    pub fn counts(&self) -> OracleCounts {
        self.counts
    }

    pub fn is_finite(&self) -> bool {
        self.z.is_finite()
            && self.s.is_finite()
            && self.x.is_finite()
            && self.xbar.as_ref().is_none_or(|v| v.is_finite())
    }
}

/// `x − γ∇f(x) − γAᵀs`.
pub(crate) fn forward_point<T: Scalar>(
    x: &Vector<T>,
    grad: &Vector<T>,
    adjoint_s: &Vector<T>,
    gamma: T,
) -> Vector<T> {
    x.iter()
        .zip(grad.iter().zip(adjoint_s.iter()))
        .map(|(&xi, (&gi, &ai))| xi - gamma * gi - gamma * ai)
        .collect()
}
