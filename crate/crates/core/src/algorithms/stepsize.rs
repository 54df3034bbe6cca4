use std::fmt;

use crate::algorithms::AlgorithmId;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Primal step `γ`, dual step `δ` and relaxation `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes<T> {
    gamma: T,
    delta: T,
    theta: T,
}

impl<T: Scalar> StepSizes<T> {
    pub fn new(gamma: T, delta: T) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("delta", delta)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v.as_f64(),
                    reason: "must be positive and finite",
                });
            }
        }
        Ok(StepSizes {
            gamma,
            delta,
            theta: T::one(),
        })
    }

    /// `γ = gamma_factor·β` and `δ = λ/γ`.
    pub fn from_factors(gamma_factor: T, lambda: T, beta: T) -> Result<Self> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda.as_f64(),
                reason: "must be positive and finite",
            });
        }
        let gamma = gamma_factor * beta;
        Self::new(gamma, lambda / gamma)
    }

    /// Constant relaxation parameter; only PD3O accepts `θ ≠ 1`.
    pub fn with_theta(mut self, theta: T) -> Result<Self> {
        if !(theta > T::zero() && theta < T::of(2.0)) {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: theta.as_f64(),
                reason: "must lie in (0, 2)",
            });
        }
        self.theta = theta;
        Ok(self)
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    /// `λ = γδ`.
    pub fn lambda(&self) -> T {
        self.gamma * self.delta
    }
}

/// One inequality `lhs < rhs` (strict) or `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub label: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
}

impl Condition {
    pub fn holds(&self) -> bool {
        if self.strict {
            self.lhs < self.rhs
        } else {
            self.lhs <= self.rhs
        }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.strict { "<" } else { "<=" };
        write!(f, "{}: {:.6} {} {:.6}", self.label, self.lhs, op, self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSizeVerdict {
    pub algorithm: AlgorithmId,
    pub conditions: Vec<Condition>,
}

impl StepSizeVerdict {
    pub fn is_valid(&self) -> bool {
        self.conditions.iter().all(Condition::holds)
    }

    /// First violated condition, if any.
    pub fn violated(&self) -> Option<&Condition> {
        self.conditions.iter().find(|c| !c.holds())
    }

    /// The condition with the smallest margin.
    pub fn binding(&self) -> &Condition {
        self.conditions
            .iter()
            .min_by(|a, b| a.margin().total_cmp(&b.margin()))
            .expect("every algorithm has at least one condition")
    }

    pub fn into_result(self) -> Result<Self> {
        match self.violated() {
            None => Ok(self),
            Some(c) => Err(Error::StepSizeRejected {
                algorithm: self.algorithm.name(),
                condition: c.to_string(),
            }),
        }
    }
}

/// Admissibility of `(γ, δ)` given the cocoercivity constant `β` of `∇f` and `‖AAᵀ‖`.
///
/// | algorithm | conditions |
/// |---|---|
/// | PD3O, PDFP | `γδ‖AAᵀ‖ < 1`, `γ/(2β) < 1` |
/// | Condat-Vu | `γδ‖AAᵀ‖ + γ/(2β) ≤ 1` |
/// | AFBA | `γδ‖AAᵀ‖/2 + √(γδ‖AAᵀ‖/2)/2 + γ/(2β) ≤ 1` |
/// | Chambolle-Pock | `γδ‖AAᵀ‖ ≤ 1` |
/// | PAPC | `γδ‖AAᵀ‖ < 1`, `γ < 2β` |
/// | Davis-Yin | `γ < 2β`, `γδ = 1` |
///
/// A relaxation `θ ≠ 1` adds `θ < 2 − γ/(2β)`.
pub fn validate_stepsizes<T: Scalar>(
    alg: AlgorithmId,
    steps: &StepSizes<T>,
    beta: T,
    norm_aat: T,
) -> StepSizeVerdict {
    let gamma = steps.gamma().as_f64();
    let beta = beta.as_f64();
    let lam_n = steps.lambda().as_f64() * norm_aat.as_f64();
    let fwd = if beta.is_infinite() {
        0.0
    } else {
        gamma / (2.0 * beta)
    };

    let operator_strict = Condition {
        label: "γδ‖AAᵀ‖ < 1",
        lhs: lam_n,
        rhs: 1.0,
        strict: true,
    };
    let forward_strict = Condition {
        label: "γ/(2β) < 1",
        lhs: fwd,
        rhs: 1.0,
        strict: true,
    };

    let mut conditions = match alg {
        AlgorithmId::Pd3o
        | AlgorithmId::Pd3oReformulated
        | AlgorithmId::Pdfp
        | AlgorithmId::Papc => vec![operator_strict, forward_strict],
        AlgorithmId::CondatVu => vec![Condition {
            label: "γδ‖AAᵀ‖ + γ/(2β) ≤ 1",
            lhs: lam_n + fwd,
            rhs: 1.0,
            strict: false,
        }],
        AlgorithmId::Afba => vec![Condition {
            label: "γδ‖AAᵀ‖/2 + √(γδ‖AAᵀ‖/2)/2 + γ/(2β) ≤ 1",
            lhs: lam_n / 2.0 + (lam_n / 2.0).sqrt() / 2.0 + fwd,
            rhs: 1.0,
            strict: false,
        }],
        AlgorithmId::ChambollePock => vec![Condition {
            label: "γδ‖AAᵀ‖ ≤ 1",
            lhs: lam_n,
            rhs: 1.0,
            strict: false,
        }],
        AlgorithmId::DavisYin => vec![
            forward_strict,
            Condition {
                label: "|γδ − 1| ≤ 1e-12",
                lhs: (steps.lambda().as_f64() - 1.0).abs(),
                rhs: 1e-12,
                strict: false,
            },
        ],
    };

    if steps.theta() != T::one() {
        conditions.push(Condition {
            label: "θ < 2 − γ/(2β)",
            lhs: steps.theta().as_f64(),
            rhs: 2.0 - fwd,
            strict: true,
        });
    }
    StepSizeVerdict {
        algorithm: alg,
        conditions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diff_norm(p: usize) -> f64 {
        2.0 - 2.0 * ((p as f64 - 1.0) / p as f64 * std::f64::consts::PI).cos()
    }

    #[test]
    fn sweep_admissibility() {
        let beta = 0.37;
        let n = diff_norm(500);
        for (factor, expect) in [(1.0, [true, true, true, true]), (1.5, [true, true, false, false]), (1.99, [true, true, false, false])] {
            let steps = StepSizes::from_factors(factor, 0.125, beta).unwrap();
            let got: Vec<bool> = AlgorithmId::THREE_TERM
                .iter()
                .map(|&a| validate_stepsizes(a, &steps, beta, n).is_valid())
                .collect();
            assert_eq!(got, expect, "gamma = {factor} beta");
        }
    }

    #[test]
    fn all_rejected_past_unit_operator_term() {
        let n = 4.0;
        let steps = StepSizes::from_factors(1.0, 1.01 / n, 1.0).unwrap();
        for a in AlgorithmId::THREE_TERM {
            assert!(!validate_stepsizes(a, &steps, 1.0, n).is_valid());
        }
    }

    #[test]
    fn chambolle_pock_boundary_is_admissible() {
        let steps = StepSizes::new(0.5, 0.5).unwrap();
        let v = validate_stepsizes(AlgorithmId::ChambollePock, &steps, f64::INFINITY, 4.0);
        assert!(v.is_valid());
        let v = validate_stepsizes(AlgorithmId::Pd3o, &steps, f64::INFINITY, 4.0);
        assert!(!v.is_valid());
    }

    #[test]
    fn relaxation_bound() {
        let steps = StepSizes::new(1.0, 0.1).unwrap().with_theta(1.4).unwrap();
        assert!(validate_stepsizes(AlgorithmId::Pd3o, &steps, 1.0, 1.0).is_valid());
        let steps = StepSizes::new(1.0, 0.1).unwrap().with_theta(1.6).unwrap();
        assert!(!validate_stepsizes(AlgorithmId::Pd3o, &steps, 1.0, 1.0).is_valid());
        assert!(StepSizes::new(1.0, 0.1).unwrap().with_theta(2.0).is_err());
    }
}
