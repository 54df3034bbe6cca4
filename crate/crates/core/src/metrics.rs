//! The `(I, M)` geometry, fixed-point residuals, Lagrangian gaps and rate certificates.
//!
//! `M = (γ/δ)(I − γδAAᵀ)` is positive semidefinite exactly when `γδ‖AAᵀ‖ ≤ 1`; the PD3O
//! operator is averaged in the norm `‖(z, s)‖²_{I,M} = ‖z‖² + ⟨s, Ms⟩`.

use std::sync::Arc;

use crate::algorithms::{pd3o_step, AlgorithmId, OracleCounts, SolverState, StepSizes};
use crate::error::{Error, Result};
use crate::linops::LinearMap;
use crate::problem::ProblemSpec;
use crate::scalar::Scalar;
use crate::vector::Vector;

const CLAMP_BAND: f64 = 1e-10;

/// Step sizes and operator defining the `M` seminorm.
#[derive(Debug, Clone)]
pub struct MNormContext<T: Scalar> {
    gamma: T,
    delta: T,
    a: Arc<dyn LinearMap<T>>,
    semidefinite: bool,
}

impl<T: Scalar> MNormContext<T> {
    /// `norm_aat` is only used to flag the semidefinite boundary `γδ‖AAᵀ‖ = 1`.
    pub fn new(gamma: T, delta: T, a: Arc<dyn LinearMap<T>>, norm_aat: T) -> Self {
        let lam_n = (gamma * delta * norm_aat).as_f64();
        MNormContext {
            gamma,
            delta,
            a,
            semidefinite: (lam_n - 1.0).abs() <= 1e-9,
        }
    }

    pub fn from_spec(spec: &ProblemSpec<T>, steps: &StepSizes<T>, norm_aat: T) -> Self {
        Self::new(steps.gamma(), steps.delta(), spec.operator_arc(), norm_aat)
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// Whether `M` sits on the positive-semidefinite boundary.
    pub fn is_semidefinite(&self) -> bool {
        self.semidefinite
    }

    /// `⟨s, Ms⟩` from precomputed `‖s‖²` and `‖Aᵀs‖²`.
    pub fn m_norm_sq_from_parts(&self, s_sq: T, adjoint_sq: T) -> Result<T> {
        let inner = s_sq - self.gamma * self.delta * adjoint_sq;
        if inner >= T::zero() {
            return Ok(self.gamma / self.delta * inner);
        }
        if inner >= -T::of(CLAMP_BAND) * s_sq {
            return Ok(T::zero());
        }
        Err(Error::GeometryViolation {
            value: inner.as_f64(),
            norm_sq: s_sq.as_f64(),
        })
    }
}

/// `⟨s, Ms⟩ = (γ/δ)(‖s‖² − γδ‖Aᵀs‖²)`, with values in `[−1e-10·‖s‖², 0)` clamped to zero.
pub fn m_norm_sq<T: Scalar>(ctx: &MNormContext<T>, s: &Vector<T>) -> Result<T> {
    if s.dim() != ctx.a.out_dim() {
        return Err(Error::DimensionMismatch {
            context: "m_norm_sq",
            expected: ctx.a.out_dim(),
            found: s.dim(),
        });
    }
    let ats = ctx.a.adjoint(s);
    ctx.m_norm_sq_from_parts(s.norm_sq(), ats.norm_sq())
}

/// `‖z‖² + ‖s‖²_M`.
pub fn combined_norm_sq<T: Scalar>(ctx: &MNormContext<T>, z: &Vector<T>, s: &Vector<T>) -> Result<T> {
    if z.dim() != ctx.a.in_dim() {
        return Err(Error::DimensionMismatch {
            context: "combined_norm_sq",
            expected: ctx.a.in_dim(),
            found: z.dim(),
        });
    }
    Ok(z.norm_sq() + m_norm_sq(ctx, s)?)
}

/// `‖(z⁺, s⁺) − (z, s)‖_{I,M}` for one unrelaxed step.
pub fn fixed_point_residual<T: Scalar>(
    ctx: &MNormContext<T>,
    state: &SolverState<T>,
    next: &SolverState<T>,
) -> Result<T> {
    Ok(combined_norm_sq(ctx, &next.z().sub(state.z()), &next.s().sub(state.s()))?.sqrt())
}

/// `‖(x⁺, s⁺) − (x, s)‖_{I,M}`, the residual used for methods iterating on `(x, s, x̄)`.
pub fn primal_dual_residual<T: Scalar>(
    ctx: &MNormContext<T>,
    state: &SolverState<T>,
    next: &SolverState<T>,
) -> Result<T> {
    Ok(combined_norm_sq(ctx, &next.x().sub(state.x()), &next.s().sub(state.s()))?.sqrt())
}

/// Residual appropriate to `alg` (see [`AlgorithmId::residual_on_z`]).
pub fn residual_for<T: Scalar>(
    alg: AlgorithmId,
    ctx: &MNormContext<T>,
    state: &SolverState<T>,
    next: &SolverState<T>,
) -> Result<T> {
    if alg.residual_on_z() {
        fixed_point_residual(ctx, state, next)
    } else {
        primal_dual_residual(ctx, state, next)
    }
}

/// `L(x, s) = f(x) + g(x) + ⟨Ax, s⟩ − h*(s) − l*(s)`.
pub fn lagrangian<T: Scalar>(spec: &ProblemSpec<T>, x: &Vector<T>, s: &Vector<T>) -> Result<T> {
    spec.check_primal("lagrangian x", x)?;
    spec.check_dual("lagrangian s", s)?;
    let hstar = spec
        .h()
        .conjugate_value(s)
        .ok_or(Error::UnsupportedMetric("a conjugate value for h"))?;
    let lstar = spec
        .lstar()
        .value(s)
        .ok_or(Error::UnsupportedMetric("a value oracle for l*"))?;
    let ax = spec.operator().forward(x);
    Ok(spec.f().value(x) + spec.g().value(x) + ax.dot(s) - hstar - lstar)
}

/// The primal point paired with a probe `(x, s)`: `z = x − γ∇f(x) − γAᵀs`.
pub fn probe_z<T: Scalar>(spec: &ProblemSpec<T>, gamma: T, x: &Vector<T>, s: &Vector<T>) -> Vector<T> {
    let g = spec.f().gradient(x);
    let ats = spec.operator().adjoint(s);
    x.iter()
        .zip(g.iter().zip(ats.iter()))
        .map(|(&xi, (&gi, &ai))| xi - gamma * gi - gamma * ai)
        .collect()
}

/// Running means `x̄ᵏ = (1/(k+1))Σ_{i≤k} xⁱ` and `s̄ᵏ⁺¹ = (1/(k+1))Σ_{i≤k} sⁱ⁺¹`.
#[derive(Debug, Clone)]
pub struct ErgodicAverager<T> {
    x: Vector<T>,
    s: Vector<T>,
    count: usize,
}

impl<T: Scalar> ErgodicAverager<T> {
    pub fn new(primal_dim: usize, dual_dim: usize) -> Self {
        ErgodicAverager {
            x: Vector::zeros(primal_dim),
            s: Vector::zeros(dual_dim),
            count: 0,
        }
    }

    /// Adds `xᵏ` and `sᵏ⁺¹`.
    pub fn push(&mut self, x: &Vector<T>, s_next: &Vector<T>) {
        self.count += 1;
        let w = T::one() / T::of(self.count as f64);
        for (m, &v) in self.x.iter_mut().zip(x.iter()) {
            *m += w * (v - *m);
        }
        for (m, &v) in self.s.iter_mut().zip(s_next.iter()) {
            *m += w * (v - *m);
        }
    }

    pub fn x_mean(&self) -> &Vector<T> {
        &self.x
    }

    pub fn s_mean(&self) -> &Vector<T> {
        &self.s
    }

    /// Number of averaged iterations, `k + 1`.
    pub fn count(&self) -> usize {
        self.count
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `L(x̄ᵏ, s) − L(x, s̄ᵏ⁺¹) ≤ (1/(2(k+1)γ))‖(z, s) − (z⁰, s⁰)‖²_{I,M}` at the probe `(x, s)`,
/// with `z = x − γ∇f(x) − γAᵀs`. Holds when `γ ≤ β`.
#[allow(clippy::too_many_arguments)]
pub fn ergodic_gap_bound_check<T: Scalar>(
    spec: &ProblemSpec<T>,
    ctx: &MNormContext<T>,
    averages: &ErgodicAverager<T>,
    probe_x: &Vector<T>,
    probe_s: &Vector<T>,
    z0: &Vector<T>,
    s0: &Vector<T>,
) -> Result<BoundCheck> {
    let gamma = ctx.gamma();
    let beta = spec.f().beta();
    if gamma > beta {
        return Err(Error::HypothesisViolation(format!(
            "ergodic gap bound needs gamma <= beta (gamma = {gamma}, beta = {beta})"
        )));
    }
    if averages.count() == 0 {
        return Err(Error::InvalidParameter {
            name: "averages",
            value: 0.0,
            reason: "no iterations accumulated",
        });
    }
    let lhs = lagrangian(spec, averages.x_mean(), probe_s)? - lagrangian(spec, probe_x, averages.s_mean())?;
    let z = probe_z(spec, gamma, probe_x, probe_s);
    let dist = combined_norm_sq(ctx, &z.sub(z0), &probe_s.sub(s0))?;
    let rhs = dist / (T::of(2.0) * T::of(averages.count() as f64) * gamma);
    let (lhs, rhs) = (lhs.as_f64(), rhs.as_f64());
    Ok(BoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}

/// `α = 2β/(4β − γ)`, the averagedness constant of the PD3O operator.
pub fn averagedness_alpha<T: Scalar>(gamma: T, beta: T) -> Result<T> {
    if !(gamma > T::zero() && gamma < T::of(2.0) * beta) {
        return Err(Error::OutOfRange {
            what: "gamma",
            detail: format!("need 0 < gamma < 2 beta (gamma = {gamma}, beta = {beta})"),
        });
    }
    if beta.is_infinite() {
        return Ok(T::of(0.5));
    }
    Ok(T::of(2.0) * beta / (T::of(4.0) * beta - gamma))
}

type Pair<T> = (Vector<T>, Vector<T>);

fn one_step<T: Scalar>(spec: &ProblemSpec<T>, steps: &StepSizes<T>, z: &Vector<T>, s: &Vector<T>) -> Result<Pair<T>> {
    let st = SolverState::new(spec, AlgorithmId::Pd3o, steps, z.clone(), s.clone())?;
    let nx = pd3o_step(&st, spec, steps)?;
    Ok((nx.z().clone(), nx.s().clone()))
}

fn pair_slack<T: Scalar>(
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
    ctx: &MNormContext<T>,
    a: &Pair<T>,
    b: &Pair<T>,
    coefficient: T,
) -> Result<T> {
    let (za, sa) = a;
    let (zb, sb) = b;
    let (za1, sa1) = one_step(spec, steps, za, sa)?;
    let (zb1, sb1) = one_step(spec, steps, zb, sb)?;
    let out = combined_norm_sq(ctx, &za1.sub(&zb1), &sa1.sub(&sb1))?;
    let inn = combined_norm_sq(ctx, &za.sub(zb), &sa.sub(sb))?;
    let dz = za1.sub(za).sub(&zb1.sub(zb));
    let ds = sa1.sub(sa).sub(&sb1.sub(sb));
    let disp = combined_norm_sq(ctx, &dz, &ds)?;
    Ok(out - inn + coefficient * disp)
}

/// Worst value over `pairs` of
/// `‖T u₁ − T u₂‖² − ‖u₁ − u₂‖² + ((2β − γ)/(2β))·‖(T − I)u₁ − (T − I)u₂‖²`
/// in the `(I, M)` norm, where `T` is one PD3O step. Nonpositive certifies averagedness.
pub fn averagedness_inequality_check<T: Scalar>(
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
    ctx: &MNormContext<T>,
    pairs: &[(Pair<T>, Pair<T>)],
) -> Result<T> {
    let beta = spec.f().beta();
    let gamma = steps.gamma();
    averagedness_alpha(gamma, beta)?;
    let coefficient = if beta.is_infinite() {
        T::one()
    } else {
        (T::of(2.0) * beta - gamma) / (T::of(2.0) * beta)
    };
    worst_slack(spec, steps, ctx, pairs, coefficient)
}

/// With `f = 0` and `l* = 0` the step is firmly nonexpansive:
/// `‖T u₁ − T u₂‖² ≤ ‖u₁ − u₂‖² − ‖(T − I)u₁ − (T − I)u₂‖²`. Returns the worst slack.
pub fn firm_nonexpansiveness_check<T: Scalar>(
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
    ctx: &MNormContext<T>,
    pairs: &[(Pair<T>, Pair<T>)],
) -> Result<T> {
    if !spec.f().is_zero() || !spec.lstar().is_zero() {
        return Err(Error::UnsupportedMetric("f = 0 and l* = 0"));
    }
    worst_slack(spec, steps, ctx, pairs, T::one())
}

fn worst_slack<T: Scalar>(
    spec: &ProblemSpec<T>,
    steps: &StepSizes<T>,
    ctx: &MNormContext<T>,
    pairs: &[(Pair<T>, Pair<T>)],
    coefficient: T,
) -> Result<T> {
    let mut worst = T::neg_infinity();
    for (a, b) in pairs {
        worst = worst.max(pair_slack(spec, steps, ctx, a, b, coefficient)?);
    }
    Ok(worst)
}

/// `(2β/(2β − γ))·d₀²/(k + 1)`, the bound on the squared residual after `k` iterations.
pub fn sublinear_rate_bound<T: Scalar>(k: usize, init_dist_sq: T, beta: T, gamma: T) -> Result<T> {
    if !(gamma > T::zero() && gamma < T::of(2.0) * beta) {
        return Err(Error::OutOfRange {
            what: "gamma",
            detail: format!("need 0 < gamma < 2 beta (gamma = {gamma}, beta = {beta})"),
        });
    }
    let factor = if beta.is_infinite() {
        T::one()
    } else {
        T::of(2.0) * beta / (T::of(2.0) * beta - gamma)
    };
    Ok(factor * init_dist_sq / T::of(k as f64 + 1.0))
}

/// Strong-monotonicity moduli and the Lipschitz constant of `∇g`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moduli {
    pub tau_f: f64,
    pub tau_g: f64,
    pub tau_hstar: f64,
    pub tau_lstar: f64,
    pub lipschitz_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoReport {
    pub rho: f64,
    /// Whether the hypotheses for `ρ < 1` hold.
    pub contracts: bool,
}

/// `ρ = max((1 − (2γ − γ²/β)τ_{l*})/(1 + 2γτ_{h*}), 1 − ((2γ − γ²/β)τ_f + 2γτ_g)/(1 + γL_g))`.
pub fn linear_rate_rho(gamma: f64, beta: f64, m: &Moduli) -> Result<RhoReport> {
    if !(gamma > 0.0 && gamma < 2.0 * beta) {
        return Err(Error::OutOfRange {
            what: "gamma",
            detail: format!("need 0 < gamma < 2 beta (gamma = {gamma}, beta = {beta})"),
        });
    }
    for (name, v) in [
        ("tau_f", m.tau_f),
        ("tau_g", m.tau_g),
        ("tau_hstar", m.tau_hstar),
        ("tau_lstar", m.tau_lstar),
        ("lipschitz_g", m.lipschitz_g),
    ] {
        if !(v >= 0.0) {
            return Err(Error::InvalidParameter {
                name,
                value: v,
                reason: "must be nonnegative",
            });
        }
    }
    let c = 2.0 * gamma - gamma * gamma / beta;
    let first = (1.0 - c * m.tau_lstar) / (1.0 + 2.0 * gamma * m.tau_hstar);
    let second = 1.0 - (c * m.tau_f + 2.0 * gamma * m.tau_g) / (1.0 + gamma * m.lipschitz_g);
    Ok(RhoReport {
        rho: first.max(second),
        contracts: m.tau_hstar + m.tau_lstar > 0.0 && m.tau_f + m.tau_g > 0.0,
    })
}

/// `‖z − z*‖² + (1 + 2γτ_{h*})‖s − s*‖²_M`, the quantity contracted by `ρ`.
pub fn linear_rate_lyapunov<T: Scalar>(
    ctx: &MNormContext<T>,
    tau_hstar: T,
    z: &Vector<T>,
    s: &Vector<T>,
    z_star: &Vector<T>,
    s_star: &Vector<T>,
) -> Result<T> {
    let w = T::one() + T::of(2.0) * ctx.gamma() * tau_hstar;
    Ok(z.dist_sq(z_star) + w * m_norm_sq(ctx, &s.sub(s_star))?)
}

/// One logged row of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordRow {
    pub iter: usize,
    pub objective: f64,
    pub residual_im: f64,
    pub dist_to_ref: Option<f64>,
    pub gap: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordMeta {
    pub algorithm: AlgorithmId,
    pub gamma: f64,
    pub delta: f64,
    pub theta: f64,
    pub beta: f64,
    pub norm_aat: f64,
    pub forced: bool,
    pub iterations: usize,
    pub converged: bool,
    pub counts: OracleCounts,
}

/// Per-iteration diagnostics of one run.
///
/// `rows` holds the thinned log; `residuals[k]` is the residual of iteration `k` for
/// every `k`, logged or not.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub rows: Vec<RecordRow>,
    pub residuals: Vec<f64>,
    pub meta: RecordMeta,
}

impl ConvergenceRecord {
    pub fn final_row(&self) -> Option<&RecordRow> {
        self.rows.last()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{DifferenceOp, IdentityOp, ZeroMap};

    #[test]
    fn m_norm_examples() {
        let ctx = MNormContext::<f64>::new(0.5, 0.5, Arc::new(ZeroMap::new(2, 3)), 0.0);
        let s = Vector::from(vec![1.0, 2.0, 2.0]);
        assert_eq!(m_norm_sq(&ctx, &s).unwrap(), 9.0);

        let ctx = MNormContext::<f64>::new(2.0, 0.5, Arc::new(IdentityOp::new(2)), 1.0);
        assert!(ctx.is_semidefinite());
        assert_eq!(m_norm_sq(&ctx, &Vector::from(vec![3.0, -1.0])).unwrap(), 0.0);

        let ctx = MNormContext::<f64>::new(0.5, 0.5, Arc::new(DifferenceOp::new(3).unwrap()), 4.0);
        let v = m_norm_sq(&ctx, &Vector::from(vec![1.0, -1.0])).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn geometry_violation() {
        let ctx = MNormContext::<f64>::new(1.0, 2.0, Arc::new(IdentityOp::new(1)), 1.0);
        assert!(matches!(
            m_norm_sq(&ctx, &Vector::from(vec![1.0])),
            Err(Error::GeometryViolation { .. })
        ));
    }

    #[test]
    fn scalar_certificates() {
        assert!((averagedness_alpha(1.0f64, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((averagedness_alpha(1e-9f64, 1.0).unwrap() - 0.5).abs() < 1e-9);
        assert!(averagedness_alpha(2.0, 1.0).is_err());
        assert_eq!(sublinear_rate_bound(0, 1.0, 1.0, 1.0).unwrap(), 2.0);
        let b1 = sublinear_rate_bound(1, 1.0, 1.0, 1.0).unwrap();
        let b3 = sublinear_rate_bound(3, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(b1, 2.0 * b3);
        let r = linear_rate_rho(1.0, 1.0, &Moduli::default()).unwrap();
        assert_eq!(r.rho, 1.0);
        assert!(!r.contracts);
        let m = Moduli {
            tau_f: 0.5,
            tau_hstar: 0.25,
            ..Moduli::default()
        };
        let r = linear_rate_rho(1.0, 1.0, &m).unwrap();
        assert!((r.rho - (1.0f64 / 1.5).max(0.5)).abs() < 1e-15);
        assert!(r.contracts);
    }
}
