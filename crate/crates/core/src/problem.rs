//! Oracle contracts and the problem bundle
//! `minimize f(x) + g(x) + (h □ l)(Ax)`.

use std::fmt::Debug;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linops::{IdentityOp, LinearMap};
use crate::prox::ZeroProx;
use crate::scalar::Scalar;
use crate::vector::Vector;

/// Convex differentiable term with a `β`-cocoercive gradient.
pub trait SmoothTerm<T: Scalar>: Debug + Send + Sync {
    /// Required input dimension, or `None` if the term accepts any.
    fn dim(&self) -> Option<usize> {
        None
    }

    fn value(&self, x: &[T]) -> T;

    fn gradient_into(&self, x: &[T], out: &mut [T]);

    fn gradient(&self, x: &Vector<T>) -> Vector<T> {
        let mut out = Vector::zeros(x.dim());
        self.gradient_into(x, &mut out);
        out
    }

    /// Declared cocoercivity constant; `+∞` when the gradient is constant.
    fn beta(&self) -> T;

    /// True when the term is identically zero.
    fn is_zero(&self) -> bool {
        false
    }
}

/// Proper closed convex term accessed through its proximal mapping.
pub trait ProxTerm<T: Scalar>: Debug + Send + Sync {
    fn dim(&self) -> Option<usize> {
        None
    }

    /// Extended-real value; indicators return exactly `0` or `+∞`.
    fn value(&self, x: &[T]) -> T;

    /// `out = argmin_x t·g(x) + ½‖x − v‖²`.
    fn prox_into(&self, v: &[T], t: T, out: &mut [T]);

    fn prox(&self, v: &Vector<T>, t: T) -> Vector<T> {
        let mut out = Vector::zeros(v.dim());
        self.prox_into(v, t, &mut out);
        out
    }

    /// Value of the convex conjugate, when known in closed form.
    fn conjugate_value(&self, _u: &[T]) -> Option<T> {
        None
    }

    fn is_zero(&self) -> bool {
        false
    }
}

/// Gradient oracle of `l*`, the conjugate of the smooth part inside the infimal convolution.
pub trait ConjugateSmoothTerm<T: Scalar>: Debug + Send + Sync {
    fn gradient_into(&self, s: &[T], out: &mut [T]);

    fn gradient(&self, s: &Vector<T>) -> Vector<T> {
        let mut out = Vector::zeros(s.dim());
        self.gradient_into(s, &mut out);
        out
    }

    fn value(&self, s: &[T]) -> Option<T>;

    /// Cocoercivity constant of `∇l*`.
    fn beta(&self) -> T;

    /// Set when `l = ι_{0}`, i.e. `l* = 0`.
    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ZeroSmooth;

impl<T: Scalar> SmoothTerm<T> for ZeroSmooth {
    fn value(&self, _x: &[T]) -> T {
        T::zero()
    }

    fn gradient_into(&self, _x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
    }

    fn beta(&self) -> T {
        T::infinity()
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `½‖x − c‖²`, with `β = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredDistance<T> {
    center: Vector<T>,
}

impl<T: Scalar> SquaredDistance<T> {
    pub fn new(center: Vector<T>) -> Self {
        SquaredDistance { center }
    }

    pub fn center(&self) -> &Vector<T> {
        &self.center
    }
}

impl<T: Scalar> SmoothTerm<T> for SquaredDistance<T> {
    fn dim(&self) -> Option<usize> {
        Some(self.center.dim())
    }

    fn value(&self, x: &[T]) -> T {
        let half = T::of(0.5);
        x.iter()
            .zip(self.center.iter())
            .map(|(&a, &c)| (a - c) * (a - c))
            .sum::<T>()
            * half
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        for ((o, &a), &c) in out.iter_mut().zip(x).zip(self.center.iter()) {
            *o = a - c;
        }
    }

    fn beta(&self) -> T {
        T::one()
    }
}

/// Affine term `⟨c, x⟩`; its gradient is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTerm<T> {
    c: Vector<T>,
}

impl<T: Scalar> LinearTerm<T> {
    pub fn new(c: Vector<T>) -> Self {
        LinearTerm { c }
    }
}

impl<T: Scalar> SmoothTerm<T> for LinearTerm<T> {
    fn dim(&self) -> Option<usize> {
        Some(self.c.dim())
    }

    fn value(&self, x: &[T]) -> T {
        crate::vector::dot(x, &self.c)
    }

    fn gradient_into(&self, _x: &[T], out: &mut [T]) {
        out.copy_from_slice(&self.c);
    }

    fn beta(&self) -> T {
        T::infinity()
    }
}

/// `½‖Ax − b‖² + ridge·‖x‖²` with a caller-declared `β`.
#[derive(Debug, Clone)]
pub struct LeastSquares<T: Scalar> {
    a: Arc<dyn LinearMap<T>>,
    b: Vector<T>,
    ridge: T,
    beta: T,
}

impl<T: Scalar> LeastSquares<T> {
    pub fn new(a: Arc<dyn LinearMap<T>>, b: Vector<T>, ridge: T, beta: T) -> Result<Self> {
        if b.dim() != a.out_dim() {
            return Err(Error::DimensionMismatch {
                context: "LeastSquares b",
                expected: a.out_dim(),
                found: b.dim(),
            });
        }
        if !(ridge >= T::zero()) {
            return Err(Error::InvalidParameter {
                name: "ridge",
                value: ridge.as_f64(),
                reason: "must be nonnegative",
            });
        }
        if !(beta > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta.as_f64(),
                reason: "must be positive",
            });
        }
        Ok(LeastSquares { a, b, ridge, beta })
    }

    pub fn operator(&self) -> &Arc<dyn LinearMap<T>> {
        &self.a
    }

    pub fn rhs(&self) -> &Vector<T> {
        &self.b
    }

    pub fn ridge(&self) -> T {
        self.ridge
    }
}

impl<T: Scalar> SmoothTerm<T> for LeastSquares<T> {
    fn dim(&self) -> Option<usize> {
        Some(self.a.in_dim())
    }

    fn value(&self, x: &[T]) -> T {
        let mut r = vec![T::zero(); self.a.out_dim()];
        self.a.forward_into(x, &mut r);
        let misfit: T = r
            .iter()
            .zip(self.b.iter())
            .map(|(&ax, &b)| (ax - b) * (ax - b))
            .sum();
        let reg: T = x.iter().map(|&v| v * v).sum();
        T::of(0.5) * misfit + self.ridge * reg
    }

    fn gradient_into(&self, x: &[T], out: &mut [T]) {
        let mut r = vec![T::zero(); self.a.out_dim()];
        self.a.forward_into(x, &mut r);
        for (ri, &bi) in r.iter_mut().zip(self.b.iter()) {
            *ri -= bi;
        }
        self.a.adjoint_into(&r, out);
        if self.ridge != T::zero() {
            let two_r = T::of(2.0) * self.ridge;
            for (o, &xi) in out.iter_mut().zip(x) {
                *o += two_r * xi;
            }
        }
    }

    fn beta(&self) -> T {
        self.beta
    }
}

/// `l* = 0`, i.e. `l` is the indicator of the origin and `h □ l = h`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ZeroConjugate;

impl<T: Scalar> ConjugateSmoothTerm<T> for ZeroConjugate {
    fn gradient_into(&self, _s: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
    }

    fn value(&self, _s: &[T]) -> Option<T> {
        Some(T::zero())
    }

    fn beta(&self) -> T {
        T::infinity()
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `l*(s) = (κ/2)‖s‖²`, the conjugate of `l = ‖·‖²/(2κ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticConjugate<T> {
    kappa: T,
}

impl<T: Scalar> QuadraticConjugate<T> {
    pub fn new(kappa: T) -> Result<Self> {
        if !(kappa > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                value: kappa.as_f64(),
                reason: "must be positive",
            });
        }
        Ok(QuadraticConjugate { kappa })
    }
}

impl<T: Scalar> ConjugateSmoothTerm<T> for QuadraticConjugate<T> {
    fn gradient_into(&self, s: &[T], out: &mut [T]) {
        for (o, &v) in out.iter_mut().zip(s) {
            *o = self.kappa * v;
        }
    }

    fn value(&self, s: &[T]) -> Option<T> {
        Some(T::of(0.5) * self.kappa * s.iter().map(|&v| v * v).sum::<T>())
    }

    fn beta(&self) -> T {
        T::one() / self.kappa
    }
}

/// One instance of the composite problem: the oracles for `f`, `g`, `h`, `l*` and the map `A`.
///
/// Terms left unset are zero (`l* = 0` meaning `l = ι_{0}`). Dimensions are checked
/// whenever a term is attached, so algorithms can use the unchecked oracle calls.
#[derive(Debug, Clone)]
pub struct ProblemSpec<T: Scalar> {
    f: Arc<dyn SmoothTerm<T>>,
    g: Arc<dyn ProxTerm<T>>,
    h: Arc<dyn ProxTerm<T>>,
    lstar: Arc<dyn ConjugateSmoothTerm<T>>,
    a: Arc<dyn LinearMap<T>>,
}

impl<T: Scalar> ProblemSpec<T> {
    pub fn new(a: Arc<dyn LinearMap<T>>) -> Self {
        ProblemSpec {
            f: Arc::new(ZeroSmooth),
            g: Arc::new(ZeroProx),
            h: Arc::new(ZeroProx),
            lstar: Arc::new(ZeroConjugate),
            a,
        }
    }

    /// A spec over `R^dim` with `A = I` and every term zero.
    pub fn identity(dim: usize) -> Self {
        Self::new(Arc::new(IdentityOp::new(dim)))
    }

    fn check(context: &'static str, declared: Option<usize>, expected: usize) -> Result<()> {
        match declared {
            Some(d) if d != expected => Err(Error::DimensionMismatch {
                context,
                expected,
                found: d,
            }),
            _ => Ok(()),
        }
    }

    pub fn with_f(mut self, f: Arc<dyn SmoothTerm<T>>) -> Result<Self> {
        Self::check("f", f.dim(), self.a.in_dim())?;
        self.f = f;
        Ok(self)
    }

    pub fn with_g(mut self, g: Arc<dyn ProxTerm<T>>) -> Result<Self> {
        Self::check("g", g.dim(), self.a.in_dim())?;
        self.g = g;
        Ok(self)
    }

    pub fn with_h(mut self, h: Arc<dyn ProxTerm<T>>) -> Result<Self> {
        Self::check("h", h.dim(), self.a.out_dim())?;
        self.h = h;
        Ok(self)
    }

    pub fn with_lstar(mut self, lstar: Arc<dyn ConjugateSmoothTerm<T>>) -> Self {
        self.lstar = lstar;
        self
    }

    /// Replaces `A`, re-checking every attached term against the new dimensions.
    pub fn with_operator(self, a: Arc<dyn LinearMap<T>>) -> Result<Self> {
        let ProblemSpec { f, g, h, lstar, .. } = self;
        ProblemSpec::new(a)
            .with_f(f)?
            .with_g(g)?
            .with_h(h)
            .map(|s| s.with_lstar(lstar))
    }

    pub fn f(&self) -> &dyn SmoothTerm<T> {
        self.f.as_ref()
    }

    pub fn g(&self) -> &dyn ProxTerm<T> {
        self.g.as_ref()
    }

    pub fn h(&self) -> &dyn ProxTerm<T> {
        self.h.as_ref()
    }

    pub fn lstar(&self) -> &dyn ConjugateSmoothTerm<T> {
        self.lstar.as_ref()
    }

    pub fn operator(&self) -> &dyn LinearMap<T> {
        self.a.as_ref()
    }

    pub fn operator_arc(&self) -> Arc<dyn LinearMap<T>> {
        Arc::clone(&self.a)
    }

    /// Dimension of `x`.
    pub fn primal_dim(&self) -> usize {
        self.a.in_dim()
    }

    /// Dimension of `s = Ax`.
    pub fn dual_dim(&self) -> usize {
        self.a.out_dim()
    }

    pub(crate) fn check_primal(&self, context: &'static str, x: &Vector<T>) -> Result<()> {
        Self::check(context, Some(x.dim()), self.primal_dim())
    }

    pub(crate) fn check_dual(&self, context: &'static str, s: &Vector<T>) -> Result<()> {
        Self::check(context, Some(s.dim()), self.dual_dim())
    }
}

/// `f(x) + g(x) + h(Ax)`. Defined only when `l* = 0`; may be `+∞`.
pub fn evaluate_objective<T: Scalar>(spec: &ProblemSpec<T>, x: &Vector<T>) -> Result<T> {
    spec.check_primal("evaluate_objective", x)?;
    if !spec.lstar().is_zero() {
        return Err(Error::UnsupportedObjective);
    }
    let gx = spec.g().value(x);
    if gx == T::infinity() {
        return Ok(gx);
    }
    let ax = spec.operator().forward(x);
    let hx = spec.h().value(&ax);
    Ok(spec.f().value(x) + gx + hx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocoercivityReport {
    pub holds: bool,
    /// Smallest observed `⟨Δx, Δ∇⟩ / ‖Δ∇‖²` (`+∞` if every gradient difference vanished).
    pub worst_ratio: f64,
}

/// Samples random pairs and checks `⟨x₁−x₂, ∇f(x₁)−∇f(x₂)⟩ ≥ β‖∇f(x₁)−∇f(x₂)‖²`
/// with an absolute slack of `1e-12`.
pub fn check_cocoercivity<T: Scalar>(
    term: &dyn SmoothTerm<T>,
    samples: usize,
    dim: usize,
    seed: u64,
) -> CocoercivityReport {
    assert!(samples >= 1, "at least one sample is required");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vector<T> {
        let scale: f64 = 10f64.powf(rng.random_range(-2.0..2.0));
        (0..dim)
            .map(|_| {
                let e: f64 = StandardNormal.sample(rng);
                T::of(scale * e)
            })
            .collect()
    };
    let beta = term.beta().as_f64();
    let mut holds = true;
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let x1 = draw(&mut rng);
        let x2 = draw(&mut rng);
        let dg = term.gradient(&x1).sub(&term.gradient(&x2));
        let inner = x1.sub(&x2).dot(&dg).as_f64();
        let dg2 = dg.norm_sq().as_f64();
        let rhs = if dg2 == 0.0 { 0.0 } else { beta * dg2 };
        if inner < rhs - 1e-12 {
            holds = false;
        }
        if dg2 > 0.0 {
            worst = worst.min(inner / dg2);
        }
    }
    CocoercivityReport {
        holds,
        worst_ratio: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{DenseMatrix, DifferenceOp};
    use crate::prox::{L1Norm, NonnegIndicator};

    #[test]
    fn objective_direct() {
        let spec = ProblemSpec::<f64>::identity(2)
            .with_f(Arc::new(SquaredDistance::new(Vector::zeros(2))))
            .unwrap()
            .with_h(Arc::new(L1Norm::new(1.0).unwrap()))
            .unwrap();
        let v = evaluate_objective(&spec, &Vector::from(vec![3.0, -4.0])).unwrap();
        assert_eq!(v, 19.5);

        let spec = ProblemSpec::<f64>::identity(2)
            .with_g(Arc::new(NonnegIndicator))
            .unwrap();
        let v = evaluate_objective(&spec, &Vector::from(vec![-1.0, 0.0])).unwrap();
        assert_eq!(v, f64::INFINITY);
    }

    #[test]
    fn objective_requires_zero_lstar() {
        let spec = ProblemSpec::<f64>::identity(2)
            .with_lstar(Arc::new(QuadraticConjugate::new(1.0).unwrap()));
        assert!(matches!(
            evaluate_objective(&spec, &Vector::zeros(2)),
            Err(Error::UnsupportedObjective)
        ));
        let spec = ProblemSpec::<f64>::identity(2);
        assert!(matches!(
            evaluate_objective(&spec, &Vector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dimension_checks_on_attach() {
        let spec = ProblemSpec::<f64>::new(Arc::new(DifferenceOp::new(4).unwrap()));
        assert_eq!(spec.primal_dim(), 4);
        assert_eq!(spec.dual_dim(), 3);
        assert!(spec
            .clone()
            .with_f(Arc::new(SquaredDistance::new(Vector::zeros(3))))
            .is_err());
        assert!(spec
            .with_f(Arc::new(SquaredDistance::new(Vector::zeros(4))))
            .is_ok());
    }

    #[test]
    fn cocoercivity_identity_gradient() {
        let f = SquaredDistance::new(Vector::<f64>::zeros(5));
        let r = check_cocoercivity(&f, 50, 5, 1);
        assert!(r.holds && r.worst_ratio >= 1.0 - 1e-12);

        #[derive(Debug)]
        struct Overclaimed;
        impl SmoothTerm<f64> for Overclaimed {
            fn value(&self, x: &[f64]) -> f64 {
                0.5 * x.iter().map(|v| v * v).sum::<f64>()
            }
            fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
                out.copy_from_slice(x);
            }
            fn beta(&self) -> f64 {
                2.0
            }
        }
        assert!(!check_cocoercivity(&Overclaimed, 10, 3, 2).holds);
    }

    #[test]
    fn least_squares_gradient_and_value() {
        let a: DenseMatrix<f64> =
            DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let ls = LeastSquares::new(Arc::new(a), Vector::from(vec![1.0, 0.0, 2.0]), 0.5, 0.1)
            .unwrap();
        let x = Vector::from(vec![1.0, -1.0]);
        // Ax - b = (-2, -1, -1); value = 0.5*6 + 0.5*2
        assert_eq!(ls.value(&x), 4.0);
        // Aᵀ(Ax-b) + 2·0.5·x = (-3, -5) + (1, -1)
        assert_eq!(ls.gradient(&x).as_slice(), &[-2.0, -6.0]);
    }
}
