//! Closed-form proximal operators and the Moreau bridge to conjugate proxes.
//!
//! The free functions (`prox_l1`, `prox_sq_l2`, `project_nonneg`) are the raw kernels;
//! the catalog structs wrap them as [`ProxTerm`]s with values and conjugate values.
//! Nonpositive steps or weights passed to the kernels are contract violations and panic.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::problem::ProxTerm;
use crate::scalar::Scalar;
use crate::vector::Vector;

// Relative slack on conjugate-domain membership; Moreau-derived dual points land on
// the boundary of {|s| ≤ μ} only up to rounding.
const DOMAIN_SLACK: f64 = 1e-9;

fn assert_positive<T: Scalar>(name: &str, v: T) {
    assert!(v > T::zero(), "{name} must be positive, got {v}");
}

#[inline]
fn soft<T: Scalar>(v: T, k: T) -> T {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        T::zero()
    }
}

/// Soft-thresholding: `sign(vᵢ)·max(|vᵢ| − t·mu, 0)`.
pub fn prox_l1<T: Scalar>(v: &Vector<T>, t: T, mu: T) -> Vector<T> {
    assert_positive("t", t);
    assert_positive("mu", mu);
    let k = t * mu;
    v.map(|x| soft(x, k))
}

/// Prox of `mu·‖x‖²`: `v / (1 + 2·t·mu)`.
pub fn prox_sq_l2<T: Scalar>(v: &Vector<T>, t: T, mu: T) -> Vector<T> {
    assert_positive("t", t);
    assert_positive("mu", mu);
    let d = T::one() + T::of(2.0) * t * mu;
    v.map(|x| x / d)
}

pub fn project_nonneg<T: Scalar>(v: &Vector<T>) -> Vector<T> {
    v.map(|x| x.max(T::zero()))
}

/// `prox_{δh*}(v) = v − δ·prox_{h/δ}(v/δ)` (Moreau decomposition).
pub fn prox_conjugate<T: Scalar>(h: &dyn ProxTerm<T>, v: &Vector<T>, delta: T) -> Vector<T> {
    let mut out = Vector::zeros(v.dim());
    prox_conjugate_into(h, v, delta, &mut out);
    out
}

pub(crate) fn prox_conjugate_into<T: Scalar>(
    h: &dyn ProxTerm<T>,
    v: &[T],
    delta: T,
    out: &mut [T],
) {
    assert_positive("delta", delta);
    if h.is_zero() {
        // h* = ι_{0}; v − δ·(v/δ) would only be zero up to rounding
        out.iter_mut().for_each(|o| *o = T::zero());
        return;
    }
    let inv = T::one() / delta;
    let scaled: Vec<T> = v.iter().map(|&x| x * inv).collect();
    h.prox_into(&scaled, inv, out);
    for (o, &x) in out.iter_mut().zip(v) {
        *o = x - delta * *o;
    }
}

/// Certifies `p = prox(v, t)` as a minimizer of `t·g(x) + ½‖x − v‖²` by probing.
///
/// Returns the largest decrease of the prox objective found by stepping `ε = 1e-4` from
/// `p` along each `±eᵢ` and along 8 fixed random unit directions (seeded by the
/// dimension), divided by `ε`. An exact prox gives `0`; a prox that is off by `d`
/// in some coordinate shows a residual of order `|d|`.
pub fn prox_optimality_residual<T: Scalar>(term: &dyn ProxTerm<T>, v: &Vector<T>, t: T) -> T {
    assert_positive("t", t);
    let eps = T::of(1e-4);
    let p = term.prox(v, t);
    let gp = term.value(&p);
    if !gp.is_finite() {
        return T::infinity();
    }
    let n = v.dim();
    let half = T::of(0.5);
    let r = p.sub(v);

    let mut worst = T::zero();
    let mut probe = |d: &Vector<T>| {
        let q = Vector::lincomb(T::one(), &p, eps, d);
        let gq = term.value(&q);
        if !gq.is_finite() {
            return;
        }
        // objective(p) − objective(p + εd), with the quadratic part expanded
        let change = t * (gp - gq) - eps * r.dot(d) - half * eps * eps * d.norm_sq();
        worst = worst.max(change / eps);
    };

    let mut e = Vector::zeros(n);
    for i in 0..n {
        for sign in [T::one(), -T::one()] {
            e[i] = sign;
            probe(&e);
        }
        e[i] = T::zero();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    for _ in 0..8 {
        let mut d: Vector<T> = (0..n)
            .map(|_| T::of(StandardNormal.sample(&mut rng)))
            .collect();
        let nd = d.norm();
        d.scale(T::one() / nd);
        probe(&d);
    }
    worst
}

fn positive_param<T: Scalar>(name: &'static str, v: T) -> Result<T> {
    if v > T::zero() && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter {
            name,
            value: v.as_f64(),
            reason: "must be positive and finite",
        })
    }
}

fn within<T: Scalar>(u: &[T], bound: T) -> bool {
    let lim = bound * (T::one() + T::of(DOMAIN_SLACK));
    u.iter().all(|&x| x.abs() <= lim)
}

/// The zero function. Its prox is the identity and its conjugate is `ι_{0}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ZeroProx;

impl<T: Scalar> ProxTerm<T> for ZeroProx {
    fn value(&self, _x: &[T]) -> T {
        T::zero()
    }

    fn prox_into(&self, v: &[T], _t: T, out: &mut [T]) {
        out.copy_from_slice(v);
    }

    fn conjugate_value(&self, u: &[T]) -> Option<T> {
        Some(if u.iter().all(|&x| x == T::zero()) {
            T::zero()
        } else {
            T::infinity()
        })
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `mu·‖x‖₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Norm<T> {
    mu: T,
}

impl<T: Scalar> L1Norm<T> {
    pub fn new(mu: T) -> Result<Self> {
        Ok(L1Norm {
            mu: positive_param("mu", mu)?,
        })
    }

    pub fn mu(&self) -> T {
        self.mu
    }
}

impl<T: Scalar> ProxTerm<T> for L1Norm<T> {
    fn value(&self, x: &[T]) -> T {
        self.mu * x.iter().map(|v| v.abs()).sum::<T>()
    }

    fn prox_into(&self, v: &[T], t: T, out: &mut [T]) {
        let k = t * self.mu;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = soft(x, k);
        }
    }

    fn conjugate_value(&self, u: &[T]) -> Option<T> {
        Some(if within(u, self.mu) {
            T::zero()
        } else {
            T::infinity()
        })
    }
}

/// `mu·‖x‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquaredL2<T> {
    mu: T,
}

impl<T: Scalar> SquaredL2<T> {
    pub fn new(mu: T) -> Result<Self> {
        Ok(SquaredL2 {
            mu: positive_param("mu", mu)?,
        })
    }
}

impl<T: Scalar> ProxTerm<T> for SquaredL2<T> {
    fn value(&self, x: &[T]) -> T {
        self.mu * x.iter().map(|&v| v * v).sum::<T>()
    }

    fn prox_into(&self, v: &[T], t: T, out: &mut [T]) {
        let d = T::one() + T::of(2.0) * t * self.mu;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x / d;
        }
    }

    fn conjugate_value(&self, u: &[T]) -> Option<T> {
        Some(u.iter().map(|&v| v * v).sum::<T>() / (T::of(4.0) * self.mu))
    }
}

/// Indicator of the nonnegative orthant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NonnegIndicator;

impl<T: Scalar> ProxTerm<T> for NonnegIndicator {
    fn value(&self, x: &[T]) -> T {
        if x.iter().all(|&v| v >= T::zero()) {
            T::zero()
        } else {
            T::infinity()
        }
    }

    fn prox_into(&self, v: &[T], _t: T, out: &mut [T]) {
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x.max(T::zero());
        }
    }

    // The conjugate is the indicator of the nonpositive orthant.
    fn conjugate_value(&self, u: &[T]) -> Option<T> {
        Some(if u.iter().all(|&v| v <= T::zero()) {
            T::zero()
        } else {
            T::infinity()
        })
    }
}

/// Indicator of the origin. Its conjugate is the zero function.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ZeroIndicator;

impl<T: Scalar> ProxTerm<T> for ZeroIndicator {
    fn value(&self, x: &[T]) -> T {
        if x.iter().all(|&v| v == T::zero()) {
            T::zero()
        } else {
            T::infinity()
        }
    }

    fn prox_into(&self, _v: &[T], _t: T, out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
    }

    fn conjugate_value(&self, _u: &[T]) -> Option<T> {
        Some(T::zero())
    }
}

/// `mu·Σ huber_η(xᵢ)` with `huber_η(x) = x²/(2η)` for `|x| ≤ η` and `|x| − η/2` otherwise.
///
/// The conjugate is `ι_{‖u‖∞ ≤ mu} + (η/(2·mu))‖u‖²`, strongly convex with modulus `η/mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Huber<T> {
    mu: T,
    eta: T,
}

impl<T: Scalar> Huber<T> {
    pub fn new(mu: T, eta: T) -> Result<Self> {
        Ok(Huber {
            mu: positive_param("mu", mu)?,
            eta: positive_param("eta", eta)?,
        })
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn eta(&self) -> T {
        self.eta
    }
}

impl<T: Scalar> ProxTerm<T> for Huber<T> {
    fn value(&self, x: &[T]) -> T {
        let half = T::of(0.5);
        let eta = self.eta;
        self.mu
            * x.iter()
                .map(|&v| {
                    let a = v.abs();
                    if a <= eta {
                        half * a * a / eta
                    } else {
                        a - half * eta
                    }
                })
                .sum::<T>()
    }

    fn prox_into(&self, v: &[T], t: T, out: &mut [T]) {
        let k = t * self.mu;
        let knee = self.eta + k;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = if x.abs() <= knee {
                x * self.eta / knee
            } else {
                x - k * x.signum()
            };
        }
    }

    fn conjugate_value(&self, u: &[T]) -> Option<T> {
        if !within(u, self.mu) {
            return Some(T::infinity());
        }
        let q: T = u.iter().map(|&v| v * v).sum();
        Some(self.eta / (T::of(2.0) * self.mu) * q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector<f64> {
        Vector::from(x.to_vec())
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(prox_l1(&v(&[3.0, -0.5, 1.0]), 1.0, 1.0).as_slice(), &[2.0, 0.0, 0.0]);
        assert_eq!(prox_l1(&v(&[0.0, 0.0]), 0.3, 2.0).as_slice(), &[0.0, 0.0]);
        let p = prox_l1(&v(&[2.7]), 0.5, 4.0);
        assert!((p[0] - 0.7).abs() < 1e-15);
        assert_eq!(prox_sq_l2(&v(&[3.0, 3.0]), 1.0, 0.5).as_slice(), &[1.5, 1.5]);
        // minimizer of 0.25·2·x² + ½(x − 1)²: x + x − 1 = 0
        assert_eq!(prox_sq_l2(&v(&[1.0]), 0.25, 2.0)[0], 0.5);
        assert_eq!(project_nonneg(&v(&[-1.0, 2.0])).as_slice(), &[0.0, 2.0]);
    }

    #[test]
    #[should_panic(expected = "t must be positive")]
    fn nonpositive_step_panics() {
        prox_l1(&v(&[1.0]), 0.0, 1.0);
    }

    #[test]
    fn conjugate_examples() {
        let h = L1Norm::new(1.0).unwrap();
        assert_eq!(prox_conjugate(&h, &v(&[0.3, -2.0]), 1.0).as_slice(), &[0.3, -1.0]);
        let z = prox_conjugate(&ZeroProx, &v(&[0.3, -2.0]), 2.5);
        assert!(z.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn wrong_prox_is_detected() {
        #[derive(Debug)]
        struct Shifted;
        impl ProxTerm<f64> for Shifted {
            fn value(&self, x: &[f64]) -> f64 {
                x.iter().map(|v| v.abs()).sum()
            }
            fn prox_into(&self, v: &[f64], t: f64, out: &mut [f64]) {
                for (o, &x) in out.iter_mut().zip(v) {
                    *o = soft(x, t) + 0.1;
                }
            }
        }
        let x = v(&[2.0, -0.3, 0.05, 1.5]);
        assert!(prox_optimality_residual(&Shifted, &x, 1.0) > 1e-4);
        assert!(prox_optimality_residual(&L1Norm::new(1.0).unwrap(), &x, 1.0) <= 1e-8);
    }

    #[test]
    fn huber_prox_both_branches() {
        let h = Huber::new(2.0, 1.0).unwrap();
        // knee = 1 + 0.5·2 = 2
        let p = h.prox(&v(&[1.0, 5.0, -3.0]), 0.5);
        assert_eq!(p.as_slice(), &[0.5, 4.0, -2.0]);
    }
}
