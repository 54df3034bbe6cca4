//! Linear operators with adjoints, plus spectral-norm estimation for step-size checks.
//!
//! Every operator maps `in_dim`-vectors to `out_dim`-vectors and exposes both the
//! forward map and its adjoint. The unchecked trait methods assume the caller
//! already validated dimensions (a [`crate::ProblemSpec`] does this once at
//! construction); the free functions [`apply`] and [`adjoint_apply`] check them.

use std::fmt::Debug;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vector::{dot, Vector};

pub trait LinearMap<T: Scalar>: Debug + Send + Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;

    /// `out = A x`. `x.len() == in_dim`, `out.len() == out_dim`.
    fn forward_into(&self, x: &[T], out: &mut [T]);

    /// `out = Aᵀ s`. `s.len() == out_dim`, `out.len() == in_dim`.
    fn adjoint_into(&self, s: &[T], out: &mut [T]);

    fn forward(&self, x: &Vector<T>) -> Vector<T> {
        let mut out = Vector::zeros(self.out_dim());
        self.forward_into(x, &mut out);
        out
    }

    fn adjoint(&self, s: &Vector<T>) -> Vector<T> {
        let mut out = Vector::zeros(self.in_dim());
        self.adjoint_into(s, &mut out);
        out
    }

    fn is_identity(&self) -> bool {
        false
    }

    fn is_zero(&self) -> bool {
        false
    }

    /// `‖AAᵀ‖` when a closed form exists.
    fn exact_norm_aat(&self) -> Option<T> {
        None
    }
}

/// Checked `A x`.
pub fn apply<T: Scalar>(op: &dyn LinearMap<T>, x: &Vector<T>) -> Result<Vector<T>> {
    if x.dim() != op.in_dim() {
        return Err(Error::DimensionMismatch {
            context: "apply",
            expected: op.in_dim(),
            found: x.dim(),
        });
    }
    Ok(op.forward(x))
}

/// Checked `Aᵀ s`.
pub fn adjoint_apply<T: Scalar>(op: &dyn LinearMap<T>, s: &Vector<T>) -> Result<Vector<T>> {
    if s.dim() != op.out_dim() {
        return Err(Error::DimensionMismatch {
            context: "adjoint_apply",
            expected: op.out_dim(),
            found: s.dim(),
        });
    }
    Ok(op.adjoint(s))
}

/// Dense matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter {
                name: "matrix shape",
                value: (rows * cols) as f64,
                reason: "dimensions must be positive",
            });
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "DenseMatrix::from_row_major",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "DenseMatrix::from_rows",
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend(r.iter().map(|&v| T::of(v)));
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = T::one();
        }
        DenseMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `AᵀA`, a `cols × cols` symmetric matrix.
    pub fn gram(&self) -> DenseMatrix<T> {
        let n = self.cols;
        let mut g = vec![T::zero(); n * n];
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let ri = row[i];
                if ri == T::zero() {
                    continue;
                }
                for j in i..n {
                    g[i * n + j] += ri * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[i * n + j] = g[j * n + i];
            }
        }
        DenseMatrix {
            rows: n,
            cols: n,
            data: g,
        }
    }
}

impl<T: Scalar> LinearMap<T> for DenseMatrix<T> {
    fn in_dim(&self) -> usize {
        self.cols
    }

    fn out_dim(&self) -> usize {
        self.rows
    }

    fn forward_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    fn adjoint_into(&self, s: &[T], out: &mut [T]) {
        debug_assert_eq!(s.len(), self.rows);
        out.iter_mut().for_each(|o| *o = T::zero());
        for (i, &si) in s.iter().enumerate() {
            if si == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += si * a;
            }
        }
    }
}

/// First-order difference operator `(Dx)_i = x_{i+1} - x_i`, mapping `R^p` to `R^{p-1}`.
/// Matrix-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DifferenceOp {
    p: usize,
}

impl DifferenceOp {
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p as f64,
                reason: "difference operator needs at least two inputs",
            });
        }
        Ok(DifferenceOp { p })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Largest eigenvalue of `DDᵀ`: `2 - 2 cos((p-1)π/p)`.
    pub fn norm_aat_closed_form<T: Scalar>(&self) -> T {
        let p = T::of(self.p as f64);
        let two = T::of(2.0);
        two - two * ((p - T::one()) / p * T::PI()).cos()
    }
}

impl<T: Scalar> LinearMap<T> for DifferenceOp {
    fn in_dim(&self) -> usize {
        self.p
    }

    fn out_dim(&self) -> usize {
        self.p - 1
    }

    fn forward_into(&self, x: &[T], out: &mut [T]) {
        for (o, w) in out.iter_mut().zip(x.windows(2)) {
            *o = w[1] - w[0];
        }
    }

    fn adjoint_into(&self, s: &[T], out: &mut [T]) {
        // (Dᵀs)_j = s_{j-1} - s_j with s_{-1} = s_{p-1} = 0
        let m = s.len();
        for (j, o) in out.iter_mut().enumerate() {
            let left = if j > 0 { s[j - 1] } else { T::zero() };
            let right = if j < m { s[j] } else { T::zero() };
            *o = left - right;
        }
    }

    fn exact_norm_aat(&self) -> Option<T> {
        Some(self.norm_aat_closed_form())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityOp {
    dim: usize,
}

impl IdentityOp {
    pub fn new(dim: usize) -> Self {
        IdentityOp { dim }
    }
}

impl<T: Scalar> LinearMap<T> for IdentityOp {
    fn in_dim(&self) -> usize {
        self.dim
    }

    fn out_dim(&self) -> usize {
        self.dim
    }

    fn forward_into(&self, x: &[T], out: &mut [T]) {
        out.copy_from_slice(x);
    }

    fn adjoint_into(&self, s: &[T], out: &mut [T]) {
        out.copy_from_slice(s);
    }

    fn is_identity(&self) -> bool {
        true
    }

    fn exact_norm_aat(&self) -> Option<T> {
        Some(T::one())
    }
}

/// The zero map between two spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroMap {
    in_dim: usize,
    out_dim: usize,
}

impl ZeroMap {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        ZeroMap { in_dim, out_dim }
    }
}

impl<T: Scalar> LinearMap<T> for ZeroMap {
    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn forward_into(&self, _x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
    }

    fn adjoint_into(&self, _s: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
    }

    fn is_zero(&self) -> bool {
        true
    }

    fn exact_norm_aat(&self) -> Option<T> {
        Some(T::zero())
    }
}

/// Builds the explicit matrix of an operator by applying it to the canonical basis.
pub fn materialize<T: Scalar>(op: &dyn LinearMap<T>) -> DenseMatrix<T> {
    let (m, n) = (op.out_dim(), op.in_dim());
    let mut data = vec![T::zero(); m * n];
    let mut e = Vector::zeros(n);
    for j in 0..n {
        e[j] = T::one();
        let col = op.forward(&e);
        for i in 0..m {
            data[i * n + j] = col[i];
        }
        e[j] = T::zero();
    }
    DenseMatrix {
        rows: m,
        cols: n,
        data,
    }
}

/// Estimates `‖AAᵀ‖` by power iteration on `s ↦ A(Aᵀs)` from a seeded random unit vector.
///
/// The Rayleigh quotient `μ_k = ‖Aᵀs_k‖²` is nondecreasing along the iteration.
/// Iteration stops once `μ_k - μ_{⌊k/2⌋} ≤ tol·μ_k`; comparing against the quotient
/// from half as many steps back keeps the test honest on clustered spectra, where
/// consecutive quotients differ by far less than the remaining error.
pub fn estimate_norm_aat<T: Scalar>(
    op: &dyn LinearMap<T>,
    tol: T,
    max_iters: usize,
    seed: u64,
) -> Result<T> {
    if op.out_dim() == 0 {
        return Err(Error::InvalidParameter {
            name: "out_dim",
            value: 0.0,
            reason: "power iteration needs a nonempty output space",
        });
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol.as_f64(),
            reason: "must be positive",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s: Vector<T> = (0..op.out_dim())
        .map(|_| T::of(StandardNormal.sample(&mut rng)))
        .collect();
    let n0 = s.norm();
    s.scale(T::one() / n0);

    let mut history: Vec<T> = Vec::with_capacity(max_iters.min(1 << 16) + 1);
    let mut ats = Vector::zeros(op.in_dim());
    let mut next = Vector::zeros(op.out_dim());
    for k in 0..=max_iters {
        op.adjoint_into(&s, &mut ats);
        let mu = ats.norm_sq();
        if !mu.is_finite() {
            return Err(Error::NumericalFailure {
                stage: "power iteration",
                iteration: Some(k),
            });
        }
        history.push(mu);
        if mu == T::zero() {
            return Ok(T::zero());
        }
        if k >= 2 {
            let back = history[k / 2];
            if (mu - back).abs() <= tol * mu {
                return Ok(mu);
            }
        }
        if k == max_iters {
            break;
        }
        op.forward_into(&ats, &mut next);
        let nn = next.norm();
        if nn == T::zero() {
            return Ok(mu);
        }
        for (a, &b) in s.iter_mut().zip(next.iter()) {
            *a = b / nn;
        }
    }
    Err(Error::ConvergenceFailure {
        last_estimate: history.last().map_or(f64::NAN, |v| v.as_f64()),
        iterations: max_iters,
    })
}

/// Upper bound on `‖AAᵀ‖` for step-size validation: the closed form when the operator
/// has one, otherwise the power-iteration estimate inflated by `1 + 10·tol`.
pub fn norm_aat_upper_bound<T: Scalar>(
    op: &dyn LinearMap<T>,
    tol: T,
    max_iters: usize,
    seed: u64,
) -> Result<T> {
    if let Some(exact) = op.exact_norm_aat() {
        return Ok(exact);
    }
    let est = estimate_norm_aat(op, tol, max_iters, seed)?;
    Ok(est * (T::one() + T::of(10.0) * tol))
}

/// Eigenvalues (ascending) of a small dense symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues<T: Scalar>(m: &DenseMatrix<T>) -> Result<Vec<T>> {
    if m.rows != m.cols {
        return Err(Error::DimensionMismatch {
            context: "symmetric_eigenvalues",
            expected: m.rows,
            found: m.cols,
        });
    }
    let n = m.rows;
    let mut a = m.data.clone();
    let off = |a: &[T]| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s
    };
    let total: T = a.iter().map(|&v| v * v).sum();
    let eps = T::epsilon();
    for _sweep in 0..100 {
        if off(&a) <= eps * eps * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector<f64> {
        Vector::from(x.to_vec())
    }

    #[test]
    fn difference_forward_and_adjoint() {
        let d = DifferenceOp::new(4).unwrap();
        assert_eq!(apply(&d, &v(&[1.0, 2.0, 4.0, 8.0])).unwrap().as_slice(), &[1.0, 2.0, 4.0]);
        let d3 = DifferenceOp::new(3).unwrap();
        // D = [[-1,1,0],[0,-1,1]]; Dᵀ(1,1) = (-1, 0, 1)
        assert_eq!(
            adjoint_apply(&d3, &v(&[1.0, 1.0])).unwrap().as_slice(),
            &[-1.0, 0.0, 1.0]
        );
        let c = apply(&d, &v(&[2.5; 4])).unwrap();
        assert!(c.iter().all(|&x| x == 0.0));
        assert!(DifferenceOp::new(1).is_err());
    }

    #[test]
    fn dense_forward_adjoint() {
        let a: DenseMatrix<f64> =
            DenseMatrix::from_rows(&[vec![1.0, 0.0, 2.0], vec![0.0, 1.0, -1.0]]).unwrap();
        assert_eq!(apply(&a, &v(&[1.0, 1.0, 1.0])).unwrap().as_slice(), &[3.0, 0.0]);
        assert_eq!(adjoint_apply(&a, &v(&[1.0, 0.0])).unwrap().as_slice(), &[1.0, 0.0, 2.0]);
        assert_eq!(adjoint_apply(&a, &v(&[0.0, 1.0])).unwrap().as_slice(), &[0.0, 1.0, -1.0]);
        assert!(matches!(
            apply(&a, &v(&[1.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(adjoint_apply(&a, &v(&[1.0])).is_err());
    }

    #[test]
    fn identity_and_zero() {
        let id = IdentityOp::new(3);
        let x = v(&[1.0, -2.0, 3.0]);
        assert_eq!(apply(&id, &x).unwrap(), x);
        assert_eq!(adjoint_apply(&id, &x).unwrap(), x);
        assert_eq!(estimate_norm_aat::<f64>(&id, 1e-12, 10, 1).unwrap(), 1.0);
        let z = ZeroMap::new(3, 2);
        assert_eq!(apply(&z, &x).unwrap().as_slice(), &[0.0, 0.0]);
        assert_eq!(estimate_norm_aat::<f64>(&z, 1e-12, 10, 1).unwrap(), 0.0);
    }

    #[test]
    fn power_iteration_reports_failure() {
        let d = DifferenceOp::new(200).unwrap();
        match estimate_norm_aat::<f64>(&d, 1e-14, 5, 3) {
            Err(Error::ConvergenceFailure { last_estimate, .. }) => assert!(last_estimate > 0.0),
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn jacobi_on_known_spectrum() {
        let m: DenseMatrix<f64> =
            DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = symmetric_eigenvalues(&m).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn materialize_difference() {
        let d = DifferenceOp::new(3).unwrap();
        let m: DenseMatrix<f64> = materialize(&d);
        assert_eq!(m.data(), &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
    }
}
