//! Dense real coordinate vectors.

use std::ops::{Deref, DerefMut, Index, IndexMut};

use crate::scalar::Scalar;

/// Finite-dimensional real vector. The universal iterate type.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector<T>(Vec<T>);

impl<T: Scalar> Vector<T> {
    pub fn zeros(dim: usize) -> Self {
        Vector(vec![T::zero(); dim])
    }

    pub fn from_elem(dim: usize, value: T) -> Self {
        Vector(vec![value; dim])
    }

    /// Builds a vector from `f64` values, converting each to `T`.
    pub fn from_f64_slice(values: &[f64]) -> Self {
        Vector(values.iter().map(|&v| T::of(v)).collect())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.as_f64()).collect()
    }

    pub fn dot(&self, other: &Self) -> T {
        dot(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> T {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn norm_l1(&self) -> T {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_inf(&self) -> T {
        self.0.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: T, x: &Self) {
        debug_assert_eq!(self.dim(), x.dim());
        for (a, &b) in self.0.iter_mut().zip(x.0.iter()) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: T) {
        for a in self.0.iter_mut() {
            *a *= alpha;
        }
    }

    pub fn scaled(&self, alpha: T) -> Self {
        self.map(|v| v * alpha)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Vector(self.0.iter().map(|&v| f(v)).collect())
    }

    /// `alpha * x + beta * y`
    pub fn lincomb(alpha: T, x: &Self, beta: T, y: &Self) -> Self {
        debug_assert_eq!(x.dim(), y.dim());
        Vector(
            x.0.iter()
                .zip(y.0.iter())
                .map(|(&a, &b)| alpha * a + beta * b)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::lincomb(T::one(), self, T::one(), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::lincomb(T::one(), self, -T::one(), other)
    }

    pub fn dist_sq(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Converts between scalar types (e.g. `f64` reference data into an `f32` run).
    pub fn cast<U: Scalar>(&self) -> Vector<U> {
        Vector(self.0.iter().map(|v| U::of(v.as_f64())).collect())
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        acc += x * y;
    }
    acc
}

impl<T> From<Vec<T>> for Vector<T> {
    fn from(v: Vec<T>) -> Self {
        Vector(v)
    }
}

impl<T> FromIterator<T> for Vector<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

impl<T> Deref for Vector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for Vector<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_arithmetic() {
        let x: Vector<f64> = vec![3.0, -4.0].into();
        assert_eq!(x.norm(), 5.0);
        assert_eq!(x.norm_l1(), 7.0);
        assert_eq!(x.norm_inf(), 4.0);
        let mut y = Vector::zeros(2);
        y.axpy(2.0, &x);
        assert_eq!(y.as_slice(), &[6.0, -8.0]);
        assert_eq!(y.sub(&x).as_slice(), &[3.0, -4.0]);
        assert_eq!(x.dist_sq(&y), 25.0);
        assert_eq!(x.max_abs_diff(&y), 4.0);
    }

    #[test]
    fn cast_roundtrip_f32() {
        let x: Vector<f64> = vec![0.5, -2.25].into();
        let y: Vector<f32> = x.cast();
        assert_eq!(y.as_slice(), &[0.5f32, -2.25]);
        assert!(!Vector::<f64>::from(vec![f64::NAN]).is_finite());
    }
}
