//! Second-order forward-mode jets: value, dense gradient, dense Hessian.
//!
//! Every rule fills the upper triangle of the Hessian and mirrors it, so the
//! `(i, j)` and `(j, i)` entries are bit-identical.

use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Value, gradient and Hessian of a scalar function at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct JetValue<T> {
    pub value: T,
    pub gradient: Vec<T>,
    pub hessian: DenseMatrix<T>,
}

impl<T: Scalar> JetValue<T> {
    pub fn constant(n: usize, value: T) -> Self {
        Self { value, gradient: vec![T::zero(); n], hessian: DenseMatrix::zeros(n) }
    }

    /// The `index`-th coordinate function evaluated at `value`.
    pub fn variable(n: usize, index: usize, value: T) -> Self {
        let mut j = Self::constant(n, value);
        j.gradient[index] = T::one();
        j
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.gradient.iter().all(|g| g.is_finite()) && self.hessian.is_finite()
    }

    fn build(value: T, gradient: Vec<T>, mut upper: impl FnMut(usize, usize) -> T) -> Self {
        let n = gradient.len();
        let mut hessian = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = upper(i, j);
                hessian[(i, j)] = v;
                hessian[(j, i)] = v;
            }
        }
        Self { value, gradient, hessian }
    }

    pub fn add(&self, o: &Self) -> Self {
        let g = self.gradient.iter().zip(&o.gradient).map(|(&a, &b)| a + b).collect();
        Self::build(self.value + o.value, g, |i, j| self.hessian[(i, j)] + o.hessian[(i, j)])
    }

    pub fn sub(&self, o: &Self) -> Self {
        let g = self.gradient.iter().zip(&o.gradient).map(|(&a, &b)| a - b).collect();
        Self::build(self.value - o.value, g, |i, j| self.hessian[(i, j)] - o.hessian[(i, j)])
    }

    pub fn neg(&self) -> Self {
        let g = self.gradient.iter().map(|&a| -a).collect();
        Self::build(-self.value, g, |i, j| -self.hessian[(i, j)])
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (a, b) = (self.value, o.value);
        let ga = &self.gradient;
        let gb = &o.gradient;
        let g = ga.iter().zip(gb).map(|(&p, &q)| b * p + a * q).collect();
        Self::build(a * b, g, |i, j| {
            b * self.hessian[(i, j)] + a * o.hessian[(i, j)] + (ga[i] * gb[j] + gb[i] * ga[j])
        })
    }

    /// Quotient; the caller guarantees `o.value != 0`.
    pub fn div(&self, o: &Self) -> Self {
        let b = o.value;
        let q = self.value / b;
        let gb = &o.gradient;
        let gq: Vec<T> = self.gradient.iter().zip(gb).map(|(&p, &s)| (p - q * s) / b).collect();
        Self::build(q, gq.clone(), |i, j| {
            (self.hessian[(i, j)] - q * o.hessian[(i, j)] - (gq[i] * gb[j] + gb[i] * gq[j])) / b
        })
    }

    /// Composition `f ∘ self` given `f(v)`, `f'(v)`, `f''(v)` at `v = self.value`.
    pub fn chain(&self, f: T, d1: T, d2: T) -> Self {
        let g = &self.gradient;
        let out_g = g.iter().map(|&p| d1 * p).collect();
        Self::build(f, out_g, |i, j| d1 * self.hessian[(i, j)] + d2 * (g[i] * g[j]))
    }
}
