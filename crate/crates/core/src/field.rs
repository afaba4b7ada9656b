//! Differentiable scalar fields of `n` real variables.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Expression, JetValue};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// A real function of `dim()` variables with value, gradient and Hessian.
pub trait ScalarField<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn jet(&self, point: &[T]) -> Result<JetValue<T>>;

    fn value(&self, point: &[T]) -> Result<T> {
        Ok(self.jet(point)?.value)
    }
}

pub type SharedField<T> = Arc<dyn ScalarField<T>>;

impl<T: Scalar> ScalarField<T> for Expression {
    fn dim(&self) -> usize {
        Expression::dim(self)
    }

    fn jet(&self, point: &[T]) -> Result<JetValue<T>> {
        Ok(self.eval_jet(point)?)
    }

    fn value(&self, point: &[T]) -> Result<T> {
        Ok(self.eval(point)?)
    }
}

impl<T: Scalar, F: ScalarField<T> + ?Sized> ScalarField<T> for Arc<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn jet(&self, point: &[T]) -> Result<JetValue<T>> {
        (**self).jet(point)
    }

    fn value(&self, point: &[T]) -> Result<T> {
        (**self).value(point)
    }
}

/// Closed-form parameter functions with exact derivatives.
#[derive(Clone, Debug, PartialEq)]
pub enum Builtin<T> {
    /// `0` everywhere.
    Zero { n: usize },
    /// `(alpha / 2) |y|²`.
    Quadratic { n: usize, alpha: T },
    /// `(beta / 4) Σ y_a⁴`.
    Quartic { n: usize, beta: T },
    /// `b · y + c`.
    Affine { b: Vec<T>, c: T },
}

impl<T: Scalar> Builtin<T> {
    fn check(&self, point: &[T]) -> Result<()> {
        let n = ScalarField::<T>::dim(self);
        if point.len() != n {
            return Err(Error::InvalidInput(format!("expected {n} coordinates, got {}", point.len())));
        }
        Ok(())
    }
}

impl<T: Scalar> ScalarField<T> for Builtin<T> {
    fn dim(&self) -> usize {
        match self {
            Builtin::Zero { n } | Builtin::Quadratic { n, .. } | Builtin::Quartic { n, .. } => *n,
            Builtin::Affine { b, .. } => b.len(),
        }
    }

    fn jet(&self, p: &[T]) -> Result<JetValue<T>> {
        self.check(p)?;
        let n = p.len();
        Ok(match self {
            Builtin::Zero { .. } => JetValue::constant(n, T::zero()),
            Builtin::Quadratic { alpha, .. } => {
                let a = *alpha;
                JetValue {
                    value: a * crate::scalar::norm_sq(p) / T::of(2.0),
                    gradient: p.iter().map(|&y| a * y).collect(),
                    hessian: DenseMatrix::from_diagonal(&vec![a; n]),
                }
            }
            Builtin::Quartic { beta, .. } => {
                let b = *beta;
                JetValue {
                    value: b * p.iter().map(|&y| y.powi(4)).sum::<T>() / T::of(4.0),
                    gradient: p.iter().map(|&y| b * y.powi(3)).collect(),
                    hessian: DenseMatrix::from_diagonal(
                        &p.iter().map(|&y| T::of(3.0) * b * y * y).collect::<Vec<_>>(),
                    ),
                }
            }
            Builtin::Affine { b, c } => JetValue {
                value: crate::scalar::dot(b, p) + *c,
                gradient: b.clone(),
                hessian: DenseMatrix::zeros(n),
            },
        })
    }
}

/// A field backed by a closure returning full jets.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T, F> ScalarField<T> for FnField<F>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<JetValue<T>> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, point: &[T]) -> Result<JetValue<T>> {
        (self.f)(point)
    }
}
