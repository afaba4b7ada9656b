//! Pointwise hodograph transformation `y = ∇u(x)`, `H = x·∇u − u`, its
//! inverse `x = ∇H(y)`, `u = x·y − H`, and the `H`-side of the implicit
//! solution.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::hj::ImplicitSolution;
use crate::scalar::{dot, norm_sq, Scalar};

/// Image of a point under the hodograph map.
#[derive(Clone, Debug, PartialEq)]
pub struct HodographImage<T> {
    pub y: Vec<T>,
    pub h: T,
}

/// `(y, H) = (∇u(x), x·∇u(x) − u(x))`. Time passes through unchanged.
pub fn forward_point<T: Scalar>(u: &dyn ScalarField<T>, x: &[T]) -> Result<HodographImage<T>> {
    let jet = u.jet(x)?;
    let h = dot(x, &jet.gradient) - jet.value;
    if !h.is_finite() {
        return Err(Error::Domain(format!("non-finite hodograph image at {:?}", crate::scalar::to_f64_vec(x))));
    }
    Ok(HodographImage { y: jet.gradient, h })
}

/// `(x, u) = (∇H(y), y·∇H(y) − H(y))`.
pub fn inverse_point<T: Scalar>(h: &dyn ScalarField<T>, y: &[T]) -> Result<(Vec<T>, T)> {
    let jet = h.jet(y)?;
    let u = dot(y, &jet.gradient) - jet.value;
    Ok((jet.gradient, u))
}

/// `H(t, y) = λ t |y|² − Φ(y)`.
pub fn h_general<T: Scalar>(sol: &ImplicitSolution<T>, t: T, y: &[T]) -> Result<T> {
    let phi = sol.phi().value(y)?;
    Ok(sol.setup().lambda() * t * norm_sq(y) - phi)
}

/// The spatial point `x(y, t) = ∂H/∂y = 2λt·y − ∇Φ(y)` a parameter vector
/// maps to.
pub fn x_of_y<T: Scalar>(sol: &ImplicitSolution<T>, t: T, y: &[T]) -> Result<Vec<T>> {
    let g = sol.phi().jet(y)?.gradient;
    let k = T::of(2.0) * sol.setup().lambda() * t;
    Ok(y.iter().zip(&g).map(|(&ya, &ga)| k * ya - ga).collect())
}

/// `∂H/∂t − λ|y|²` with a central difference in `t` on a black-box `H(t, y)`.
pub fn transformed_residual_with<T, H>(h_fn: H, lambda: T, t: T, y: &[T], h: T) -> Result<T>
where
    T: Scalar,
    H: Fn(T, &[T]) -> Result<T>,
{
    if !(h > T::zero()) {
        return Err(Error::InvalidInput("stencil step h must be positive".into()));
    }
    let dt = (h_fn(t + h, y)? - h_fn(t - h, y)?) / (T::of(2.0) * h);
    Ok(dt - lambda * norm_sq(y))
}

/// Residual of the linear equation `∂H/∂y₀ = λ y_a y_a` for [`h_general`].
///
/// The `t`-independent term `Φ(y)` cancels from the central difference, so
/// only `λ t |y|²` enters the stencil. `Φ` is still evaluated to confirm that
/// `y` lies in its domain.
pub fn transformed_pde_residual<T: Scalar>(sol: &ImplicitSolution<T>, t: T, y: &[T], h: T) -> Result<T> {
    sol.phi().value(y)?;
    let lambda = sol.setup().lambda();
    let r2 = norm_sq(y);
    transformed_residual_with(|s, _| Ok(lambda * s * r2), lambda, t, y, h)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::expr::Expression;
    use crate::field::Builtin;
    use crate::hj::HjSetup;

    fn e1(src: &str, prefix: &str) -> Expression {
        Expression::parse_indexed(src, prefix, 1).unwrap()
    }

    #[test]
    fn forward_examples() {
        let img = forward_point(&e1("x1^2/2", "x"), &[2.0f64]).unwrap();
        assert_eq!(img, HodographImage { y: vec![2.0], h: 2.0 });
        let aff = Builtin::Affine { b: vec![1.5, -0.5], c: 0.0 };
        let img = forward_point(&aff, &[0.3f64, 7.0]).unwrap();
        assert_eq!(img.y, vec![1.5, -0.5]);
        assert!(img.h.abs() < 1e-15);
        let img = forward_point(&e1("x1^4", "x"), &[1.0f64]).unwrap();
        assert_eq!(img, HodographImage { y: vec![4.0], h: 3.0 });
    }

    #[test]
    fn inverse_examples() {
        let (x, u) = inverse_point(&e1("y1^2/2", "y"), &[2.0f64]).unwrap();
        assert_eq!((x, u), (vec![2.0], 2.0));
        let (x, u) = inverse_point(&e1("y1^4/4", "y"), &[1.0f64]).unwrap();
        assert_eq!((x, u), (vec![1.0], 0.75));
        let img = forward_point(&e1("x1^2/2", "x"), &[2.0f64]).unwrap();
        let (x, u) = inverse_point(&e1("y1^2/2", "y"), &img.y).unwrap();
        assert_eq!((x, u), (vec![2.0], 2.0));
    }

    #[test]
    fn h_general_examples() {
        let s = ImplicitSolution::new(HjSetup::new(1, -1.0).unwrap(), Arc::new(Builtin::Zero { n: 1 })).unwrap();
        assert_eq!(h_general(&s, 2.0f64, &[1.0]).unwrap(), -2.0);
        let s = ImplicitSolution::new(HjSetup::new(1, 0.5).unwrap(), Arc::new(Builtin::Quadratic { n: 1, alpha: 1.0 })).unwrap();
        assert_eq!(h_general(&s, 2.0f64, &[3.0]).unwrap(), 4.5);
        assert_eq!(h_general(&s, 0.0f64, &[3.0]).unwrap(), -4.5);
    }

    #[test]
    fn transformed_residual_examples() {
        let s = ImplicitSolution::new(HjSetup::<f64>::new(1, -1.0).unwrap(), Arc::new(e1("sin(y1) + y1^3", "y"))).unwrap();
        for &(t, y) in &[(0.3, -1.2), (2.0, 0.7), (-1.0, 1.5)] {
            assert!(transformed_pde_residual(&s, t, &[y], 1e-3).unwrap().abs() <= 1e-12);
        }
        let s = ImplicitSolution::new(HjSetup::<f64>::new(1, 0.5).unwrap(), Arc::new(e1("y1^4", "y"))).unwrap();
        assert!(transformed_pde_residual(&s, 1.0, &[2.0], 1e-3).unwrap().abs() <= 1e-12);
        let perturbed = |t: f64, y: &[f64]| Ok(h_general(&s, t, y)? + t * t);
        let r = transformed_residual_with(perturbed, 0.5, 1.0, &[0.0], 1e-3).unwrap();
        assert!((r - 2.0).abs() < 1e-9, "{r}");
    }
}
