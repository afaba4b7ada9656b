//! Straight characteristics of `u_t + λ|∇u|² = 0` from initial data `g`:
//! `p = ∇g(x₀)`, `x(t) = x₀ + 2λt·p`, `u = g(x₀) + λt|p|²`.

use crate::error::Result;
use crate::field::ScalarField;
use crate::hj::HjSetup;
use crate::hodograph::GridSpec;
use crate::scalar::{norm_sq, Scalar};

/// One ray evaluated at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct RaySample<T> {
    pub x0: Vec<T>,
    pub x: Vec<T>,
    pub u: T,
    /// The (constant) gradient carried by the ray.
    pub p: Vec<T>,
}

pub fn characteristics_solve<T: Scalar>(
    g: &dyn ScalarField<T>,
    setup: &HjSetup<T>,
    x0_lattice: &GridSpec<T>,
    t: T,
) -> Result<Vec<RaySample<T>>> {
    setup.check_len("x0 lattice", x0_lattice.lower())?;
    let k = T::of(2.0) * setup.lambda() * t;
    (0..x0_lattice.len())
        .map(|i| {
            let x0 = x0_lattice.point(i);
            let jet = g.jet(&x0)?;
            let p = jet.gradient;
            let x = x0.iter().zip(&p).map(|(&a, &b)| a + k * b).collect();
            let u = jet.value + setup.lambda() * t * norm_sq(&p);
            Ok(RaySample { x0, x, u, p })
        })
        .collect()
}
