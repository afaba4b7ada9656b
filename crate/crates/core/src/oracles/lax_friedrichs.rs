//! First-order monotone scheme with the global Lax–Friedrichs numerical
//! Hamiltonian
//!
//! ```text
//! H_LF(p⁻, p⁺) = λ |(p⁻ + p⁺)/2|² − Σ_a (σ_a/2)(p⁺_a − p⁻_a),   σ_a = 2|λ| max |p_a|
//! ```
//!
//! on a uniform grid, with one ghost layer per side filled by linear
//! extrapolation and `dt = cfl / Σ_a (σ_a / h_a)`.

use crate::error::{Error, Result};
use crate::hj::HjSetup;
use crate::hodograph::GridField;
use crate::scalar::Scalar;

/// Growth of `max|u|` beyond which the run is aborted.
pub const INSTABILITY_FACTOR: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct LfOptions<T> {
    pub cfl: T,
    /// Fixed dissipation coefficients; must dominate `2|λ| max|p_a|` at every
    /// step. `None` recomputes them from the current solution each step.
    pub sigma: Option<Vec<T>>,
}

pub fn lax_friedrichs_solve<T: Scalar>(g: &GridField<T>, setup: &HjSetup<T>, t_final: T, cfl: T) -> Result<GridField<T>> {
    lax_friedrichs_solve_with(g, setup, t_final, &LfOptions { cfl, sigma: None })
}

pub fn lax_friedrichs_solve_with<T: Scalar>(
    g: &GridField<T>,
    setup: &HjSetup<T>,
    t_final: T,
    opts: &LfOptions<T>,
) -> Result<GridField<T>> {
    if !(t_final > T::zero()) {
        return Err(Error::InvalidInput("final time must be positive".into()));
    }
    if !(opts.cfl > T::zero() && opts.cfl < T::one()) {
        return Err(Error::InvalidInput("cfl must lie in (0, 1)".into()));
    }
    let spec = g.spec().clone();
    let n = spec.dim();
    setup.check_len("grid", spec.lower())?;
    if let Some(s) = &opts.sigma {
        if s.len() != n || s.iter().any(|v| !(*v >= T::zero())) {
            return Err(Error::InvalidInput("sigma must hold one non-negative value per axis".into()));
        }
    }
    let counts = spec.counts().to_vec();
    let h: Vec<T> = (0..n).map(|a| spec.spacing(a)).collect();
    let strides: Vec<usize> = (0..n).map(|a| counts[a + 1..].iter().product()).collect();
    let len = spec.len();
    let lambda = setup.lambda();
    let two = T::of(2.0);
    let half = T::of(0.5);

    let mut u = g.values().to_vec();
    let initial_max = u.iter().fold(T::zero(), |m, v| m.max(v.abs())).max(T::min_positive_value());
    let mut p_minus = vec![T::zero(); len * n];
    let mut p_plus = vec![T::zero(); len * n];
    let mut time = T::zero();

    while time < t_final {
        for k in 0..len {
            let idx = spec.unravel(k);
            for a in 0..n {
                let s = strides[a];
                let i = idx[a];
                let last = counts[a] - 1;
                // ghost u₋₁ = 2u₀ − u₁ makes the outer one-sided slope equal the inner one
                let (pm, pp) = if i == 0 {
                    let d = (u[k + s] - u[k]) / h[a];
                    (d, d)
                } else if i == last {
                    let d = (u[k] - u[k - s]) / h[a];
                    (d, d)
                } else {
                    ((u[k] - u[k - s]) / h[a], (u[k + s] - u[k]) / h[a])
                };
                p_minus[k * n + a] = pm;
                p_plus[k * n + a] = pp;
            }
        }
        let needed: Vec<T> = (0..n)
            .map(|a| {
                let m = (0..len).fold(T::zero(), |m, k| m.max(p_minus[k * n + a].abs()).max(p_plus[k * n + a].abs()));
                two * lambda.abs() * m
            })
            .collect();
        let sigma = match &opts.sigma {
            Some(fixed) => {
                if let Some(a) = (0..n).find(|&a| needed[a] > fixed[a]) {
                    return Err(Error::InvalidInput(format!(
                        "fixed sigma[{a}] = {} below required {}",
                        fixed[a], needed[a]
                    )));
                }
                fixed.clone()
            }
            None => needed,
        };
        let rate: T = (0..n).map(|a| sigma[a] / h[a]).sum();
        if rate == T::zero() {
            // every slope is zero, so u is stationary
            break;
        }
        let dt = (opts.cfl / rate).min(t_final - time);
        let next: Vec<T> = (0..len)
            .map(|k| {
                let mut ham = T::zero();
                let mut diss = T::zero();
                for a in 0..n {
                    let (pm, pp) = (p_minus[k * n + a], p_plus[k * n + a]);
                    let avg = half * (pm + pp);
                    ham = ham + avg * avg;
                    diss = diss + half * sigma[a] * (pp - pm);
                }
                u[k] - dt * (lambda * ham - diss)
            })
            .collect();
        u = next;
        time = time + dt;
        let max_abs = u.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if !max_abs.is_finite() || max_abs > T::of(INSTABILITY_FACTOR) * initial_max {
            return Err(Error::Unstable { time: time.as_f64(), max_abs: max_abs.as_f64() });
        }
    }
    GridField::new(spec, u)
}
