//! The Hamilton–Jacobi family `u_t + λ |∇u|² = 0` and its implicit general
//! solution of full rank:
//!
//! ```text
//! u = x·y − λ t |y|² + Φ(y),      x − 2λ t y + ∇Φ(y) = 0
//! ```
//!
//! With `λ = 1/2` these are the classical hodograph formulas
//! `u = x_a y_a − (t/2) y_a y_a + Φ` and `x_a − t y_a + ∂Φ/∂y_a = 0`.
//! Differentiating the condition gives `∇u = y` and
//! `Hess u = (2λt·I − Hess Φ)⁻¹`.

use crate::error::{Error, Result};
use crate::expr::JetValue;
use crate::field::SharedField;
use crate::linalg::DenseMatrix;
use crate::scalar::{dot, norm, norm_sq, Scalar};

/// Relative determinant threshold below which the condition Jacobian is
/// treated as singular (a caustic).
pub const CAUSTIC_DET_TOL: f64 = 1e-12;

/// Default relative singular-value threshold for [`rank_classify`].
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Dimension and convention coefficient of `u_t + λ |∇u|² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HjSetup<T> {
    n: usize,
    lambda: T,
}

impl<T: Scalar> HjSetup<T> {
    pub fn new(n: usize, lambda: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("dimension n must be at least 1".into()));
        }
        if lambda == T::zero() || !lambda.is_finite() {
            return Err(Error::InvalidInput("lambda must be nonzero".into()));
        }
        Ok(Self { n, lambda })
    }

    /// `u_t − |∇u|² = 0` (λ = −1).
    pub fn paper_eq1(n: usize) -> Result<Self> {
        Self::new(n, -T::one())
    }

    /// `u_t + ½|∇u|² = 0` (λ = +1/2), the equation the implicit formulas solve
    /// as written.
    pub fn paper_sol(n: usize) -> Result<Self> {
        Self::new(n, T::of(0.5))
    }

    /// Looks up a named preset: `"paper-eq1"` or `"paper-sol"`.
    pub fn from_preset(name: &str, n: usize) -> Result<Self> {
        match name {
            "paper-eq1" => Self::paper_eq1(n),
            "paper-sol" => Self::paper_sol(n),
            other => Err(Error::InvalidInput(format!("unknown convention preset '{other}'"))),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// `λ |p|²`.
    pub fn hamiltonian(&self, p: &[T]) -> T {
        self.lambda * norm_sq(p)
    }

    pub(crate) fn check_len(&self, what: &str, v: &[T]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::InvalidInput(format!("{what} has {} coordinates, expected {}", v.len(), self.n)));
        }
        Ok(())
    }
}

/// Hessian of `u` in `x`, or the marker for a singular condition Jacobian.
#[derive(Clone, Debug, PartialEq)]
pub enum HessianOutcome<T> {
    Regular(DenseMatrix<T>),
    /// `det(2λt·I − Hess Φ)` vanished; `u` has no finite Hessian here.
    Singular { n: usize, det: T },
}

impl<T: Scalar> HessianOutcome<T> {
    pub fn matrix(&self) -> Option<&DenseMatrix<T>> {
        match self {
            HessianOutcome::Regular(m) => Some(m),
            HessianOutcome::Singular { .. } => None,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, HessianOutcome::Singular { .. })
    }
}

/// Scale used by the caustic test: `max(1, max|J_ij|)^n`.
pub fn jacobian_scale<T: Scalar>(j: &DenseMatrix<T>) -> T {
    j.max_abs().max(T::one()).powi(j.dim() as i32)
}

/// `|det J| ≤ CAUSTIC_DET_TOL · scale(J)`.
pub fn is_caustic<T: Scalar>(det: T, j: &DenseMatrix<T>) -> bool {
    det.abs() <= T::of(CAUSTIC_DET_TOL) * jacobian_scale(j)
}

/// Number of singular values exceeding `tol · σ_max`; zero for the zero
/// matrix.
pub fn numerical_rank<T: Scalar>(m: &DenseMatrix<T>, tol: T) -> usize {
    let sv = m.singular_values();
    let top = sv.first().copied().unwrap_or_else(T::zero);
    if top == T::zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top).count()
}

/// Rank of the solution at a point.
///
/// A singular marker means the eigenvalues of `Hess u` are unbounded rather
/// than zero, so it classifies as full rank `n`.
pub fn rank_classify<T: Scalar>(hess_u: &HessianOutcome<T>, tol: T) -> usize {
    match hess_u {
        HessianOutcome::Regular(m) => numerical_rank(m, tol),
        HessianOutcome::Singular { n, .. } => *n,
    }
}

/// Everything the branch solver needs at one parameter vector.
#[derive(Clone, Debug)]
pub struct ConditionEval<T> {
    pub residual: Vec<T>,
    pub jacobian: DenseMatrix<T>,
    pub u: T,
}

/// An implicit solution: a convention plus a parameter function `Φ(y)`.
#[derive(Clone)]
pub struct ImplicitSolution<T: Scalar> {
    setup: HjSetup<T>,
    phi: SharedField<T>,
}

impl<T: Scalar> std::fmt::Debug for ImplicitSolution<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImplicitSolution").field("setup", &self.setup).finish_non_exhaustive()
    }
}

impl<T: Scalar> ImplicitSolution<T> {
    pub fn new(setup: HjSetup<T>, phi: SharedField<T>) -> Result<Self> {
        if phi.dim() != setup.n() {
            return Err(Error::InvalidInput(format!(
                "phi has {} variables but the problem dimension is {}",
                phi.dim(),
                setup.n()
            )));
        }
        Ok(Self { setup, phi })
    }

    pub fn setup(&self) -> &HjSetup<T> {
        &self.setup
    }

    pub fn phi(&self) -> &SharedField<T> {
        &self.phi
    }

    pub fn n(&self) -> usize {
        self.setup.n()
    }

    fn phi_jet(&self, y: &[T]) -> Result<JetValue<T>> {
        self.setup.check_len("y", y)?;
        self.phi.jet(y)
    }

    fn two_lambda_t(&self, t: T) -> T {
        T::of(2.0) * self.setup.lambda() * t
    }

    /// `F(y) = x − 2λt·y + ∇Φ(y)`.
    pub fn condition_residual(&self, x: &[T], t: T, y: &[T]) -> Result<Vec<T>> {
        self.setup.check_len("x", x)?;
        let jet = self.phi_jet(y)?;
        let k = self.two_lambda_t(t);
        Ok(x.iter().zip(y).zip(&jet.gradient).map(|((&xa, &ya), &ga)| xa - k * ya + ga).collect())
    }

    /// `∂F/∂y = −2λt·I + Hess Φ(y)`.
    pub fn condition_jacobian(&self, t: T, y: &[T]) -> Result<DenseMatrix<T>> {
        let jet = self.phi_jet(y)?;
        Ok(jet.hessian.shifted(-self.two_lambda_t(t)))
    }

    /// `u = x·y − λt|y|² + Φ(y)`; `y` need not be a root.
    pub fn u_from_y(&self, x: &[T], t: T, y: &[T]) -> Result<T> {
        self.setup.check_len("x", x)?;
        self.setup.check_len("y", y)?;
        let phi = self.phi.value(y)?;
        Ok(dot(x, y) - self.setup.lambda() * t * norm_sq(y) + phi)
    }

    /// Residual, Jacobian and `u` from a single jet evaluation of `Φ`.
    pub fn evaluate(&self, x: &[T], t: T, y: &[T]) -> Result<ConditionEval<T>> {
        self.setup.check_len("x", x)?;
        let jet = self.phi_jet(y)?;
        let k = self.two_lambda_t(t);
        let residual = x.iter().zip(y).zip(&jet.gradient).map(|((&xa, &ya), &ga)| xa - k * ya + ga).collect();
        let u = dot(x, y) - self.setup.lambda() * t * norm_sq(y) + jet.value;
        Ok(ConditionEval { residual, jacobian: jet.hessian.shifted(-k), u })
    }

    /// `Hess u = (2λt·I − Hess Φ(y))⁻¹`, or the singular marker at a caustic.
    pub fn hessian_u(&self, t: T, y: &[T]) -> Result<HessianOutcome<T>> {
        let jet = self.phi_jet(y)?;
        let m = jet.hessian.scale(-T::one()).shifted(self.two_lambda_t(t));
        Ok(invert_or_mark(&m))
    }
}

pub(crate) fn invert_or_mark<T: Scalar>(m: &DenseMatrix<T>) -> HessianOutcome<T> {
    let det = m.determinant();
    if is_caustic(det, m) {
        return HessianOutcome::Singular { n: m.dim(), det };
    }
    match m.inverse() {
        Some(inv) => HessianOutcome::Regular(inv),
        None => HessianOutcome::Singular { n: m.dim(), det },
    }
}

/// Rank-0 solution `u = b·x − λ|b|²t + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneWaveSolution<T> {
    pub setup: HjSetup<T>,
    pub b: Vec<T>,
    pub c: T,
}

impl<T: Scalar> PlaneWaveSolution<T> {
    pub fn new(setup: HjSetup<T>, b: Vec<T>, c: T) -> Result<Self> {
        setup.check_len("b", &b)?;
        Ok(Self { setup, b, c })
    }

    pub fn eval(&self, x: &[T], t: T) -> T {
        dot(&self.b, x) - self.setup.lambda() * norm_sq(&self.b) * t + self.c
    }

    /// The spatial Hessian, identically zero.
    pub fn hessian_u(&self) -> HessianOutcome<T> {
        HessianOutcome::Regular(DenseMatrix::zeros(self.b.len()))
    }
}

pub fn plane_wave_eval<T: Scalar>(pw: &PlaneWaveSolution<T>, x: &[T], t: T) -> T {
    pw.eval(x, t)
}

/// `u_t + λ|∇u|²` by central differences of step `h` on a black-box `u(x, t)`.
pub fn pde_residual_numeric<T, U>(u: U, setup: &HjSetup<T>, x: &[T], t: T, h: T) -> Result<T>
where
    T: Scalar,
    U: Fn(&[T], T) -> Result<T>,
{
    if !(h > T::zero()) {
        return Err(Error::InvalidInput("stencil step h must be positive".into()));
    }
    setup.check_len("x", x)?;
    let eval = |p: &[T], s: T| -> Result<T> {
        match u(p, s) {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(v) => Err(stencil_error(p, s, format!("non-finite value {v}"))),
            Err(e) => Err(stencil_error(p, s, e.to_string())),
        }
    };
    let two_h = T::of(2.0) * h;
    let u_t = (eval(x, t + h)? - eval(x, t - h)?) / two_h;
    let mut grad = Vec::with_capacity(x.len());
    let mut p = x.to_vec();
    for a in 0..x.len() {
        p[a] = x[a] + h;
        let up = eval(&p, t)?;
        p[a] = x[a] - h;
        let um = eval(&p, t)?;
        p[a] = x[a];
        grad.push((up - um) / two_h);
    }
    Ok(u_t + setup.hamiltonian(&grad))
}

fn stencil_error<T: Scalar>(p: &[T], s: T, reason: String) -> Error {
    let mut point: Vec<f64> = p.iter().map(|v| v.as_f64()).collect();
    point.push(s.as_f64());
    Error::Stencil { point, reason }
}

/// One root `y*` of the condition at a query point, with diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchResult<T> {
    pub y: Vec<T>,
    pub u: T,
    pub hess_u: HessianOutcome<T>,
    pub rank: usize,
    pub converged: bool,
    pub iterations: usize,
    pub condition_residual_norm: T,
    /// `det(∂F/∂y)` at `y`.
    pub det_j: T,
}

impl<T: Scalar> BranchResult<T> {
    pub(crate) fn at_root(sol: &ImplicitSolution<T>, x: &[T], t: T, y: Vec<T>, iterations: usize, converged: bool, rank_tol: T) -> Result<Self> {
        let ev = sol.evaluate(x, t, &y)?;
        let det_j = ev.jacobian.determinant();
        let hess_u = invert_or_mark(&ev.jacobian.scale(-T::one()));
        let rank = rank_classify(&hess_u, rank_tol);
        Ok(Self {
            u: ev.u,
            condition_residual_norm: norm(&ev.residual),
            y,
            hess_u,
            rank,
            converged,
            iterations,
            det_j,
        })
    }
}
