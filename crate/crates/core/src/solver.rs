//! Root finding for the implicit condition `x − 2λt·y + ∇Φ(y) = 0`: damped
//! Newton, multistart over a seed lattice, branch selection, and
//! continuation sweeps with caustic flags.

use std::cmp::Ordering;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hj::{is_caustic, BranchResult, ImplicitSolution, DEFAULT_RANK_TOL};
use crate::hodograph::GridSpec;
use crate::scalar::{norm, to_f64_vec, Scalar};

/// Relative tolerance under which two branch values of `u` count as tied.
pub const U_TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchPolicy {
    All,
    MinU,
    MaxU,
}

impl FromStr for BranchPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(BranchPolicy::All),
            "min-u" => Ok(BranchPolicy::MinU),
            "max-u" => Ok(BranchPolicy::MaxU),
            other => Err(Error::InvalidInput(format!("unknown branch policy '{other}'"))),
        }
    }
}

impl BranchPolicy {
    pub fn name(self) -> &'static str {
        match self {
            BranchPolicy::All => "all",
            BranchPolicy::MinU => "min-u",
            BranchPolicy::MaxU => "max-u",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions<T> {
    /// Target for ‖F(y)‖₂.
    pub newton_tol: T,
    pub max_iter: usize,
    /// Backtracking factor applied to the step length.
    pub damping: T,
    /// Smallest step length tried before giving up.
    pub min_step: T,
    pub multistart_lower: Vec<T>,
    pub multistart_upper: Vec<T>,
    /// Seeds per axis.
    pub multistart_count: usize,
    pub dedup_tol: T,
    pub branch_policy: BranchPolicy,
    pub rank_tol: T,
}

impl<T: Scalar> SolveOptions<T> {
    /// Defaults with a seed box of `[-2, 2]^n`.
    pub fn new(n: usize) -> Self {
        Self {
            newton_tol: T::of(1e-10),
            max_iter: 50,
            damping: T::of(0.5),
            min_step: T::of(1e-6),
            multistart_lower: vec![T::of(-2.0); n],
            multistart_upper: vec![T::of(2.0); n],
            multistart_count: 7,
            dedup_tol: T::of(1e-6),
            branch_policy: BranchPolicy::MinU,
            rank_tol: T::of(DEFAULT_RANK_TOL),
        }
    }

    pub fn with_box(mut self, lower: T, upper: T) -> Self {
        let n = self.multistart_lower.len();
        self.multistart_lower = vec![lower; n];
        self.multistart_upper = vec![upper; n];
        self
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.multistart_count = count;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let positive = |v: T, name: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be positive")))
            }
        };
        positive(self.newton_tol, "newton_tol")?;
        positive(self.min_step, "min_step")?;
        positive(self.dedup_tol, "dedup_tol")?;
        positive(self.rank_tol, "rank_tol")?;
        if !(self.damping > T::zero() && self.damping < T::one()) {
            return Err(Error::InvalidInput("damping must lie in (0, 1)".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        if self.multistart_count == 0 {
            return Err(Error::InvalidInput("multistart_count must be at least 1".into()));
        }
        if self.multistart_lower.len() != n || self.multistart_upper.len() != n {
            return Err(Error::InvalidInput(format!("multistart box must have dimension {n}")));
        }
        if self.multistart_lower.iter().zip(&self.multistart_upper).any(|(&l, &u)| !(l <= u)) {
            return Err(Error::InvalidInput("multistart box is empty".into()));
        }
        Ok(())
    }

    /// Row-major seed lattice; a single seed per axis sits at the box centre.
    pub fn seeds(&self) -> Vec<Vec<T>> {
        let n = self.multistart_lower.len();
        let m = self.multistart_count;
        let coord = |a: usize, i: usize| {
            let (l, u) = (self.multistart_lower[a], self.multistart_upper[a]);
            if m == 1 {
                (l + u) / T::of(2.0)
            } else {
                l + (u - l) * T::of_usize(i) / T::of_usize(m - 1)
            }
        };
        let total = m.pow(n as u32);
        (0..total)
            .map(|mut k| {
                let mut p = vec![T::zero(); n];
                for a in (0..n).rev() {
                    p[a] = coord(a, k % m);
                    k /= m;
                }
                p
            })
            .collect()
    }
}

/// Damped Newton on the implicit condition from `y0`.
///
/// A Jacobian flagged singular is regularized once by `+μI`,
/// `μ = 1e-8·max(1, max|J|)`; if that step cannot reduce the residual the
/// singularity is reported as an error.
pub fn newton_solve<T: Scalar>(
    sol: &ImplicitSolution<T>,
    x: &[T],
    t: T,
    y0: &[T],
    opts: &SolveOptions<T>,
) -> Result<BranchResult<T>> {
    let mut y = y0.to_vec();
    let mut ev = sol.evaluate(x, t, &y)?;
    let mut fnorm = norm(&ev.residual);
    let mut iterations = 0;
    while !(fnorm <= opts.newton_tol) && iterations < opts.max_iter {
        let mut jac = ev.jacobian.clone();
        let det = jac.determinant();
        let regularized = is_caustic(det, &jac);
        if regularized {
            let mu = T::of(1e-8) * jac.max_abs().max(T::one());
            jac = jac.shifted(mu);
        }
        let rhs: Vec<T> = ev.residual.iter().map(|&f| -f).collect();
        let delta = jac
            .solve(&rhs)
            .ok_or_else(|| Error::SingularJacobian { y: to_f64_vec(&y), det: det.as_f64() })?;
        let mut step = T::one();
        let mut last_domain: Option<Error> = None;
        let mut any_ok = false;
        let accepted = loop {
            let trial: Vec<T> = y.iter().zip(&delta).map(|(&a, &d)| a + step * d).collect();
            match sol.evaluate(x, t, &trial) {
                Ok(next) => {
                    any_ok = true;
                    let nn = norm(&next.residual);
                    if nn < fnorm {
                        break Some((trial, next, nn));
                    }
                }
                Err(e) => last_domain = Some(e),
            }
            step = step * opts.damping;
            if step < opts.min_step {
                break None;
            }
        };
        match accepted {
            Some((trial, next, nn)) => {
                y = trial;
                ev = next;
                fnorm = nn;
                iterations += 1;
            }
            None if regularized => {
                return Err(Error::SingularJacobian { y: to_f64_vec(&y), det: det.as_f64() });
            }
            None if !any_ok => {
                let reason = last_domain.map(|e| e.to_string()).unwrap_or_default();
                return Err(Error::DomainEscape { y: to_f64_vec(&y), reason });
            }
            None => break,
        }
    }
    let converged = fnorm <= opts.newton_tol;
    BranchResult::at_root(sol, x, t, y, iterations, converged, opts.rank_tol)
}

/// Deduplicated converged roots at one query point, sorted by `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchSet<T> {
    pub x: Vec<T>,
    pub t: T,
    pub branches: Vec<BranchResult<T>>,
    pub seeds_tried: usize,
    pub singular_failures: usize,
    pub domain_failures: usize,
    pub not_converged: usize,
}

impl<T: Scalar> BranchSet<T> {
    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }
}

fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (p, q) in a.iter().zip(b) {
        match p.partial_cmp(q).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn u_tied<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= T::of(U_TIE_TOL) * a.abs().max(b.abs()).max(T::one())
}

/// Orders by `u`, treating near-equal values as ties broken by `y`.
fn branch_order<T: Scalar>(a: &BranchResult<T>, b: &BranchResult<T>) -> Ordering {
    if u_tied(a.u, b.u) {
        lex_cmp(&a.y, &b.y)
    } else {
        a.u.partial_cmp(&b.u).unwrap_or(Ordering::Equal)
    }
}

/// Newton from `extra_seeds` first, then from the option's seed lattice.
pub fn multistart_with_seeds<T: Scalar>(
    sol: &ImplicitSolution<T>,
    x: &[T],
    t: T,
    extra_seeds: &[Vec<T>],
    opts: &SolveOptions<T>,
) -> Result<BranchSet<T>> {
    opts.validate(sol.n())?;
    sol.setup().check_len("x", x)?;
    let lattice = opts.seeds();
    let mut set = BranchSet {
        x: x.to_vec(),
        t,
        branches: Vec::new(),
        seeds_tried: 0,
        singular_failures: 0,
        domain_failures: 0,
        not_converged: 0,
    };
    for seed in extra_seeds.iter().chain(&lattice) {
        set.seeds_tried += 1;
        match newton_solve(sol, x, t, seed, opts) {
            Ok(b) if b.converged => {
                let dup = set.branches.iter().any(|o| {
                    let d: Vec<T> = o.y.iter().zip(&b.y).map(|(&p, &q)| p - q).collect();
                    norm(&d) <= opts.dedup_tol
                });
                if !dup {
                    set.branches.push(b);
                }
            }
            Ok(_) => set.not_converged += 1,
            Err(Error::SingularJacobian { .. }) => set.singular_failures += 1,
            Err(_) => set.domain_failures += 1,
        }
    }
    set.branches.sort_by(branch_order);
    Ok(set)
}

/// All roots reachable from the seed lattice in `opts`.
pub fn multistart_branches<T: Scalar>(
    sol: &ImplicitSolution<T>,
    x: &[T],
    t: T,
    opts: &SolveOptions<T>,
) -> Result<BranchSet<T>> {
    multistart_with_seeds(sol, x, t, &[], opts)
}

/// Picks the extremal branch under `policy`; ties go to the
/// lexicographically smallest `y`.
pub fn select_branch<T: Scalar>(set: &BranchSet<T>, policy: BranchPolicy) -> Result<&BranchResult<T>> {
    if set.branches.is_empty() {
        return Err(Error::InvalidInput("no branch to select from".into()));
    }
    let pick = |better: fn(&BranchResult<T>, &BranchResult<T>) -> bool| {
        let mut best = &set.branches[0];
        for b in &set.branches[1..] {
            if better(b, best) {
                best = b;
            }
        }
        best
    };
    match policy {
        BranchPolicy::All => Err(Error::InvalidInput("policy 'all' selects no single branch".into())),
        BranchPolicy::MinU => Ok(pick(|b, best| branch_order(b, best) == Ordering::Less)),
        BranchPolicy::MaxU => Ok(pick(|b, best| {
            if u_tied(b.u, best.u) {
                lex_cmp(&b.y, &best.y) == Ordering::Less
            } else {
                b.u > best.u
            }
        })),
    }
}

/// A black-box `u(x, t)` following the branch through `seed` by Newton
/// continuation.
pub fn branch_field<'a, T: Scalar>(
    sol: &'a ImplicitSolution<T>,
    seed: Vec<T>,
    opts: &'a SolveOptions<T>,
) -> impl Fn(&[T], T) -> Result<T> + 'a {
    move |x: &[T], t: T| {
        let b = newton_solve(sol, x, t, &seed, opts)?;
        if !b.converged {
            return Err(Error::InvalidInput(format!(
                "branch continuation did not converge at x = {:?}, t = {t}",
                to_f64_vec(x)
            )));
        }
        Ok(b.u)
    }
}

/// One lattice point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint<T> {
    pub set: BranchSet<T>,
    /// Smallest `det J` over the branches, if any branch converged.
    pub min_det_j: Option<T>,
    pub caustic: bool,
    pub failure: Option<String>,
}

impl<T: Scalar> SweepPoint<T> {
    pub fn x(&self) -> &[T] {
        &self.set.x
    }

    pub fn t(&self) -> T {
        self.set.t
    }

    pub fn branch_count(&self) -> usize {
        self.set.len()
    }
}

/// Per-point branch sets over `grid × t_list`, stored t-major then row-major.
#[derive(Clone, Debug)]
pub struct SweepTable<T> {
    pub grid: GridSpec<T>,
    pub t_list: Vec<T>,
    pub points: Vec<SweepPoint<T>>,
}

impl<T: Scalar> SweepTable<T> {
    pub fn at(&self, t_index: usize, flat: usize) -> &SweepPoint<T> {
        &self.points[t_index * self.grid.len() + flat]
    }

    pub fn caustic_count(&self) -> usize {
        self.points.iter().filter(|p| p.caustic).count()
    }
}

/// Flat index of the row-major predecessor used for warm starts.
fn warm_neighbor<T: Scalar>(grid: &GridSpec<T>, flat: usize) -> Option<usize> {
    let idx = grid.unravel(flat);
    let a = (0..idx.len()).rev().find(|&a| idx[a] > 0)?;
    let mut nb = idx;
    nb[a] -= 1;
    Some(grid.ravel(&nb))
}

fn sweep_slice<T: Scalar>(
    sol: &ImplicitSolution<T>,
    grid: &GridSpec<T>,
    t: T,
    opts: &SolveOptions<T>,
) -> Result<Vec<SweepPoint<T>>> {
    let mut out: Vec<SweepPoint<T>> = Vec::with_capacity(grid.len());
    for flat in 0..grid.len() {
        let x = grid.point(flat);
        let warm: Vec<Vec<T>> = warm_neighbor(grid, flat)
            .map(|k| out[k].set.branches.iter().map(|b| b.y.clone()).collect())
            .unwrap_or_default();
        let set = multistart_with_seeds(sol, &x, t, &warm, opts)?;
        let min_det_j = set.branches.iter().map(|b| b.det_j).fold(None, |m: Option<T>, d| Some(m.map_or(d, |m| m.min(d))));
        let failure = if set.is_empty() {
            Some(format!(
                "no branch converged ({} singular, {} domain, {} not converged)",
                set.singular_failures, set.domain_failures, set.not_converged
            ))
        } else {
            None
        };
        let caustic = set.branches.iter().any(|b| b.hess_u.is_singular()) || (set.is_empty() && set.singular_failures > 0);
        out.push(SweepPoint { set, min_det_j, caustic, failure });
    }
    Ok(out)
}

/// Continuation sweep over `grid × t_list`.
///
/// Each point is warm-started from its row-major predecessor's branches plus
/// the fresh seed lattice. Time slices are independent and run in parallel;
/// the result does not depend on the schedule. A point is flagged as a
/// caustic when a branch has a singular Jacobian, when every seed failed on a
/// singular Jacobian, or when the sign of its smallest `det J` differs from
/// that of an earlier neighbour along any axis or in time.
pub fn sweep_grid<T: Scalar>(
    sol: &ImplicitSolution<T>,
    grid: &GridSpec<T>,
    t_list: &[T],
    opts: &SolveOptions<T>,
) -> Result<SweepTable<T>> {
    if grid.dim() != sol.n() {
        return Err(Error::InvalidInput(format!("x-grid has dimension {}, expected {}", grid.dim(), sol.n())));
    }
    if t_list.is_empty() {
        return Err(Error::InvalidInput("t-list is empty".into()));
    }
    if t_list.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidInput("t-list must be sorted".into()));
    }
    opts.validate(sol.n())?;
    let slices: Vec<Vec<SweepPoint<T>>> =
        t_list.par_iter().map(|&t| sweep_slice(sol, grid, t, opts)).collect::<Result<_>>()?;
    let mut points: Vec<SweepPoint<T>> = slices.into_iter().flatten().collect();

    let m = grid.len();
    let sign_of = |p: &SweepPoint<T>| p.min_det_j.filter(|d| *d != T::zero()).map(|d| d > T::zero());
    let mut flags = vec![false; points.len()];
    for ti in 0..t_list.len() {
        for flat in 0..m {
            let k = ti * m + flat;
            let Some(s) = sign_of(&points[k]) else { continue };
            let idx = grid.unravel(flat);
            let mut neighbors: Vec<usize> = (0..idx.len())
                .filter(|&a| idx[a] > 0)
                .map(|a| {
                    let mut nb = idx.clone();
                    nb[a] -= 1;
                    ti * m + grid.ravel(&nb)
                })
                .collect();
            if ti > 0 {
                neighbors.push(k - m);
            }
            flags[k] = neighbors.into_iter().any(|nb| sign_of(&points[nb]).is_some_and(|o| o != s));
        }
    }
    for (p, f) in points.iter_mut().zip(flags) {
        p.caustic |= f;
    }
    Ok(SweepTable { grid: grid.clone(), t_list: t_list.to_vec(), points })
}
