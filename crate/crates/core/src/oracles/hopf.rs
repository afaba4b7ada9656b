//! Exhaustive extremization of `x·y − λt|y|² + Φ(y)` over a lattice of `y`,
//! refined by coordinate-wise golden-section search.

use crate::error::{Error, Result};
use crate::hj::ImplicitSolution;
use crate::hodograph::GridSpec;
use crate::scalar::Scalar;
use crate::solver::BranchPolicy;

#[derive(Clone, Debug, PartialEq)]
pub struct HopfResult<T> {
    pub u: T,
    pub y: Vec<T>,
}

const GOLDEN_ITERS: usize = 80;

/// Extremal value of the implicit-solution objective over `lattice`
/// (`MinU` or `MaxU`), then `refine_steps` rounds of golden-section search
/// within one cell of the best node.
pub fn hopf_bruteforce<T: Scalar>(
    sol: &ImplicitSolution<T>,
    x: &[T],
    t: T,
    lattice: &GridSpec<T>,
    refine_steps: usize,
    policy: BranchPolicy,
) -> Result<HopfResult<T>> {
    let sign = match policy {
        BranchPolicy::MinU => T::one(),
        BranchPolicy::MaxU => -T::one(),
        BranchPolicy::All => return Err(Error::InvalidInput("hopf oracle needs min-u or max-u".into())),
    };
    if lattice.dim() != sol.n() {
        return Err(Error::InvalidInput(format!("y-lattice has dimension {}, expected {}", lattice.dim(), sol.n())));
    }
    // minimize sign·u; points outside the domain of phi are skipped
    let obj = |y: &[T]| sol.u_from_y(x, t, y).ok().filter(|v| v.is_finite()).map(|v| sign * v);
    let mut best: Option<(T, Vec<T>)> = None;
    for k in 0..lattice.len() {
        let y = lattice.point(k);
        if let Some(v) = obj(&y) {
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, y));
            }
        }
    }
    let (mut fbest, mut y) = best.ok_or_else(|| Error::Domain("objective undefined on the whole lattice".into()))?;

    let inv_phi = T::of((5f64.sqrt() - 1.0) / 2.0);
    for _ in 0..refine_steps {
        for a in 0..y.len() {
            let h = lattice.spacing(a);
            let mut lo = (y[a] - h).max(lattice.lower()[a]);
            let mut hi = (y[a] + h).min(lattice.upper()[a]);
            let mut probe = y.clone();
            let mut line = |v: T| {
                probe[a] = v;
                obj(&probe).unwrap_or_else(T::infinity)
            };
            let mut c = hi - inv_phi * (hi - lo);
            let mut d = lo + inv_phi * (hi - lo);
            let (mut fc, mut fd) = (line(c), line(d));
            for _ in 0..GOLDEN_ITERS {
                if fc < fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - inv_phi * (hi - lo);
                    fc = line(c);
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + inv_phi * (hi - lo);
                    fd = line(d);
                }
            }
            let (cand, fcand) = if fc < fd { (c, fc) } else { (d, fd) };
            if fcand < fbest {
                fbest = fcand;
                y[a] = cand;
            }
        }
    }
    Ok(HopfResult { u: sign * fbest, y })
}
