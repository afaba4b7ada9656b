//! Discrete Legendre–Fenchel conjugate `g*(y) = max_x [x·y − g(x)]` over
//! grid nodes.
//!
//! The transform is separable: axis by axis, each 1-D lane is a
//! max-of-affine-functions query answered by an upper envelope and a
//! monotone pointer, `O(N + M)` per lane. The direct `O(N·M)` scan is kept as
//! the reference and accumulates in the same order, so the two agree bit for
//! bit.

use rayon::prelude::*;

use super::grid::{GridField, GridSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `out[j] = max_i (slopes[i] · queries[j] + intercepts[i])` for strictly
/// increasing `slopes` and non-decreasing `queries`.
pub fn max_affine_sorted<T: Scalar>(slopes: &[T], intercepts: &[T], queries: &[T]) -> Vec<T> {
    debug_assert_eq!(slopes.len(), intercepts.len());
    let line = |i: usize, y: T| slopes[i] * y + intercepts[i];
    let mut hull: Vec<usize> = Vec::with_capacity(slopes.len());
    for i in 0..slopes.len() {
        while hull.len() >= 2 {
            let (l1, l2) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // l2 is strictly below max(l1, i) everywhere
            let lhs = (intercepts[i] - intercepts[l1]) * (slopes[l2] - slopes[l1]);
            let rhs = (intercepts[l2] - intercepts[l1]) * (slopes[i] - slopes[l1]);
            if lhs > rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut k = 0;
    let mut out = Vec::with_capacity(queries.len());
    for &y in queries {
        while k + 1 < hull.len() && line(hull[k + 1], y) >= line(hull[k], y) {
            k += 1;
        }
        let mut best = line(hull[k], y);
        if k > 0 {
            best = best.max(line(hull[k - 1], y));
        }
        if k + 1 < hull.len() {
            best = best.max(line(hull[k + 1], y));
        }
        out.push(best);
    }
    out
}

fn check_dual(g: &GridField<impl Scalar>, dual_dim: usize) -> Result<()> {
    if g.dim() != dual_dim {
        return Err(Error::Grid(format!("dual box has dimension {dual_dim}, grid has {}", g.dim())));
    }
    Ok(())
}

/// Conjugate of the sampled `g`, evaluated on the nodes of `dual`.
pub fn conjugate_grid<T: Scalar>(g: &GridField<T>, dual: &GridSpec<T>) -> Result<GridField<T>> {
    check_dual(g, dual.dim())?;
    let n = g.dim();
    let primal = g.spec();
    // s holds max over processed axes of Σ x_a y_a − g(x), starting from −g
    let mut shape: Vec<usize> = primal.counts().to_vec();
    let mut s: Vec<T> = g.values().iter().map(|&v| -v).collect();
    for axis in 0..n {
        let xs = primal.axis_coords(axis);
        let ys = dual.axis_coords(axis);
        let stride: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let len_in = shape[axis];
        let len_out = ys.len();
        let lanes: Vec<Vec<T>> = (0..outer * stride)
            .into_par_iter()
            .map(|lane| {
                let (o, r) = (lane / stride, lane % stride);
                let base = o * len_in * stride + r;
                let intercepts: Vec<T> = (0..len_in).map(|i| s[base + i * stride]).collect();
                max_affine_sorted(&xs, &intercepts, &ys)
            })
            .collect();
        let mut next = vec![T::zero(); outer * len_out * stride];
        for (lane, vals) in lanes.into_iter().enumerate() {
            let (o, r) = (lane / stride, lane % stride);
            let base = o * len_out * stride + r;
            for (j, v) in vals.into_iter().enumerate() {
                next[base + j * stride] = v;
            }
        }
        shape[axis] = len_out;
        s = next;
    }
    GridField::new(dual.clone(), s)
}

/// Direct scan over every (primal, dual) node pair.
pub fn conjugate_grid_bruteforce<T: Scalar>(g: &GridField<T>, dual: &GridSpec<T>) -> Result<GridField<T>> {
    check_dual(g, dual.dim())?;
    let primal = g.spec();
    let xs: Vec<Vec<T>> = primal.points();
    let values = (0..dual.len())
        .map(|k| {
            let y = dual.point(k);
            xs.iter()
                .zip(g.values())
                .map(|(x, &gv)| x.iter().zip(&y).fold(-gv, |acc, (&xa, &ya)| xa * ya + acc))
                .fold(T::neg_infinity(), T::max)
        })
        .collect();
    GridField::new(dual.clone(), values)
}

/// Dual box spanning the range of the grid's finite-difference gradient,
/// padded by 10% on each side.
pub fn default_dual_box<T: Scalar>(g: &GridField<T>, counts: &[usize]) -> Result<GridSpec<T>> {
    let spec = g.spec();
    let n = g.dim();
    if counts.len() != n {
        return Err(Error::Grid(format!("need {n} dual counts, got {}", counts.len())));
    }
    let mut lo = vec![T::infinity(); n];
    let mut hi = vec![T::neg_infinity(); n];
    for k in 0..spec.len() {
        let idx = spec.unravel(k);
        for a in 0..n {
            if idx[a] + 1 < spec.counts()[a] {
                let mut nb = idx.clone();
                nb[a] += 1;
                let d = (g.at(&nb) - g.at(&idx)) / spec.spacing(a);
                lo[a] = lo[a].min(d);
                hi[a] = hi[a].max(d);
            }
        }
    }
    let tenth = T::of(0.1);
    for a in 0..n {
        let width = hi[a] - lo[a];
        let pad = if width > T::zero() { tenth * width } else { tenth * lo[a].abs().max(T::one()) };
        lo[a] = lo[a] - pad;
        hi[a] = hi[a] + pad;
    }
    GridSpec::new(lo, hi, counts.to_vec())
}

/// `Φ = −g*` on the dual grid: the parameter function whose implicit solution
/// starts from `u(x, 0) = g(x)` when `g` is convex.
pub fn phi_from_initial_data<T: Scalar>(g: &GridField<T>, dual: &GridSpec<T>) -> Result<GridField<T>> {
    conjugate_grid(g, dual)?.map(|v| -v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_square(count: usize) -> GridField<f64> {
        let spec = GridSpec::cube(1, -4.0, 4.0, count).unwrap();
        GridField::sample(spec, |p| Ok(p[0] * p[0] / 2.0)).unwrap()
    }

    #[test]
    fn half_square_is_self_conjugate() {
        let g = half_square(257);
        let dual = GridSpec::cube(1, -2.0, 2.0, 101).unwrap();
        let c = conjugate_grid(&g, &dual).unwrap();
        let h = g.spec().spacing(0);
        for (k, &v) in c.values().iter().enumerate() {
            let y = dual.point(k)[0];
            assert!((v - y * y / 2.0).abs() <= h * h / 2.0, "y={y} v={v}");
        }
        assert_eq!(c, conjugate_grid_bruteforce(&g, &dual).unwrap());
    }

    #[test]
    fn affine_conjugate_spikes_at_slope() {
        let spec = GridSpec::<f64>::cube(1, -2.0, 2.0, 41).unwrap();
        let b: f64 = 0.3;
        let g = GridField::sample(spec, |p| Ok(b * p[0])).unwrap();
        let dual = GridSpec::cube(1, -1.0, 1.0, 21).unwrap();
        let c = conjugate_grid(&g, &dual).unwrap();
        // all lines meet at y = b, so near-ties there are resolved differently
        let brute = conjugate_grid_bruteforce(&g, &dual).unwrap();
        for (p, q) in c.values().iter().zip(brute.values()) {
            assert!((p - q).abs() < 1e-12);
        }
        // nearest dual node to b is y = 0.3 (index 13): value 0
        assert!(c.values()[13].abs() < 1e-12);
        // grows like 2|y − b| away from it (box half-width 2)
        for (k, &v) in c.values().iter().enumerate() {
            let y = dual.point(k)[0];
            assert!((v - 2.0 * (y - b).abs()).abs() < 1e-12, "y={y}");
        }
    }

    #[test]
    fn abs_initial_data_gives_flat_phi_inside_unit_slopes() {
        let spec = GridSpec::cube(1, -2.0, 2.0, 81).unwrap();
        let g = GridField::sample(spec, |p: &[f64]| Ok(p[0].abs())).unwrap();
        let dual = GridSpec::cube(1, -2.0, 2.0, 41).unwrap();
        let phi = phi_from_initial_data(&g, &dual).unwrap();
        for (k, &v) in phi.values().iter().enumerate() {
            let y = dual.point(k)[0];
            let expect = if y.abs() <= 1.0 { 0.0 } else { -2.0 * (y.abs() - 1.0) };
            assert!((v - expect).abs() < 1e-12, "y={y} v={v}");
        }
    }

    #[test]
    fn scaled_quadratic_phi() {
        let alpha: f64 = 2.5;
        let spec = GridSpec::cube(1, -3.0, 3.0, 601).unwrap();
        let g = GridField::sample(spec, |p| Ok(alpha * p[0] * p[0] / 2.0)).unwrap();
        let dual = GridSpec::cube(1, -5.0, 5.0, 201).unwrap();
        let phi = phi_from_initial_data(&g, &dual).unwrap();
        let h = g.spec().spacing(0);
        for (k, &v) in phi.values().iter().enumerate() {
            let y = dual.point(k)[0];
            assert!((v + y * y / (2.0 * alpha)).abs() <= alpha * h * h, "y={y}");
        }
    }

    #[test]
    fn two_dimensional_matches_bruteforce_exactly() {
        let spec = GridSpec::new(vec![-1.0, -2.0], vec![1.5, 2.0], vec![17, 23]).unwrap();
        let g = GridField::sample(spec, |p: &[f64]| Ok(p[0] * p[0] + 0.5 * p[1] * p[1] + 0.3 * p[0] * p[1] + (p[0] - p[1]).exp() * 0.1)).unwrap();
        let dual = GridSpec::new(vec![-3.0, -2.5], vec![3.0, 2.5], vec![19, 13]).unwrap();
        assert_eq!(conjugate_grid(&g, &dual).unwrap(), conjugate_grid_bruteforce(&g, &dual).unwrap());
    }

    #[test]
    fn default_box_covers_gradient_range() {
        let g = half_square(81);
        let d = default_dual_box(&g, &[11]).unwrap();
        assert!(d.lower()[0] < -3.9 && d.upper()[0] > 3.9);
        assert!(default_dual_box(&g, &[11, 11]).is_err());
        let dual_mismatch = GridSpec::cube(2, -1.0, 1.0, 3).unwrap();
        assert!(conjugate_grid(&g, &dual_mismatch).is_err());
    }
}
