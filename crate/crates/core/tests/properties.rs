mod common;

use std::sync::Arc;

use common::{d4, max_abs_diff, random_expr};
use hodohj_core::hj::numerical_rank;
use hodohj_core::hodograph::{
    conjugate_grid, conjugate_grid_bruteforce, forward_point, h_general, inverse_point, x_of_y, GridSpec,
};
use hodohj_core::oracles::{lax_friedrichs_solve_with, LfOptions};
use hodohj_core::solver::branch_field;
use hodohj_core::{
    multistart_branches, sweep_grid, Builtin, Expression, Field, Matrix, Options, Setup, Solution,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 3] = ["x1", "x2", "x3"];

fn rotation(n: usize, angles: &[f64]) -> Matrix {
    let mut q = Matrix::identity(n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let (s, c) = angles[k % angles.len()].sin_cos();
            let mut g = Matrix::identity(n);
            g[(i, i)] = c;
            g[(j, j)] = c;
            g[(i, j)] = -s;
            g[(j, i)] = s;
            q = q.matmul(&g);
            k += 1;
        }
    }
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn jet_matches_central_differences(seed in any::<u64>(), x in prop::collection::vec(-1.0f64..1.0, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_expr(&mut rng, 4);
        let e = Expression::parse(&src, &VARS).unwrap();
        let jet = e.eval_jet::<f64>(&x).unwrap();
        let f = |p: &[f64]| e.eval::<f64>(p).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        for a in 0..3 {
            let g = d4(&f, &x, a, 1e-3);
            prop_assert!(rel(jet.gradient[a], g) <= 1e-6, "{} grad[{}]: {} vs {}", src, a, jet.gradient[a], g);
            for b in 0..3 {
                let da = |p: &[f64]| d4(&f, p, a, 2e-3);
                let hb = d4(&da, &x, b, 2e-3);
                prop_assert!(rel(jet.hessian[(a, b)], hb) <= 1e-6, "{} hess[{}][{}]: {} vs {}", src, a, b, jet.hessian[(a, b)], hb);
            }
        }
        prop_assert!(jet.hessian.is_symmetric());
    }

    #[test]
    fn print_parse_is_a_fixpoint(seed in any::<u64>(), x in prop::collection::vec(-1.0f64..1.0, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_expr(&mut rng, 5);
        let e1 = Expression::parse(&src, &VARS).unwrap();
        let printed = e1.to_string();
        let e2 = Expression::parse(&printed, &VARS).unwrap();
        prop_assert_eq!(&printed, &e2.to_string());
        let (v1, v2) = (e1.eval::<f64>(&x).unwrap(), e2.eval::<f64>(&x).unwrap());
        prop_assert_eq!(v1.to_bits(), v2.to_bits());
    }

    #[test]
    fn rank_is_invariant_under_rotation(
        diag in prop::collection::vec(prop_oneof![Just(0.0), -3.0f64..-0.1, 0.1f64..3.0], 1..=4),
        angles in prop::collection::vec(-3.1f64..3.1, 6),
    ) {
        let n = diag.len();
        let m = Matrix::from_diagonal(&diag);
        let q = rotation(n, &angles);
        let rotated = q.matmul(&m).matmul(&q.transpose());
        let expected = diag.iter().filter(|d| **d != 0.0).count();
        prop_assert_eq!(numerical_rank(&m, 1e-9), expected);
        prop_assert_eq!(numerical_rank(&rotated, 1e-9), expected);
    }

    #[test]
    fn branches_carry_gradient_and_hessian(x in -2.0f64..2.0, t in 0.1f64..1.5) {
        // away from the fold |x| = 2 (t/3)^{3/2} of the quartic family
        prop_assume!((x.abs() - 2.0 * (t / 3.0f64).powf(1.5)).abs() > 0.05);
        let setup = Setup::paper_sol(1).unwrap();
        let sol = Solution::new(setup, Arc::new(Builtin::Quartic { n: 1, beta: 1.0 })).unwrap();
        let opts = Options::new(1);
        let set = multistart_branches(&sol, &[x], t, &opts).unwrap();
        prop_assert!(!set.is_empty());
        for b in &set.branches {
            let u = branch_field(&sol, b.y.clone(), &opts);
            let h = 1e-4;
            let at = |p: f64| u(&[p], t).unwrap();
            let grad = (at(x + h) - at(x - h)) / (2.0 * h);
            let hess = (at(x + h) - 2.0 * at(x) + at(x - h)) / (h * h);
            prop_assert!((grad - b.y[0]).abs() <= 1e-6, "grad {} vs y {}", grad, b.y[0]);
            let exact = b.hess_u.matrix().unwrap()[(0, 0)];
            prop_assert!((hess - exact).abs() <= 1e-3 * exact.abs().max(1.0), "hess {} vs {}", hess, exact);
        }
    }

    #[test]
    fn branch_count_is_odd_off_caustics(x in prop::collection::vec(-1.5f64..1.5, 2), t in 0.2f64..1.5) {
        let fold = 2.0 * (t / 3.0f64).powf(1.5);
        prop_assume!(x.iter().all(|v| (v.abs() - fold).abs() > 0.05));
        let setup = Setup::paper_sol(2).unwrap();
        let sol = Solution::new(setup, Arc::new(Builtin::Quartic { n: 2, beta: 1.0 })).unwrap();
        let set = multistart_branches(&sol, &x, t, &Options::new(2)).unwrap();
        prop_assert_eq!(set.len() % 2, 1);
        let per_axis = |v: f64| if v.abs() < fold { 3 } else { 1 };
        prop_assert_eq!(set.len(), per_axis(x[0]) * per_axis(x[1]));
    }

    #[test]
    fn solving_is_deterministic(x in prop::collection::vec(-1.5f64..1.5, 2), t in 0.2f64..1.5) {
        let setup = Setup::paper_sol(2).unwrap();
        let phi = Expression::parse_indexed("(y1^4 + y2^4)/4 + 0.1*sin(y1*y2)", "y", 2).unwrap();
        let sol = Solution::new(setup, Arc::new(phi)).unwrap();
        let opts = Options::new(2);
        let a = multistart_branches(&sol, &x, t, &opts).unwrap();
        let b = multistart_branches(&sol, &x, t, &opts).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn hodograph_image_matches_general_h(x in prop::collection::vec(-2.0f64..2.0, 2), t in 0.1f64..2.0) {
        let setup = Setup::paper_sol(2).unwrap();
        let phi = Expression::parse_indexed("y1^4/4 + y2^2 + 0.3*y1*y2", "y", 2).unwrap();
        let sol = Solution::new(setup, Arc::new(phi)).unwrap();
        let set = multistart_branches(&sol, &x, t, &Options::new(2)).unwrap();
        for b in &set.branches {
            let xy: f64 = x.iter().zip(&b.y).map(|(p, q)| p * q).sum();
            let h = h_general(&sol, t, &b.y).unwrap();
            prop_assert!((xy - b.u - h).abs() <= 1e-9 * h.abs().max(1.0));
            prop_assert!(max_abs_diff(&x_of_y(&sol, t, &b.y).unwrap(), &x) <= 1e-9);
        }
    }

    #[test]
    fn quadratic_forward_inverse_identity(
        a in prop::collection::vec(-1.0f64..1.0, 4),
        b in prop::collection::vec(-1.0f64..1.0, 2),
        x in prop::collection::vec(-2.0f64..2.0, 2),
    ) {
        // u = ½ xᵀ S x + b·x with S = AAᵀ + I, H = ½ (y − b)ᵀ S⁻¹ (y − b)
        let am = Matrix::from_row_major(2, a);
        let s = am.matmul(&am.transpose()).shifted(1.0);
        let si = s.inverse().unwrap();
        let u_src = format!(
            "{:?}*x1^2/2 + {:?}*x1*x2 + {:?}*x2^2/2 + {:?}*x1 + {:?}*x2",
            s[(0, 0)], s[(0, 1)], s[(1, 1)], b[0], b[1]
        );
        let h_src = format!(
            "{:?}*(y1 - {:?})^2/2 + {:?}*(y1 - {:?})*(y2 - {:?}) + {:?}*(y2 - {:?})^2/2",
            si[(0, 0)], b[0], si[(0, 1)], b[0], b[1], si[(1, 1)], b[1]
        );
        let u = Expression::parse_indexed(&u_src, "x", 2).unwrap();
        let h = Expression::parse_indexed(&h_src, "y", 2).unwrap();
        let img = forward_point(&u, &x).unwrap();
        prop_assert!((img.h - h.eval::<f64>(&img.y).unwrap()).abs() <= 1e-9);
        let (xb, ub) = inverse_point(&h, &img.y).unwrap();
        prop_assert!(max_abs_diff(&xb, &x) <= 1e-9);
        prop_assert!((ub - u.eval::<f64>(&x).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn conjugate_satisfies_young_fenchel(
        slopes in prop::collection::vec(-3.0f64..3.0, 40),
        lo in -2.0f64..-0.5,
        hi in 0.5f64..2.0,
    ) {
        let spec = GridSpec::cube(1, -2.0, 2.0, 41).unwrap();
        let mut s = slopes.clone();
        s.sort_by(f64::total_cmp);
        let mut values = vec![0.0];
        for d in &s {
            values.push(values.last().unwrap() + d * spec.spacing(0));
        }
        let g = Field::new(spec.clone(), values).unwrap();
        let dual = GridSpec::cube(1, lo * 3.0, hi * 3.0, 57).unwrap();
        let conj = conjugate_grid(&g, &dual).unwrap();
        let brute = conjugate_grid_bruteforce(&g, &dual).unwrap();
        prop_assert_eq!(conj.values(), brute.values());
        for i in 0..spec.len() {
            for j in 0..dual.len() {
                let (x, y) = (spec.point(i)[0], dual.point(j)[0]);
                prop_assert!(g.values()[i] + conj.values()[j] >= x * y - 1e-12);
            }
        }
        // the double conjugate of convex data on its own nodes is the data
        let back = conjugate_grid(&conjugate_grid(&g, &GridSpec::cube(1, -4.0, 4.0, 2001).unwrap()).unwrap(), &spec).unwrap();
        prop_assert!(max_abs_diff(back.values(), g.values()) <= 2e-3);
    }

    #[test]
    fn monotone_scheme_preserves_order(
        base in prop::collection::vec(-1.0f64..1.0, 41),
        bump in prop::collection::vec(0.0f64..0.5, 41),
    ) {
        let spec = GridSpec::cube(1, -1.0, 1.0, 41).unwrap();
        let g1 = Field::new(spec.clone(), base.clone()).unwrap();
        let g2 = Field::new(spec, base.iter().zip(&bump).map(|(a, b)| a + b).collect()).unwrap();
        // difference quotients stay below 2.5 / 0.05 = 50, so σ = 60 dominates 2·½·max|p|
        let opts = LfOptions { cfl: 0.4, sigma: Some(vec![60.0]) };
        let setup = Setup::paper_sol(1).unwrap();
        // dt = 0.4 · 0.05 / 60 = 1/3000, so nine steps reach t = 0.003; extrapolated
        // ghost cells are not monotone, so only nodes the edges cannot reach are compared
        let u1 = lax_friedrichs_solve_with(&g1, &setup, 0.003, &opts).unwrap();
        let u2 = lax_friedrichs_solve_with(&g2, &setup, 0.003, &opts).unwrap();
        for k in 10..=30 {
            prop_assert!(u1.values()[k] <= u2.values()[k] + 1e-12, "node {}", k);
        }
    }
}

#[test]
fn warm_sweep_matches_cold_multistart() {
    let setup = Setup::paper_sol(1).unwrap();
    let sol = Solution::new(setup, Arc::new(Builtin::Quartic { n: 1, beta: 1.0 })).unwrap();
    let grid = GridSpec::cube(1, -1.0, 1.0, 81).unwrap();
    let t_list = [0.25, 0.5, 1.0, 1.5];
    let opts = Options::new(1);
    let table = sweep_grid(&sol, &grid, &t_list, &opts).unwrap();
    for (i, &t) in t_list.iter().enumerate() {
        for k in 0..grid.len() {
            let warm = &table.at(i, k).set;
            let cold = multistart_branches(&sol, &grid.point(k), t, &opts).unwrap();
            assert_eq!(warm.len(), cold.len(), "x = {:?}, t = {t}", grid.point(k));
            for (a, b) in warm.branches.iter().zip(&cold.branches) {
                assert!((a.u - b.u).abs() <= 1e-10 && max_abs_diff(&a.y, &b.y) <= 1e-8);
            }
        }
    }
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let setup = Setup::paper_sol(2).unwrap();
    let phi = Expression::parse_indexed("(y1^4 + y2^4)/4 + 0.2*y1*y2", "y", 2).unwrap();
    let sol = Solution::new(setup, Arc::new(phi)).unwrap();
    let grid = GridSpec::cube(2, -1.0, 1.0, 9).unwrap();
    let t_list = [0.5, 1.0, 1.5];
    let opts = Options::new(2).with_count(5);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| sweep_grid(&sol, &grid, &t_list, &opts).unwrap()).points
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}
