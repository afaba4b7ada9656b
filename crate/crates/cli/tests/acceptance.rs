//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
//! if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command as Process;
use std::sync::Arc;

use hodohj_cli::{dispatch, parse_config, Command, RunReport};
use hodohj_core::hodograph::{conjugate_grid, conjugate_grid_bruteforce, default_dual_box, forward_point, inverse_point};
use hodohj_core::oracles::{characteristics_solve, hopf_bruteforce, lax_friedrichs_solve};
use hodohj_core::solver::branch_field;
use hodohj_core::{
    multistart_branches, newton_solve, pde_residual_numeric, plane_wave_eval, rank_classify, select_branch, BranchPolicy,
    Builtin, Expression, Field, FnField, Grid, Jet, Options, PlaneWave, ScalarField, Setup, SharedField, Solution,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn solution(setup: Setup, phi: SharedField<f64>) -> Solution {
    Solution::new(setup, phi).expect("valid solution")
}

// ---------------------------------------------------------------- criterion 1

fn convention_reconciliation() -> Outcome {
    let sol_setup = Setup::paper_sol(1).unwrap();
    let eq1_setup = Setup::paper_eq1(1).unwrap();
    let h = 1e-3;
    // Φ, t-range and |x|-range keeping every sample away from caustics
    #[allow(clippy::type_complexity)]
    let cases: Vec<(&str, SharedField<f64>, (f64, f64), (f64, f64))> = vec![
        ("0", Arc::new(Builtin::Zero { n: 1 }), (0.5, 2.0), (0.0, 2.0)),
        ("y^2/2", Arc::new(Builtin::Quadratic { n: 1, alpha: 1.0 }), (0.05, 0.5), (0.0, 2.0)),
        ("y^4/4", Arc::new(Builtin::Quartic { n: 1, beta: 1.0 }), (0.1, 1.0), (0.6, 2.0)),
        (
            "y^2/2 + 0.1 sin(y)",
            Arc::new(Expression::parse_indexed("y1^2/2 + 0.1*sin(y1)", "y", 1).unwrap()),
            (0.05, 0.5),
            (0.0, 2.0),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opts = Options::new(1);
    let (mut worst, mut eq1_min, mut eq1_checked) = (0.0f64, f64::INFINITY, 0usize);
    for (name, phi, (t0, t1), (a0, a1)) in cases {
        let sol = solution(sol_setup, phi);
        for _ in 0..200 {
            let t = rng.gen_range(t0..t1);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let x = [sign * rng.gen_range(a0..a1)];
            let set = multistart_branches(&sol, &x, t, &opts).map_err(|e| format!("{name}: {e}"))?;
            let b = select_branch(&set, BranchPolicy::MinU).map_err(|e| format!("{name} at x={x:?} t={t}: {e}"))?;
            let u = branch_field(&sol, b.y.clone(), &opts);
            let r = pde_residual_numeric(&u, &sol_setup, &x, t, h).map_err(|e| format!("{name}: {e}"))?;
            ensure(r.abs() <= 1e-4, || format!("{name}: residual {r:e} at x={x:?} t={t}"))?;
            worst = worst.max(r.abs());
            if b.y[0].abs() >= 1.0 {
                let r1 = pde_residual_numeric(&u, &eq1_setup, &x, t, h).map_err(|e| format!("{name}: {e}"))?;
                ensure(r1.abs() >= 0.1, || format!("{name}: other-sign residual {r1:e} at x={x:?} t={t}"))?;
                eq1_min = eq1_min.min(r1.abs());
                eq1_checked += 1;
            }
        }
    }
    ensure(eq1_checked > 0, || "no sample with |y*| >= 1".into())?;
    Ok(format!(
        "max |u_t + |∇u|²/2| = {worst:.2e} over 800 points; min |u_t − |∇u|²| = {eq1_min:.3} over {eq1_checked} points with |y*| >= 1"
    ))
}

// ---------------------------------------------------------------- criterion 2

fn closed_form_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let setup = Setup::paper_sol(n).unwrap();
        let opts = Options::new(n);
        for _ in 0..100 {
            let alpha = rng.gen_range(0.5..2.0);
            let t = loop {
                let t: f64 = rng.gen_range(0.0..3.0);
                if (t - alpha).abs() >= 0.2 {
                    break t;
                }
            };
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let sol = solution(setup, Arc::new(Builtin::Quadratic { n, alpha }));
            let seed: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b = newton_solve(&sol, &x, t, &seed, &opts).map_err(|e| e.to_string())?;
            let exact = x.iter().map(|v| v * v).sum::<f64>() / (2.0 * (t - alpha));
            let err = (b.u - exact).abs();
            ensure(err <= 1e-9, || format!("n={n}: |u - closed form| = {err:e} at x={x:?} t={t} alpha={alpha}"))?;
            ensure(b.converged && b.iterations == 1, || {
                format!("n={n}: Newton took {} iterations (converged: {})", b.iterations, b.converged)
            })?;
            worst = worst.max(err);
        }
    }
    Ok(format!("max error {worst:.2e} over 300 points, Newton converged in 1 iteration everywhere"))
}

// ---------------------------------------------------------------- criterion 3

fn half_square(grid: Grid) -> Field {
    Field::sample(grid, |p| Ok(p[0] * p[0] / 2.0)).unwrap()
}

/// Interior (|x| <= 1) L∞ distance between a grid solution and the implicit solver.
fn lf_error(count: usize, t: f64, sol: &Solution, opts: &Options) -> Result<f64, String> {
    let g = half_square(Grid::cube(1, -2.0, 2.0, count).unwrap());
    let out = lax_friedrichs_solve(&g, sol.setup(), t, 0.4).map_err(|e| e.to_string())?;
    let spec = out.spec();
    let mut err = 0.0f64;
    for k in 0..spec.len() {
        let x = spec.point(k);
        if x[0].abs() <= 1.0 {
            let set = multistart_branches(sol, &x, t, opts).map_err(|e| e.to_string())?;
            let u = select_branch(&set, BranchPolicy::MinU).map_err(|e| e.to_string())?.u;
            err = err.max((out.values()[k] - u).abs());
        }
    }
    Ok(err)
}

fn oracle_triangle() -> Outcome {
    let setup = Setup::paper_sol(1).unwrap();
    let sol = solution(setup, Arc::new(Builtin::Quadratic { n: 1, alpha: -1.0 }));
    let opts = Options::new(1);
    let g_expr = Expression::parse_indexed("x1^2/2", "x", 1).unwrap();
    let x0 = Grid::cube(1, -1.0, 1.0, 41).unwrap();
    let lattice = Grid::cube(1, -3.0, 3.0, 601).unwrap();
    let mut worst = [0.0f64; 3];
    for t in [0.25, 0.5] {
        let rays = characteristics_solve(&g_expr as &dyn ScalarField<f64>, &setup, &x0, t).map_err(|e| e.to_string())?;
        for ray in rays {
            let set = multistart_branches(&sol, &ray.x, t, &opts).map_err(|e| e.to_string())?;
            let implicit = select_branch(&set, BranchPolicy::MinU).map_err(|e| e.to_string())?.u;
            let hopf = hopf_bruteforce(&sol, &ray.x, t, &lattice, 2, BranchPolicy::MaxU).map_err(|e| e.to_string())?.u;
            let d = [(implicit - ray.u).abs(), (implicit - hopf).abs(), (hopf - ray.u).abs()];
            ensure(d.iter().all(|&v| v <= 1e-6), || {
                format!("disagreement {d:?} at x={:?} t={t} (implicit {implicit}, hopf {hopf}, rays {})", ray.x, ray.u)
            })?;
            for (w, v) in worst.iter_mut().zip(d) {
                *w = w.max(v);
            }
        }
    }
    let t = 0.5;
    let errs: Vec<f64> = [201, 401, 801].iter().map(|&c| lf_error(c, t, &sol, &opts)).collect::<Result<_, _>>()?;
    ensure(errs[1] <= 0.01, || format!("grid solver error {:.3e} on 401 points exceeds 0.01", errs[1]))?;
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    ensure(ratios.iter().all(|r| (1.5..=2.5).contains(r)), || {
        format!("refinement ratios {ratios:?} outside [1.5, 2.5] (errors {errs:?})")
    })?;
    Ok(format!(
        "pairwise max {:.1e}/{:.1e}/{:.1e}; grid errors {:.2e}, {:.2e}, {:.2e}; ratios {:.2}, {:.2}",
        worst[0], worst[1], worst[2], errs[0], errs[1], errs[2], ratios[0], ratios[1]
    ))
}

// ---------------------------------------------------------------- criterion 4

/// Legendre dual of a strictly convex expression, evaluated by inverting its
/// gradient with Newton's method.
fn legendre_dual(u: Expression, n: usize) -> impl ScalarField<f64> {
    FnField::new(n, move |y: &[f64]| {
        let mut x = vec![0.0; n];
        for _ in 0..100 {
            let jet = u.eval_jet(&x)?;
            let r: Vec<f64> = jet.gradient.iter().zip(y).map(|(g, v)| g - v).collect();
            if r.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-14 {
                break;
            }
            let dx = jet.hessian.solve(&r).expect("convex field");
            for (a, d) in x.iter_mut().zip(dx) {
                *a -= d;
            }
        }
        let jet = u.eval_jet(&x)?;
        let value = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() - jet.value;
        let hessian = jet.hessian.inverse().expect("convex field");
        Ok(Jet { value, gradient: x, hessian })
    })
}

fn random_convex_grid(rng: &mut ChaCha8Rng, count: usize) -> Field {
    let grid = Grid::cube(1, rng.gen_range(-3.0..-0.5), rng.gen_range(0.5..3.0), count).unwrap();
    let h = grid.spacing(0);
    let mut slopes: Vec<f64> = (0..count - 1).map(|_| rng.gen_range(-4.0..4.0)).collect();
    slopes.sort_by(f64::total_cmp);
    let mut values = vec![rng.gen_range(-1.0..1.0)];
    for s in &slopes {
        let last = *values.last().unwrap();
        values.push(last + s * h);
    }
    Field::new(grid, values).unwrap()
}

fn round_trips() -> Outcome {
    let fields = [
        ("x1^2/2 + x1^4/12", 1, vec![-1.5, -0.3, 0.0, 0.7, 1.9]),
        ("exp(x1) + x1^2/2", 1, vec![-2.0, -0.5, 0.4, 1.2]),
        ("x1^2 + x1*x2 + x2^2 + x1^4/4", 2, vec![-1.0, 0.5, 0.3, -0.8, 1.2, 1.1]),
        ("log(1 + exp(x1 + x2)) + (x1^2 + x2^2 + x3^2)/2 + x3^4/8", 3, vec![0.2, -0.4, 1.0, -1.3, 0.8, 0.1]),
    ];
    let mut worst = 0.0f64;
    for (src, n, coords) in fields {
        let u = Expression::parse_indexed(src, "x", n).unwrap();
        let dual = legendre_dual(u.clone(), n);
        for x in coords.chunks(n) {
            let img = forward_point(&u, x).map_err(|e| e.to_string())?;
            let (xb, ub) = inverse_point(&dual, &img.y).map_err(|e| e.to_string())?;
            let ux: f64 = u.eval(x).unwrap();
            let err = xb.iter().zip(x).map(|(a, b)| (a - b).abs()).fold((ub - ux).abs(), f64::max);
            ensure(err <= 1e-8, || format!("{src}: round trip error {err:e} at x={x:?}"))?;
            worst = worst.max(err);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..20 {
        let g = random_convex_grid(&mut rng, 65);
        let dual = default_dual_box(&g, &[65]).map_err(|e| e.to_string())?;
        let fast = conjugate_grid(&g, &dual).map_err(|e| e.to_string())?;
        let brute = conjugate_grid_bruteforce(&g, &dual).map_err(|e| e.to_string())?;
        ensure(fast.values() == brute.values(), || format!("case {case}: linear-time conjugate differs from brute force"))?;
    }

    // max |g** − g| / (h² max g'') on the interior half-box
    let smooth = [("x1^2/2", 1.0), ("cosh(x1)", 2f64.cosh()), ("x1^4/12 + x1^2/2", 2.0)];
    let mut worst_c = 0.0f64;
    for (src, d2max) in smooth {
        let src = src.replace("cosh(x1)", "(exp(x1) + exp(-x1))/2");
        let e = Expression::parse_indexed(&src, "x", 1).unwrap();
        let grid = Grid::cube(1, -2.0, 2.0, 65).unwrap();
        let g = Field::sample_field(grid.clone(), &e).unwrap();
        let dual = default_dual_box(&g, &[65]).map_err(|e| e.to_string())?;
        let gs = conjugate_grid(&g, &dual).map_err(|e| e.to_string())?;
        let gss = conjugate_grid(&gs, &grid).map_err(|e| e.to_string())?;
        let (lo, hi) = grid.interior_half();
        let h = grid.spacing(0);
        let mut err = 0.0f64;
        for k in 0..grid.len() {
            let x = grid.point(k)[0];
            if x >= lo[0] && x <= hi[0] {
                err = err.max((gss.values()[k] - g.values()[k]).abs());
            }
        }
        let c = err / (h * h * d2max);
        ensure(c <= 1.0, || format!("{src}: double conjugate error {err:e} = {c:.3} h² max g''"))?;
        worst_c = worst_c.max(c);
    }
    Ok(format!(
        "round trip max {worst:.1e}; 20/20 conjugates bit-identical; double conjugate within {worst_c:.3} h² max g''"
    ))
}

// ---------------------------------------------------------------- criterion 5

fn scratch(tag: &str) -> tempfile::TempDir {
    tempfile::Builder::new().prefix(&format!("hodohj-{tag}-")).tempdir().unwrap()
}

fn run_rank_map(config: &str) -> Result<RunReport, String> {
    let dir = scratch("rank");
    let text = format!("{config}\n[output]\ndir = \"out\"\nformats = [\"json\"]\n");
    let cfg = parse_config(&text, Path::new("acceptance.toml"), dir.path(), &[]).map_err(|e| e.to_string())?;
    let out = dispatch(Command::RankMap, &cfg).map_err(|e| e.to_string())?;
    ensure(out.exit_code == 0, || format!("rank-map exit code {}", out.exit_code))?;
    Ok(out.report)
}

fn rank_and_caustics() -> Outcome {
    // nondegenerate quadratic Φ in two dimensions
    let report = run_rank_map(
        "lambda = 0.5\nn = 2\nphi = { builtin = \"quadratic\", alpha = 1.5 }\n\
         [query]\ngrid = { lower = -1.0, upper = 1.0, counts = 5 }\nt = [0.25, 0.5, 2.5]\n",
    )?;
    ensure(report.failed_points == 0 && report.points.iter().all(|p| p.rank == Some(2)), || {
        format!("quadratic phi: ranks {:?}", report.rank_histogram)
    })?;

    // plane waves
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pw_worst = 0.0f64;
    for n in 1..=3 {
        let setup = Setup::paper_sol(n).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let pw = PlaneWave::new(setup, b, rng.gen_range(-1.0..1.0)).unwrap();
        ensure(rank_classify(&pw.hessian_u(), 1e-9) == 0, || "plane wave rank is not 0".into())?;
        for _ in 0..20 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let t = rng.gen_range(0.0..2.0);
            // u is affine in (x, t): any step is truncation-free, a wide one limits rounding
            let r = pde_residual_numeric(|p: &[f64], s: f64| Ok(plane_wave_eval(&pw, p, s)), &setup, &x, t, 0.25)
                .map_err(|e| e.to_string())?;
            ensure(r.abs() <= 1e-12, || format!("plane wave residual {r:e}"))?;
            pw_worst = pw_worst.max(r.abs());
        }
    }

    // caustic time for Φ = (α/2) y²
    let alpha = 0.73;
    let dt = 0.05;
    let t_list: Vec<String> = (1..=30).map(|i| format!("{:?}", i as f64 * dt)).collect();
    let report = run_rank_map(&format!(
        "lambda = 0.5\nn = 1\nphi = {{ builtin = \"quadratic\", alpha = {alpha} }}\n\
         [query]\ngrid = {{ lower = -1.0, upper = 1.0, counts = 9 }}\nt = [{}]\n",
        t_list.join(", ")
    ))?;
    let caustic_t = report.caustic_t.clone().unwrap_or_default();
    ensure(!caustic_t.is_empty() && caustic_t.iter().all(|t| (t - alpha).abs() <= dt), || {
        format!("caustic times {caustic_t:?}, expected within {dt} of {alpha}")
    })?;

    // fold of y³ − y + x = 0 at t = 1
    let report = run_rank_map(
        "lambda = 0.5\nn = 1\nphi = { builtin = \"quartic\", beta = 1.0 }\n\
         [query]\ngrid = { lower = -1.0, upper = 1.0, counts = 401 }\nt = [1.0]\n",
    )?;
    let expected = 2.0 / (3.0 * 3f64.sqrt());
    let mut edges = Vec::new();
    for w in report.points.windows(2) {
        if (w[0].branch_count == 1) != (w[1].branch_count == 1) {
            edges.push((w[0].x[0] + w[1].x[0]) / 2.0);
        }
    }
    ensure(edges.len() == 2, || format!("expected two fold crossings, found {edges:?}"))?;
    let fold_err = edges.iter().map(|e| (e.abs() - expected).abs()).fold(0.0, f64::max);
    ensure(fold_err <= 0.01, || format!("fold at {edges:?}, expected ±{expected:.4}"))?;
    let flagged: Vec<f64> = report.points.iter().filter(|p| p.caustic).map(|p| p.x[0]).collect();
    ensure(flagged.iter().all(|x| (x.abs() - expected).abs() <= 0.01), || format!("caustic flags at {flagged:?}"))?;

    Ok(format!(
        "rank 2 everywhere for quadratic phi; plane-wave residual max {pw_worst:.1e}; caustic at t = {caustic_t:?} (alpha = {alpha}); fold at {:.4}, {:.4} (expected ±{expected:.4})",
        edges[0], edges[1]
    ))
}

// ---------------------------------------------------------------- criterion 6

fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.7) {
            format!("x{}", rng.gen_range(1..=3))
        } else {
            format!("{:?}", (rng.gen_range(-2.0..2.0f64) * 100.0).round() / 100.0)
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.gen_range(0..12) {
        0 => format!("({a} + {})", random_expr(rng, depth - 1)),
        1 => format!("({a} - {})", random_expr(rng, depth - 1)),
        2 | 3 => format!("({a} * {})", random_expr(rng, depth - 1)),
        4 => format!("({a} / (1.5 + cos({})))", random_expr(rng, depth - 1)),
        5 => format!("sin({a})"),
        6 => format!("cos({a})"),
        7 => format!("tanh({a})"),
        8 => format!("exp(tanh({a}))"),
        9 => format!("sqrt(1 + ({a})^2)"),
        10 => format!("log(2 + sin({a}))"),
        _ => format!("({a})^{}", rng.gen_range(2..=3)),
    }
}

/// Fourth-order central difference of `f` along `dir` with step `h`.
fn d4(f: &dyn Fn(&[f64]) -> f64, x: &[f64], dir: usize, h: f64) -> f64 {
    let at = |s: f64| {
        let mut p = x.to_vec();
        p[dir] += s;
        f(&p)
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

fn autodiff_integrity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let vars = ["x1", "x2", "x3"];
    let (mut cases, mut worst) = (0usize, 0.0f64);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    while cases < 150 {
        let src = random_expr(&mut rng, 4);
        let e = Expression::parse(&src, &vars).map_err(|err| format!("{src}: {err}"))?;
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let Ok(jet) = e.eval_jet::<f64>(&x) else { continue };
        let f = |p: &[f64]| e.eval::<f64>(p).unwrap_or(f64::NAN);
        let h1 = 1e-3;
        let h2 = 2e-3;
        for a in 0..3 {
            let g = d4(&f, &x, a, h1);
            let err = rel(jet.gradient[a], g);
            ensure(err <= 1e-6, || format!("{src} at {x:?}: d/dx{} AD {} FD {g} (rel {err:e})", a + 1, jet.gradient[a]))?;
            worst = worst.max(err);
            for b in 0..3 {
                let da = |p: &[f64]| d4(&f, p, a, h2);
                let hb = d4(&da, &x, b, h2);
                let ad = jet.hessian[(a, b)];
                let err = rel(ad, hb);
                ensure(err <= 1e-6, || format!("{src} at {x:?}: H[{a}][{b}] AD {ad} FD {hb} (rel {err:e})"))?;
                worst = worst.max(err);
            }
        }
        cases += 1;
    }
    Ok(format!("{cases} random expression/point cases, max relative error {worst:.2e}"))
}

// ---------------------------------------------------------------- criterion 7

const DETERMINISM_CONFIG: &str = r#"
lambda = 0.5
n = 2
phi = "(y1^4 + y2^4)/4 + 0.1*sin(y1*y2)"

[query]
grid = { lower = -1.0, upper = 1.0, counts = [13, 11] }
t = [0.5, 1.0, 1.5]

[solver]
branch_policy = "all"
multistart_count = 5

[output]
formats = ["csv", "json"]
"#;

fn determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_hodohj");
    let dir = scratch("determinism");
    let config = dir.path().join("run.toml");
    std::fs::write(&config, DETERMINISM_CONFIG).unwrap();
    let mut reference: Option<(Vec<u8>, Vec<u8>)> = None;
    let mut rows = 0;
    for (run, workers) in [1, 2, 4, 8, 1, 3].iter().enumerate() {
        let out = dir.path().join(format!("out{run}"));
        let mut csvs = Vec::new();
        for command in ["solve", "rank-map"] {
            let status = Process::new(exe)
                .args([command, "--config"])
                .arg(&config)
                .arg("--out")
                .arg(&out)
                .args(["--workers", &workers.to_string()])
                .status()
                .map_err(|e| e.to_string())?;
            ensure(status.code() == Some(0), || format!("{command} with {workers} workers exited with {status}"))?;
            csvs.push(std::fs::read(out.join(format!("{command}.csv"))).map_err(|e| e.to_string())?);
        }
        let pair = (csvs.remove(0), csvs.remove(0));
        rows = pair.0.iter().filter(|&&b| b == b'\n').count() - 1;
        match &reference {
            None => reference = Some(pair),
            Some(r) => ensure(*r == pair, || format!("CSV output with {workers} workers differs from the first run"))?,
        }
    }
    ensure(rows == 13 * 11 * 3, || format!("expected {} rows, found {rows}", 13 * 11 * 3))?;
    Ok(format!("solve and rank-map CSV byte-identical over 6 runs with 1, 2, 4, 8, 1, 3 workers ({rows} rows)"))
}

fn main() {
    #[allow(clippy::type_complexity)]
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("convention reconciliation", convention_reconciliation),
        ("closed-form exactness", closed_form_exactness),
        ("oracle triangle", oracle_triangle),
        ("hodograph round trips", round_trips),
        ("rank and caustics", rank_and_caustics),
        ("autodiff integrity", autodiff_integrity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
