#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random smooth expression in `x1..x3`, defined on all of R³.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.7) {
            format!("x{}", rng.gen_range(1..=3))
        } else {
            format!("{:?}", (rng.gen_range(-2.0..2.0f64) * 100.0).round() / 100.0)
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.gen_range(0..13) {
        0 => format!("{a} + {}", random_expr(rng, depth - 1)),
        1 => format!("{a} - {}", random_expr(rng, depth - 1)),
        2 | 3 => format!("({a}) * ({})", random_expr(rng, depth - 1)),
        4 => format!("({a}) / (1.5 + cos({}))", random_expr(rng, depth - 1)),
        5 => format!("sin({a})"),
        6 => format!("cos({a})"),
        7 => format!("tanh({a})"),
        8 => format!("exp(tanh({a}))"),
        9 => format!("sqrt(1 + ({a})^2)"),
        10 => format!("log(2 + sin({a}))"),
        11 => format!("-({a})"),
        _ => format!("({a})^{}", rng.gen_range(2..=3)),
    }
}

/// Fourth-order central difference of `f` along `dir`.
pub fn d4(f: &dyn Fn(&[f64]) -> f64, x: &[f64], dir: usize, h: f64) -> f64 {
    let at = |s: f64| {
        let mut p = x.to_vec();
        p[dir] += s;
        f(&p)
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}
