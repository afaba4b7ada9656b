use crate::error::Result;
use crate::hodograph::GridSpec;
use crate::scalar::{to_f64_vec, Scalar};

/// Discrepancy between two sources over a set of sample points.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub linf: f64,
    /// Root mean square difference.
    pub l2: f64,
    pub points_compared: usize,
    pub worst_point: Vec<f64>,
    pub notes: String,
}

struct Acc {
    linf: f64,
    sum_sq: f64,
    count: usize,
    worst: Vec<f64>,
    failures: usize,
    first_failure: Option<String>,
}

impl Acc {
    fn new() -> Self {
        Self { linf: 0.0, sum_sq: 0.0, count: 0, worst: Vec::new(), failures: 0, first_failure: None }
    }

    fn push<T: Scalar>(&mut self, p: &[T], a: Result<T>, b: Result<T>) {
        match (a, b) {
            (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => {
                let d = (a - b).abs().as_f64();
                self.sum_sq += d * d;
                self.count += 1;
                if d > self.linf || self.worst.is_empty() {
                    self.linf = self.linf.max(d);
                    self.worst = to_f64_vec(p);
                }
            }
            (a, b) => {
                self.failures += 1;
                if self.first_failure.is_none() {
                    let why = match (a, b) {
                        (Err(e), _) | (_, Err(e)) => e.to_string(),
                        _ => "non-finite value".to_string(),
                    };
                    self.first_failure = Some(format!("{:?}: {why}", to_f64_vec(p)));
                }
            }
        }
    }

    fn finish(self) -> ComparisonReport {
        let notes = match self.first_failure {
            None => String::new(),
            Some(f) => format!("{} point(s) excluded after evaluation failures; first: {f}", self.failures),
        };
        let l2 = if self.count == 0 { 0.0 } else { (self.sum_sq / self.count as f64).sqrt() };
        ComparisonReport { linf: self.linf, l2, points_compared: self.count, worst_point: self.worst, notes }
    }
}

/// Compares two evaluators on every node of `lattice`. Points where either
/// side fails are excluded from the norms and counted in `notes`.
pub fn compare_fields<T, A, B>(a: A, b: B, lattice: &GridSpec<T>) -> ComparisonReport
where
    T: Scalar,
    A: Fn(&[T]) -> Result<T>,
    B: Fn(&[T]) -> Result<T>,
{
    let mut acc = Acc::new();
    for k in 0..lattice.len() {
        let p = lattice.point(k);
        acc.push(&p, a(&p), b(&p));
    }
    acc.finish()
}

/// Compares an evaluator against scattered `(point, value)` samples.
pub fn compare_scattered<T, A>(a: A, samples: &[(Vec<T>, T)]) -> ComparisonReport
where
    T: Scalar,
    A: Fn(&[T]) -> Result<T>,
{
    let mut acc = Acc::new();
    for (p, v) in samples {
        acc.push(p, a(p), Ok(*v));
    }
    acc.finish()
}
