//! Uniform tensor-product grids and sampled fields, with the binary and CSV
//! file formats.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! offset 0   8 bytes  magic "HODOHJGF"
//!        8   u32      format version (1)
//!        12  u32      reserved, zero
//!        16  u64      n
//!            u64 × n  counts
//!            f64 × n  lower bounds
//!            f64 × n  upper bounds
//!            f64 × Π counts   values, row-major (last axis fastest)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::expr::JetValue;
use crate::field::ScalarField;
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

pub const GRID_MAGIC: &[u8; 8] = b"HODOHJGF";
pub const GRID_FORMAT_VERSION: u32 = 1;

/// Box bounds and per-axis sample counts of a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    counts: Vec<usize>,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>, counts: Vec<usize>) -> Result<Self> {
        let n = lower.len();
        if n == 0 || upper.len() != n || counts.len() != n {
            return Err(Error::Grid("bounds and counts must have the same nonzero length".into()));
        }
        for a in 0..n {
            if counts[a] < 2 {
                return Err(Error::Grid(format!("axis {a}: need at least 2 samples, got {}", counts[a])));
            }
            if !(lower[a].is_finite() && upper[a].is_finite()) || !(upper[a] > lower[a]) {
                return Err(Error::Grid(format!(
                    "axis {a}: degenerate box [{}, {}]",
                    lower[a], upper[a]
                )));
            }
        }
        Ok(Self { lower, upper, counts })
    }

    /// Same bounds and count on every axis.
    pub fn cube(n: usize, lower: T, upper: T, count: usize) -> Result<Self> {
        Self::new(vec![lower; n], vec![upper; n], vec![count; n])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> T {
        (self.upper[axis] - self.lower[axis]) / T::of_usize(self.counts[axis] - 1)
    }

    /// Coordinate of node `i` along `axis`; the last node is exactly `upper`.
    pub fn coord(&self, axis: usize, i: usize) -> T {
        if i + 1 == self.counts[axis] {
            return self.upper[axis];
        }
        self.lower[axis] + T::of_usize(i) * self.spacing(axis)
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<T> {
        (0..self.counts[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.counts[a];
            flat /= self.counts[a];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn point(&self, flat: usize) -> Vec<T> {
        self.unravel(flat).iter().enumerate().map(|(a, &i)| self.coord(a, i)).collect()
    }

    /// All nodes in row-major order.
    pub fn points(&self) -> Vec<Vec<T>> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    pub fn contains(&self, p: &[T]) -> bool {
        p.len() == self.dim() && p.iter().enumerate().all(|(a, &v)| v >= self.lower[a] && v <= self.upper[a])
    }

    /// The central sub-box with half the width on every axis.
    pub fn interior_half(&self) -> (Vec<T>, Vec<T>) {
        let q = T::of(0.25);
        let lo = (0..self.dim()).map(|a| self.lower[a] + q * (self.upper[a] - self.lower[a])).collect();
        let hi = (0..self.dim()).map(|a| self.upper[a] - q * (self.upper[a] - self.lower[a])).collect();
        (lo, hi)
    }
}

/// A field sampled on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<T> {
    spec: GridSpec<T>,
    values: Vec<T>,
}

impl<T: Scalar> GridField<T> {
    pub fn new(spec: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Grid(format!("expected {} values, got {}", spec.len(), values.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Grid(format!("non-finite value at flat index {k}")));
        }
        Ok(Self { spec, values })
    }

    /// Samples `f` at every node.
    pub fn sample<F>(spec: GridSpec<T>, f: F) -> Result<Self>
    where
        F: Fn(&[T]) -> Result<T>,
    {
        let values = (0..spec.len()).map(|k| f(&spec.point(k))).collect::<Result<Vec<_>>>()?;
        Self::new(spec, values)
    }

    pub fn sample_field(spec: GridSpec<T>, field: &dyn ScalarField<T>) -> Result<Self> {
        Self::sample(spec, |p| field.value(p))
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn at(&self, idx: &[usize]) -> T {
        self.values[self.spec.ravel(idx)]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.spec.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Multilinear interpolation; points outside the box are a domain error.
    pub fn interpolate(&self, p: &[T]) -> Result<T> {
        let n = self.dim();
        if p.len() != n {
            return Err(Error::InvalidInput(format!("expected {n} coordinates, got {}", p.len())));
        }
        let mut base = vec![0usize; n];
        let mut frac = vec![T::zero(); n];
        for a in 0..n {
            let (lo, hi) = (self.spec.lower[a], self.spec.upper[a]);
            let slack = T::of(1e-12) * (hi - lo);
            if !(p[a] >= lo - slack && p[a] <= hi + slack) {
                return Err(Error::Domain(format!("coordinate {a} = {} outside grid [{lo}, {hi}]", p[a])));
            }
            let s = ((p[a] - lo) / self.spec.spacing(a)).max(T::zero());
            let cells = self.spec.counts[a] - 1;
            let i = s.floor().to_usize().unwrap_or(0).min(cells - 1);
            base[a] = i;
            frac[a] = (s - T::of_usize(i)).min(T::one());
        }
        let mut acc = T::zero();
        let mut idx = vec![0usize; n];
        for corner in 0..(1usize << n) {
            let mut w = T::one();
            for a in 0..n {
                let bit = (corner >> a) & 1;
                idx[a] = base[a] + bit;
                w = w * if bit == 1 { frac[a] } else { T::one() - frac[a] };
            }
            if w != T::zero() {
                acc = acc + w * self.at(&idx);
            }
        }
        Ok(acc)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(GRID_MAGIC)?;
        w.write_all(&GRID_FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&(self.dim() as u64).to_le_bytes())?;
        for &c in &self.spec.counts {
            w.write_all(&(c as u64).to_le_bytes())?;
        }
        for v in self.spec.lower.iter().chain(&self.spec.upper).chain(&self.values) {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header).map_err(|_| Error::Format("truncated header".into()))?;
        if &header[..8] != GRID_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes"));
        if version != GRID_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let read_u64 = |r: &mut R| -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|_| Error::Format("truncated data".into()))?;
            Ok(u64::from_le_bytes(b))
        };
        let n = read_u64(&mut r)? as usize;
        if n == 0 || n > 64 {
            return Err(Error::Format(format!("implausible dimension {n}")));
        }
        let counts = (0..n).map(|_| read_u64(&mut r).map(|c| c as usize)).collect::<Result<Vec<_>>>()?;
        let read_f64 = |r: &mut R| -> Result<T> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|_| Error::Format("truncated data".into()))?;
            Ok(T::of(f64::from_le_bytes(b)))
        };
        let lower = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        let upper = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        let spec = GridSpec::new(lower, upper, counts)?;
        let values = (0..spec.len()).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        Self::new(spec, values)
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_binary(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_binary(std::io::BufReader::new(f))
    }

    /// One row per node: coordinates then value, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dim()).map(|a| format!("x{a}")).chain(["value".into()]).collect();
        writeln!(w, "{}", header.join(","))?;
        for k in 0..self.spec.len() {
            let row: Vec<String> = self
                .spec
                .point(k)
                .iter()
                .chain(std::iter::once(&self.values[k]))
                .map(|v| format_sig17(v.as_f64()))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Decimal with 17 significant digits.
pub fn format_sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Multilinear values; derivatives by central differences with one grid
/// spacing, shifted inward near the box edges.
impl<T: Scalar> ScalarField<T> for GridField<T> {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn value(&self, point: &[T]) -> Result<T> {
        self.interpolate(point)
    }

    fn jet(&self, p: &[T]) -> Result<JetValue<T>> {
        let n = self.dim();
        let value = self.interpolate(p)?;
        let mut center = p.to_vec();
        let mut h = vec![T::zero(); n];
        for a in 0..n {
            let (lo, hi) = (self.spec.lower[a], self.spec.upper[a]);
            h[a] = self.spec.spacing(a).min((hi - lo) / T::of(2.0));
            center[a] = p[a].max(lo + h[a]).min(hi - h[a]);
        }
        let f = |q: &[T]| self.interpolate(q);
        let f0 = f(&center)?;
        let mut gradient = vec![T::zero(); n];
        let mut hessian = DenseMatrix::zeros(n);
        let two = T::of(2.0);
        let mut q = center.clone();
        for a in 0..n {
            q[a] = center[a] + h[a];
            let fp = f(&q)?;
            q[a] = center[a] - h[a];
            let fm = f(&q)?;
            q[a] = center[a];
            gradient[a] = (fp - fm) / (two * h[a]);
            hessian[(a, a)] = (fp - two * f0 + fm) / (h[a] * h[a]);
            for b in 0..a {
                let mut s = T::zero();
                for (da, db, sign) in [(T::one(), T::one(), T::one()), (T::one(), -T::one(), -T::one()), (-T::one(), T::one(), -T::one()), (-T::one(), -T::one(), T::one())] {
                    q[a] = center[a] + da * h[a];
                    q[b] = center[b] + db * h[b];
                    s = s + sign * f(&q)?;
                }
                q[a] = center[a];
                q[b] = center[b];
                let v = s / (T::of(4.0) * h[a] * h[b]);
                hessian[(a, b)] = v;
                hessian[(b, a)] = v;
            }
        }
        Ok(JetValue { value, gradient, hessian })
    }
}
