//! Real-valued functions sampled on uniform grids over `[-L, L)^dim`.
//!
//! 1D fields are point samples at the nodes `x_i = -L + i h`. 2D fields used
//! by the forms are read as cell values: sample `(ix, iy)` is the value on
//! `[x_ix, x_ix + h) x [y_iy, y_iy + h)`. Both readings share the same
//! storage and index arithmetic.

use std::io::{Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn as_u64(self) -> u64 {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    dim: Dim,
    half_width: f64,
    n: usize,
    values: Vec<f64>,
}

fn check_grid(half_width: f64, n: usize) -> Result<()> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::NotPowerOfTwo(n));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidParameter(format!("half width {half_width} must be positive")));
    }
    Ok(())
}

impl SampledField {
    pub fn new_1d(half_width: f64, n: usize, values: Vec<f64>) -> Result<Self> {
        check_grid(half_width, n)?;
        if values.len() != n {
            return Err(Error::GridMismatch(format!("expected {n} samples, got {}", values.len())));
        }
        Ok(SampledField { dim: Dim::One, half_width, n, values })
    }

    pub fn new_2d(half_width: f64, n: usize, values: Vec<f64>) -> Result<Self> {
        check_grid(half_width, n)?;
        if values.len() != n * n {
            return Err(Error::GridMismatch(format!("expected {} samples, got {}", n * n, values.len())));
        }
        Ok(SampledField { dim: Dim::Two, half_width, n, values })
    }

    pub fn zeros_2d(half_width: f64, n: usize) -> Result<Self> {
        Self::new_2d(half_width, n, vec![0.0; n * n])
    }

    /// Samples `f` at the 1D nodes.
    pub fn from_fn_1d(half_width: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(half_width, n)?;
        let h = 2.0 * half_width / n as f64;
        let values = (0..n).map(|i| f(-half_width + i as f64 * h)).collect();
        Self::new_1d(half_width, n, values)
    }

    /// Samples `f` at the 2D nodes `(x_ix, y_iy)`.
    pub fn from_fn_2d(half_width: f64, n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_grid(half_width, n)?;
        let h = 2.0 * half_width / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                values.push(f(-half_width + ix as f64 * h, -half_width + iy as f64 * h));
            }
        }
        Self::new_2d(half_width, n, values)
    }

    /// Cell-valued 2D field with values `f(cell center)`.
    pub fn from_cells(half_width: f64, n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = 2.0 * half_width / n as f64;
        Self::from_fn_2d(half_width, n, |x, y| f(x + 0.5 * h, y + 0.5 * h))
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    /// Index of the cell containing `x`, if inside the grid box.
    pub fn cell_index(&self, x: f64) -> Option<usize> {
        let i = ((x + self.half_width) / self.spacing()).floor();
        (i >= 0.0 && (i as usize) < self.n).then_some(i as usize)
    }

    /// Quadrature weight of one sample, `h^dim`.
    pub fn weight(&self) -> f64 {
        match self.dim {
            Dim::One => self.spacing(),
            Dim::Two => self.spacing().powi(2),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.n + ix]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        self.values[iy * self.n + ix] = v;
    }

    /// Riemann sum `sum f h^dim`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.weight()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.half_width == other.half_width
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "({:?}, L={}, n={}) vs ({:?}, L={}, n={})",
                self.dim, self.half_width, self.n, other.dim, other.half_width, other.n
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SampledField { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(SampledField { values, ..self.clone() })
    }

    /// Binary form: `dim` (u64), `L` (f64), `n` (u64), then row-major f64
    /// samples, all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.dim.as_u64().to_le_bytes())?;
        w.write_all(&self.half_width.to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        let dim = u64::from_le_bytes(buf);
        r.read_exact(&mut buf)?;
        let half_width = f64::from_le_bytes(buf);
        r.read_exact(&mut buf)?;
        let n = u64::from_le_bytes(buf) as usize;
        check_grid(half_width, n)?;
        let count = match dim {
            1 => n,
            2 => n * n,
            d => return Err(Error::InvalidParameter(format!("unsupported dimension {d}"))),
        };
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        if dim == 1 {
            Self::new_1d(half_width, n, values)
        } else {
            Self::new_2d(half_width, n, values)
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_binary(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_binary(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Band-limited interpolant of a 1D sample sequence, zero-padded to twice its
/// length so that it does not wrap around.
struct Interpolant {
    coeffs: Vec<Complex64>,
    len: usize,
}

impl Interpolant {
    fn new(samples: &[f64]) -> Self {
        let len = 2 * samples.len();
        let mut coeffs: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        coeffs.resize(len, Complex64::new(0.0, 0.0));
        fft::forward(&mut coeffs);
        Interpolant { coeffs, len }
    }

    /// Highest significant frequency index.
    fn bandwidth(&self) -> usize {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0;
        }
        (0..=self.len / 2)
            .rev()
            .find(|&k| self.coeffs[k].norm() > 1e-9 * max || self.coeffs[(self.len - k) % self.len].norm() > 1e-9 * max)
            .unwrap_or(0)
    }

    /// Value at fractional index `s`.
    fn eval(&self, s: f64) -> f64 {
        let m = self.len;
        let base = 2.0 * std::f64::consts::PI * s / m as f64;
        let step = Complex64::from_polar(1.0, base);
        let mut phase = Complex64::new(1.0, 0.0);
        let mut acc = self.coeffs[0].re;
        for k in 1..m / 2 {
            phase *= step;
            // Conjugate-symmetric pair k and m - k.
            acc += 2.0 * (self.coeffs[k] * phase).re;
        }
        let nyq = Complex64::from_polar(1.0, base * (m / 2) as f64);
        acc += (self.coeffs[m / 2] * nyq).re;
        acc / m as f64
    }
}

/// `[f]_t(x) = t^{-dim} f(x / t)` on the same grid, by band-limited
/// interpolation. Fails when the dilated field would alias.
pub fn dilate(f: &SampledField, t: f64) -> Result<SampledField> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("dilation scale {t} must be positive")));
    }
    if t == 1.0 {
        return Ok(f.clone());
    }
    let n = f.n;
    let h = f.spacing();
    let lw = f.half_width;
    // Fractional source index for each target node, or None outside the box.
    let sources: Vec<Option<f64>> = (0..n)
        .map(|i| {
            let x = f.node(i) / t;
            (x >= -lw && x < lw).then_some((x + lw) / h)
        })
        .collect();
    let interpolate = |row: &[f64]| -> Result<Vec<f64>> {
        let ip = Interpolant::new(row);
        let band = ip.bandwidth() as f64;
        if band / t >= (ip.len / 2) as f64 {
            return Err(Error::UnderResolved { t, h });
        }
        Ok(sources.iter().map(|s| s.map_or(0.0, |s| ip.eval(s))).collect())
    };
    match f.dim {
        Dim::One => {
            let values = interpolate(&f.values)?.into_iter().map(|v| v / t).collect();
            SampledField::new_1d(lw, n, values)
        }
        Dim::Two => {
            let mut rows = vec![0.0; n * n];
            for iy in 0..n {
                let out = interpolate(&f.values[iy * n..(iy + 1) * n])?;
                rows[iy * n..(iy + 1) * n].copy_from_slice(&out);
            }
            let mut values = vec![0.0; n * n];
            let mut column = vec![0.0; n];
            for ix in 0..n {
                for iy in 0..n {
                    column[iy] = rows[iy * n + ix];
                }
                let out = interpolate(&column)?;
                for iy in 0..n {
                    values[iy * n + ix] = out[iy] / (t * t);
                }
            }
            SampledField::new_2d(lw, n, values)
        }
    }
}

/// `(1 + |shift|)^{-exponent} base(x - shift)`. Shifts that are whole
/// multiples of the spacing move samples exactly; others use the band-limited
/// interpolant.
pub fn wave_packet(base: &SampledField, shift: f64, exponent: i32) -> Result<SampledField> {
    if base.dim != Dim::One {
        return Err(Error::InvalidParameter("wave packets are one-dimensional".into()));
    }
    if shift == 0.0 {
        return Ok(base.clone());
    }
    let n = base.n;
    let h = base.spacing();
    let weight = (1.0 + shift.abs()).powi(-exponent);
    let support: Vec<usize> = (0..n).filter(|&i| base.values[i] != 0.0).collect();
    if let (Some(&lo), Some(&hi)) = (support.first(), support.last()) {
        let (x_lo, x_hi) = (base.node(lo) + shift, base.node(hi) + shift);
        if x_hi < -base.half_width || x_lo >= base.half_width {
            return Err(Error::ShiftOffGrid { shift });
        }
    }
    let steps = shift / h;
    let values = if (steps - steps.round()).abs() < 1e-12 {
        let s = steps.round() as i64;
        (0..n as i64)
            .map(|i| {
                let j = i - s;
                if j >= 0 && j < n as i64 { weight * base.values[j as usize] } else { 0.0 }
            })
            .collect()
    } else {
        let ip = Interpolant::new(&base.values);
        (0..n)
            .map(|i| {
                let s = i as f64 - steps;
                if s >= 0.0 && s < n as f64 { weight * ip.eval(s) } else { 0.0 }
            })
            .collect()
    };
    SampledField::new_1d(base.half_width, n, values)
}

/// Discrete convolution `F * K`, scaled by `h^dim`, evaluated on the grid of
/// `F`. The kernel is centred: its middle sample `n/2` sits at the origin.
/// Zero padding to at least double extent avoids wraparound.
pub fn convolve(f: &SampledField, k: &SampledField) -> Result<SampledField> {
    f.ensure_same_grid(k)?;
    let n = f.n;
    let half = n / 2;
    let w = f.weight();
    match f.dim {
        Dim::One => {
            let c = fft::linear_convolve_1d(&f.values, &k.values);
            let values = (0..n).map(|i| w * c[i + half]).collect();
            SampledField::new_1d(f.half_width, n, values)
        }
        Dim::Two => {
            let (c, m) = fft::linear_convolve_2d(&f.values, n, &k.values, n);
            let mut values = vec![0.0; n * n];
            for iy in 0..n {
                for ix in 0..n {
                    values[iy * n + ix] = w * c[(iy + half) * m + ix + half];
                }
            }
            SampledField::new_2d(f.half_width, n, values)
        }
    }
}

/// Discrete `sup (1+|x|)^8 |f(x)| + (1+|x|)^9 |f'(x)|` over interior nodes,
/// with centred differences for `f'`.
pub fn schwartz_seminorm(f: &SampledField) -> f64 {
    let h = f.spacing();
    (1..f.n.saturating_sub(1))
        .map(|i| {
            let x = f.node(i);
            let d = (f.values[i + 1] - f.values[i - 1]) / (2.0 * h);
            (1.0 + x.abs()).powi(8) * f.values[i].abs() + (1.0 + x.abs()).powi(9) * d.abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(alpha: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| (-(x / alpha).powi(2)).exp() / (std::f64::consts::PI.sqrt() * alpha)
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(SampledField::new_1d(1.0, 12, vec![0.0; 12]), Err(Error::NotPowerOfTwo(12))));
    }

    #[test]
    fn binary_round_trip() {
        let f = SampledField::from_fn_2d(2.0, 8, |x, y| x * y + 0.25).unwrap();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 8 * 64);
        assert_eq!(&buf[..8], &2u64.to_le_bytes());
        assert_eq!(SampledField::read_binary(&buf[..]).unwrap(), f);
    }

    #[test]
    fn dilation_identity_and_gaussian_scaling() {
        let f = SampledField::from_fn_1d(8.0, 512, gauss(0.5)).unwrap();
        assert_eq!(dilate(&f, 1.0).unwrap(), f);
        for t in [0.5, 2.0, 3.0] {
            let d = dilate(&f, t).unwrap();
            let exact = SampledField::from_fn_1d(8.0, 512, gauss(0.5 * t)).unwrap();
            let err = d.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "t = {t}: {err}");
        }
    }

    #[test]
    fn dilation_flags_aliasing() {
        let f = SampledField::from_fn_1d(8.0, 64, gauss(0.4)).unwrap();
        assert!(matches!(dilate(&f, 0.05), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn packet_shift_and_damping() {
        let f = SampledField::from_fn_1d(8.0, 256, gauss(0.5)).unwrap();
        assert_eq!(wave_packet(&f, 0.0, 25).unwrap(), f);
        let p = wave_packet(&f, 1.0, 25).unwrap();
        let ratio = p.max_abs() / f.max_abs();
        assert!((ratio - 2f64.powi(-25)).abs() < 1e-12 * ratio);
        let q = wave_packet(&f, 0.3, 10).unwrap();
        let expected = 1.3f64.powi(-10) * f.mass();
        assert!((q.mass() - expected).abs() < 1e-6 * expected);
        assert!(matches!(wave_packet(&f, 40.0, 10), Err(Error::ShiftOffGrid { .. })));
    }

    #[test]
    fn convolution_properties() {
        let f = SampledField::from_fn_1d(4.0, 128, |x| (-(x - 0.5).powi(2)).exp()).unwrap();
        let h = f.spacing();
        // All kernel mass in the cell at x = h: convolution shifts by one sample.
        let mut delta = vec![0.0; 128];
        delta[65] = 1.0 / h;
        let k = SampledField::new_1d(4.0, 128, delta).unwrap();
        let c = convolve(&f, &k).unwrap();
        for i in 1..128 {
            assert!((c.values()[i] - f.values()[i - 1]).abs() < 1e-12);
        }
        let g = SampledField::from_fn_1d(4.0, 128, |x| 1.0 / (1.0 + x * x)).unwrap();
        let fg = convolve(&f, &g).unwrap();
        let gf = convolve(&g, &f).unwrap();
        for (a, b) in fg.values().iter().zip(gf.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn indicator_self_convolution_peaks_at_one() {
        let n = 4096;
        let ind = SampledField::from_fn_1d(2.0, n, |x| if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 }).unwrap();
        let c = convolve(&ind, &ind).unwrap();
        let i = ind.cell_index(1.0 + 1e-12).unwrap();
        assert!((c.values()[i] - 1.0).abs() <= 2.0 * ind.spacing());
    }

    #[test]
    fn seminorm_basics() {
        let z = SampledField::new_1d(8.0, 256, vec![0.0; 256]).unwrap();
        assert_eq!(schwartz_seminorm(&z), 0.0);
        let f = SampledField::from_fn_1d(8.0, 256, gauss(1.0)).unwrap();
        let s = schwartz_seminorm(&f);
        assert!((schwartz_seminorm(&f.scaled(-3.0)) - 3.0 * s).abs() < 1e-12 * s);
    }
}
