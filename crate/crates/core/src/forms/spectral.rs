//! Frequency-side evaluation of `Lambda^N`.
//!
//! For cell-valued fields the transform of the entangled product on the
//! hyperplane `(xi, eta, -xi, -eta)` is the Fourier series of the offset
//! correlation
//! `W(a, b) = sum F1(x, y) F2(x - a, y) F3(x - a, y - b) F4(x, y - b)`
//! times `h^2 sinc^2(h xi) h^2 sinc^2(h eta)`. The multiplier factors, so each
//! scale needs the two 1D integrals
//! `k13(a) = int f1^(-t xi) f3^(t xi) h^2 sinc^2(h xi) e^(2 pi i xi a h) dxi`
//! and the same with `f2, f4`, after which `Lambda_t = sum W(a, b) k13(a) k24(b)`.

use rustfft::num_complex::Complex64;

use super::local::packet_profiles;
use super::{CoefficientSequence, FormEvaluation, Quadruple, TruncationConfig};
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::quad;

const MAX_GRID: usize = 64;

/// Radius outside which `|f^| <= 1e-17 sup |f^|`.
fn fourier_support(p: &Profile) -> Result<f64> {
    Ok(match p {
        Profile::Gaussian { alpha } => 39f64.sqrt() / (std::f64::consts::PI * alpha),
        Profile::GaussianDeriv { alpha } => 42f64.sqrt() / (std::f64::consts::PI * alpha),
        Profile::Spectral { .. } => 2.0,
        Profile::Packet { base, .. } => fourier_support(base)?,
        Profile::Vartheta | Profile::VarthetaSq => {
            return Err(Error::InvalidParameter("frequency side needs profiles with a Fourier transform".into()))
        }
    })
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let y = std::f64::consts::PI * x;
        y.sin() / y
    }
}

/// `W(a, b)` for `a, b` in `[-(n-1), n-1]`, row-major by `b` with side `2n - 1`.
fn offset_correlation(quad: &Quadruple) -> Vec<f64> {
    let n = quad.grid().n();
    let m = 2 * n - 1;
    let [f1, f2, f3, f4] = quad.fields();
    let mut w = vec![0.0; m * m];
    for x in 0..n {
        for y in 0..n {
            let v1 = f1.get(x, y);
            if v1 == 0.0 {
                continue;
            }
            for xp in 0..n {
                let v2 = v1 * f2.get(xp, y);
                if v2 == 0.0 {
                    continue;
                }
                let a = x as i64 - xp as i64 + n as i64 - 1;
                for yp in 0..n {
                    let b = y as i64 - yp as i64 + n as i64 - 1;
                    w[b as usize * m + a as usize] += v2 * f3.get(xp, yp) * f4.get(x, yp);
                }
            }
        }
    }
    w
}

/// `k(a) = int fa^(-t xi) fb^(t xi) h^2 sinc^2(h xi) e^(2 pi i xi a h) dxi` for
/// `|a| <= n - 1`, indexed by `a + n - 1`.
fn pair_kernel(fa: &Profile, fb: &Profile, t: f64, h: f64, n: usize) -> Result<Vec<Complex64>> {
    let support = fourier_support(fa)?.min(fourier_support(fb)?) / t;
    let cycles = 2.0 * support * (n as f64 * h + h);
    let panels = 32 + (8.0 * cycles).ceil() as usize;
    let rule = quad::gauss(12);
    let width = 2.0 * support / panels as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
    for i in 0..panels {
        let lo = -support + i as f64 * width;
        for (xi, w) in rule.on(lo, lo + width) {
            let m = fa.fourier(-t * xi)? * fb.fourier(t * xi)? * (w * h * h * sinc(h * xi).powi(2));
            if m == Complex64::new(0.0, 0.0) {
                continue;
            }
            let step = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * xi * h);
            let mut phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * xi * h * (n as f64 - 1.0));
            for slot in out.iter_mut() {
                *slot += m * phase;
                phase *= step;
            }
        }
    }
    Ok(out)
}

/// `int mu_t int F^(xi, eta, -xi, -eta) f1^(t xi) f2^(t eta) f3^(-t xi) f4^(-t eta) dxi deta dt/t`
/// with the packets `(phi^(u), psi^(v), phi^(-u), psi^(-v))` on the same
/// `t` grid as [`super::truncated_form`].
pub fn frequency_side_form(
    quad: &Quadruple,
    phi: &Profile,
    psi: &Profile,
    u: f64,
    v: f64,
    mu: &CoefficientSequence,
    config: &TruncationConfig,
) -> Result<FormEvaluation> {
    let grid = quad.grid();
    let (n, h) = (grid.n(), grid.spacing());
    if n > MAX_GRID {
        return Err(Error::GridTooLarge { n, limit: MAX_GRID });
    }
    if mu.steps_per_octave != config.steps_per_octave || mu.first_octave != config.first_octave() {
        return Err(Error::InvalidParameter("coefficients do not match the truncation".into()));
    }
    let profiles = packet_profiles(phi, psi, u, v);
    let w = offset_correlation(quad);
    let m = 2 * n - 1;
    let s = config.steps_per_octave;
    let mut value = Complex64::new(0.0, 0.0);
    let mut absolute = 0.0;
    for j in config.octaves() {
        for i in 0..s {
            let coeff = mu.at(j, i);
            if coeff == 0.0 {
                continue;
            }
            let t = 2f64.powi(j) * 2f64.powf((i as f64 + 0.5) / s as f64);
            let k13 = pair_kernel(&profiles[0], &profiles[2], t, h, n)?;
            let k24 = pair_kernel(&profiles[1], &profiles[3], t, h, n)?;
            let mut lt = Complex64::new(0.0, 0.0);
            for b in 0..m {
                let row: Complex64 = (0..m).map(|a| k13[a] * w[b * m + a]).sum();
                lt += row * k24[b];
            }
            let wt = std::f64::consts::LN_2 / s as f64;
            value += wt * coeff * lt;
            absolute += wt * lt.norm();
        }
    }
    Ok(FormEvaluation {
        value: value.re,
        absolute,
        imaginary: value.im,
        half_width: grid.half_width(),
        n,
        t_samples: config.t_samples(),
        truncation_tolerance: 1e-17,
        flags: Vec::new(),
    })
}
