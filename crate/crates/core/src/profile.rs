//! One-dimensional profiles with exact values, derivatives, antiderivatives
//! and Fourier transforms where available.
//!
//! Fourier convention: `f^(xi) = int f(x) exp(-2 pi i x xi) dx`.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SampledField;
use crate::quad;

/// `psi^(tau) = exp(-1 / ((|tau| - 1)(2 - |tau|)))` on `1 < |tau| < 2`.
pub fn psi_hat(tau: f64) -> f64 {
    let a = tau.abs();
    if a <= 1.0 || a >= 2.0 {
        return 0.0;
    }
    (-1.0 / ((a - 1.0) * (2.0 - a))).exp()
}

/// `psi^(tau)^2 / tau` written in the distances `v = tau - 1`, `u = 2 - tau`
/// so that Gauss nodes near either edge carry no cancellation.
fn psi_sq_over_tau(v: f64, u: f64) -> f64 {
    if v <= 0.0 || u <= 0.0 {
        return 0.0;
    }
    (-2.0 / (v * u)).exp() / (1.0 + v)
}

/// `int_a^2 psi^(tau)^2 dtau / tau` for `1 <= a <= 2`.
fn psi_tail(a: f64) -> f64 {
    if a >= 2.0 {
        return 0.0;
    }
    let a = a.max(1.0);
    let near_two = |u: f64| psi_sq_over_tau(1.0 - u, u);
    let near_one = |v: f64| psi_sq_over_tau(v, 1.0 - v);
    let integrate = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
        quad::adaptive(&f, lo, hi, 1e-14, 1e-300).expect("smooth bump integrand")
    };
    if a >= 1.5 {
        integrate(&near_two, 0.0, 2.0 - a)
    } else {
        integrate(&near_one, a - 1.0, 0.5) + integrate(&near_two, 0.0, 0.5)
    }
}

/// `phi^(0)^2 = int_1^2 psi^2 dtau / tau`.
pub fn phi_hat_at_zero_sq() -> f64 {
    static C2: OnceLock<f64> = OnceLock::new();
    *C2.get_or_init(|| psi_tail(1.0))
}

/// `phi^(xi)^2 = int_{|xi|}^inf psi^(tau)^2 dtau / tau`, even in `xi`.
pub fn phi_hat_sq(xi: f64) -> f64 {
    let a = xi.abs();
    if a >= 2.0 {
        0.0
    } else if a <= 1.0 {
        phi_hat_at_zero_sq()
    } else {
        psi_tail(a)
    }
}

pub fn phi_hat(xi: f64) -> f64 {
    phi_hat_sq(xi).sqrt()
}

/// The tail integral `int_xi^inf psi^(tau)^2 dtau / tau` taken literally over
/// the signed line, for comparison against the even closed form.
pub fn phi_hat_sq_signed(xi: f64) -> f64 {
    let f = |tau: f64| psi_hat(tau).powi(2) / tau;
    let piece = |a: f64, b: f64| {
        if a >= b { 0.0 } else { quad::adaptive(&f, a, b, 1e-14, 1e-300).expect("smooth bump integrand") }
    };
    piece(xi.max(-2.0), -1.0) + piece(xi.max(1.0), 2.0)
}

/// Even real spectrum tabulated at Gauss nodes on `[0, top]`, giving the
/// space profile `f(x) = 2 sum w v cos(2 pi x xi)`.
#[derive(Debug)]
pub struct SpectralTable {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<f64>,
    envelope: OnceLock<Vec<f64>>,
    /// `(F, f, f')` at `i * FINE_STEP` on `[0, SPECTRAL_CUTOFF]` for quintic
    /// Hermite interpolation of the antiderivative `F`.
    fine: OnceLock<Vec<[f64; 3]>>,
}

const ENVELOPE_STEP: f64 = 0.125;
/// Spectral profiles are set to zero beyond this radius, where their true
/// values are below the rounding noise of the tabulated sum.
pub const SPECTRAL_CUTOFF: f64 = 64.0;
const ENVELOPE_POINTS: usize = 513;
const FINE_STEP: f64 = 1.0 / 128.0;

impl SpectralTable {
    fn build(a: f64, b: f64, panels: usize, order: usize, spectrum: impl Fn(f64) -> f64) -> Self {
        let rule = quad::gauss(order);
        let width = (b - a) / panels as f64;
        let (mut nodes, mut weights, mut values) = (Vec::new(), Vec::new(), Vec::new());
        for p in 0..panels {
            let lo = a + p as f64 * width;
            for (x, w) in rule.on(lo, lo + width) {
                nodes.push(x);
                weights.push(w);
                values.push(spectrum(x));
            }
        }
        SpectralTable { nodes, weights, values, envelope: OnceLock::new(), fine: OnceLock::new() }
    }

    /// `env[i] = max_{|x| >= i * step} |f(x)|` on `[0, 64]`. Beyond that range
    /// the tabulated sum no longer resolves the true decay.
    fn envelope(&self) -> &[f64] {
        self.envelope.get_or_init(|| {
            let mut env: Vec<f64> = (0..ENVELOPE_POINTS).map(|i| self.eval(i as f64 * ENVELOPE_STEP).abs()).collect();
            for i in (0..ENVELOPE_POINTS - 1).rev() {
                env[i] = env[i].max(env[i + 1]);
            }
            env
        })
    }

    fn significant_radius(&self, tol: f64) -> f64 {
        let env = self.envelope();
        let cut = tol * env[0];
        env.iter()
            .position(|&v| v <= cut)
            .map_or(SPECTRAL_CUTOFF, |i| i as f64 * ENVELOPE_STEP)
    }

    fn fine(&self) -> &[[f64; 3]] {
        self.fine.get_or_init(|| {
            let points = (SPECTRAL_CUTOFF / FINE_STEP).round() as usize + 1;
            (0..points)
                .into_par_iter()
                .map(|i| {
                    let x = i as f64 * FINE_STEP;
                    [self.antiderivative_direct(x), self.eval(x), self.derivative(x)]
                })
                .collect()
        })
    }

    /// Odd antiderivative, interpolated from the fine table.
    fn antiderivative(&self, x: f64) -> f64 {
        let (sign, a) = if x < 0.0 { (-1.0, (-x).min(SPECTRAL_CUTOFF)) } else { (1.0, x.min(SPECTRAL_CUTOFF)) };
        let fine = self.fine();
        let pos = a / FINE_STEP;
        let i = (pos.floor() as usize).min(fine.len() - 2);
        let s = pos - i as f64;
        let d = FINE_STEP;
        let (l, r) = (fine[i], fine[i + 1]);
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
        let h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let h5 = 0.5 * (s3 - 2.0 * s4 + s5);
        let v = h0 * l[0] + d * h1 * l[1] + d * d * h2 * l[2] + h3 * r[0] + d * h4 * r[1] + d * d * h5 * r[2];
        sign * v
    }

    fn antiderivative_direct(&self, x: f64) -> f64 {
        let x = x.clamp(-SPECTRAL_CUTOFF, SPECTRAL_CUTOFF);
        let mut acc = 0.0;
        for i in 0..self.nodes.len() {
            let w = 2.0 * PI * self.nodes[i];
            acc += self.weights[i] * self.values[i] * (w * x).sin() / w;
        }
        2.0 * acc
    }

    fn eval(&self, x: f64) -> f64 {
        if x.abs() > SPECTRAL_CUTOFF {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..self.nodes.len() {
            acc += self.weights[i] * self.values[i] * (2.0 * PI * x * self.nodes[i]).cos();
        }
        2.0 * acc
    }

    fn derivative(&self, x: f64) -> f64 {
        if x.abs() > SPECTRAL_CUTOFF {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..self.nodes.len() {
            let w = 2.0 * PI * self.nodes[i];
            acc -= self.weights[i] * self.values[i] * w * (w * x).sin();
        }
        2.0 * acc
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        self.antiderivative(b) - self.antiderivative(a)
    }
}

fn phi_table() -> Arc<SpectralTable> {
    static T: OnceLock<Arc<SpectralTable>> = OnceLock::new();
    T.get_or_init(|| Arc::new(SpectralTable::build(0.0, 2.0, 64, 12, phi_hat))).clone()
}

fn psi_table() -> Arc<SpectralTable> {
    static T: OnceLock<Arc<SpectralTable>> = OnceLock::new();
    T.get_or_init(|| Arc::new(SpectralTable::build(1.0, 2.0, 48, 12, psi_hat))).clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralKind {
    /// `phi` with `phi^` the square-root tail integral of `psi^2`.
    Phi,
    /// `psi` with `psi^` the annulus bump.
    Psi,
}

#[derive(Debug, Clone)]
pub enum Profile {
    /// `g_a(x) = exp(-(x/a)^2) / (sqrt(pi) a)`.
    Gaussian { alpha: f64 },
    /// `h_a(x) = a g_a'(x)`.
    GaussianDeriv { alpha: f64 },
    /// `(1 + |x|)^-4`.
    Vartheta,
    /// `(1 + |x|)^-8`.
    VarthetaSq,
    /// Square-function partners defined through their spectra.
    Spectral { kind: SpectralKind, table: Arc<SpectralTable> },
    /// `(1 + |shift|)^-exponent base(x - shift)`.
    Packet { base: Arc<Profile>, shift: f64, exponent: i32 },
}

impl PartialEq for Profile {
    fn eq(&self, other: &Self) -> bool {
        use Profile::*;
        match (self, other) {
            (Gaussian { alpha: a }, Gaussian { alpha: b }) => a == b,
            (GaussianDeriv { alpha: a }, GaussianDeriv { alpha: b }) => a == b,
            (Vartheta, Vartheta) | (VarthetaSq, VarthetaSq) => true,
            (Spectral { kind: a, .. }, Spectral { kind: b, .. }) => a == b,
            (Packet { base: a, shift: s, exponent: e }, Packet { base: b, shift: t, exponent: f }) => {
                a == b && s == t && e == f
            }
            _ => false,
        }
    }
}

/// `int_a^b (1 + |x|)^-(m+1) dx`, from tail differences when `a, b` share a
/// sign so that far cells do not cancel.
fn decay_integral(a: f64, b: f64, m: i32) -> f64 {
    let tail = |x: f64| (1.0 + x.abs()).powi(-m) / m as f64;
    if a >= 0.0 {
        tail(a) - tail(b)
    } else if b <= 0.0 {
        tail(b) - tail(a)
    } else {
        2.0 / m as f64 - tail(a) - tail(b)
    }
}

fn erf_diff(a: f64, b: f64) -> f64 {
    // erf(b) - erf(a), accurate in either tail.
    if a >= 0.0 {
        libm::erfc(a) - libm::erfc(b)
    } else if b <= 0.0 {
        libm::erfc(-b) - libm::erfc(-a)
    } else {
        libm::erf(b) - libm::erf(a)
    }
}

impl Profile {
    pub fn gaussian(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("Gaussian scale {alpha} must be positive")));
        }
        Ok(Profile::Gaussian { alpha })
    }

    pub fn gaussian_deriv(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("Gaussian scale {alpha} must be positive")));
        }
        Ok(Profile::GaussianDeriv { alpha })
    }

    pub fn phi() -> Self {
        Profile::Spectral { kind: SpectralKind::Phi, table: phi_table() }
    }

    pub fn psi() -> Self {
        Profile::Spectral { kind: SpectralKind::Psi, table: psi_table() }
    }

    /// Packet `(1+|shift|)^-exponent self(x - shift)`; shift 0 returns `self`.
    pub fn packet(&self, shift: f64, exponent: i32) -> Self {
        if shift == 0.0 {
            return self.clone();
        }
        Profile::Packet { base: Arc::new(self.clone()), shift, exponent }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Gaussian { alpha } => (-(x / alpha).powi(2)).exp() / (PI.sqrt() * alpha),
            Profile::GaussianDeriv { alpha } => -2.0 * x / alpha * (-(x / alpha).powi(2)).exp() / (PI.sqrt() * alpha),
            Profile::Vartheta => (1.0 + x.abs()).powi(-4),
            Profile::VarthetaSq => (1.0 + x.abs()).powi(-8),
            Profile::Spectral { table, .. } => table.eval(x),
            Profile::Packet { base, shift, exponent } => packet_weight(*shift, *exponent) * base.eval(x - shift),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Profile::Gaussian { alpha } => -2.0 * x / (alpha * alpha) * self.eval(x),
            Profile::GaussianDeriv { alpha } => {
                let g = (-(x / alpha).powi(2)).exp() / (PI.sqrt() * alpha);
                alpha * (4.0 * x * x / alpha.powi(4) - 2.0 / (alpha * alpha)) * g
            }
            Profile::Vartheta => -4.0 * x.signum() * (1.0 + x.abs()).powi(-5),
            Profile::VarthetaSq => -8.0 * x.signum() * (1.0 + x.abs()).powi(-9),
            Profile::Spectral { table, .. } => table.derivative(x),
            Profile::Packet { base, shift, exponent } => packet_weight(*shift, *exponent) * base.derivative(x - shift),
        }
    }

    /// `int_a^b f(x) dx` from the antiderivative.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Profile::Gaussian { alpha } => 0.5 * erf_diff(a / alpha, b / alpha),
            Profile::GaussianDeriv { alpha } => {
                let g = |x: f64| (-(x / alpha).powi(2)).exp() / PI.sqrt();
                g(b) - g(a)
            }
            Profile::Vartheta => decay_integral(a, b, 3),
            Profile::VarthetaSq => decay_integral(a, b, 7),
            Profile::Spectral { table, .. } => table.integral(a, b),
            Profile::Packet { base, shift, exponent } => {
                packet_weight(*shift, *exponent) * base.integral(a - shift, b - shift)
            }
        }
    }

    /// `int_R f`.
    pub fn total_integral(&self) -> f64 {
        match self {
            Profile::Gaussian { .. } => 1.0,
            Profile::GaussianDeriv { .. } => 0.0,
            Profile::Vartheta => 2.0 / 3.0,
            Profile::VarthetaSq => 2.0 / 7.0,
            Profile::Spectral { kind: SpectralKind::Phi, .. } => phi_hat(0.0),
            Profile::Spectral { kind: SpectralKind::Psi, .. } => 0.0,
            Profile::Packet { base, shift, exponent } => packet_weight(*shift, *exponent) * base.total_integral(),
        }
    }

    /// Fourier transform at `xi`.
    pub fn fourier(&self, xi: f64) -> Result<Complex64> {
        Ok(match self {
            Profile::Gaussian { alpha } => Complex64::new((-(PI * alpha * xi).powi(2)).exp(), 0.0),
            Profile::GaussianDeriv { alpha } => {
                Complex64::new(0.0, alpha * 2.0 * PI * xi * (-(PI * alpha * xi).powi(2)).exp())
            }
            Profile::Spectral { kind: SpectralKind::Phi, .. } => Complex64::new(phi_hat(xi), 0.0),
            Profile::Spectral { kind: SpectralKind::Psi, .. } => Complex64::new(psi_hat(xi), 0.0),
            Profile::Packet { base, shift, exponent } => {
                packet_weight(*shift, *exponent) * Complex64::from_polar(1.0, -2.0 * PI * shift * xi) * base.fourier(xi)?
            }
            Profile::Vartheta | Profile::VarthetaSq => {
                return Err(Error::InvalidParameter("no closed-form transform for the decay profiles".into()))
            }
        })
    }

    /// Interval outside which `|f| <= tol * sup |f|`.
    pub fn significant_interval(&self, tol: f64) -> (f64, f64) {
        let tol = tol.clamp(1e-300, 0.5);
        match self {
            Profile::Gaussian { alpha } => {
                let r = alpha * (-tol.ln()).sqrt();
                (-r, r)
            }
            Profile::GaussianDeriv { alpha } => {
                let r = alpha * ((-tol.ln()).sqrt() + 1.0);
                (-r, r)
            }
            Profile::Vartheta => {
                let r = tol.powf(-0.25) - 1.0;
                (-r, r)
            }
            Profile::VarthetaSq => {
                let r = tol.powf(-0.125) - 1.0;
                (-r, r)
            }
            Profile::Spectral { table, .. } => {
                let r = table.significant_radius(tol);
                (-r, r)
            }
            Profile::Packet { base, shift, .. } => {
                let (a, b) = base.significant_interval(tol);
                (a + shift, b + shift)
            }
        }
    }

    /// Point samples on the 1D grid over `[-L, L)`.
    pub fn sample(&self, half_width: f64, n: usize) -> Result<SampledField> {
        SampledField::from_fn_1d(half_width, n, |x| self.eval(x))
    }

    /// `[f]_t` sampled on the grid, from the exact profile.
    pub fn sample_dilated(&self, half_width: f64, n: usize, t: f64) -> Result<SampledField> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("dilation scale {t} must be positive")));
        }
        SampledField::from_fn_1d(half_width, n, |x| self.eval(x / t) / t)
    }

    /// Cell integral `int_{x0}^{x1} t^-1 f((p - x)/t) dx`.
    pub fn kernel_cell(&self, p: f64, t: f64, x0: f64, x1: f64) -> f64 {
        self.integral((p - x1) / t, (p - x0) / t)
    }

    /// Cell integrals of `t^-1 f((p - x)/t)` over consecutive cells with the
    /// given edges, restricted to cells meeting the significant window.
    /// Returns the first cell index and the values.
    pub fn kernel_row(&self, p: f64, t: f64, edges: &[f64], tol: f64) -> (usize, Vec<f64>) {
        self.kernel_row_within(p, t, edges, self.significant_interval(tol))
    }

    /// As [`Profile::kernel_row`] with a precomputed significant interval.
    pub fn kernel_row_within(&self, p: f64, t: f64, edges: &[f64], interval: (f64, f64)) -> (usize, Vec<f64>) {
        let cells = edges.len().saturating_sub(1);
        let (a, b) = interval;
        let (xlo, xhi) = (p - b * t, p - a * t);
        let lo = edges[..cells].partition_point(|&e| e < xlo).saturating_sub(1);
        let hi = edges[1..].partition_point(|&e| e <= xhi).saturating_add(1).min(cells);
        if lo >= hi {
            return (0, Vec::new());
        }
        let values = match self {
            Profile::Spectral { table, .. } => {
                let anti: Vec<f64> = (lo..=hi).map(|i| table.antiderivative((p - edges[i]) / t)).collect();
                (0..hi - lo).map(|i| anti[i] - anti[i + 1]).collect()
            }
            _ => (lo..hi).map(|i| self.kernel_cell(p, t, edges[i], edges[i + 1])).collect(),
        };
        (lo, values)
    }

    pub fn name(&self) -> String {
        match self {
            Profile::Gaussian { alpha } => format!("g_{alpha}"),
            Profile::GaussianDeriv { alpha } => format!("h_{alpha}"),
            Profile::Vartheta => "vartheta".into(),
            Profile::VarthetaSq => "vartheta^2".into(),
            Profile::Spectral { kind: SpectralKind::Phi, .. } => "phi".into(),
            Profile::Spectral { kind: SpectralKind::Psi, .. } => "psi".into(),
            Profile::Packet { base, shift, exponent } => format!("{}^({shift};{exponent})", base.name()),
        }
    }
}

pub fn packet_weight(shift: f64, exponent: i32) -> f64 {
    (1.0 + shift.abs()).powi(-exponent)
}

/// The sampled decay kernels `theta(x, y) = (1 + |(x,y)|^4)^-1` and
/// `vartheta(x) = (1 + |x|)^-4`.
#[derive(Debug, Clone)]
pub struct Kernels {
    pub theta: SampledField,
    pub vartheta: SampledField,
}

pub fn theta(x: f64, y: f64) -> f64 {
    1.0 / (1.0 + (x * x + y * y).powi(2))
}

pub fn make_kernels(half_width: f64, n: usize) -> Result<Kernels> {
    Ok(Kernels {
        theta: SampledField::from_fn_2d(half_width, n, theta)?,
        vartheta: Profile::Vartheta.sample(half_width, n)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_profile(p: &Profile) {
        // Antiderivative against quadrature of eval; derivative against differences.
        for &(a, b) in &[(-1.3, 0.4), (0.2, 2.5), (-3.0, -0.5)] {
            let q = quad::adaptive(&|x: f64| p.eval(x), a, b, 1e-14, 1e-16).unwrap();
            assert!((p.integral(a, b) - q).abs() < 1e-12, "{} on [{a}, {b}]", p.name());
        }
        for &x in &[-1.7, -0.3, 0.45, 2.2] {
            let e = 1e-5;
            let fd = (p.eval(x + e) - p.eval(x - e)) / (2.0 * e);
            assert!((p.derivative(x) - fd).abs() < 1e-7, "{} at {x}", p.name());
        }
    }

    #[test]
    fn antiderivatives_and_derivatives() {
        for p in [
            Profile::gaussian(1.0).unwrap(),
            Profile::gaussian_deriv(2.0).unwrap(),
            Profile::Vartheta,
            Profile::VarthetaSq,
            Profile::phi(),
            Profile::psi(),
            Profile::gaussian(1.0).unwrap().packet(0.7, 25),
        ] {
            check_profile(&p);
        }
    }

    #[test]
    fn closed_form_values() {
        let g = Profile::gaussian(1.0).unwrap();
        assert!((g.eval(0.0) - 0.5641895835477563).abs() < 1e-15);
        assert_eq!(Profile::gaussian_deriv(3.0).unwrap().eval(0.0), 0.0);
        assert!(Profile::gaussian(0.0).is_err());
        assert!((Profile::Vartheta.total_integral() - Profile::Vartheta.integral(-1e9, 1e9)).abs() < 1e-12);
    }

    #[test]
    fn kernels_at_grid_points() {
        let k = make_kernels(4.0, 64).unwrap();
        let (i0, i1) = (32, 32 + 8);
        assert_eq!(k.theta.get(i0, i0), 1.0);
        assert_eq!(k.vartheta.values()[i0], 1.0);
        assert_eq!(k.theta.get(i1, i0), 0.5);
        assert_eq!(k.vartheta.values()[i1], 1.0 / 16.0);
        for iy in 0..64 {
            for ix in 0..64 {
                let v = k.vartheta.values()[ix] * k.vartheta.values()[iy];
                assert!(v <= k.theta.get(ix, iy));
            }
        }
    }

    #[test]
    fn spectral_profiles_invert_their_spectra() {
        // Transform of the space samples reproduces the spectrum.
        for (p, hat) in [(Profile::psi(), psi_hat as fn(f64) -> f64), (Profile::phi(), phi_hat)] {
            for xi in [0.0, 0.5, 1.2, 1.5, 1.9] {
                let re = 2.0 * quad::composite(0.0, 60.0, 1200, 8, |x| p.eval(x) * (2.0 * PI * x * xi).cos());
                assert!((re - hat(xi)).abs() < 1e-6, "{} at {xi}: {re} vs {}", p.name(), hat(xi));
            }
        }
    }

    #[test]
    fn phi_hat_vanishes_outside_two() {
        assert_eq!(phi_hat(2.0), 0.0);
        assert!(phi_hat_sq_signed(2.0).abs() < 1e-14);
        assert!(phi_hat_sq_signed(-2.0).abs() < 1e-14);
        assert!((phi_hat_sq_signed(-1.5) - phi_hat_sq(1.5)).abs() < 1e-14);
        assert!((phi_hat_sq_signed(0.0) - phi_hat_sq(0.0)).abs() < 1e-14);
    }

    #[test]
    fn kernel_rows_match_cell_integrals() {
        let edges: Vec<f64> = (0..=32).map(|i| -4.0 + 0.25 * i as f64).collect();
        for prof in [Profile::gaussian(1.0).unwrap(), Profile::psi(), Profile::Vartheta] {
            let (lo, row) = prof.kernel_row(0.3, 0.5, &edges, 1e-15);
            for i in 0..32 {
                let v = if i >= lo && i < lo + row.len() { row[i - lo] } else { 0.0 };
                let exact = prof.kernel_cell(0.3, 0.5, edges[i], edges[i + 1]);
                assert!((v - exact).abs() < 1e-13, "{} cell {i}", prof.name());
            }
        }
        let (a, b) = Profile::phi().significant_interval(1e-12);
        assert!(a < -1.0 && b > 1.0 && b.is_finite());
    }

    #[test]
    fn interpolated_antiderivative_matches_direct_sum() {
        for table in [phi_table(), psi_table()] {
            for i in 0..400 {
                let x = -70.0 + 0.3517 * i as f64;
                let (a, b) = (table.antiderivative(x), table.antiderivative_direct(x));
                assert!((a - b).abs() < 1e-12, "{x}: {a} {b}");
            }
        }
    }

    #[test]
    fn packet_fourier_modulates() {
        let g = Profile::gaussian(1.0).unwrap();
        let p = g.packet(1.0, 25);
        let f = p.fourier(0.3).unwrap();
        let expected = 2f64.powi(-25) * g.fourier(0.3).unwrap().re;
        assert!((f.norm() - expected).abs() < 1e-15);
    }
}
