//! Admissible pairs `(rho, sigma)` with `-t d/dt |rho^(t tau)|^2 = |sigma^(t tau)|^2`,
//! the Gaussian superposition `Phi`, and the scale-telescoping identity.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::{self, Profile};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PairKind {
    Gaussian { alpha: f64 },
    SquareFunction,
}

#[derive(Debug, Clone)]
pub struct AdmissiblePair {
    pub rho: Profile,
    pub sigma: Profile,
    pub kind: PairKind,
}

/// `(g_a, h_a)`.
pub fn gaussian_pair(alpha: f64) -> Result<AdmissiblePair> {
    Ok(AdmissiblePair {
        rho: Profile::gaussian(alpha)?,
        sigma: Profile::gaussian_deriv(alpha)?,
        kind: PairKind::Gaussian { alpha },
    })
}

/// `(phi, psi)` with `psi^` the bump on `1 < |tau| < 2` and
/// `phi^(xi)^2 = int_{|xi|}^inf psi^(tau)^2 dtau / tau`.
pub fn make_square_function_pair() -> AdmissiblePair {
    AdmissiblePair { rho: Profile::phi(), sigma: Profile::psi(), kind: PairKind::SquareFunction }
}

/// Worst point of an identity check over a `(t, tau)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FtResidual {
    pub max_residual: f64,
    pub t: f64,
    pub tau: f64,
    pub points: usize,
}

/// `n` points log-spaced on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo * hi).sqrt()];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// `n` points equally spaced on `[lo, hi]`.
pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn gaussian_hat(alpha: f64, z: Complex64) -> Complex64 {
    (-(PI * alpha * z).powi(2)).exp()
}

/// Gaussian pair residual with the scale derivative taken by complex step on
/// `P(s) = g^(s) g^(-s)`, the analytic continuation of `|g^(s)|^2`. Points
/// where both sides underflow below `1e-290` are skipped.
pub fn gaussian_ft_residual(alpha: f64, ts: &[f64], taus: &[f64]) -> Result<FtResidual> {
    let pair = gaussian_pair(alpha)?;
    let step = 1e-20;
    let mut worst = FtResidual { max_residual: 0.0, t: ts[0], tau: taus[0], points: 0 };
    for &t in ts {
        for &tau in taus {
            let s = Complex64::from_polar(t, step) * tau;
            let p = gaussian_hat(alpha, s) * gaussian_hat(alpha, -s);
            let lhs = -p.im / step;
            let rhs = pair.sigma.fourier(t * tau)?.norm_sqr();
            let scale = lhs.abs().max(rhs.abs());
            if scale <= 1e-290 {
                continue;
            }
            worst.points += 1;
            let r = (lhs - rhs).abs() / scale;
            if r > worst.max_residual {
                worst = FtResidual { max_residual: r, t, tau, ..worst };
            }
        }
    }
    Ok(worst)
}

/// Square-function pair residual: fourth-order differences in `ln t` of
/// `|phi^(t tau)|^2` against `|psi^(t tau)|^2`, normwise
/// (`max |difference| / max |rhs|`).
pub fn square_function_ft_residual(ts: &[f64], taus: &[f64]) -> FtResidual {
    let d = 2e-4;
    let f = |lam: f64, tau: f64| profile::phi_hat_sq(lam.exp() * tau);
    let mut worst = FtResidual { max_residual: 0.0, t: ts[0], tau: taus[0], points: 0 };
    let mut max_rhs: f64 = 0.0;
    for &t in ts {
        for &tau in taus {
            let lam = t.ln();
            let deriv = (-f(lam + 2.0 * d, tau) + 8.0 * f(lam + d, tau) - 8.0 * f(lam - d, tau) + f(lam - 2.0 * d, tau))
                / (12.0 * d);
            let rhs = profile::psi_hat(t * tau).powi(2);
            max_rhs = max_rhs.max(rhs);
            worst.points += 1;
            let r = (-deriv - rhs).abs();
            if r > worst.max_residual {
                worst = FtResidual { max_residual: r, t, tau, ..worst };
            }
        }
    }
    if max_rhs > 0.0 {
        worst.max_residual /= max_rhs;
    }
    worst
}

/// Residual of the pair identity on the standard grid: `(t, tau)` in
/// `[1/4, 4] x [-4, 4]`, 64 x 65 points for Gaussians and 32 x 32 for the
/// square-function pair.
pub fn ft_residual(pair: &AdmissiblePair) -> Result<FtResidual> {
    match pair.kind {
        PairKind::Gaussian { alpha } => gaussian_ft_residual(alpha, &log_grid(0.25, 4.0, 64), &lin_grid(-4.0, 4.0, 65)),
        PairKind::SquareFunction => Ok(square_function_ft_residual(&log_grid(0.25, 4.0, 32), &lin_grid(-4.0, 4.0, 32))),
    }
}

/// Fails with `InadmissiblePair` when the identity residual exceeds `tol`.
pub fn check_admissible(pair: &AdmissiblePair, tol: f64) -> Result<FtResidual> {
    let r = ft_residual(pair)?;
    if r.max_residual > tol {
        return Err(Error::InadmissiblePair { residual: r.max_residual, tolerance: tol });
    }
    Ok(r)
}

/// `Phi(x) = int_1^inf a^-21 exp(-(x/a)^2) da = int_0^1 s^19 exp(-x^2 s^2) ds`.
pub fn phi_superposition(x: f64) -> Result<f64> {
    let x2 = x * x;
    let f = move |s: f64| s.powi(19) * (-x2 * s * s).exp();
    quad::adaptive(&f, 0.0, 1.0, 1e-12, 0.0)
}

/// Limit of `x^20 Phi(x)`: `Gamma(10) / 2 = 9!/2`.
pub const PHI_ASYMPTOTIC_CONSTANT: f64 = 181_440.0;

/// Comparison of both sides of the scale-telescoping identity at one octave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TelescopingCheck {
    pub k: i32,
    pub max_lhs: f64,
    pub max_error: f64,
    pub relative_error: f64,
}

/// Checks `[rho]_{2^(k-1)} - [rho]_{2^k} = int (t^-1 rho(x/t) + t^-1 (x/t) rho'(x/t)) dt/t`
/// over `t` in `[2^(k-1), 2^k]` at the given points, with composite Simpson in
/// `ln t` on `steps` (even) intervals.
pub fn ftc_telescoping(rho: &Profile, k: i32, xs: &[f64], steps: usize) -> Result<TelescopingCheck> {
    if steps == 0 || !steps.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("Simpson needs an even step count, got {steps}")));
    }
    let (t0, t1) = (2f64.powi(k - 1), 2f64.powi(k));
    let dilated = |t: f64, x: f64| rho.eval(x / t) / t;
    let generator = |t: f64, x: f64| {
        let s = x / t;
        (rho.eval(s) + s * rho.derivative(s)) / t
    };
    let h = (t1 / t0).ln() / steps as f64;
    let mut check = TelescopingCheck { k, max_lhs: 0.0, max_error: 0.0, relative_error: 0.0 };
    for &x in xs {
        let lhs = dilated(t0, x) - dilated(t1, x);
        let mut rhs = 0.0;
        for i in 0..=steps {
            let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            rhs += w * generator(t0 * (i as f64 * h).exp(), x);
        }
        rhs *= h / 3.0;
        check.max_lhs = check.max_lhs.max(lhs.abs());
        check.max_error = check.max_error.max((lhs - rhs).abs());
    }
    check.relative_error = if check.max_lhs > 0.0 { check.max_error / check.max_lhs } else { check.max_error };
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_identity_holds() {
        for alpha in [1.0, 2.0, 5.0] {
            let r = ft_residual(&gaussian_pair(alpha).unwrap()).unwrap();
            assert!(r.max_residual <= 1e-10, "alpha {alpha}: {r:?}");
            assert!(r.points > 0);
        }
        assert!(gaussian_pair(0.0).is_err());
    }

    #[test]
    fn square_function_identity_holds() {
        let pair = make_square_function_pair();
        let r = check_admissible(&pair, 1e-6).unwrap();
        assert!(r.max_residual <= 1e-6, "{r:?}");
        assert!(pair.rho.fourier(2.0).unwrap().norm() <= 1e-10);
        assert!(pair.rho.fourier(-2.0).unwrap().norm() <= 1e-10);
        let c = profile::phi_hat(0.0);
        assert!(c > 0.0 && (profile::phi_hat(1.0) - c).abs() < 1e-15);
    }

    #[test]
    fn phi_superposition_values() {
        assert!((phi_superposition(0.0).unwrap() - 0.05).abs() < 1e-12);
        let x: f64 = 50.0;
        let r = x.powi(20) * phi_superposition(x).unwrap() / PHI_ASYMPTOTIC_CONSTANT;
        assert!((r - 1.0).abs() < 0.01, "{r}");
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let v = phi_superposition(0.25 * i as f64).unwrap();
            assert!(v < prev);
            prev = v;
        }
        // Direct quadrature over the original variable agrees.
        let direct = quad::adaptive(&|a: f64| a.powi(-21) * (-(1.5f64 / a).powi(2)).exp(), 1.0, 60.0, 1e-12, 0.0).unwrap();
        let phi = phi_superposition(1.5).unwrap();
        assert!((direct - phi).abs() < 1e-12 * phi, "{direct} vs {phi}");
    }

    #[test]
    fn telescoping_identity() {
        let xs: Vec<f64> = (0..256).map(|i| -8.0 + i as f64 / 16.0).collect();
        for rho in [Profile::gaussian(1.0).unwrap(), Profile::phi(), Profile::Vartheta] {
            for k in [-1, 0, 2] {
                let c = ftc_telescoping(&rho, k, &xs, 64).unwrap();
                assert!(c.relative_error <= 1e-6, "{} k={k}: {c:?}", rho.name());
            }
        }
    }
}
