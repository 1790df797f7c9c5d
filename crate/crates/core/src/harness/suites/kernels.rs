//! Closed-form kernel facts and the admissible-pair identities.

use rand::Rng;

use super::{rng, unknown_trial};
use crate::error::Result;
use crate::harness::config::SuiteConfig;
use crate::harness::report::Trial;
use crate::harness::{derive_seed, TrialSpec};
use crate::pairs::{ft_residual, gaussian_pair, make_square_function_pair, phi_superposition, PHI_ASYMPTOTIC_CONSTANT};
use crate::profile::{phi_hat, Profile};
use crate::quad;

pub const KERNEL_IDS: &[&str] = &["phi-asymptotic", "phi-origin", "phi-hat-edge", "integrals"];

fn profiles() -> Result<Vec<Profile>> {
    Ok(vec![
        Profile::gaussian(1.0)?,
        Profile::gaussian(2.0)?,
        Profile::gaussian(5.0)?,
        Profile::gaussian_deriv(1.0)?,
        Profile::gaussian_deriv(2.0)?,
        Profile::Vartheta,
        Profile::VarthetaSq,
        Profile::phi(),
        Profile::psi(),
        Profile::phi().packet(1.0, 25),
        Profile::psi().packet(-4.0, 10),
    ])
}

fn closed_form(p: &Profile) -> bool {
    !matches!(p, Profile::Spectral { .. } | Profile::Packet { .. })
}

/// `int_a^b f` and `int_a^b |f|` by adaptive quadrature, split at `kink`
/// when it lies inside. Refinement stops at `1e-15 peak` per unit length,
/// the rounding level of the spectral profiles.
fn reference(f: &dyn Fn(f64) -> f64, a: f64, b: f64, kink: f64, peak: f64) -> Result<(f64, f64)> {
    let pieces: Vec<(f64, f64)> = if a < kink && kink < b { vec![(a, kink), (kink, b)] } else { vec![(a, b)] };
    let (mut value, mut scale) = (0.0, 0.0);
    for (lo, hi) in pieces {
        let floor = 1e-15 * peak * (hi - lo);
        value += quad::adaptive(&|x: f64| f(x), lo, hi, 1e-12, floor)?;
        scale += quad::adaptive(&|x: f64| f(x).abs(), lo, hi, 1e-12, floor)?;
    }
    Ok((value, scale.max(f64::MIN_POSITIVE)))
}

/// `sup |f|`, sampled.
fn peak(p: &Profile) -> f64 {
    (0..=800).map(|i| p.eval(-10.0 + 0.025 * i as f64).abs()).fold(0.0, f64::max)
}

fn phi_hat_edge(trial: &mut Trial, tol: f64) -> Result<()> {
    let phi = Profile::phi();
    for xi in [2.0, -2.0] {
        let v = phi.fourier(xi)?.norm();
        trial.value(format!("|phi^({xi})|"), v);
        trial.check(format!("phi^({xi}) vanishes"), v <= tol);
    }
    Ok(())
}

pub fn kernels(config: &SuiteConfig, spec: &TrialSpec) -> Result<Trial> {
    let tol = config.tolerances;
    let mut trial = Trial::new(spec.id.clone(), spec.seed);
    trial.dump = format!("{}\n", spec.id);
    match spec.id.as_str() {
        "phi-asymptotic" => {
            let x = config.f64_param("asymptotic_x")?;
            let ratio = x.powi(20) * phi_superposition(x)? / PHI_ASYMPTOTIC_CONSTANT;
            trial.value("x", x);
            trial.value("ratio", ratio);
            trial.check("x^20 Phi(x) near 9!/2", (ratio - 1.0).abs() <= config.f64_param("asymptotic_tolerance")?);
        }
        "phi-origin" => {
            let v = phi_superposition(0.0)?;
            trial.value("Phi(0)", v);
            trial.check("Phi(0) = 1/20", (v - 0.05).abs() <= tol.identity);
        }
        "phi-hat-edge" => phi_hat_edge(&mut trial, tol.identity)?,
        "integrals" => {
            let mut worst_closed: f64 = 0.0;
            let mut worst_spectral: f64 = 0.0;
            for p in profiles()? {
                for (a, b) in [(-1.0, 0.5), (0.0, 3.0), (-10.0, -2.0), (-0.3, 0.3)] {
                    let (reference, scale) = reference(&|x: f64| p.eval(x), a, b, 0.0, peak(&p))?;
                    let r = (p.integral(a, b) - reference).abs() / scale;
                    if closed_form(&p) {
                        worst_closed = worst_closed.max(r);
                    } else {
                        worst_spectral = worst_spectral.max(r);
                    }
                }
            }
            let phi_total = (Profile::phi().total_integral() - phi_hat(0.0)).abs();
            let phi_span = (Profile::phi().integral(-400.0, 400.0) - phi_hat(0.0)).abs() / phi_hat(0.0);
            trial.value("closed-form residual", worst_closed);
            trial.value("spectral residual", worst_spectral);
            trial.value("phi total residual", phi_span);
            trial.check("closed-form integrals", worst_closed <= tol.identity);
            trial.check("spectral integrals", worst_spectral <= tol.quadrature);
            trial.check("phi integrates to phi^(0)", phi_total == 0.0 && phi_span <= tol.quadrature);
        }
        _ => {
            let i: usize = spec.id.parse().map_err(|_| unknown_trial(spec))?;
            let all = profiles()?;
            let mut r = rng(spec.seed);
            let p = &all[i % all.len()];
            let t = 2f64.powf(r.gen_range(-3.0..2.0));
            let centre = r.gen_range(-2.0..2.0);
            let x0 = r.gen_range(-3.0..3.0);
            let x1 = x0 + 2f64.powf(r.gen_range(-5.0..0.0));
            let exact = p.kernel_cell(centre, t, x0, x1);
            let f = |x: f64| p.eval((centre - x) / t) / t;
            let (reference, scale) = reference(&f, x0, x1, centre, peak(p) / t)?;
            let residual = (exact - reference).abs() / scale;
            trial.dump = format!("{} p={centre:?} t={t:?} cell=[{x0:?}, {x1:?}]\n", p.name());
            trial.value("residual", residual);
            let bound = if closed_form(p) { tol.identity } else { tol.quadrature };
            trial.check("kernel cell matches quadrature", residual <= bound);
        }
    }
    Ok(trial)
}

pub fn ftpair_plan(config: &SuiteConfig) -> Result<Vec<TrialSpec>> {
    let mut ids: Vec<String> = config.f64_list("alphas")?.iter().map(|a| format!("gaussian-{a}")).collect();
    ids.push("square-function".into());
    ids.push("phi-hat-edge".into());
    Ok(ids.into_iter().enumerate().map(|(i, id)| TrialSpec { id, seed: derive_seed(config.seed, config.suite, i) }).collect())
}

pub fn ftpair(config: &SuiteConfig, spec: &TrialSpec) -> Result<Trial> {
    let tol = config.tolerances;
    let mut trial = Trial::new(spec.id.clone(), spec.seed);
    trial.dump = format!("{}\n", spec.id);
    let (pair, bound) = match spec.id.as_str() {
        "square-function" => (make_square_function_pair(), tol.quadrature),
        "phi-hat-edge" => {
            phi_hat_edge(&mut trial, tol.identity)?;
            return Ok(trial);
        }
        id => {
            let alpha: f64 = id.strip_prefix("gaussian-").and_then(|a| a.parse().ok()).ok_or_else(|| unknown_trial(spec))?;
            (gaussian_pair(alpha)?, tol.identity)
        }
    };
    let r = ft_residual(&pair)?;
    trial.value("residual", r.max_residual);
    trial.value("worst t", r.t);
    trial.value("worst tau", r.tau);
    trial.value("points", r.points as f64);
    trial.check("pair identity", r.max_residual <= bound && r.points > 0);
    Ok(trial)
}
