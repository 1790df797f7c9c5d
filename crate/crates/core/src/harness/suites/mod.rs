//! Suite implementations. Each suite plans its trials and evaluates one
//! trial from its seed; only the restricted suite reads its inputs back from
//! a replay dump.

mod dyadic;
mod forms;
mod kernels;
mod restricted;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::SuiteConfig;
use super::registry::Suite;
use super::report::Trial;
use super::{derive_seed, TrialSpec};
use crate::dyadic::{random_convex_tree_with, ConvexTree, DyadicSquare};
use crate::error::{Error, Result};
use crate::field::SampledField;
use crate::forms::Quadruple;

pub fn plan(config: &SuiteConfig) -> Result<Vec<TrialSpec>> {
    match config.suite {
        Suite::Dyadic => Ok(numbered(config, &["exhaustive"])),
        Suite::Kernels => Ok(numbered(config, kernels::KERNEL_IDS)),
        Suite::Ftpair => kernels::ftpair_plan(config),
        Suite::Telescoping => Ok(numbered(config, forms::TELESCOPING_IDS)),
        Suite::Box => Ok(numbered(config, &["brute-force"])),
        Suite::ErrorBoundary | Suite::Parseval => Ok(numbered(config, &[])),
        Suite::Tree => Ok(numbered(config, &["theta-ball", "layer-cake"])),
        Suite::Restricted => restricted::plan(config),
    }
}

pub fn run(config: &SuiteConfig, spec: &TrialSpec, dump: Option<&str>) -> Result<Trial> {
    let mut trial = match config.suite {
        Suite::Dyadic => dyadic::run(config, spec)?,
        Suite::Kernels => kernels::kernels(config, spec)?,
        Suite::Ftpair => kernels::ftpair(config, spec)?,
        Suite::Telescoping => forms::telescoping(config, spec)?,
        Suite::Box => forms::box_chain(config, spec)?,
        Suite::ErrorBoundary => forms::error_boundary(config, spec)?,
        Suite::Tree => forms::single_tree(config, spec)?,
        Suite::Parseval => forms::parseval(config, spec)?,
        Suite::Restricted => return restricted::run(config, spec, dump),
    };
    if let Some(d) = dump {
        trial.check("replay regenerates dump", trial.dump == d);
    }
    Ok(trial)
}

/// Fixed ids first, then `0 .. trials`.
fn numbered(config: &SuiteConfig, fixed: &[&str]) -> Vec<TrialSpec> {
    let ids = fixed.iter().map(|s| s.to_string()).chain((0..config.trials).map(|i| i.to_string()));
    ids.enumerate().map(|(i, id)| TrialSpec { id, seed: derive_seed(config.seed, config.suite, i) }).collect()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unknown_trial(spec: &TrialSpec) -> Error {
    Error::Config(format!("unknown trial id `{}`", spec.id))
}

/// Piecewise-constant field: `coarse x coarse` blocks of uniform `[-1, 1)`
/// values on `[-1, 1)^2`, zero elsewhere. Block edges lie on the grid when
/// `n / (2 L) * 2 / coarse` is an integer.
fn coarse_values(rng: &mut ChaCha8Rng, coarse: usize) -> Vec<f64> {
    (0..coarse * coarse).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn coarse_field(values: &[f64], coarse: usize, half_width: f64, n: usize) -> Result<SampledField> {
    let side = 2.0 / coarse as f64;
    let h = 2.0 * half_width / n as f64;
    let ratio = side / h;
    if half_width < 1.0 || (ratio - ratio.round()).abs() > 1e-12 || ratio < 1.0 {
        return Err(Error::Config(format!(
            "coarse blocks of side {side} do not align with grid spacing {h} on [-{half_width}, {half_width})"
        )));
    }
    SampledField::from_cells(half_width, n, |x, y| {
        if x.abs() >= 1.0 || y.abs() >= 1.0 {
            return 0.0;
        }
        let bx = ((x + 1.0) / side).floor() as usize;
        let by = ((y + 1.0) / side).floor() as usize;
        values[by * coarse + bx]
    })
}

/// Four independent coarse fields, and their values for resampling.
fn coarse_quad(rng: &mut ChaCha8Rng, coarse: usize, half_width: f64, n: usize) -> Result<(Quadruple, Vec<Vec<f64>>)> {
    let values: Vec<Vec<f64>> = (0..4).map(|_| coarse_values(rng, coarse)).collect();
    let quad = resample(&values, coarse, half_width, n)?;
    Ok((quad, values))
}

fn resample(values: &[Vec<f64>], coarse: usize, half_width: f64, n: usize) -> Result<Quadruple> {
    let fields: Vec<SampledField> =
        values.iter().map(|v| coarse_field(v, coarse, half_width, n)).collect::<Result<_>>()?;
    Quadruple::new(fields.try_into().expect("four fields"))
}

fn random_tree(rng: &mut ChaCha8Rng, depth: u32, probability: f64) -> ConvexTree {
    random_convex_tree_with(DyadicSquare::unit(), rng, depth, probability)
}

fn quad_fields(quad: &Quadruple) -> Vec<(String, SampledField)> {
    quad.fields().iter().enumerate().map(|(j, f)| (format!("F{}", j + 1), f.clone())).collect()
}

fn values_text(values: &[Vec<f64>]) -> String {
    values
        .iter()
        .enumerate()
        .map(|(j, v)| format!("F{} {}\n", j + 1, v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")))
        .collect()
}
