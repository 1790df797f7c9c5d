//! Restricted-type sweep: random set instances through the stopping-time
//! pipeline. Replays parse the instance from the dump.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::unknown_trial;
use crate::decomposition::{
    build_exceptional_set, normalize_instance, random_instance, restricted_type_verify, InstanceSpec,
    RestrictedInstance, RestrictedOptions, SignPolicy, MAX_TREE_INDEX,
};
use crate::error::{Error, Result};
use crate::forms::{EngineSettings, TruncationConfig};
use crate::harness::config::SuiteConfig;
use crate::harness::report::Trial;
use crate::harness::{derive_seed, TrialSpec};
use crate::profile::Profile;

/// Attempts at drawing an instance whose exceptional set stays in the box.
const MAX_DRAWS: u64 = 16;

fn alphas(config: &SuiteConfig) -> Result<Vec<[f64; 4]>> {
    config
        .f64_lists("alphas")?
        .into_iter()
        .map(|a| a.try_into().map_err(|_| Error::Config("each exponent tuple needs four entries".into())))
        .collect()
}

pub fn plan(config: &SuiteConfig) -> Result<Vec<TrialSpec>> {
    let mut out = Vec::new();
    for a in 0..alphas(config)?.len() {
        for i in 0..config.trials {
            let index = out.len();
            out.push(TrialSpec { id: format!("a{}-{i}", a + 1), seed: derive_seed(config.seed, config.suite, index) });
        }
    }
    Ok(out)
}

fn parse_id(spec: &TrialSpec) -> Result<(usize, usize)> {
    let rest = spec.id.strip_prefix('a').ok_or_else(|| unknown_trial(spec))?;
    let (a, i) = rest.split_once('-').ok_or_else(|| unknown_trial(spec))?;
    match (a.parse::<usize>(), i.parse::<usize>()) {
        (Ok(a), Ok(i)) if a >= 1 => Ok((a - 1, i)),
        _ => Err(unknown_trial(spec)),
    }
}

fn policy(config: &SuiteConfig, i: usize) -> Result<SignPolicy> {
    match config.str_param("policy")?.as_str() {
        "alternate" => Ok(if i.is_multiple_of(2) { SignPolicy::Indicator } else { SignPolicy::RandomSigns }),
        other => other.parse(),
    }
}

fn draw(config: &SuiteConfig, alpha: [f64; 4], seed: u64, threshold: f64) -> Result<(RestrictedInstance, u64)> {
    let spec = InstanceSpec {
        half_width: config.half_width,
        n: config.n,
        alpha,
        truncation: config.truncation,
        min_fraction: config.f64_param("min_fraction")?,
        max_fraction: config.f64_param("max_fraction")?,
    };
    for attempt in 0..MAX_DRAWS {
        let inst = random_instance(&spec, seed.wrapping_add(attempt))?;
        let norm = normalize_instance(&inst)?;
        if !build_exceptional_set(&norm.instance, threshold)?.escapes_box {
            return Ok((inst, attempt));
        }
    }
    Err(Error::InvalidParameter(format!("no instance within the box after {MAX_DRAWS} draws")))
}

pub fn run(config: &SuiteConfig, spec: &TrialSpec, dump: Option<&str>) -> Result<Trial> {
    let (a, i) = parse_id(spec)?;
    let all = alphas(config)?;
    let alpha = *all.get(a).ok_or_else(|| unknown_trial(spec))?;
    let threshold = config.f64_param("threshold")?;
    let mut trial = Trial::new(spec.id.clone(), spec.seed);
    let inst = match dump {
        Some(text) => RestrictedInstance::from_text(text)?,
        None => draw(config, alpha, spec.seed, threshold)?.0,
    };
    trial.value("redraws", inst.seed.wrapping_sub(spec.seed) as f64);
    let shifts = config.f64_list("shifts")?;
    let combos: Vec<(f64, f64)> = shifts.iter().flat_map(|&u| shifts.iter().map(move |&v| (u, v))).collect();
    let (u, v) = combos[i % combos.len()];
    let truncation = TruncationConfig::new(inst.truncation, config.steps_per_octave)?;
    let mut r = ChaCha8Rng::seed_from_u64(inst.seed ^ 0x6d75_5f73_6967_6e73);
    let mu: Vec<f64> = (0..truncation.t_samples()).map(|_| if r.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let options = RestrictedOptions {
        threshold,
        policy: policy(config, i)?,
        steps_per_octave: config.steps_per_octave,
        settings: EngineSettings { significance_tol: config.f64_param("significance_tol")?, ..EngineSettings::default() },
    };
    let rep = restricted_type_verify(&inst, &Profile::phi(), &Profile::psi(), u, v, &mu, &options)?;
    let ex = &rep.exceptional_set;
    trial.value("u", u);
    trial.value("v", v);
    trial.value("scale exponent", rep.scale_exponent as f64);
    trial.value("direct", rep.direct);
    trial.value("majorant", rep.majorant);
    trial.value("quadrature gap", rep.quadrature_gap);
    trial.value("exceptional measure", ex.measure);
    trial.value("trees", rep.trees.len() as f64);
    trial.value("tree ratio", rep.tree_ratio);
    trial.value("original value", rep.original_value);
    trial.value("alpha bound", rep.alpha_bound);
    trial.check("|H| <= 1/18", ex.measure_ok);
    trial.check("2 |E1'| >= |E1|", ex.e1_prime_ok);
    trial.check("H is the union of its maximal squares", ex.union_ok);
    trial.check("exceptional set inside the box", !ex.escapes_box);
    trial.check("trees convex", rep.convex);
    trial.check("trees cover the candidates", rep.coverage);
    trial.check("exceptional squares pack", rep.packing);
    trial.check("exceptional sums decay", rep.decay);
    trial.check("tree index bounded", rep.max_index.is_none_or(|k| k <= MAX_TREE_INDEX));
    trial.check("direct within majorant", rep.direct_within_majorant);
    trial.check("finite", rep.pass || (rep.direct.is_finite() && rep.majorant.is_finite()));
    trial.constant("C_rt", rep.direct.max(rep.majorant));
    trial.constant("C_HL", rep.weak_type.iter().copied().fold(0.0, f64::max));
    trial.constant(&format!("C_alpha_{}", a + 1), rep.alpha_ratio);
    trial.dump = inst.to_text();
    if dump.is_none() {
        for j in 0..4 {
            trial.fields.push((format!("E{}", j + 1), inst.indicator(j)?));
        }
    } else {
        trial.check("replay dump round-trips", dump == Some(trial.dump.as_str()));
    }
    Ok(trial)
}
