//! Suites over the form evaluators: telescoping, the box-average chain, the
//! error and boundary sums, the single-tree estimate and Parseval.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{coarse_quad, quad_fields, random_tree, resample, rng, unknown_trial, values_text};
use crate::dyadic::DyadicSquare;
use crate::error::Result;
use crate::field::SampledField;
use crate::forms::{
    box_average, box_average_brute_force, box_cauchy_schwarz_check, boundary_sum, error_sum, frequency_side_form,
    sublinear_local_form, telescoping_check, truncated_form, CoefficientSequence, EngineSettings, Quadruple,
    TruncationConfig,
};
use crate::harness::config::SuiteConfig;
use crate::harness::report::Trial;
use crate::harness::TrialSpec;
use crate::maximal::{
    generation_ratio, quadratic_maximal, theta_ball_domination_check, tree_size, tree_size_lattice, LayerCake,
};
use crate::pairs::{ftc_telescoping, gaussian_pair, make_square_function_pair, AdmissiblePair};
use crate::profile::Profile;

pub const TELESCOPING_IDS: &[&str] = &["ftc-g1", "ftc-g2", "ftc-phi"];

fn params(config: &SuiteConfig) -> Result<(u32, f64)> {
    Ok((config.usize_param("depth")? as u32, config.f64_param("probability")?))
}

fn pair(i: usize) -> Result<AdmissiblePair> {
    match i {
        0 => gaussian_pair(1.0),
        1 => gaussian_pair(2.0),
        _ => Ok(make_square_function_pair()),
    }
}

pub fn telescoping(config: &SuiteConfig, spec: &TrialSpec) -> Result<Trial> {
    let mut trial = Trial::new(spec.id.clone(), spec.seed);
    let rho = match spec.id.as_str() {
        "ftc-g1" => Some(Profile::gaussian(1.0)?),
        "ftc-g2" => Some(Profile::gaussian(2.0)?),
        "ftc-phi" => Some(Profile::phi()),
        _ => None,
    };
    if let Some(rho) = rho {
        let steps = config.usize_param("steps")?;
        let xs: Vec<f64> = (0..256).map(|i| -8.0 + i as f64 / 16.0).collect();
        let mut worst: f64 = 0.0;
        for k in -1..=2 {
            let c = ftc_telescoping(&rho, k, &xs, steps)?;
            trial.value(format!("relative error k={k}"), c.relative_error);
            worst = worst.max(c.relative_error);
        }
        trial.value("relative error", worst);
        trial.check("telescoping in the scale variable", worst <= config.tolerances.quadrature);
        trial.dump = format!("{} steps {steps}\n", rho.name());
        return Ok(trial);
    }
    spec.id.parse::<usize>().map_err(|_| unknown_trial(spec))?;
    let (depth, p) = params(config)?;
    let mut r = rng(spec.seed);
    let (quad, values) = coarse_quad(&mut r, 8, config.half_width, config.n)?;
    let tree = random_tree(&mut r, depth, p);
    let (i1, i2) = (r.gen_range(0..3), r.gen_range(0..3));
    let report = telescoping_check(&quad, &tree, &pair(i1)?, &pair(i2)?, &EngineSettings::default())?;
    trial.value("lhs", report.lhs);
    trial.value("scale", report.scale);
    trial.value("ratio", report.ratio);
    trial.constant("C_tel", report.ratio);
    trial.check("finite", report.ratio.is_finite());
    trial.dump = format!("pairs {i1} {i2}\n{}{}", tree.to_text(), values_text(&values));
    trial.fields = quad_fields(&quad);
    Ok(trial)
}

fn random_full_quad(r: &mut impl Rng, half_width: f64, n: usize) -> Result<Quadruple> {
    let fields: Vec<SampledField> = (0..4)
        .map(|_| SampledField::new_2d(half_width, n, (0..n * n).map(|_| r.gen_range(-1.0..1.0)).collect()))
        .collect::<Result<_>>()?;
    Quadruple::new(fields.try_into().expect("four fields"))
}

pub fn box_chain(config: &SuiteConfig, spec: &TrialSpec) -> Result<Trial> {
    let mut trial = Trial::new(spec.id.clone(), spec.seed);
    let points = config.usize_param("points")?;
    let mut r = rng(spec.seed);
    if spec.id == "brute-force" {
        let n = config.usize_param("brute_n")?;
        let quad = random_full_quad(&mut r, config.half_width, n)?;
        let abs = Quadruple::new(quad.fields().clone().map(|f| f.map(f64::abs)))?;
        let mut worst: f64 = 0.0;
        for _ in 0..points {
            let (p, q) = (r.gen_range(-config.half_width..config.half_width), r.gen_range(-config.half_width..config.half_width));
            let t = 2f64.powf(r.gen_range(-4.0..1.0));
            let fast = box_average(&quad, p, q, t)?;
            let brute = box_average_brute_force(&quad, p, q, t)?;
            let scale = box_average_brute_force(&abs, p, q, t)?.max(f64::MIN_POSITIVE);
            worst = worst.max((fast - brute).abs() / scale);
        }
        trial.value("normwise residual", worst);
        trial.check("separable matches brute force", worst <= config.tolerances.identity);
        trial.dump = format!("brute force n={n}\n");
        trial.fields = quad_fields(&quad);
        return Ok(trial);
    }
    spec.id.parse::<usize>().map_err(|_| unknown_trial(spec))?;
    let (depth, prob) = params(config)?;
    let (quad, values) = coarse_quad(&mut r, 8, config.half_width, config.n)?;
    let tree = random_tree(&mut r, depth, prob);
    let squares: Vec<DyadicSquare> = tree.members().iter().copied().collect();
    let mut sizes = [0.0; 4];
    for (s, f) in sizes.iter_mut().zip(quad.fields()) {
        *s = tree_size(f, &squares)?.value;
    }
    let lattice = tree_size_lattice(quad.grid(), &squares)?;
    let chosen: Vec<&(f64, f64, f64)> = lattice.choose_multiple(&mut r, points).collect();
    let mut worst = f64::NEG_INFINITY;
    let mut all = true;
    for &&(p, q, t) in &chosen {
        let c = box_cauchy_schwarz_check(&quad, p, q, t, sizes)?;
        worst = worst.max(c.worst_excess);
        all &= c.pass;
    }
    trial.value("points", chosen.len() as f64);
    trial.value("worst relative excess", worst);
    trial.value("tree size product", sizes.iter().product());
    trial.check("chain holds at every point", all && !chosen.is_empty());
    trial.dump = format!("{}{}", tree.to_text(), values_text(&values));
    trial.fields = quad_fields(&quad);
    Ok(trial)
}

pub fn error_boundary(config: &SuiteConfig, spec: &TrialSpec) -> Result<Trial> {
    let mut trial = Trial::new(spec.id.clone(), spec.seed);
    let (depth, p) = params(config)?;
    let coarse = config.usize_param("coarse")?;
    let mut r = rng(spec.seed);
    let (quad, values) = coarse_quad(&mut r, coarse, config.half_width, config.n)?;
    let tree = random_tree(&mut r, depth, p);
    let settings = EngineSettings::default();
    let e = error_sum(&quad, &tree, &settings)?;
    let b = boundary_sum(&quad, &tree, &settings)?;
    trial.value("error total", e.total);
    trial.value("boundary total", b.total);
    trial.value("boundary tail bound", b.tail_bound);
    trial.value("scale", e.root_area * e.tree_sizes.iter().product::<f64>());
    trial.constant("C_err", e.ratio);
    trial.constant("C_bnd", b.ratio);
    trial.check("finite", e.ratio.is_finite() && b.ratio.is_finite());
    trial.dump = format!("{}{}", tree.to_text(), values_text(&values));
    trial.fields = quad_fields(&quad);
    Ok(trial)
}

fn tree_ratio(quad: &Quadruple, squares: &[DyadicSquare], u: f64, v: f64) -> Result<f64> {
    let eval = sublinear_local_form(quad, squares, &Profile::phi(), &Profile::psi(), u, v, &EngineSettings::default());
    let mut scale = squares.iter().map(|s| s.k).max().map_or(0.0, |k| 4f64.powi(k));
    for f in quad.fields() {
        scale *= tree_size(f, squares)?.value;
    }
    Ok(if scale > 0.0 { eval.absolute / scale } else { 0.0 })
}

fn theta_ball(trial: &mut Trial, r: &mut impl Rng) -> Result<()> {
    let g = SampledField::new_2d(4.0, 64, (0..64 * 64).map(|_| r.gen_range(0.0..1.0)).collect())?;
    let top = quadratic_maximal(&g)?.field.max_abs();
    let k = top.log2().ceil() as i32;
    let mut all = true;
    let mut worst: f64 = 0.0;
    for _ in 0..8 {
        let t = 2f64.powi(k - 1) * r.gen_range(1.0..2.0);
        let (p, q) = (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
        let c = theta_ball_domination_check(&g, t, k, p, q)?;
        all &= c.pass && c.precondition;
        worst = worst.max((c.on_ball / c.on_bound).max(c.off_ball / c.off_bound) / c.scale);
    }
    trial.value("worst bound fraction", worst);
    trial.check("theta dominated on and off the ball", all);
    trial.dump = "theta-ball 64x64 uniform on [-4, 4)^2\n".into();
    trial.fields = vec![("G".into(), g)];
    Ok(())
}

fn layer_cake(trial: &mut Trial) {
    let rs: Vec<f64> = (0..400).map(|i| i as f64 * 0.025).collect();
    let mut prev = vec![0.0; rs.len()];
    let (mut monotone, mut below, mut close) = (true, true, true);
    for m in 1..10 {
        let lc = LayerCake::new(m);
        let gap = 0.5 / 2f64.powi(m as i32);
        for (i, &x) in rs.iter().enumerate() {
            let v = lc.eval(x);
            monotone &= v >= prev[i] - 1e-15;
            below &= v <= LayerCake::target(x);
            close &= LayerCake::target(x) - v <= gap + 1e-15;
            prev[i] = v;
        }
    }
    trial.check("increasing in m", monotone);
    trial.check("below the target", below);
    trial.check("within 2^-(m+1) of the target", close);
    trial.dump = "layer-cake m=1..9\n".into();
}

pub fn single_tree(config: &SuiteConfig, spec: &TrialSpec) -> Result<Trial> {
    let mut trial = Trial::new(spec.id.clone(), spec.seed);
    let mut r = rng(spec.seed);
    match spec.id.as_str() {
        "theta-ball" => {
            theta_ball(&mut trial, &mut r)?;
            return Ok(trial);
        }
        "layer-cake" => {
            layer_cake(&mut trial);
            return Ok(trial);
        }
        _ => {
            spec.id.parse::<usize>().map_err(|_| unknown_trial(spec))?;
        }
    }
    let (depth, p) = params(config)?;
    let coarse = config.usize_param("coarse")?;
    let fine_n = config.usize_param("fine_n")?;
    let (quad, values) = coarse_quad(&mut r, coarse, config.half_width, config.n)?;
    let fine = resample(&values, coarse, config.half_width, fine_n)?;
    let tree = random_tree(&mut r, depth, p);
    let shifts = [0.0, 1.0, 4.0];
    let (u, v) = (*shifts.choose(&mut r).expect("shifts"), *shifts.choose(&mut r).expect("shifts"));
    let squares: Vec<DyadicSquare> = tree.members().iter().copied().collect();
    let coarse_ratio = tree_ratio(&quad, &squares, u, v)?;
    let fine_ratio = tree_ratio(&fine, &squares, u, v)?;
    let change = if fine_ratio > 0.0 { (fine_ratio - coarse_ratio).abs() / fine_ratio } else { 0.0 };
    trial.value("u", u);
    trial.value("v", v);
    trial.value(format!("ratio n={}", config.n), coarse_ratio);
    trial.value(format!("ratio n={fine_n}"), fine_ratio);
    trial.value("refinement change", change);
    trial.constant("C_tree", coarse_ratio.max(fine_ratio));
    trial.check("stable under refinement", change <= config.f64_param("max_change")?);
    let s = *squares.choose(&mut r).expect("trees have a root");
    let mut gen: f64 = 0.0;
    for f in fine.fields() {
        gen = gen.max(generation_ratio(f, &s, &tree.root())?);
    }
    trial.value("generation square k", s.k as f64);
    trial.constant("C_gen", gen);
    trial.dump = format!("shifts {u} {v}\n{}{}", tree.to_text(), values_text(&values));
    trial.fields = quad_fields(&fine);
    Ok(trial)
}

pub fn parseval(config: &SuiteConfig, spec: &TrialSpec) -> Result<Trial> {
    let mut trial = Trial::new(spec.id.clone(), spec.seed);
    let support = config.f64_param("support")?;
    let (l, n) = (config.half_width, config.n);
    let mut r = rng(spec.seed);
    let mut fields = Vec::with_capacity(4);
    for _ in 0..4 {
        let mut f = SampledField::from_cells(l, n, |x, y| if x.abs() < support && y.abs() < support { 1.0 } else { 0.0 })?;
        for v in f.values_mut().iter_mut().filter(|v| **v != 0.0) {
            *v = r.gen_range(-1.0..1.0);
        }
        fields.push(f);
    }
    let quad = Quadruple::new(fields.try_into().expect("four fields"))?;
    let config_t = TruncationConfig::new(config.truncation, config.steps_per_octave)?;
    let mu_values: Vec<f64> = (0..config_t.t_samples()).map(|_| if r.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let mu = CoefficientSequence::new(&config_t, mu_values.clone())?;
    let shifts = [0.0, 1.0, 4.0];
    let (u, v) = (*shifts.choose(&mut r).expect("shifts"), *shifts.choose(&mut r).expect("shifts"));
    let settings = EngineSettings { absolute: false, ..EngineSettings::default() };
    let (phi, psi) = (Profile::phi(), Profile::psi());
    let space = truncated_form(&quad, &phi, &psi, u, v, &mu, &config_t, &settings)?;
    let freq = frequency_side_form(&quad, &phi, &psi, u, v, &mu, &config_t)?;
    let rel = (space.value - freq.value).abs() / freq.value.abs().max(f64::MIN_POSITIVE);
    trial.value("spatial", space.value);
    trial.value("frequency", freq.value);
    trial.value("relative difference", rel);
    trial.value("imaginary", freq.imaginary);
    trial.check("sides agree", rel <= config.f64_param("relative_tolerance")?);
    trial.check("imaginary part vanishes", freq.imaginary.abs() <= config.tolerances.identity * freq.absolute.max(f64::MIN_POSITIVE));
    let mu_text: Vec<String> = mu_values.iter().map(|m| format!("{m}")).collect();
    trial.dump = format!("shifts {u} {v}\nmu {}\n", mu_text.join(" "));
    trial.fields = quad_fields(&quad);
    Ok(trial)
}
