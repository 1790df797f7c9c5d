//! Local forms over Whitney regions, the truncated form, and the lemma sums
//! that control error and boundary terms.

use serde::Serialize;

use super::engine::{Contribution, EngineSettings, FormEngine};
use super::{squares_covering, CoefficientSequence, FormEvaluation, Quadruple, TruncationConfig};
use crate::dyadic::{ConvexTree, DyadicSquare};
use crate::error::{Error, Result};
use crate::field::{schwartz_seminorm, SampledField};
use crate::maximal::tree_size;
use crate::pairs::{check_admissible, AdmissiblePair};
use crate::profile::Profile;

/// Weight exponents of the packets `phi^(u)` and `psi^(v)`.
pub const PHI_EXPONENT: i32 = 25;
pub const PSI_EXPONENT: i32 = 10;

fn evaluation(quad: &Quadruple, settings: &EngineSettings, contributions: &[Contribution], t_samples: usize) -> FormEvaluation {
    FormEvaluation {
        value: contributions.iter().map(|c| c.signed).sum(),
        absolute: contributions.iter().map(|c| c.absolute).sum(),
        imaginary: 0.0,
        half_width: quad.grid().half_width(),
        n: quad.grid().n(),
        t_samples,
        truncation_tolerance: settings.significance_tol,
        flags: Vec::new(),
    }
}

fn distinct_scales(squares: &[DyadicSquare]) -> usize {
    let mut ks: Vec<i32> = squares.iter().map(|s| s.k).collect();
    ks.sort_unstable();
    ks.dedup();
    ks.len()
}

/// `Theta^C_{f1,f2,f3,f4}(F1..F4)`: the integral of the entangled integrand over
/// the Whitney region of `C`.
pub fn local_form(
    quad: &Quadruple,
    collection: &[DyadicSquare],
    profiles: [&Profile; 4],
    settings: &EngineSettings,
) -> FormEvaluation {
    let engine = FormEngine::new(quad, profiles, *settings);
    let contributions = engine.contributions(collection, &|_, _| 1.0);
    let mut eval = evaluation(quad, settings, &contributions, distinct_scales(collection) * settings.steps_per_octave);
    if collection.is_empty() {
        eval.flags.push("empty collection".into());
    }
    eval
}

/// The packets `(phi^(u), psi^(v), phi^(-u), psi^(-v))`.
pub fn packet_profiles(phi: &Profile, psi: &Profile, u: f64, v: f64) -> [Profile; 4] {
    [phi.packet(u, PHI_EXPONENT), psi.packet(v, PSI_EXPONENT), phi.packet(-u, PHI_EXPONENT), psi.packet(-v, PSI_EXPONENT)]
}

/// `Theta~^C_{phi,psi}`: the Whitney-region integral of the absolute value of the
/// integrand with packet kernels. The signed integral is kept in `value`.
pub fn sublinear_local_form(
    quad: &Quadruple,
    collection: &[DyadicSquare],
    phi: &Profile,
    psi: &Profile,
    u: f64,
    v: f64,
    settings: &EngineSettings,
) -> FormEvaluation {
    let p = packet_profiles(phi, psi, u, v);
    local_form(quad, collection, [&p[0], &p[1], &p[2], &p[3]], settings)
}

/// Squares of scale `j + 1` whose Whitney boxes can meet the integrand at
/// scales in the octave `[2^j, 2^(j+1)]`. Two kernels decay in each of `p`
/// and `q`, so each needs only `sqrt(tol)`.
fn octave_window(quad: &Quadruple, profiles: &[Profile; 4], j: i32, tol: f64) -> Vec<DyadicSquare> {
    let Some(b) = quad.active_box() else { return Vec::new() };
    let grid = quad.grid();
    let (lw, h) = (grid.half_width(), grid.spacing());
    let (ax0, ax1) = (-lw + b.x0 as f64 * h, -lw + b.x1 as f64 * h);
    let (ay0, ay1) = (-lw + b.y0 as f64 * h, -lw + b.y1 as f64 * h);
    let t = 2f64.powi(j + 1);
    let reach = |prof: &Profile, lo: f64, hi: f64| {
        let (a, bb) = prof.significant_interval(tol.sqrt());
        (lo + a.min(0.0) * t, hi + bb.max(0.0) * t)
    };
    let (px0, px1) = reach(&profiles[0], ax0, ax1);
    let (qx0, qx1) = reach(&profiles[2], ax0, ax1);
    let (py0, py1) = reach(&profiles[1], ay0, ay1);
    let (qy0, qy1) = reach(&profiles[3], ay0, ay1);
    let (x0, x1) = (px0.max(qx0), px1.min(qx1));
    let (y0, y1) = (py0.max(qy0), py1.min(qy1));
    if x0 >= x1 || y0 >= y1 {
        return Vec::new();
    }
    squares_covering(j + 1, x0, x1, y0, y1)
}

/// Per-square contributions of `Lambda^N`. The octave `[2^j, 2^(j+1)]` is
/// integrated over the Whitney boxes of the scale-`(j+1)` squares meeting the
/// significant `p, q` window.
pub fn truncated_form_contributions(
    quad: &Quadruple,
    phi: &Profile,
    psi: &Profile,
    u: f64,
    v: f64,
    mu: &CoefficientSequence,
    config: &TruncationConfig,
    settings: &EngineSettings,
) -> Result<(Vec<Contribution>, Vec<String>)> {
    if mu.steps_per_octave != config.steps_per_octave || mu.first_octave != config.first_octave() {
        return Err(Error::InvalidParameter("coefficients do not match the truncation".into()));
    }
    let settings = EngineSettings { steps_per_octave: config.steps_per_octave, ..*settings };
    let profiles = packet_profiles(phi, psi, u, v);
    let engine = FormEngine::new(quad, [&profiles[0], &profiles[1], &profiles[2], &profiles[3]], settings);
    let h = quad.grid().spacing();
    let mut squares = Vec::new();
    let mut flags = Vec::new();
    for j in config.octaves() {
        if 2f64.powi(j) < 0.25 * h {
            flags.push(format!("octave {j} under-resolved by spacing {h}"));
        }
        squares.extend(octave_window(quad, &profiles, j, settings.significance_tol));
    }
    let contributions = engine.contributions(&squares, &|j, i| mu.at(j, i));
    Ok((contributions, flags))
}

/// `Lambda^N_{phi,psi,mu,u,v}(F1..F4)`.
pub fn truncated_form(
    quad: &Quadruple,
    phi: &Profile,
    psi: &Profile,
    u: f64,
    v: f64,
    mu: &CoefficientSequence,
    config: &TruncationConfig,
    settings: &EngineSettings,
) -> Result<FormEvaluation> {
    let (contributions, flags) = truncated_form_contributions(quad, phi, psi, u, v, mu, config, settings)?;
    let mut eval = evaluation(quad, settings, &contributions, config.t_samples());
    eval.flags = flags;
    Ok(eval)
}

/// Product of the tree sizes `M(F_j, T)`.
pub fn tree_size_product(quad: &Quadruple, squares: &[DyadicSquare]) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (j, f) in quad.fields().iter().enumerate() {
        out[j] = tree_size(f, squares)?.value;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelescopingReport {
    /// `Theta^T_{rho1,sigma2} + Theta^T_{sigma1,rho2}`.
    pub lhs: f64,
    pub first: f64,
    pub second: f64,
    /// `||rho1||^2 ||sigma2||^2 + ||sigma1||^2 ||rho2||^2 + ||rho1||^2 ||rho2||^2`.
    pub seminorm_constant: f64,
    pub root_area: f64,
    pub tree_sizes: [f64; 4],
    /// `c |R_T| prod M(F_j, T)`.
    pub scale: f64,
    /// `|lhs| / scale`, the empirical constant.
    pub ratio: f64,
}

fn seminorm(p: &Profile) -> Result<f64> {
    Ok(schwartz_seminorm(&p.sample(8.0, 1024)?))
}

/// Both sides of the telescoping estimate for two admissible pairs on a
/// convex tree. Pairs must satisfy the Fourier identity to `1e-6`.
pub fn telescoping_check(
    quad: &Quadruple,
    tree: &ConvexTree,
    pair1: &AdmissiblePair,
    pair2: &AdmissiblePair,
    settings: &EngineSettings,
) -> Result<TelescopingReport> {
    check_admissible(pair1, 1e-6)?;
    check_admissible(pair2, 1e-6)?;
    let squares: Vec<DyadicSquare> = tree.members().iter().copied().collect();
    let (r1, s1, r2, s2) = (&pair1.rho, &pair1.sigma, &pair2.rho, &pair2.sigma);
    let first = local_form(quad, &squares, [r1, s2, r1, s2], settings).value;
    let second = local_form(quad, &squares, [s1, r2, s1, r2], settings).value;
    let (n_r1, n_s1, n_r2, n_s2) = (seminorm(r1)?, seminorm(s1)?, seminorm(r2)?, seminorm(s2)?);
    let c = n_r1.powi(2) * n_s2.powi(2) + n_s1.powi(2) * n_r2.powi(2) + n_r1.powi(2) * n_r2.powi(2);
    let tree_sizes = tree_size_product(quad, &squares)?;
    let root_area = tree.root().area();
    let scale = c * root_area * tree_sizes.iter().product::<f64>();
    let lhs = first + second;
    Ok(TelescopingReport {
        lhs,
        first,
        second,
        seminorm_constant: c,
        root_area,
        tree_sizes,
        scale,
        ratio: if scale > 0.0 { lhs.abs() / scale } else { 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSum {
    pub total: f64,
    /// Analytic bound on the part of the integral discarded outside the window.
    pub tail_bound: f64,
    pub root_area: f64,
    pub tree_sizes: [f64; 4],
    /// `total / (|R_T| prod M(F_j, T))`.
    pub ratio: f64,
}

fn mask(f: &SampledField, keep: impl Fn(f64, f64) -> bool) -> SampledField {
    let n = f.n();
    let mut g = f.clone();
    for iy in 0..n {
        for ix in 0..n {
            if !keep(f.cell_center(ix), f.cell_center(iy)) {
                g.set(ix, iy, 0.0);
            }
        }
    }
    g
}

fn lemma_sum(quad: &Quadruple, tree: &ConvexTree, total: f64, tail_bound: f64) -> Result<LemmaSum> {
    let squares: Vec<DyadicSquare> = tree.members().iter().copied().collect();
    let tree_sizes = tree_size_product(quad, &squares)?;
    let root_area = tree.root().area();
    let scale = root_area * tree_sizes.iter().product::<f64>();
    Ok(LemmaSum { total, tail_bound, root_area, tree_sizes, ratio: if scale > 0.0 { total / scale } else { 0.0 } })
}

/// `sum_k |Theta^{T_k}_{v2,v2}(F1 1_{T_k^c}, F2, F3, F4)|` with `v2 = (1+|x|)^-8`.
pub fn error_sum(quad: &Quadruple, tree: &ConvexTree, settings: &EngineSettings) -> Result<LemmaSum> {
    let v2 = Profile::VarthetaSq;
    let mut total = 0.0;
    for g in tree.generations() {
        let f1 = mask(quad.field(0), |x, y| !g.covers_point(x, y));
        let q = quad.with_field(0, f1)?;
        total += local_form(&q, &g.squares, [&v2, &v2, &v2, &v2], settings).value.abs();
    }
    lemma_sum(quad, tree, total, 0.0)
}

/// `sum_k |Theta^{T_k^c}_{v2,v2}((F_j 1_{T_k})_j)|` with the complement truncated
/// to the scale-`k` squares meeting the grid box and `3 R_T`. The discarded
/// tail is bounded analytically and returned alongside.
pub fn boundary_sum(quad: &Quadruple, tree: &ConvexTree, settings: &EngineSettings) -> Result<LemmaSum> {
    let v2 = Profile::VarthetaSq;
    let grid = quad.grid();
    let lw = grid.half_width();
    let (rx0, rx1, ry0, ry1) = tree.root().bounds();
    let (side_x, side_y) = (rx1 - rx0, ry1 - ry0);
    let (wx0, wx1) = ((-lw).min(rx0 - side_x), lw.max(rx1 + side_x));
    let (wy0, wy1) = ((-lw).min(ry0 - side_y), lw.max(ry1 + side_y));
    let sup: f64 = quad.fields().iter().map(|f| f.max_abs()).product();
    let mut total = 0.0;
    let mut tail_bound = 0.0;
    for g in tree.generations() {
        let fields: [SampledField; 4] = std::array::from_fn(|j| mask(quad.field(j), |x, y| g.covers_point(x, y)));
        let q = Quadruple::new(fields)?;
        let complement: Vec<DyadicSquare> =
            squares_covering(g.k, wx0, wx1, wy0, wy1).into_iter().filter(|s| !g.contains(s)).collect();
        total += local_form(&q, &complement, [&v2, &v2, &v2, &v2], settings).value.abs();
        // Outside the window |p| or |q| exceeds L: the kernel mass from the box
        // is at most (1 + d/t)^-7 / 7 at distance d, squared and integrated.
        let t = 2f64.powi(g.k);
        let outside = 2.0 * t / (13.0 * 49.0);
        let inside = 8.0 * lw / 49.0;
        tail_bound += sup * 2.0 * outside * inside * std::f64::consts::LN_2;
    }
    lemma_sum(quad, tree, total, tail_bound)
}
