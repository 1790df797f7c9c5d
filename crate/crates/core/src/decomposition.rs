//! The stopping-time argument behind the restricted-type estimate:
//! normalization, the exceptional set, maximal squares, `E'_1`, tree
//! selection, and the assembly of direct value against tree-side majorant.
//!
//! Sets are unions of grid cells and all measures are cell counts times `h^2`
//! with `h` a power of two, so measure comparisons are exact.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dyadic::{ConvexTree, DyadicSquare};
use crate::error::{Error, Result};
use crate::field::SampledField;
use crate::forms::{truncated_form_contributions, CoefficientSequence, EngineSettings, Quadruple, TruncationConfig};
use crate::maximal::{level_set, quadratic_maximal, tree_size, SquareAverages};
use crate::profile::Profile;

/// Threshold of the exceptional set.
pub const EXCEPTIONAL_THRESHOLD: f64 = 1024.0;
/// Largest tree index reached by squares outside `H`.
pub const MAX_TREE_INDEX: i32 = 10;

/// Cell `(ix, iy)` of the grid.
pub type Cell = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictedInstance {
    pub half_width: f64,
    pub n: usize,
    /// `E_1..E_4` as sorted cell lists.
    pub sets: [Vec<Cell>; 4],
    pub alpha: [f64; 4],
    pub truncation: i32,
    pub seed: u64,
}

fn cell_log2(half_width: f64, n: usize) -> Result<i32> {
    let h = 2.0 * half_width / n as f64;
    let k = h.log2().round() as i32;
    if !n.is_power_of_two() || 2f64.powi(k) != h {
        return Err(Error::InvalidParameter(format!("cell side {h} must be a power of two")));
    }
    Ok(k)
}

impl RestrictedInstance {
    pub fn new(half_width: f64, n: usize, sets: [Vec<Cell>; 4], alpha: [f64; 4], truncation: i32, seed: u64) -> Result<Self> {
        let sets = sets.map(|mut s| {
            s.sort_unstable();
            s.dedup();
            s
        });
        let inst = RestrictedInstance { half_width, n, sets, alpha, truncation, seed };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        cell_log2(self.half_width, self.n)?;
        if self.truncation <= 0 {
            return Err(Error::InvalidParameter(format!("truncation {} must be positive", self.truncation)));
        }
        if let Some(&(ix, iy)) = self.sets.iter().flatten().find(|&&(ix, iy)| ix >= self.n || iy >= self.n) {
            return Err(Error::InvalidParameter(format!("cell ({ix}, {iy}) outside an {0} x {0} grid", self.n)));
        }
        let sum: f64 = self.alpha.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || self.alpha.iter().any(|a| !(-0.5..=0.5).contains(a)) {
            return Err(Error::InvalidParameter(format!("exponents {:?} need sum 1 and range [-1/2, 1/2]", self.alpha)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn measure(&self, j: usize) -> f64 {
        self.sets[j].len() as f64 * self.spacing().powi(2)
    }

    /// `1_{E_j}` as a cell field.
    pub fn indicator(&self, j: usize) -> Result<SampledField> {
        cells_field(self.half_width, self.n, &self.sets[j], |_| 1.0)
    }

    /// Line-based text: `key value...` lines, sets as `ix,iy` tokens.
    pub fn to_text(&self) -> String {
        let mut out = String::from("restricted-instance 1\n");
        out += &format!("half_width {:?}\nn {}\n", self.half_width, self.n);
        out += &format!("alpha {:?} {:?} {:?} {:?}\n", self.alpha[0], self.alpha[1], self.alpha[2], self.alpha[3]);
        out += &format!("truncation {}\nseed {}\n", self.truncation, self.seed);
        for (j, s) in self.sets.iter().enumerate() {
            out += &format!("set{}", j + 1);
            for (ix, iy) in s {
                out += &format!(" {ix},{iy}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse { line, message };
        let mut fields: BTreeMap<String, (usize, Vec<String>)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace().map(str::to_owned);
            let key = parts.next().unwrap_or_default();
            fields.insert(key, (i + 1, parts.collect()));
        }
        match fields.get("restricted-instance") {
            Some((_, v)) if v.first().map(String::as_str) == Some("1") => {}
            _ => return Err(err(1, "missing `restricted-instance 1` header".into())),
        }
        let get = |key: &str| fields.get(key).ok_or_else(|| err(0, format!("missing key `{key}`")));
        let scalar = |key: &str| -> Result<(usize, String)> {
            let (line, v) = get(key)?;
            match v.as_slice() {
                [x] => Ok((*line, x.clone())),
                _ => Err(err(*line, format!("`{key}` takes one value"))),
            }
        };
        let parse_num = |key: &str| -> Result<f64> {
            let (line, v) = scalar(key)?;
            v.parse().map_err(|_| err(line, format!("bad number `{v}` for `{key}`")))
        };
        let parse_int = |key: &str| -> Result<i64> {
            let (line, v) = scalar(key)?;
            v.parse().map_err(|_| err(line, format!("bad integer `{v}` for `{key}`")))
        };
        let half_width = parse_num("half_width")?;
        let n = parse_int("n")? as usize;
        let truncation = parse_int("truncation")? as i32;
        let (seed_line, seed_text) = scalar("seed")?;
        let seed: u64 = seed_text.parse().map_err(|_| err(seed_line, format!("bad seed `{seed_text}`")))?;
        let (alpha_line, alpha_vals) = get("alpha")?;
        if alpha_vals.len() != 4 {
            return Err(err(*alpha_line, "`alpha` takes four values".into()));
        }
        let mut alpha = [0.0; 4];
        for (a, v) in alpha.iter_mut().zip(alpha_vals) {
            *a = v.parse().map_err(|_| err(*alpha_line, format!("bad exponent `{v}`")))?;
        }
        let mut sets: [Vec<Cell>; 4] = Default::default();
        for (j, set) in sets.iter_mut().enumerate() {
            let key = format!("set{}", j + 1);
            let Some((line, tokens)) = fields.get(&key) else { continue };
            for tok in tokens {
                let cell = tok
                    .split_once(',')
                    .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                    .ok_or_else(|| err(*line, format!("bad cell `{tok}`")))?;
                set.push(cell);
            }
        }
        Self::new(half_width, n, sets, alpha, truncation, seed)
    }
}

fn cells_field(half_width: f64, n: usize, cells: &[Cell], value: impl Fn(Cell) -> f64) -> Result<SampledField> {
    let mut f = SampledField::zeros_2d(half_width, n)?;
    for &c in cells {
        f.set(c.0, c.1, value(c));
    }
    Ok(f)
}

/// Parameters of the random set generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstanceSpec {
    pub half_width: f64,
    pub n: usize,
    pub alpha: [f64; 4],
    pub truncation: i32,
    /// Target measures are log-uniform in these fractions of the grid box.
    pub min_fraction: f64,
    pub max_fraction: f64,
}

/// Random unions of random cell rectangles meeting the central half of the
/// box. Sets with a negative exponent get
/// a quarter of the smallest target so that they are the smallest sets.
pub fn random_instance(spec: &InstanceSpec, seed: u64) -> Result<RestrictedInstance> {
    let n = spec.n;
    if !(0.0 < spec.min_fraction && spec.min_fraction <= spec.max_fraction && spec.max_fraction <= 1.0) {
        return Err(Error::InvalidParameter("set fractions need 0 < min <= max <= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (spec.min_fraction.ln(), spec.max_fraction.ln());
    let sets = std::array::from_fn(|j| {
        let fraction = if spec.alpha[j] < 0.0 { spec.min_fraction / 4.0 } else { rng.gen_range(lo..=hi).exp() };
        let target = ((fraction * (n * n) as f64).round() as usize).clamp(1, n * n);
        let max_side = (n / 2).max(1);
        let mut cells = BTreeSet::new();
        while cells.len() < target {
            let (w, h) = (rng.gen_range(1..=max_side), rng.gen_range(1..=max_side));
            // Rectangles meet the central half of the box so that the sets interact.
            let lo = |w: usize| (n / 4 + 1).saturating_sub(w);
            let hi = |w: usize| (3 * n / 4).min(n - w);
            let (x0, y0) = (rng.gen_range(lo(w)..=hi(w)), rng.gen_range(lo(h)..=hi(h)));
            for iy in y0..y0 + h {
                for ix in x0..x0 + w {
                    cells.insert((ix, iy));
                }
            }
        }
        cells.into_iter().collect()
    });
    RestrictedInstance::new(spec.half_width, n, sets, spec.alpha, spec.truncation, seed)
}

/// Sign flips of `(u, v)` carried by a relabelling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Relabel {
    /// New argument `i` is old argument `permutation[i]`.
    pub permutation: [usize; 4],
    pub u_sign: f64,
    pub v_sign: f64,
}

/// The symmetries of the entangled product that move argument `j` first:
/// swapping `x, x'` exchanges `(1,2), (3,4)` and `u -> -u`; swapping `y, y'`
/// exchanges `(1,4), (2,3)` and `v -> -v`.
pub fn relabel_for(j: usize) -> Relabel {
    match j {
        0 => Relabel { permutation: [0, 1, 2, 3], u_sign: 1.0, v_sign: 1.0 },
        1 => Relabel { permutation: [1, 0, 3, 2], u_sign: -1.0, v_sign: 1.0 },
        2 => Relabel { permutation: [2, 3, 0, 1], u_sign: -1.0, v_sign: -1.0 },
        _ => Relabel { permutation: [3, 2, 1, 0], u_sign: 1.0, v_sign: -1.0 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Normalized {
    pub instance: RestrictedInstance,
    pub relabel: Relabel,
    /// The dilation is `a = 2^scale_exponent`.
    pub scale_exponent: i32,
}

impl Normalized {
    pub fn scale(&self) -> f64 {
        2f64.powi(self.scale_exponent)
    }

    /// The truncation of the rescaled form: `t` runs over `[2^-N, 2^N] / a`.
    pub fn truncation(&self, steps_per_octave: usize) -> Result<TruncationConfig> {
        Ok(TruncationConfig::new(self.instance.truncation, steps_per_octave)?.with_offset(-self.scale_exponent))
    }
}

/// Relabels so that `E_1` is the largest set (largest index attaining the
/// maximum) and dilates by `a = 2^k` so that `1 <= |E_1| <= 4`, using
/// `Lambda^N(F) = a^2 Lambda^{N/a}(F(a .))`.
pub fn normalize_instance(inst: &RestrictedInstance) -> Result<Normalized> {
    inst.validate()?;
    if inst.sets.iter().all(Vec::is_empty) {
        return Err(Error::EmptyInstance);
    }
    let mut largest = 0;
    for j in 1..4 {
        if inst.sets[j].len() >= inst.sets[largest].len() {
            largest = j;
        }
    }
    let relabel = relabel_for(largest);
    let p = relabel.permutation;
    let m = inst.measure(largest);
    let mut k = 0i32;
    if !(1.0..=4.0).contains(&m) {
        while m / 4f64.powi(k) > 4.0 {
            k += 1;
        }
        while m / 4f64.powi(k) <= 1.0 {
            k -= 1;
        }
    }
    let instance = RestrictedInstance {
        half_width: inst.half_width / 2f64.powi(k),
        n: inst.n,
        sets: p.map(|i| inst.sets[i].clone()),
        alpha: p.map(|i| inst.alpha[i]),
        truncation: inst.truncation,
        seed: inst.seed,
    };
    Ok(Normalized { instance, relabel, scale_exponent: k })
}

/// The dyadic square of cell `(ix, iy)`.
pub fn cell_square(half_width: f64, n: usize, cell: Cell) -> Result<DyadicSquare> {
    let k = cell_log2(half_width, n)?;
    let offset = (n / 2) as i64;
    Ok(DyadicSquare::new(k, cell.0 as i64 - offset, cell.1 as i64 - offset))
}

/// Cells meeting the interior of `s`, clipped to the grid, and whether `s`
/// reaches outside the grid box.
fn square_cells(half_width: f64, n: usize, s: &DyadicSquare) -> (Vec<Cell>, bool) {
    let h = 2.0 * half_width / n as f64;
    let (x0, x1, y0, y1) = s.bounds();
    let lo = |a: f64| ((a + half_width) / h).floor() as i64;
    let hi = |b: f64| ((b + half_width) / h).ceil() as i64;
    let (i0, i1, j0, j1) = (lo(x0), hi(x1), lo(y0), hi(y1));
    let n64 = n as i64;
    let escapes = i0 < 0 || j0 < 0 || i1 > n64 || j1 > n64;
    let mut cells = Vec::new();
    for iy in j0.max(0)..j1.min(n64) {
        for ix in i0.max(0)..i1.min(n64) {
            cells.push((ix as usize, iy as usize));
        }
    }
    (cells, escapes)
}

/// Maximal dyadic squares whose union is exactly the cell set.
pub fn maximal_squares(half_width: f64, n: usize, cells: &[Cell]) -> Result<Vec<DyadicSquare>> {
    let mut level: BTreeSet<DyadicSquare> =
        cells.iter().map(|&c| cell_square(half_width, n, c)).collect::<Result<_>>()?;
    let mut maximal = Vec::new();
    while !level.is_empty() {
        let mut parents = BTreeSet::new();
        for s in &level {
            let p = s.parent();
            if p.children().iter().all(|c| level.contains(c)) {
                parents.insert(p);
            } else {
                maximal.push(*s);
            }
        }
        level = parents;
    }
    maximal.sort_unstable();
    Ok(maximal)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceptionalSet {
    pub threshold: f64,
    pub cells: Vec<Cell>,
    pub measure: f64,
    pub maximal_squares: Vec<DyadicSquare>,
    pub e1_prime: Vec<Cell>,
    pub e1_measure: f64,
    pub e1_prime_measure: f64,
    /// Some `3R` leaves the grid box; the generator redraws such instances.
    pub escapes_box: bool,
    /// `|H| <= 1/18`.
    pub measure_ok: bool,
    /// `2 |E'_1| >= |E_1|`.
    pub e1_prime_ok: bool,
    /// The maximal squares are disjoint and their union is `H`.
    pub union_ok: bool,
}

impl ExceptionalSet {
    pub fn pass(&self) -> bool {
        self.measure_ok && self.e1_prime_ok && self.union_ok
    }

    /// Whether `s` lies inside `H`.
    pub fn contains_square(&self, half_width: f64, n: usize, s: &DyadicSquare) -> bool {
        let set: HashSet<Cell> = self.cells.iter().copied().collect();
        square_inside(half_width, n, &set, s)
    }
}

fn square_inside(half_width: f64, n: usize, set: &HashSet<Cell>, s: &DyadicSquare) -> bool {
    let (cells, escapes) = square_cells(half_width, n, s);
    !escapes && !cells.is_empty() && cells.iter().all(|c| set.contains(c))
}

/// `H = U_j {M(|E_j|^-1/2 1_{E_j}) > threshold}`, its maximal dyadic squares
/// `R`, and `E'_1 = E_1 \ U_R 3R`.
pub fn build_exceptional_set(inst: &RestrictedInstance, threshold: f64) -> Result<ExceptionalSet> {
    inst.validate()?;
    let (lw, n) = (inst.half_width, inst.n);
    let cell_area = inst.spacing().powi(2);
    let mut h: BTreeSet<Cell> = BTreeSet::new();
    for j in 0..4 {
        if inst.sets[j].is_empty() {
            continue;
        }
        let c = inst.measure(j).powf(-0.5);
        let g = cells_field(lw, n, &inst.sets[j], |_| c)?;
        h.extend(level_set(&quadratic_maximal(&g)?, threshold).cells);
    }
    let cells: Vec<Cell> = h.into_iter().collect();
    let maximal = maximal_squares(lw, n, &cells)?;
    let mut covered = 0u128;
    let mut removed: HashSet<Cell> = HashSet::new();
    let mut escapes_box = false;
    for r in &maximal {
        let (rc, _) = square_cells(lw, n, r);
        covered += rc.len() as u128;
        let side = r.side();
        let (x0, _, y0, _) = r.bounds();
        let tripled = [(-1, -1), (0, -1), (1, -1), (-1, 0), (0, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
        for (dx, dy) in tripled {
            let s = DyadicSquare::containing_point(r.k, x0 + (dx as f64 + 0.5) * side, y0 + (dy as f64 + 0.5) * side);
            let (sc, esc) = square_cells(lw, n, &s);
            escapes_box |= esc;
            removed.extend(sc);
        }
    }
    let e1_prime: Vec<Cell> = inst.sets[0].iter().copied().filter(|c| !removed.contains(c)).collect();
    let measure = cells.len() as f64 * cell_area;
    let e1_measure = inst.measure(0);
    let e1_prime_measure = e1_prime.len() as f64 * cell_area;
    Ok(ExceptionalSet {
        threshold,
        measure_ok: 18.0 * measure <= 1.0,
        e1_prime_ok: 2 * e1_prime.len() >= inst.sets[0].len(),
        union_ok: covered == cells.len() as u128,
        cells,
        measure,
        maximal_squares: maximal,
        e1_prime,
        e1_measure,
        e1_prime_measure,
        escapes_box,
    })
}

/// One tree `T_R` of the stopping-time forest at index `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedTree {
    pub k: i32,
    pub root: DyadicSquare,
    pub members: Vec<DyadicSquare>,
    pub convex: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Forests {
    pub trees: Vec<SelectedTree>,
    /// Candidates inside `H`, left to the generation-decay argument.
    pub exceptional: Vec<DyadicSquare>,
    /// Candidates where every `G_j` has zero containing average.
    pub vanishing: Vec<DyadicSquare>,
    pub max_index: Option<i32>,
    /// Every tree is convex.
    pub convex: bool,
    /// Each candidate outside `H` lies in exactly one tree, of index `<= 10`.
    pub coverage: bool,
}

/// `k` with `value` in `(2^(k-1), 2^k]`.
fn stopping_index(value: f64) -> i32 {
    let mut k = value.log2().ceil() as i32;
    while 2f64.powi(k - 1) >= value {
        k -= 1;
    }
    while 2f64.powi(k) < value {
        k += 1;
    }
    k
}

/// Stopping-time selection over the candidate squares: `S_k` holds squares
/// whose largest containing-square `L^2` average over `j` lies in
/// `(2^(k-1), 2^k]`, `R_k` its maximal elements and `T_R` the members of `S_k`
/// inside `R`. Squares for which `in_exceptional` holds are set aside.
pub fn select_trees(
    fields: &Quadruple,
    candidates: &[DyadicSquare],
    in_exceptional: &dyn Fn(&DyadicSquare) -> bool,
) -> Result<Forests> {
    let averages: Vec<SquareAverages> = fields.fields().iter().map(SquareAverages::new).collect::<Result<_>>()?;
    let mut unique: Vec<DyadicSquare> = candidates.to_vec();
    unique.sort_unstable();
    unique.dedup();
    let mut by_index: BTreeMap<i32, BTreeSet<DyadicSquare>> = BTreeMap::new();
    let mut exceptional = Vec::new();
    let mut vanishing = Vec::new();
    for s in unique {
        if in_exceptional(&s) {
            exceptional.push(s);
            continue;
        }
        let value = averages.iter().map(|a| a.containing_sup(&s)).fold(0.0, f64::max);
        if value > 0.0 {
            by_index.entry(stopping_index(value)).or_default().insert(s);
        } else {
            vanishing.push(s);
        }
    }
    let mut trees = Vec::new();
    let mut assigned = 0usize;
    for (&k, squares) in &by_index {
        let top = squares.iter().map(|q| q.k).max().unwrap_or(0);
        let roots: Vec<DyadicSquare> = squares
            .iter()
            .copied()
            .filter(|s| {
                let mut p = s.parent();
                while p.k <= top {
                    if squares.contains(&p) {
                        return false;
                    }
                    p = p.parent();
                }
                true
            })
            .collect();
        for root in roots {
            let members: Vec<DyadicSquare> = squares.iter().copied().filter(|s| root.contains(s)).collect();
            assigned += members.len();
            let convex = ConvexTree::new(root, members.iter().copied()).is_ok();
            trees.push(SelectedTree { k, root, members, convex });
        }
    }
    let outside: usize = by_index.values().map(BTreeSet::len).sum();
    let max_index = by_index.keys().next_back().copied();
    Ok(Forests {
        convex: trees.iter().all(|t| t.convex),
        coverage: assigned == outside && vanishing.is_empty() && max_index.is_none_or(|k| k <= MAX_TREE_INDEX),
        trees,
        exceptional,
        vanishing,
        max_index,
    })
}

/// How `F_j` is realized under `|F_j| <= 1_{E_j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignPolicy {
    Indicator,
    /// Independent random `+-1` on each cell, drawn from the instance seed.
    RandomSigns,
}

impl std::str::FromStr for SignPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "indicator" => Ok(SignPolicy::Indicator),
            "random-signs" => Ok(SignPolicy::RandomSigns),
            _ => Err(Error::Config(format!("unknown sign policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestrictedOptions {
    pub threshold: f64,
    pub policy: SignPolicy,
    pub steps_per_octave: usize,
    pub settings: EngineSettings,
}

impl Default for RestrictedOptions {
    fn default() -> Self {
        RestrictedOptions {
            threshold: EXCEPTIONAL_THRESHOLD,
            policy: SignPolicy::Indicator,
            steps_per_octave: 4,
            settings: EngineSettings { significance_tol: 1e-10, ..EngineSettings::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeRecord {
    pub k: i32,
    pub root: DyadicSquare,
    pub size: usize,
    /// `Theta~^{T_R}` over the tree members.
    pub local: f64,
    /// `|R| prod_j M(G_j, T_R)`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictedReport {
    pub scale_exponent: i32,
    pub relabel: Relabel,
    /// Measures of the normalized `E_1..E_4`.
    pub measures: [f64; 4],
    /// `|Lambda^N(G_1..G_4)|`.
    pub direct: f64,
    /// Tree-side majorant: tree sums plus the exceptional sum.
    pub majorant: f64,
    pub tree_majorant: f64,
    pub exceptional_majorant: f64,
    /// Exceptional sum binned by generations below the maximal square.
    pub exceptional_by_generation: Vec<f64>,
    /// `|fine - coarse|` signed quadrature gap, the tolerance of `direct <= majorant`.
    pub quadrature_gap: f64,
    /// `|Lambda^N(F)|` of the original instance.
    pub original_value: f64,
    /// `prod_j |E_j|^alpha_j` of the original instance.
    pub alpha_bound: f64,
    /// `original_value / alpha_bound`.
    pub alpha_ratio: f64,
    /// `max_k |{M(G_j) > 2^(k-1)}| 2^(2k)` per `j`.
    pub weak_type: [f64; 4],
    /// Largest `Theta~^{T_R} / (|R| prod M(G_j, T_R))`.
    pub tree_ratio: f64,
    pub trees: Vec<TreeRecord>,
    pub exceptional_set: ExceptionalSet,
    pub max_index: Option<i32>,
    pub convex: bool,
    pub coverage: bool,
    /// `sum_{S in S_{R,g}} |S| <= |R|` for every maximal `R` and generation `g`.
    pub packing: bool,
    /// Exceptional sums halve per generation beyond the fourth.
    pub decay: bool,
    pub direct_within_majorant: bool,
    pub pass: bool,
}

fn realized_fields(inst: &RestrictedInstance, e1_prime: &[Cell], policy: SignPolicy) -> Result<[SampledField; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(inst.seed ^ 0x5157_4e5f_u64);
    let mut fields = Vec::with_capacity(4);
    for j in 0..4 {
        let cells = if j == 0 { e1_prime } else { &inst.sets[j][..] };
        let m = inst.measure(j);
        let c = if m > 0.0 { m.powf(-0.5) } else { 0.0 };
        let signs: Vec<f64> = match policy {
            SignPolicy::Indicator => vec![1.0; cells.len()],
            SignPolicy::RandomSigns => cells.iter().map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect(),
        };
        let mut f = SampledField::zeros_2d(inst.half_width, inst.n)?;
        for (&(ix, iy), s) in cells.iter().zip(signs) {
            f.set(ix, iy, c * s);
        }
        fields.push(f);
    }
    Ok(fields.try_into().expect("four fields"))
}

fn weak_type_ratio(g: &SampledField) -> Result<f64> {
    let m = quadratic_maximal(g)?;
    let top = m.field.max_abs();
    if top == 0.0 {
        return Ok(0.0);
    }
    let mut best: f64 = 0.0;
    let mut k = stopping_index(top) + 1;
    loop {
        let lambda = 2f64.powi(k - 1);
        let mass = level_set(&m, lambda).measure;
        best = best.max(mass * 4f64.powi(k));
        if mass >= 4.0 * g.half_width().powi(2) || k < -40 {
            break;
        }
        k -= 1;
    }
    Ok(best)
}

/// Runs the stopping-time pipeline on one instance and compares
/// `|Lambda^N(G)|` with its tree-side majorant. `u, v, mu` refer to the
/// original labelling.
pub fn restricted_type_verify(
    inst: &RestrictedInstance,
    phi: &Profile,
    psi: &Profile,
    u: f64,
    v: f64,
    mu_values: &[f64],
    options: &RestrictedOptions,
) -> Result<RestrictedReport> {
    let norm = normalize_instance(inst)?;
    let ni = &norm.instance;
    let (lw, n) = (ni.half_width, ni.n);
    let exceptional = build_exceptional_set(ni, options.threshold)?;
    let fields = realized_fields(ni, &exceptional.e1_prime, options.policy)?;
    let quad = Quadruple::new(fields)?;
    let config = norm.truncation(options.steps_per_octave)?;
    let mu = CoefficientSequence::new(&config, mu_values.to_vec())?;
    let settings = EngineSettings { absolute: true, ..options.settings };
    let (u2, v2) = (u * norm.relabel.u_sign, v * norm.relabel.v_sign);
    let (contributions, _) = truncated_form_contributions(&quad, phi, psi, u2, v2, &mu, &config, &settings)?;

    let h_cells: HashSet<Cell> = exceptional.cells.iter().copied().collect();
    let in_h = |s: &DyadicSquare| square_inside(lw, n, &h_cells, s);
    let squares: Vec<DyadicSquare> = contributions.iter().map(|c| c.square).collect();
    let forests = select_trees(&quad, &squares, &in_h)?;

    let signed: f64 = contributions.iter().map(|c| c.signed).sum();
    let coarse: f64 = contributions.iter().map(|c| c.coarse_signed).sum();
    let absolute: BTreeMap<DyadicSquare, f64> = {
        let mut m = BTreeMap::new();
        for c in &contributions {
            *m.entry(c.square).or_insert(0.0) += c.absolute;
        }
        m
    };
    let mut trees = Vec::with_capacity(forests.trees.len());
    let mut tree_majorant = 0.0;
    let mut tree_ratio: f64 = 0.0;
    for t in &forests.trees {
        let local: f64 = t.members.iter().map(|s| absolute[s]).sum();
        let mut prod = t.root.area();
        for f in quad.fields() {
            prod *= tree_size(f, &t.members)?.value;
        }
        tree_majorant += local;
        if prod > 0.0 {
            tree_ratio = tree_ratio.max(local / prod);
        }
        trees.push(TreeRecord { k: t.k, root: t.root, size: t.members.len(), local, scale: prod });
    }

    let mut by_generation: Vec<f64> = Vec::new();
    let mut packing_area: BTreeMap<(DyadicSquare, usize), f64> = BTreeMap::new();
    for s in &forests.exceptional {
        let Some(r) = exceptional.maximal_squares.iter().find(|r| r.contains(s)).copied() else {
            continue;
        };
        let g = (r.k - s.k) as usize;
        if by_generation.len() <= g {
            by_generation.resize(g + 1, 0.0);
        }
        by_generation[g] += absolute[s];
        *packing_area.entry((r, g)).or_insert(0.0) += s.area();
    }
    let packing = packing_area.iter().all(|((r, _), a)| *a <= r.area());
    let decay = by_generation.windows(2).enumerate().all(|(g, w)| g < 4 || w[1] <= 0.5 * w[0]);
    let exceptional_majorant: f64 = by_generation.iter().sum();
    let majorant = tree_majorant + exceptional_majorant;
    let direct = signed.abs();
    let quadrature_gap = (signed - coarse).abs();

    let mut weak_type = [0.0; 4];
    for (w, f) in weak_type.iter_mut().zip(quad.fields()) {
        *w = weak_type_ratio(f)?;
    }
    let measures = std::array::from_fn(|j| ni.measure(j));
    let scale = norm.scale();
    let original_value = scale * scale * direct * measures.iter().map(|m: &f64| m.sqrt()).product::<f64>();
    let alpha_bound: f64 = (0..4).map(|j| inst.measure(j).powf(inst.alpha[j])).product();
    let alpha_ratio = if original_value == 0.0 { 0.0 } else { original_value / alpha_bound };
    let direct_within_majorant = direct <= majorant + quadrature_gap;
    let pass = direct_within_majorant
        && forests.convex
        && forests.coverage
        && packing
        && decay
        && exceptional.pass()
        && direct.is_finite()
        && majorant.is_finite();
    Ok(RestrictedReport {
        scale_exponent: norm.scale_exponent,
        relabel: norm.relabel,
        measures,
        direct,
        majorant,
        tree_majorant,
        exceptional_majorant,
        exceptional_by_generation: by_generation,
        quadrature_gap,
        original_value,
        alpha_bound,
        alpha_ratio,
        weak_type,
        tree_ratio,
        trees,
        exceptional_set: exceptional,
        max_index: forests.max_index,
        convex: forests.convex,
        coverage: forests.coverage,
        packing,
        decay,
        direct_within_majorant,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::truncated_form;

    fn box_cells(n: usize, x0: usize, x1: usize, y0: usize, y1: usize) -> Vec<Cell> {
        let mut v = Vec::new();
        for iy in y0..y1 {
            for ix in x0..x1 {
                if ix < n && iy < n {
                    v.push((ix, iy));
                }
            }
        }
        v
    }

    fn spec() -> InstanceSpec {
        InstanceSpec { half_width: 2.0, n: 16, alpha: [0.25; 4], truncation: 1, min_fraction: 0.05, max_fraction: 0.4 }
    }

    #[test]
    fn normalization_picks_a_power_of_two() {
        // 16 x 16 cells of side 1/4: measure 16, so a = 2 and the new measure is 4.
        let s = box_cells(32, 0, 16, 0, 16);
        let inst = RestrictedInstance::new(4.0, 32, [s.clone(), s.clone(), s.clone(), s], [0.25; 4], 1, 0).unwrap();
        let norm = normalize_instance(&inst).unwrap();
        assert_eq!(norm.scale_exponent, 1);
        assert_eq!(norm.instance.measure(0), 4.0);
        let s = box_cells(16, 0, 8, 0, 8);
        let inst = RestrictedInstance::new(2.0, 16, [s.clone(), s.clone(), s.clone(), s], [0.25; 4], 1, 0).unwrap();
        assert_eq!(normalize_instance(&inst).unwrap().scale_exponent, 0);
    }

    #[test]
    fn normalization_relabels_to_the_largest_set() {
        let small = box_cells(16, 0, 2, 0, 2);
        let large = box_cells(16, 0, 8, 0, 8);
        let inst =
            RestrictedInstance::new(2.0, 16, [small.clone(), small.clone(), large.clone(), large], [0.25; 4], 1, 0).unwrap();
        let norm = normalize_instance(&inst).unwrap();
        assert_eq!(norm.relabel.permutation, [3, 2, 1, 0]);
        assert_eq!(norm.instance.sets[0].len(), 64);
    }

    #[test]
    fn empty_instance_is_an_error() {
        let inst = RestrictedInstance::new(2.0, 16, Default::default(), [0.25; 4], 1, 0).unwrap();
        assert!(matches!(normalize_instance(&inst), Err(Error::EmptyInstance)));
    }

    #[test]
    fn rescaling_preserves_the_form() {
        let inst = random_instance(&InstanceSpec { half_width: 4.0, ..spec() }, 3).unwrap();
        let norm = normalize_instance(&inst).unwrap();
        assert!(norm.scale_exponent != 0);
        let (phi, psi) = (Profile::phi(), Profile::psi());
        let settings = EngineSettings { significance_tol: 1e-10, absolute: false, ..EngineSettings::default() };
        let original = Quadruple::new(std::array::from_fn(|j| inst.indicator(j).unwrap())).unwrap();
        let rescaled = Quadruple::new(std::array::from_fn(|j| norm.instance.indicator(j).unwrap())).unwrap();
        let config = TruncationConfig::new(1, 4).unwrap();
        let mu = CoefficientSequence::constant(&config, 1.0).unwrap();
        let a = truncated_form(&original, &phi, &psi, 1.0, 0.0, &mu, &config, &settings).unwrap().value;
        let config2 = norm.truncation(4).unwrap();
        let mu2 = CoefficientSequence::constant(&config2, 1.0).unwrap();
        let (u2, v2) = (norm.relabel.u_sign, 0.0);
        let b = truncated_form(&rescaled, &phi, &psi, u2, v2, &mu2, &config2, &settings).unwrap().value;
        let b = b * norm.scale().powi(2);
        assert!((a - b).abs() <= 1e-3 * a.abs(), "{a} {b}");
    }

    #[test]
    fn unit_square_sets_have_no_exceptional_set() {
        let s = box_cells(16, 8, 12, 8, 12);
        let inst = RestrictedInstance::new(2.0, 16, [s.clone(), s.clone(), s.clone(), s], [0.25; 4], 1, 0).unwrap();
        let e = build_exceptional_set(&inst, EXCEPTIONAL_THRESHOLD).unwrap();
        assert!(e.cells.is_empty());
        assert_eq!(e.e1_prime, inst.sets[0]);
        assert!(e.pass());
    }

    #[test]
    fn lowered_threshold_builds_maximal_squares() {
        let big = box_cells(32, 0, 32, 0, 32);
        let tiny = vec![(16, 16), (17, 16), (16, 17), (17, 17)];
        let inst = RestrictedInstance::new(2.0, 32, [big.clone(), big.clone(), big, tiny], [0.25; 4], 1, 0).unwrap();
        let e = build_exceptional_set(&inst, 2.0).unwrap();
        assert!(!e.cells.is_empty());
        assert!(e.union_ok);
        let total: f64 = e.maximal_squares.iter().map(DyadicSquare::area).sum();
        assert_eq!(total, e.measure);
        for (i, a) in e.maximal_squares.iter().enumerate() {
            for b in &e.maximal_squares[i + 1..] {
                assert!(!a.overlaps(b));
            }
        }
        assert!(e.e1_prime.len() < inst.sets[0].len());
    }

    #[test]
    fn maximal_squares_merge_aligned_blocks() {
        let cells = box_cells(16, 4, 8, 4, 8);
        let r = maximal_squares(2.0, 16, &cells).unwrap();
        assert_eq!(r, vec![DyadicSquare::new(0, -1, -1)]);
        let r = maximal_squares(2.0, 16, &box_cells(16, 5, 9, 4, 8)).unwrap();
        assert!(r.len() > 1);
    }

    #[test]
    fn zero_fields_select_nothing() {
        let z = SampledField::zeros_2d(2.0, 8).unwrap();
        let q = Quadruple::uniform(z).unwrap();
        let f = select_trees(&q, &[DyadicSquare::new(0, 0, 0)], &|_| false).unwrap();
        assert!(f.trees.is_empty());
        assert_eq!(f.vanishing.len(), 1);
    }

    #[test]
    fn single_bump_roots_contain_the_bump() {
        let mut g = SampledField::zeros_2d(2.0, 16).unwrap();
        g.set(9, 9, 4.0);
        let q = Quadruple::uniform(g).unwrap();
        let mut candidates = Vec::new();
        for k in -2..=1 {
            candidates.extend(crate::forms::squares_covering(k, -2.0, 2.0, -2.0, 2.0));
        }
        let f = select_trees(&q, &candidates, &|_| false).unwrap();
        assert!(f.convex && f.coverage);
        let top = f.trees.iter().map(|t| t.k).max().unwrap();
        for t in f.trees.iter().filter(|t| t.k == top) {
            assert!(t.root.contains_point(0.3, 0.3), "{t:?}");
        }
    }

    #[test]
    fn text_round_trip() {
        let inst = random_instance(&spec(), 11).unwrap();
        let back = RestrictedInstance::from_text(&inst.to_text()).unwrap();
        assert_eq!(back, inst);
        assert!(matches!(RestrictedInstance::from_text("nonsense"), Err(Error::Parse { .. })));
    }

    #[test]
    fn restricted_verify_passes_on_a_random_instance() {
        let inst = random_instance(&InstanceSpec { n: 8, ..spec() }, 5).unwrap();
        let config = TruncationConfig::new(1, 4).unwrap();
        let mu: Vec<f64> = (0..config.t_samples()).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let options = RestrictedOptions { policy: SignPolicy::RandomSigns, ..RestrictedOptions::default() };
        let r = restricted_type_verify(&inst, &Profile::phi(), &Profile::psi(), 0.0, 1.0, &mu, &options).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.direct > 0.0 && r.majorant > 0.0, "{r:?}");
        assert!(r.max_index.unwrap() <= MAX_TREE_INDEX);
    }
}
