//! Tree sizes `M(F, C)`, the quadratic maximal function over power-of-two
//! windows, level sets, and the ball discretization of `theta`.
//!
//! Fields are cell-valued, so `F^2 * [theta]_t` at a cell centre is the sum of
//! `F_j^2` against the integral of `[theta]_t` over cell `j`. Those cell
//! weights depend only on the offset and are cached per `(n, h, t)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::dyadic::DyadicSquare;
use crate::error::{Error, Result};
use crate::fft;
use crate::field::{Dim, SampledField};
use crate::profile::theta;
use crate::quad;

/// `int_{R^2} theta = pi^2 / 2`.
pub const THETA_MASS: f64 = std::f64::consts::PI * std::f64::consts::PI / 2.0;

const CELL_ORDER: usize = 6;
const TREE_SIZE_T_SAMPLES: usize = 4;
/// Every square of a collection gets at least this many sample centres per side.
const TREE_SIZE_POINTS_PER_SIDE: f64 = 2.0;
/// Largest grid the sampling lattice is refined to.
const TREE_SIZE_MAX_REFINED: usize = 512;

fn ensure_2d(f: &SampledField) -> Result<()> {
    if f.dim() != Dim::Two {
        return Err(Error::GridMismatch("expected a 2D field".into()));
    }
    Ok(())
}

/// Tensor Gauss integral of `g(u, v)` over a rectangle, with panels no wider
/// than `max(min_panel, dist / 4)` where `dist` is the distance to the origin.
fn rect_integral(g: &dyn Fn(f64, f64) -> f64, u0: f64, u1: f64, v0: f64, v1: f64, min_panel: f64) -> f64 {
    let du = if u0 > 0.0 { u0 } else if u1 < 0.0 { -u1 } else { 0.0 };
    let dv = if v0 > 0.0 { v0 } else if v1 < 0.0 { -v1 } else { 0.0 };
    let cap = min_panel.max(0.25 * du.hypot(dv));
    let pu = ((u1 - u0) / cap).ceil().max(1.0) as usize;
    let pv = ((v1 - v0) / cap).ceil().max(1.0) as usize;
    let rule = quad::gauss(CELL_ORDER);
    let (wu, wv) = ((u1 - u0) / pu as f64, (v1 - v0) / pv as f64);
    let mut total = 0.0;
    for i in 0..pu {
        let a = u0 + i as f64 * wu;
        for j in 0..pv {
            let b = v0 + j as f64 * wv;
            for (u, w1) in rule.on(a, a + wu) {
                for (v, w2) in rule.on(b, b + wv) {
                    total += w1 * w2 * g(u, v);
                }
            }
        }
    }
    total
}

/// `int_cell [theta]_t (p - x, q - y) dx dy` for the cell `[x0,x1) x [y0,y1)`.
pub fn theta_cell_weight(p: f64, q: f64, t: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    rect_integral(&theta, (p - x1) / t, (p - x0) / t, (q - y1) / t, (q - y0) / t, 0.5)
}

type WeightKey = (usize, u64, u64);

fn weight_cache() -> &'static Mutex<HashMap<WeightKey, Arc<Vec<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<WeightKey, Arc<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cell weights `W(dx, dy)` for offsets in `[-(n-1), n-1]^2`, row-major with
/// side `2n - 1` and index `(dy + n - 1) * (2n - 1) + dx + n - 1`.
pub fn theta_weights(n: usize, h: f64, t: f64) -> Arc<Vec<f64>> {
    let key = (n, h.to_bits(), t.to_bits());
    if let Some(w) = weight_cache().lock().expect("weight cache poisoned").get(&key) {
        return w.clone();
    }
    let m = 2 * n - 1;
    let mut w = vec![0.0; m * m];
    let s = h / t;
    for dx in 0..n {
        for dy in 0..=dx {
            let (a, b) = (dx as f64 * s, dy as f64 * s);
            let v = rect_integral(&theta, a - 0.5 * s, a + 0.5 * s, b - 0.5 * s, b + 0.5 * s, 0.5);
            for (x, y) in [(dx, dy), (dy, dx)] {
                for sx in [-1i64, 1] {
                    for sy in [-1i64, 1] {
                        let ix = (n as i64 - 1 + sx * x as i64) as usize;
                        let iy = (n as i64 - 1 + sy * y as i64) as usize;
                        w[iy * m + ix] = v;
                    }
                }
            }
        }
    }
    let w = Arc::new(w);
    weight_cache().lock().expect("weight cache poisoned").insert(key, w.clone());
    w
}

/// `F^2 * [theta]_t` at every virtual cell centre with index in
/// `[-(n-1), 2n-2]^2`. Returned row-major with side `3n - 2`; the centre of
/// cell `(ix, iy)` sits at `(iy + n - 1) * (3n - 2) + ix + n - 1`.
pub fn theta_convolution_extended(f: &SampledField, t: f64) -> Result<(Vec<f64>, usize)> {
    ensure_2d(f)?;
    let n = f.n();
    let sq: Vec<f64> = f.values().iter().map(|v| v * v).collect();
    let w = theta_weights(n, f.spacing(), t);
    Ok(fft::linear_convolve_2d(&sq, n, &w, 2 * n - 1))
}

/// `F^2 * [theta]_t` at the cell centres of the grid.
pub fn theta_convolution(f: &SampledField, t: f64) -> Result<SampledField> {
    let (ext, side) = theta_convolution_extended(f, t)?;
    let n = f.n();
    let mut out = SampledField::zeros_2d(f.half_width(), n)?;
    for iy in 0..n {
        for ix in 0..n {
            out.set(ix, iy, ext[(iy + n - 1) * side + ix + n - 1].max(0.0));
        }
    }
    Ok(out)
}

/// `F^2 * [theta]_t (p, q)` at an arbitrary point, by direct summation.
pub fn theta_average_at(f: &SampledField, p: f64, q: f64, t: f64) -> Result<f64> {
    weighted_average_at(f, p, q, t, &theta, 0.5)
}

fn weighted_average_at(
    f: &SampledField,
    p: f64,
    q: f64,
    t: f64,
    kernel: &dyn Fn(f64, f64) -> f64,
    min_panel: f64,
) -> Result<f64> {
    ensure_2d(f)?;
    let (n, h, lw) = (f.n(), f.spacing(), f.half_width());
    let mut total = 0.0;
    for iy in 0..n {
        for ix in 0..n {
            let v = f.get(ix, iy);
            if v == 0.0 {
                continue;
            }
            let (x0, y0) = (-lw + ix as f64 * h, -lw + iy as f64 * h);
            let k = rect_integral(kernel, (p - x0 - h) / t, (p - x0) / t, (q - y0 - h) / t, (q - y0) / t, min_panel);
            total += v * v * k;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeSize {
    /// `sup (F^2 * [theta]_t (p,q))^(1/2)` over the sampled Whitney region.
    pub value: f64,
    /// A sample `(p, q, t)` attaining the supremum.
    pub argmax: Option<(f64, f64, f64)>,
    pub samples: usize,
    pub flags: Vec<String>,
}

/// Virtual cell indices (possibly outside the grid) of the cell centres in
/// the square; the cell containing its centre if there are none.
fn sample_cells(f: &SampledField, s: &DyadicSquare) -> Vec<(i64, i64)> {
    let (h, lw) = (f.spacing(), f.half_width());
    let (x0, x1, y0, y1) = s.bounds();
    let range = |a: f64, b: f64| {
        let lo = ((a + lw) / h - 0.5).ceil() as i64;
        let hi = ((b + lw) / h - 0.5).ceil() as i64;
        (lo, hi)
    };
    let (ix0, ix1) = range(x0, x1);
    let (iy0, iy1) = range(y0, y1);
    if ix0 >= ix1 || iy0 >= iy1 {
        let cx = (((x0 + x1) / 2.0 + lw) / h).floor() as i64;
        let cy = (((y0 + y1) / 2.0 + lw) / h).floor() as i64;
        return vec![(cx, cy)];
    }
    let mut out = Vec::with_capacity(((ix1 - ix0) * (iy1 - iy0)) as usize);
    for iy in iy0..iy1 {
        for ix in ix0..ix1 {
            out.push((ix, iy));
        }
    }
    out
}

/// Midpoint-log samples in `[2^(k-1), 2^k]`.
pub fn whitney_t_samples(k: i32) -> Vec<f64> {
    let base = 2f64.powi(k - 1);
    (0..TREE_SIZE_T_SAMPLES)
        .map(|i| base * 2f64.powf((i as f64 + 0.5) / TREE_SIZE_T_SAMPLES as f64))
        .collect()
}

/// `f` on a grid refined by a power of two so that the smallest square of the
/// collection holds `TREE_SIZE_POINTS_PER_SIDE` cell centres per side. Cell
/// values are copied, so the refined field is the same function.
fn refined_for(f: &SampledField, collection: &[DyadicSquare]) -> Result<SampledField> {
    let Some(finest) = collection.iter().map(|s| s.side()).reduce(f64::min) else { return Ok(f.clone()) };
    let n = f.n();
    let mut r = 1;
    while f.spacing() / r as f64 > finest / TREE_SIZE_POINTS_PER_SIDE && n * r * 2 <= TREE_SIZE_MAX_REFINED {
        r *= 2;
    }
    if r == 1 {
        return Ok(f.clone());
    }
    let m = n * r;
    let mut values = Vec::with_capacity(m * m);
    for iy in 0..m {
        for ix in 0..m {
            values.push(f.get(ix / r, iy / r));
        }
    }
    SampledField::new_2d(f.half_width(), m, values)
}

/// The `(p, q, t)` points over which [`tree_size`] takes its supremum.
pub fn tree_size_lattice(f: &SampledField, collection: &[DyadicSquare]) -> Result<Vec<(f64, f64, f64)>> {
    ensure_2d(f)?;
    let f = &refined_for(f, collection)?;
    let (h, lw) = (f.spacing(), f.half_width());
    let mut by_scale: std::collections::BTreeMap<i32, Vec<(i64, i64)>> = std::collections::BTreeMap::new();
    for s in collection {
        by_scale.entry(s.k).or_default().extend(sample_cells(f, s));
    }
    let mut out = Vec::new();
    for (k, mut cells) in by_scale {
        cells.sort_unstable();
        cells.dedup();
        for t in whitney_t_samples(k) {
            out.extend(cells.iter().map(|&(ix, iy)| (-lw + (ix as f64 + 0.5) * h, -lw + (iy as f64 + 0.5) * h, t)));
        }
    }
    Ok(out)
}

/// `M(F, C)`: the supremum of `(F^2 * [theta]_t (p, q))^(1/2)` over cell centres
/// in each square of `C` and four `t` samples per Whitney interval. The grid
/// is refined first so that each square holds at least 2 x 2 centres.
pub fn tree_size(f: &SampledField, collection: &[DyadicSquare]) -> Result<TreeSize> {
    ensure_2d(f)?;
    let f = &refined_for(f, collection)?;
    let mut out = TreeSize { value: 0.0, argmax: None, samples: 0, flags: Vec::new() };
    if collection.is_empty() {
        out.flags.push("empty collection".into());
        return Ok(out);
    }
    let (n, h, lw) = (f.n() as i64, f.spacing(), f.half_width());
    let mut by_scale: HashMap<i32, Vec<(i64, i64)>> = HashMap::new();
    for s in collection {
        by_scale.entry(s.k).or_default().extend(sample_cells(f, s));
    }
    if f.values().iter().all(|&v| v == 0.0) {
        out.samples = by_scale.values().map(|v| v.len() * TREE_SIZE_T_SAMPLES).sum();
        out.argmax = collection.first().map(|s| {
            let (x0, _, y0, _) = s.bounds();
            (x0, y0, s.side())
        });
        return Ok(out);
    }
    let mut scales: Vec<i32> = by_scale.keys().copied().collect();
    scales.sort_unstable();
    let mut best = -1.0;
    for k in scales {
        let mut cells = by_scale.remove(&k).unwrap_or_default();
        cells.sort_unstable();
        cells.dedup();
        for t in whitney_t_samples(k) {
            let in_range = |&(ix, iy): &(i64, i64)| ix > -n && ix < 2 * n - 1 && iy > -n && iy < 2 * n - 1;
            let ext = if cells.iter().any(in_range) { Some(theta_convolution_extended(f, t)?) } else { None };
            for &(ix, iy) in &cells {
                let (p, q) = (-lw + (ix as f64 + 0.5) * h, -lw + (iy as f64 + 0.5) * h);
                let v = match &ext {
                    Some((e, side)) if in_range(&(ix, iy)) => e[((iy + n - 1) as usize) * side + (ix + n - 1) as usize],
                    _ => theta_average_at(f, p, q, t)?,
                };
                out.samples += 1;
                if v > best {
                    best = v;
                    out.argmax = Some((p, q, t));
                }
            }
        }
    }
    out.value = best.max(0.0).sqrt();
    Ok(out)
}

/// `M(G, {S}) / (2^g M(G, {R'}))` where `S` lies `g` generations below `R` and
/// `R'` is the parent of `R`.
pub fn generation_ratio(f: &SampledField, s: &DyadicSquare, r: &DyadicSquare) -> Result<f64> {
    if !r.contains(s) {
        return Err(Error::NotInRoot { square: s.to_string(), root: r.to_string() });
    }
    let g = r.k - s.k;
    let small = tree_size(f, &[*s])?.value;
    let large = tree_size(f, &[r.parent()])?.value;
    if small == 0.0 {
        return Ok(0.0);
    }
    Ok(small / (2f64.powi(g) * large))
}

/// Running maxima over windows of length `w`; entry `a` covers
/// `v[a + 1 - w ..= a]` clipped to the array, for `a` in `0 .. len + w - 1`.
fn sliding_max(v: &[f64], w: usize) -> Vec<f64> {
    let len = v.len();
    let mut out = Vec::with_capacity(len + w - 1);
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for a in 0..len + w - 1 {
        if a < len {
            while deque.back().is_some_and(|&b| v[b] <= v[a]) {
                deque.pop_back();
            }
            deque.push_back(a);
        }
        while deque.front().is_some_and(|&b| b + w <= a) {
            deque.pop_front();
        }
        out.push(deque.front().map_or(0.0, |&b| v[b]));
    }
    out
}

fn sliding_max_2d(a: &[f64], side: usize, w: usize) -> (Vec<f64>, usize) {
    let out_side = side + w - 1;
    let mut rows = vec![0.0; side * out_side];
    for r in 0..side {
        let m = sliding_max(&a[r * side..(r + 1) * side], w);
        rows[r * out_side..(r + 1) * out_side].copy_from_slice(&m);
    }
    let mut out = vec![0.0; out_side * out_side];
    let mut col = vec![0.0; side];
    for c in 0..out_side {
        for r in 0..side {
            col[r] = rows[r * out_side + c];
        }
        for (r, v) in sliding_max(&col, w).into_iter().enumerate() {
            out[r * out_side + c] = v;
        }
    }
    (out, out_side)
}

/// Squares searched by the quadratic maximal function: windows of
/// `2^m` cells at every integer cell offset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximalFamily {
    pub spacing: f64,
    pub sides_in_cells: Vec<usize>,
}

/// `L^2` averages `|S|^-1 int_S F^2` over every window of the family, with
/// range-maximum tables for containing-square queries.
#[derive(Debug, Clone)]
pub struct SquareAverages {
    half_width: f64,
    n: usize,
    /// Summed-area table of `F^2`, side `n + 1`.
    sat: Vec<f64>,
    /// `containing[(m, d)]`: for windows of side `2^m` containing a square of
    /// `2^d` cells with lower corner `c`, the maximal average at index
    /// `c + 2^m - 1` per axis.
    containing: HashMap<(u32, u32), (Vec<f64>, usize)>,
    levels: u32,
}

impl SquareAverages {
    pub fn new(f: &SampledField) -> Result<Self> {
        ensure_2d(f)?;
        let n = f.n();
        if !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let mut sat = vec![0.0; (n + 1) * (n + 1)];
        for iy in 0..n {
            let mut row = 0.0;
            for ix in 0..n {
                let v = f.get(ix, iy);
                row += v * v;
                sat[(iy + 1) * (n + 1) + ix + 1] = sat[iy * (n + 1) + ix + 1] + row;
            }
        }
        let levels = n.trailing_zeros();
        let mut me = SquareAverages { half_width: f.half_width(), n, sat, containing: HashMap::new(), levels };
        for m in 0..=levels {
            let s = 1usize << m;
            let side = n + s - 1;
            let mut avg = vec![0.0; side * side];
            for a in 0..side {
                for b in 0..side {
                    let (i0, j0) = (b as i64 - s as i64 + 1, a as i64 - s as i64 + 1);
                    avg[a * side + b] = me.window_average(i0, j0, s);
                }
            }
            for d in 0..=m {
                let w = s - (1usize << d) + 1;
                me.containing.insert((m, d), sliding_max_2d(&avg, side, w));
            }
        }
        Ok(me)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// `int F^2` over the cells `[i0, i1) x [j0, j1)` clipped to the grid, in cell units.
    fn cell_sum(&self, i0: i64, i1: i64, j0: i64, j1: i64) -> f64 {
        let n = self.n as i64;
        let (i0, i1) = (i0.clamp(0, n) as usize, i1.clamp(0, n) as usize);
        let (j0, j1) = (j0.clamp(0, n) as usize, j1.clamp(0, n) as usize);
        if i0 >= i1 || j0 >= j1 {
            return 0.0;
        }
        let w = self.n + 1;
        let s = self.sat[j1 * w + i1] - self.sat[j0 * w + i1] - self.sat[j1 * w + i0] + self.sat[j0 * w + i0];
        s.max(0.0)
    }

    /// Average of `F^2` over the window of `s` cells with lower corner `(i0, j0)`.
    pub fn window_average(&self, i0: i64, j0: i64, s: usize) -> f64 {
        self.cell_sum(i0, i0 + s as i64, j0, j0 + s as i64) / (s * s) as f64
    }

    pub fn total(&self) -> f64 {
        self.cell_sum(0, self.n as i64, 0, self.n as i64)
    }

    fn containing_cells(&self, i0: i64, j0: i64, d: u32) -> f64 {
        let mut best: f64 = 0.0;
        for m in d..=self.levels {
            let (table, side) = &self.containing[&(m, d)];
            let off = (1i64 << m) - 1;
            let (a, b) = (j0 + off, i0 + off);
            if a >= 0 && b >= 0 && (a as usize) < *side && (b as usize) < *side {
                best = best.max(table[a as usize * side + b as usize]);
            }
        }
        best
    }

    /// `sup (|S'|^-1 int_S' F^2)^(1/2)` over family windows `S'` containing `S`.
    pub fn containing_sup(&self, s: &DyadicSquare) -> f64 {
        let (h, lw) = (self.spacing(), self.half_width);
        let (x0, x1, y0, _) = s.bounds();
        let cells = (x1 - x0) / h;
        if cells < 1.0 {
            let i0 = ((x0 + lw) / h).floor() as i64;
            let j0 = ((y0 + lw) / h).floor() as i64;
            return self.containing_windows(i0, j0, 1).sqrt();
        }
        let i0 = ((x0 + lw) / h).round() as i64;
        let j0 = ((y0 + lw) / h).round() as i64;
        let c = cells.round() as usize;
        self.containing_windows(i0, j0, c).sqrt()
    }

    /// Best average over windows of power-of-two side containing the `c`-cell
    /// square with lower corner `(i0, j0)`.
    fn containing_windows(&self, i0: i64, j0: i64, c: usize) -> f64 {
        let d = c.trailing_zeros();
        let mut best: f64 = 0.0;
        let mut side = c;
        if d <= self.levels {
            best = self.containing_cells(i0, j0, d);
            side = 1usize << (self.levels + 1);
        }
        // Beyond the tables: once a window can hold both the square and the grid,
        // that window is optimal among all larger ones.
        let (c64, n) = (c as i64, self.n as i64);
        let ext = |a: i64| ((a + c64).max(n) - a.min(0)) as usize;
        loop {
            if ext(i0) <= side && ext(j0) <= side {
                best = best.max(self.total() / (side * side) as f64);
                break;
            }
            let s64 = side as i64;
            for a in (i0 + c64 - s64)..=i0 {
                for b in (j0 + c64 - s64)..=j0 {
                    best = best.max(self.window_average(a, b, side));
                }
            }
            side *= 2;
        }
        best
    }

    /// `M(F)` at every cell.
    pub fn pointwise(&self) -> Result<SampledField> {
        let mut out = SampledField::zeros_2d(self.half_width, self.n)?;
        for iy in 0..self.n {
            for ix in 0..self.n {
                out.set(ix, iy, self.containing_cells(ix as i64, iy as i64, 0).sqrt());
            }
        }
        Ok(out)
    }

    pub fn family(&self) -> MaximalFamily {
        MaximalFamily { spacing: self.spacing(), sides_in_cells: (0..=self.levels).map(|m| 1usize << m).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalField {
    pub field: SampledField,
    pub family: MaximalFamily,
}

/// The quadratic maximal function `sup_S (|S|^-1 int_S F^2)^(1/2) 1_S` over the
/// power-of-two windows at all cell offsets.
pub fn quadratic_maximal(f: &SampledField) -> Result<MaximalField> {
    let averages = SquareAverages::new(f)?;
    Ok(MaximalField { field: averages.pointwise()?, family: averages.family() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSet {
    pub cells: Vec<(usize, usize)>,
    pub measure: f64,
}

/// Cells where `M > lambda`, with their total measure.
pub fn level_set(m: &MaximalField, lambda: f64) -> LevelSet {
    let f = &m.field;
    let n = f.n();
    let mut cells = Vec::new();
    for iy in 0..n {
        for ix in 0..n {
            if f.get(ix, iy) > lambda {
                cells.push((ix, iy));
            }
        }
    }
    let measure = cells.len() as f64 * f.weight();
    LevelSet { cells, measure }
}

/// `sup_lambda lambda^2 |{M(G) > lambda}| / ||G||_2^2`, attained as `lambda`
/// increases to one of the finitely many values of `M(G)`.
pub fn weak_type_constant(g: &SampledField) -> Result<f64> {
    let norm2: f64 = g.values().iter().map(|v| v * v).sum::<f64>() * g.weight();
    if norm2 == 0.0 {
        return Ok(0.0);
    }
    let m = quadratic_maximal(g)?;
    let mut vals: Vec<f64> = m.field.values().to_vec();
    vals.sort_by(|a, b| b.total_cmp(a));
    let mut best: f64 = 0.0;
    for (i, v) in vals.iter().enumerate() {
        best = best.max((i + 1) as f64 * m.field.weight() * v * v);
    }
    Ok(best / norm2)
}

/// The largest weak-type constant over all nonempty cell-set indicators on an
/// `n x n` grid, `n <= 4`.
pub fn calibrate_weak_type(n: usize) -> Result<f64> {
    if n > 4 || n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("exhaustive calibration needs n in {{1, 2, 4}}, got {n}")));
    }
    let cells = n * n;
    let mut best: f64 = 0.0;
    for mask in 1u32..(1u32 << cells) {
        let values: Vec<f64> = (0..cells).map(|i| f64::from((mask >> i) & 1)).collect();
        let g = SampledField::new_2d(n as f64 / 2.0, n, values)?;
        best = best.max(weak_type_constant(&g)?);
    }
    Ok(best)
}

/// Monotone simple-function approximation of `theta 1_{B_1^c} + 1/2 1_{B_1}`
/// by balls: `sum_i a_i 1_{B_{r_i}}` with levels `j 2^-(m+1)` and radii
/// `r(lambda) = (1/lambda - 1)^(1/4) >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerCake {
    pub weights: Vec<f64>,
    pub radii: Vec<f64>,
}

impl LayerCake {
    pub fn new(m: u32) -> Self {
        let step = 0.5 / 2f64.powi(m as i32);
        let count = (1usize << m) - 1;
        let radii = (1..=count).map(|j| (1.0 / (j as f64 * step) - 1.0).powf(0.25)).collect();
        LayerCake { weights: vec![step; count], radii }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.weights.iter().zip(&self.radii).filter(|(_, &ri)| r < ri).map(|(a, _)| a).sum()
    }

    /// The function being approximated.
    pub fn target(r: f64) -> f64 {
        if r < 1.0 {
            0.5
        } else {
            theta(r, 0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaBallCheck {
    pub t: f64,
    pub k: i32,
    /// `G^2 * [theta 1_{B_1}]_t (p, q)`.
    pub on_ball: f64,
    /// `G^2 * [theta 1_{B_1^c}]_t (p, q)`.
    pub off_ball: f64,
    pub scale: f64,
    /// Largest family average `sup_S (|S|^-1 int_S G^2)^(1/2)`.
    pub max_average: f64,
    /// Constants implied by covering balls with family windows.
    pub on_bound: f64,
    pub off_bound: f64,
    pub precondition: bool,
    pub pass: bool,
}

fn covering_side(diameter: f64, h: f64) -> f64 {
    let cells = (diameter / h).ceil() + 1.0;
    2f64.powf(cells.log2().ceil()) * h
}

/// Both halves of `G^2 * [theta]_t` at `(p, q)` against `2^(2k)`, given that
/// every family average of `G` is at most `2^k`.
pub fn theta_ball_domination_check(g: &SampledField, t: f64, k: i32, p: f64, q: f64) -> Result<ThetaBallCheck> {
    ensure_2d(g)?;
    let lo = 2f64.powi(k - 1);
    if !(t >= lo && t <= 2.0 * lo) {
        return Err(Error::InvalidParameter(format!("t = {t} outside [2^{}, 2^{k}]", k - 1)));
    }
    let h = g.spacing();
    let inside = |u: f64, v: f64| if u * u + v * v < 1.0 { theta(u, v) } else { 0.0 };
    let outside = |u: f64, v: f64| if u * u + v * v >= 1.0 { theta(u, v) } else { 0.0 };
    let on_ball = weighted_average_at(g, p, q, t, &inside, 1.0 / 16.0)?;
    let off_ball = weighted_average_at(g, p, q, t, &outside, 1.0 / 16.0)?;
    let max_average = quadratic_maximal(g)?.field.max_abs();
    let scale = 4f64.powi(k);
    // B_t lies in a family window of side c; its mass is at most c^2 2^(2k).
    let on_bound = (covering_side(2.0 * t, h) / t).powi(2);
    let mut off_bound = 0.0;
    for m in 0..48 {
        let r = 2f64.powi(m);
        off_bound += theta(r, 0.0) * (covering_side(4.0 * r * t, h) / t).powi(2);
    }
    let precondition = max_average <= 2f64.powi(k) * (1.0 + 1e-12);
    let pass = !precondition || (on_ball <= on_bound * scale && off_ball <= off_bound * scale);
    Ok(ThetaBallCheck { t, k, on_ball, off_ball, scale, max_average, on_bound, off_bound, precondition, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_field(seed: u64, l: f64, n: usize) -> SampledField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        SampledField::new_2d(l, n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn theta_weights_have_the_full_mass() {
        let n = 64;
        let w = theta_weights(n, 0.125, 0.25);
        let total: f64 = w.iter().sum();
        // Offsets up to 63 cells = 31.5 t; the tail beyond radius R is about pi / (2 R^2).
        assert!((total - THETA_MASS).abs() < 4e-3, "{total}");
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let f = random_field(3, 2.0, 16);
        let t = 0.3;
        let c = theta_convolution(&f, t).unwrap();
        for &(ix, iy) in &[(0, 0), (5, 9), (15, 3)] {
            let d = theta_average_at(&f, f.cell_center(ix), f.cell_center(iy), t).unwrap();
            assert!((c.get(ix, iy) - d).abs() < 1e-10 * d.max(1.0), "{} {}", c.get(ix, iy), d);
        }
    }

    #[test]
    fn tree_size_of_constant_is_mass_root() {
        let f = SampledField::from_cells(8.0, 128, |_, _| 1.0).unwrap();
        let s = DyadicSquare::new(-2, 0, 0);
        let m = tree_size(&f, &[s]).unwrap();
        assert!((m.value - THETA_MASS.sqrt()).abs() < 1e-2, "{}", m.value);
        let (p, q, t) = m.argmax.unwrap();
        let v = theta_average_at(&f, p, q, t).unwrap();
        assert!((v.sqrt() - m.value).abs() < 1e-9);
        let zero = SampledField::zeros_2d(8.0, 16).unwrap();
        assert_eq!(tree_size(&zero, &[s]).unwrap().value, 0.0);
        assert!(tree_size(&f, &[]).unwrap().flags.contains(&"empty collection".to_string()));
    }

    #[test]
    fn tree_size_is_monotone_in_the_collection() {
        let f = random_field(5, 4.0, 32);
        let a = [DyadicSquare::new(0, 0, 0)];
        let b = [DyadicSquare::new(0, 0, 0), DyadicSquare::new(-1, 1, 1), DyadicSquare::new(1, -1, 0)];
        assert!(tree_size(&f, &a).unwrap().value <= tree_size(&f, &b).unwrap().value);
    }

    #[test]
    fn maximal_function_dominates_every_window() {
        let f = random_field(7, 2.0, 8);
        let m = quadratic_maximal(&f).unwrap();
        let avg = SquareAverages::new(&f).unwrap();
        for s in [1usize, 2, 4, 8] {
            for i0 in -(s as i64 - 1)..8 {
                for j0 in -(s as i64 - 1)..8 {
                    let a = avg.window_average(i0, j0, s).sqrt();
                    for ix in i0.max(0)..(i0 + s as i64).min(8) {
                        for iy in j0.max(0)..(j0 + s as i64).min(8) {
                            assert!(m.field.get(ix as usize, iy as usize) >= a);
                        }
                    }
                }
            }
        }
        let m2 = quadratic_maximal(&f.scaled(-3.0)).unwrap();
        for (a, b) in m.field.values().iter().zip(m2.field.values()) {
            assert!((3.0 * a - b).abs() < 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn indicator_of_a_cell_has_unit_maximal_value() {
        let mut f = SampledField::zeros_2d(2.0, 8).unwrap();
        f.set(3, 4, 1.0);
        let m = quadratic_maximal(&f).unwrap();
        assert_eq!(m.field.get(3, 4), 1.0);
        assert!(level_set(&m, 2.0).cells.is_empty());
        let all = level_set(&m, 0.0);
        assert_eq!(all.cells.len(), 64);
        let mut last = f64::INFINITY;
        for l in [0.0, 0.1, 0.2, 0.4, 0.8] {
            let ms = level_set(&m, l).measure;
            assert!(ms <= last);
            last = ms;
        }
    }

    #[test]
    fn containing_sup_matches_brute_force() {
        let f = random_field(11, 2.0, 16);
        let avg = SquareAverages::new(&f).unwrap();
        let h = avg.spacing();
        for s in [DyadicSquare::new(-2, 1, -3), DyadicSquare::new(-1, 0, 1), DyadicSquare::new(0, -2, -1), DyadicSquare::new(-4, 5, 2), DyadicSquare::new(2, -1, -1)] {
            let (x0, x1, y0, _) = s.bounds();
            let (i0, j0) = (((x0 + 2.0) / h).floor() as i64, ((y0 + 2.0) / h).floor() as i64);
            let c = (((x1 - x0) / h).round() as i64).max(1);
            let mut best: f64 = 0.0;
            let mut side = c;
            while side <= 256 {
                for a in (i0 + c - side)..=i0 {
                    for b in (j0 + c - side)..=j0 {
                        best = best.max(avg.window_average(a, b, side as usize));
                    }
                }
                side *= 2;
            }
            let got = avg.containing_sup(&s);
            assert!((got - best.sqrt()).abs() < 1e-12, "{s}: {got} vs {}", best.sqrt());
        }
    }

    #[test]
    fn layer_cake_increases_to_the_target() {
        let rs: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let mut prev = vec![0.0; rs.len()];
        for m in 1..8 {
            let lc = LayerCake::new(m);
            assert!(lc.radii.iter().all(|&r| r >= 1.0));
            for (i, &r) in rs.iter().enumerate() {
                let v = lc.eval(r);
                assert!(v >= prev[i] - 1e-15 && v <= LayerCake::target(r));
                assert!(LayerCake::target(r) - v <= 0.5 / 2f64.powi(m as i32) + 1e-15);
                prev[i] = v;
            }
        }
    }

    #[test]
    fn ball_check_on_a_large_plateau() {
        let k = 1;
        let g = SampledField::from_cells(16.0, 128, |_, _| 2.0).unwrap();
        let c = theta_ball_domination_check(&g, 1.5, k, 0.125, 0.125).unwrap();
        let ratio = (c.on_ball + c.off_ball) / c.scale;
        assert!((ratio / THETA_MASS - 1.0).abs() < 0.05, "{ratio}");
        assert!(c.precondition && c.pass);
        let zero = SampledField::zeros_2d(8.0, 16).unwrap();
        let z = theta_ball_domination_check(&zero, 1.5, k, 0.0, 0.0).unwrap();
        assert_eq!(z.on_ball + z.off_ball, 0.0);
        assert!(z.pass);
    }

    #[test]
    fn weak_type_calibration_is_finite() {
        let c = calibrate_weak_type(2).unwrap();
        assert!(c >= 1.0 && c < 16.0, "{c}");
    }
}
