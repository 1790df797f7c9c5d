//! Quadrature of the entangled integrand over Whitney boxes.
//!
//! At a node `(p, t)` the `x` and `x'` sums are done first:
//! `B1(y,y') = sum_x K1(p,x) F1(x,y) F4(x,y')` and
//! `B2(y,y') = sum_x' K3(p,x') F2(x',y) F3(x',y')`, after which every `q`
//! costs one bilinear form `sum K2(q,y) K4(q,y') B1 B2`.
//!
//! Signed integrals use a fixed composite rule in `p` and fold the `q` rule
//! into `Q(y,y') = sum_q w K2(q,y) K4(q,y')`, so a Whitney box costs one
//! inner product. The absolute integrand needs pointwise values and uses a
//! coarser rule, whose signed value is kept as a quadrature cross-check.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use super::{CellBox, Quadruple};
use crate::dyadic::DyadicSquare;
use crate::profile::Profile;
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EngineSettings {
    /// Midpoint samples per octave in `ln t`.
    pub steps_per_octave: usize,
    /// Relative kernel magnitude below which cells are dropped.
    pub significance_tol: f64,
    /// Gauss order per panel of the pointwise rule.
    pub pointwise_order: usize,
    /// Panels per square side in the signed rule.
    pub fine_panels: usize,
    /// Gauss order per panel in the signed rule.
    pub fine_order: usize,
    /// Whether to run the pointwise rule for `|I|`.
    pub absolute: bool,
}

impl Default for EngineSettings {
    fn default() -> Self {
        EngineSettings { steps_per_octave: 4, significance_tol: 1e-15, pointwise_order: 6, fine_panels: 8, fine_order: 8, absolute: true }
    }
}

/// Integral over one Whitney box `S x [l/2, l]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contribution {
    pub square: DyadicSquare,
    /// `int mu I dp dq dt/t`.
    pub signed: f64,
    /// `int |I| dp dq dt/t` on the pointwise rule.
    pub absolute: f64,
    /// `int mu I dp dq dt/t` on the pointwise rule.
    pub coarse_signed: f64,
}

pub struct FormEngine<'a> {
    profiles: [&'a Profile; 4],
    intervals: [(f64, f64); 4],
    settings: EngineSettings,
    active: Option<CellBox>,
    ny: usize,
    /// Active blocks stored by `x` column: `cols[j][x * ny + y]`.
    cols: [Vec<f64>; 4],
    x_edges: Vec<f64>,
    y_edges: Vec<f64>,
}

struct KernelRow {
    lo: usize,
    values: Vec<f64>,
}

impl<'a> FormEngine<'a> {
    pub fn new(quad: &Quadruple, profiles: [&'a Profile; 4], settings: EngineSettings) -> Self {
        let grid = quad.grid();
        let (h, lw) = (grid.spacing(), grid.half_width());
        let active = quad.active_box();
        let (ny, cols, x_edges, y_edges) = match active {
            Some(b) => {
                let (nx, ny) = (b.x1 - b.x0, b.y1 - b.y0);
                let cols = std::array::from_fn(|j| {
                    let f = quad.field(j);
                    let mut c = vec![0.0; nx * ny];
                    for x in 0..nx {
                        for y in 0..ny {
                            c[x * ny + y] = f.get(b.x0 + x, b.y0 + y);
                        }
                    }
                    c
                });
                let x_edges = (b.x0..=b.x1).map(|i| -lw + i as f64 * h).collect();
                let y_edges = (b.y0..=b.y1).map(|i| -lw + i as f64 * h).collect();
                (ny, cols, x_edges, y_edges)
            }
            None => (0, std::array::from_fn(|_| Vec::new()), Vec::new(), Vec::new()),
        };
        let intervals = profiles.map(|p| p.significant_interval(settings.significance_tol));
        FormEngine { profiles, intervals, settings, active, ny, cols, x_edges, y_edges }
    }

    pub fn settings(&self) -> &EngineSettings {
        &self.settings
    }

    pub fn is_zero(&self) -> bool {
        self.active.is_none() || self.cols.iter().any(|c| c.iter().all(|&v| v == 0.0))
    }

    fn row(&self, j: usize, center: f64, t: f64, edges: &[f64]) -> KernelRow {
        let (lo, values) = self.profiles[j].kernel_row_within(center, t, edges, self.intervals[j]);
        KernelRow { lo, values }
    }

    /// `B1 o B2` at `(p, t)`, or `None` when either factor vanishes.
    fn b_product(&self, p: f64, t: f64) -> Option<Vec<f64>> {
        let ny = self.ny;
        let k1 = self.row(0, p, t, &self.x_edges);
        let k3 = self.row(2, p, t, &self.x_edges);
        if k1.values.is_empty() || k3.values.is_empty() {
            return None;
        }
        let accumulate = |row: &KernelRow, a: &[f64], b: &[f64]| {
            let mut m = vec![0.0; ny * ny];
            for (i, &k) in row.values.iter().enumerate() {
                if k == 0.0 {
                    continue;
                }
                let x = row.lo + i;
                let u = &a[x * ny..(x + 1) * ny];
                let v = &b[x * ny..(x + 1) * ny];
                for y in 0..ny {
                    let c = k * u[y];
                    if c == 0.0 {
                        continue;
                    }
                    let dst = &mut m[y * ny..(y + 1) * ny];
                    for (d, &vv) in dst.iter_mut().zip(v) {
                        *d += c * vv;
                    }
                }
            }
            m
        };
        let b1 = accumulate(&k1, &self.cols[0], &self.cols[3]);
        let mut b2 = accumulate(&k3, &self.cols[1], &self.cols[2]);
        let mut any = false;
        for (x, y) in b2.iter_mut().zip(&b1) {
            *x *= y;
            any |= *x != 0.0;
        }
        any.then_some(b2)
    }

    fn bilinear(&self, c: &[f64], k2: &KernelRow, k4: &KernelRow) -> f64 {
        let ny = self.ny;
        let (lo4, hi4) = (k4.lo, k4.lo + k4.values.len());
        let mut total = 0.0;
        for (i, &a) in k2.values.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let y = k2.lo + i;
            let row = &c[y * ny + lo4..y * ny + hi4];
            let inner: f64 = row.iter().zip(&k4.values).map(|(r, k)| r * k).sum();
            total += a * inner;
        }
        total
    }

    /// The integrand `F * [f1 x f2 x f3 x f4]_t (p, q, p, q)`.
    pub fn integrand(&self, p: f64, q: f64, t: f64) -> f64 {
        if self.active.is_none() {
            return 0.0;
        }
        match self.b_product(p, t) {
            Some(c) => {
                let k2 = self.row(1, q, t, &self.y_edges);
                let k4 = self.row(3, q, t, &self.y_edges);
                self.bilinear(&c, &k2, &k4)
            }
            None => 0.0,
        }
    }

    /// Pointwise-rule nodes on `[a, a + len]` for scale `t`: the fewest
    /// power-of-two panels of width at most `t/2`, each with `pointwise_order`
    /// Gauss nodes. Independent of the grid spacing.
    pub fn nodes(&self, a: f64, len: f64, t: f64) -> Vec<(f64, f64)> {
        let mut panels = 1usize;
        while len / panels as f64 > 0.5 * t && panels < 1 << 20 {
            panels *= 2;
        }
        let w = len / panels as f64;
        let rule = quad::gauss(self.settings.pointwise_order.max(1));
        let mut out = Vec::with_capacity(panels * rule.nodes.len());
        for i in 0..panels {
            let lo = a + i as f64 * w;
            out.extend(rule.on(lo, lo + w));
        }
        out
    }

    /// Signed-rule nodes on `[a, a + len]`.
    pub fn fine_nodes(&self, a: f64, len: f64) -> Vec<(f64, f64)> {
        let panels = self.settings.fine_panels.max(1);
        let w = len / panels as f64;
        let rule = quad::gauss(self.settings.fine_order.max(1));
        (0..panels).flat_map(|i| rule.on(a + i as f64 * w, a + (i + 1) as f64 * w).collect::<Vec<_>>()).collect()
    }

    /// `Q(y,y') = sum_q w K2(q,y) K4(q,y')` over the signed-rule nodes in `[a, a + len]`.
    fn q_matrix(&self, a: f64, len: f64, t: f64) -> Option<Vec<f64>> {
        let ny = self.ny;
        let mut m = vec![0.0; ny * ny];
        let mut any = false;
        for (q, wq) in self.fine_nodes(a, len) {
            let k2 = self.row(1, q, t, &self.y_edges);
            let k4 = self.row(3, q, t, &self.y_edges);
            if k2.values.is_empty() || k4.values.is_empty() {
                continue;
            }
            any = true;
            for (i, &u) in k2.values.iter().enumerate() {
                let c = wq * u;
                let y = k2.lo + i;
                let dst = &mut m[y * ny + k4.lo..y * ny + k4.lo + k4.values.len()];
                for (d, &v) in dst.iter_mut().zip(&k4.values) {
                    *d += c * v;
                }
            }
        }
        any.then_some(m)
    }

    /// `t` samples and weights (for `dt/t`) in the octave below `2^k`.
    pub fn t_samples(&self, k: i32) -> Vec<(f64, f64)> {
        let s = self.settings.steps_per_octave;
        let base = 2f64.powi(k - 1);
        (0..s).map(|i| (base * 2f64.powf((i as f64 + 0.5) / s as f64), LN_2 / s as f64)).collect()
    }

    /// Contributions of the Whitney boxes over `squares`, in input order.
    /// `mu(j, i)` weights sample `i` of the octave `[2^j, 2^(j+1)]`.
    pub fn contributions(&self, squares: &[DyadicSquare], mu: &(dyn Fn(i32, usize) -> f64 + Sync)) -> Vec<Contribution> {
        let mut out: Vec<Contribution> = squares
            .iter()
            .map(|&square| Contribution { square, signed: 0.0, absolute: 0.0, coarse_signed: 0.0 })
            .collect();
        if self.is_zero() {
            return out;
        }
        let mut groups: BTreeMap<(i32, i64), Vec<usize>> = BTreeMap::new();
        for (idx, s) in squares.iter().enumerate() {
            groups.entry((s.k, s.mx)).or_default().push(idx);
        }
        let groups: Vec<((i32, i64), Vec<usize>)> = groups.into_iter().collect();
        let partials: Vec<Vec<Contribution>> =
            groups.par_iter().map(|((k, mx), members)| self.group(squares, *k, *mx, members, mu)).collect();
        for ((_, members), part) in groups.iter().zip(partials) {
            for (&slot, c) in members.iter().zip(part) {
                out[slot] = c;
            }
        }
        out
    }

    fn group(
        &self,
        squares: &[DyadicSquare],
        k: i32,
        mx: i64,
        members: &[usize],
        mu: &(dyn Fn(i32, usize) -> f64 + Sync),
    ) -> Vec<Contribution> {
        let mut out: Vec<Contribution> = members
            .iter()
            .map(|&idx| Contribution { square: squares[idx], signed: 0.0, absolute: 0.0, coarse_signed: 0.0 })
            .collect();
        let side = 2f64.powi(k);
        let x0 = mx as f64 * side;
        let y0 = |idx: usize| squares[idx].my as f64 * side;
        for (i, (t, wt)) in self.t_samples(k).into_iter().enumerate() {
            let m = mu(k - 1, i);
            if m != 0.0 {
                let q_mats: Vec<Option<Vec<f64>>> = members.iter().map(|&idx| self.q_matrix(y0(idx), side, t)).collect();
                if q_mats.iter().any(Option::is_some) {
                    let mut cbar = vec![0.0; self.ny * self.ny];
                    for (p, wp) in self.fine_nodes(x0, side) {
                        if let Some(c) = self.b_product(p, t) {
                            cbar.iter_mut().zip(&c).for_each(|(d, v)| *d += wp * v);
                        }
                    }
                    for (j, qm) in q_mats.iter().enumerate() {
                        if let Some(qm) = qm {
                            let v: f64 = cbar.iter().zip(qm).map(|(a, b)| a * b).sum();
                            out[j].signed += wt * m * v;
                        }
                    }
                }
            }
            if !self.settings.absolute {
                continue;
            }
            // q rows depend only on the square and t.
            let q_rows: Vec<Vec<(f64, KernelRow, KernelRow)>> = members
                .iter()
                .map(|&idx| {
                    self.nodes(y0(idx), side, t)
                        .into_iter()
                        .map(|(q, wq)| (wq, self.row(1, q, t, &self.y_edges), self.row(3, q, t, &self.y_edges)))
                        .filter(|(_, a, b)| !a.values.is_empty() && !b.values.is_empty())
                        .collect()
                })
                .collect();
            if q_rows.iter().all(|r| r.is_empty()) {
                continue;
            }
            for (p, wp) in self.nodes(x0, side, t) {
                let Some(c) = self.b_product(p, t) else { continue };
                for (j, rows) in q_rows.iter().enumerate() {
                    let (mut signed, mut absolute) = (0.0, 0.0);
                    for (wq, k2, k4) in rows {
                        let a = self.bilinear(&c, k2, k4);
                        signed += wq * a;
                        absolute += wq * a.abs();
                    }
                    out[j].coarse_signed += wt * m * wp * signed;
                    out[j].absolute += wt * wp * absolute;
                }
            }
        }
        out
    }
}
