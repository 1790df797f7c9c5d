//! The entangled quadrilinear form and its local, sublinear, truncated and
//! frequency-side evaluations.
//!
//! For fields `F1..F4` and profiles `f1..f4` the integrand is
//! `F * [f1 x f2 x f3 x f4]_t (p, q, p, q)`, that is
//! `int F1(x,y) F2(x',y) F3(x',y') F4(x,y') [f1]_t(p-x) [f2]_t(q-y) [f3]_t(p-x') [f4]_t(q-y')`.
//! Fields are cell-valued and kernels are integrated exactly over cells, so
//! the only discretization is the quadrature in `(p, q, t)`.

mod box_average;
mod engine;
mod local;
mod spectral;

use serde::Serialize;

use crate::dyadic::DyadicSquare;
use crate::error::{Error, Result};
use crate::field::{Dim, SampledField};

pub use box_average::{
    box_average, box_average_brute_force, box_cauchy_schwarz_check, BoxCauchySchwarz,
};
pub use engine::{Contribution, EngineSettings, FormEngine};
pub use local::{
    boundary_sum, error_sum, local_form, packet_profiles, sublinear_local_form, telescoping_check,
    tree_size_product, truncated_form, truncated_form_contributions, LemmaSum, TelescopingReport,
};
pub use spectral::frequency_side_form;

/// Four cell-valued 2D fields on a common grid.
#[derive(Debug, Clone)]
pub struct Quadruple {
    fields: [SampledField; 4],
}

/// Half-open cell index box `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellBox {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl Quadruple {
    pub fn new(fields: [SampledField; 4]) -> Result<Self> {
        for f in &fields {
            if f.dim() != Dim::Two {
                return Err(Error::GridMismatch("form arguments must be 2D fields".into()));
            }
            fields[0].ensure_same_grid(f)?;
        }
        Ok(Quadruple { fields })
    }

    pub fn uniform(field: SampledField) -> Result<Self> {
        Self::new([field.clone(), field.clone(), field.clone(), field])
    }

    pub fn fields(&self) -> &[SampledField; 4] {
        &self.fields
    }

    pub fn field(&self, j: usize) -> &SampledField {
        &self.fields[j]
    }

    pub fn grid(&self) -> &SampledField {
        &self.fields[0]
    }

    pub fn with_field(&self, j: usize, f: SampledField) -> Result<Self> {
        let mut fields = self.fields.clone();
        fields[j] = f;
        Self::new(fields)
    }

    /// Reorders the arguments as `(F[order[0]], .., F[order[3]])`.
    pub fn permuted(&self, order: [usize; 4]) -> Self {
        Quadruple { fields: order.map(|j| self.fields[j].clone()) }
    }

    /// Bounding box of the union of the supports, if any field is nonzero.
    pub fn active_box(&self) -> Option<CellBox> {
        let n = self.grid().n();
        let mut b: Option<CellBox> = None;
        for f in &self.fields {
            for iy in 0..n {
                for ix in 0..n {
                    if f.get(ix, iy) != 0.0 {
                        let c = b.get_or_insert(CellBox { x0: ix, x1: ix + 1, y0: iy, y1: iy + 1 });
                        c.x0 = c.x0.min(ix);
                        c.x1 = c.x1.max(ix + 1);
                        c.y0 = c.y0.min(iy);
                        c.y1 = c.y1.max(iy + 1);
                    }
                }
            }
        }
        b
    }
}

/// Coefficients `mu_t` on the `t`-quadrature grid of a truncated form,
/// indexed by octave and sample within the octave.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSequence {
    pub first_octave: i32,
    pub steps_per_octave: usize,
    pub values: Vec<f64>,
}

impl CoefficientSequence {
    pub fn constant(config: &TruncationConfig, value: f64) -> Result<Self> {
        Self::new(config, vec![value; config.t_samples()])
    }

    pub fn new(config: &TruncationConfig, values: Vec<f64>) -> Result<Self> {
        if values.len() != config.t_samples() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                config.t_samples(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(Error::InvalidParameter(format!("coefficient {v} outside [-1, 1]")));
        }
        Ok(CoefficientSequence { first_octave: config.first_octave(), steps_per_octave: config.steps_per_octave, values })
    }

    /// `mu` at sample `i` of the octave `[2^j, 2^(j+1)]`; zero outside the range.
    pub fn at(&self, j: i32, i: usize) -> f64 {
        let o = j - self.first_octave;
        if o < 0 {
            return 0.0;
        }
        self.values.get(o as usize * self.steps_per_octave + i).copied().unwrap_or(0.0)
    }
}

/// `t` in `[2^(-n + scale_offset), 2^(n + scale_offset)]` with a midpoint rule in
/// `ln t` of `steps_per_octave` samples per octave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TruncationConfig {
    pub n: i32,
    pub scale_offset: i32,
    pub steps_per_octave: usize,
}

impl TruncationConfig {
    pub fn new(n: i32, steps_per_octave: usize) -> Result<Self> {
        if n <= 0 || steps_per_octave == 0 {
            return Err(Error::InvalidParameter(format!(
                "truncation needs N > 0 and steps_per_octave > 0, got {n} and {steps_per_octave}"
            )));
        }
        Ok(TruncationConfig { n, scale_offset: 0, steps_per_octave })
    }

    pub fn with_offset(self, scale_offset: i32) -> Self {
        TruncationConfig { scale_offset, ..self }
    }

    pub fn first_octave(&self) -> i32 {
        -self.n + self.scale_offset
    }

    /// Octaves `[2^j, 2^(j+1)]` covered by the truncation.
    pub fn octaves(&self) -> std::ops::Range<i32> {
        self.first_octave()..self.n + self.scale_offset
    }

    pub fn t_samples(&self) -> usize {
        2 * self.n as usize * self.steps_per_octave
    }
}

/// A form value with its quadrature metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormEvaluation {
    /// `int mu I`.
    pub value: f64,
    /// `int |I|`, the sublinear majorant over the same quadrature.
    pub absolute: f64,
    /// Imaginary part left over by a frequency-side evaluation; zero otherwise.
    pub imaginary: f64,
    pub half_width: f64,
    pub n: usize,
    pub t_samples: usize,
    /// Kernel significance tolerance used to truncate `p, q` windows.
    pub truncation_tolerance: f64,
    /// Notes such as an empty collection or under-resolved octaves.
    pub flags: Vec<String>,
}

/// Squares of scale `k` meeting the half-open box `[x0, x1) x [y0, y1)`.
pub fn squares_covering(k: i32, x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<DyadicSquare> {
    let side = 2f64.powi(k);
    let (mx0, mx1) = ((x0 / side).floor() as i64, (x1 / side).ceil() as i64);
    let (my0, my1) = ((y0 / side).floor() as i64, (y1 / side).ceil() as i64);
    let mut out = Vec::new();
    for mx in mx0..mx1 {
        for my in my0..my1 {
            out.push(DyadicSquare::new(k, mx, my));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;
    use rand::{Rng, SeedableRng};

    fn random_quad(seed: u64, l: f64, n: usize, support: f64) -> Quadruple {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let fields = std::array::from_fn(|_| {
            let vals = (0..n * n)
                .map(|i| {
                    let (ix, iy) = (i % n, i / n);
                    let h = 2.0 * l / n as f64;
                    let (x, y) = (-l + (ix as f64 + 0.5) * h, -l + (iy as f64 + 0.5) * h);
                    if x.abs() < support && y.abs() < support { rng.gen_range(-1.0..1.0) } else { 0.0 }
                })
                .collect();
            SampledField::new_2d(l, n, vals).unwrap()
        });
        Quadruple::new(fields).unwrap()
    }

    #[test]
    fn box_average_of_constants_is_vartheta_mass() {
        let f = SampledField::from_cells(4.0, 64, |_, _| 1.0).unwrap();
        let q = Quadruple::uniform(f).unwrap();
        let a = box_average(&q, 0.0625, 0.0625, 0.125).unwrap();
        assert!((a - (2.0f64 / 3.0).powi(4)).abs() < 1e-3, "{a}");
    }

    #[test]
    fn box_average_matches_brute_force() {
        for seed in 0..5 {
            let q = random_quad(seed, 2.0, 8, 2.0);
            for &(p, qq, t) in &[(0.1, -0.3, 0.25), (1.3, 0.7, 1.0), (-1.9, 1.1, 0.06)] {
                let a = box_average(&q, p, qq, t).unwrap();
                let b = box_average_brute_force(&q, p, qq, t).unwrap();
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-3), "{a} {b}");
            }
        }
    }

    #[test]
    fn cauchy_schwarz_chain_holds() {
        let q = random_quad(9, 2.0, 16, 1.0);
        let s = DyadicSquare::new(-1, 0, 0);
        let sizes = local::tree_size_product(&q, &[s]).unwrap();
        for &(p, qq, t) in &[(0.125, 0.125, 0.3), (0.375, 0.125, 0.4)] {
            let c = box_cauchy_schwarz_check(&q, p, qq, t, sizes).unwrap();
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn local_form_is_additive_over_squares() {
        let q = random_quad(4, 2.0, 16, 1.0);
        let g = Profile::gaussian(1.0).unwrap();
        let p = [&g, &g, &g, &g];
        let settings = EngineSettings::default();
        let a = [DyadicSquare::new(-1, 0, 0), DyadicSquare::new(-1, -1, 0)];
        let b = [DyadicSquare::new(0, -1, -1)];
        let all: Vec<DyadicSquare> = a.iter().chain(&b).copied().collect();
        let x = local_form(&q, &a, p, &settings).value + local_form(&q, &b, p, &settings).value;
        let y = local_form(&q, &all, p, &settings).value;
        assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-12));
        assert!(local_form(&q, &[], p, &settings).flags.contains(&"empty collection".to_string()));
    }

    #[test]
    fn spatial_and_frequency_sides_agree() {
        let phi = Profile::phi();
        let psi = Profile::psi();
        let config = TruncationConfig::new(2, 4).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mu = CoefficientSequence::new(&config, (0..config.t_samples()).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect()).unwrap();
        let q = random_quad(2, 2.0, 16, 1.5);
        let settings = EngineSettings { absolute: false, ..EngineSettings::default() };
        for (u, v) in [(0.0, 0.0), (1.0, 0.0), (0.0, 4.0)] {
            let space = truncated_form(&q, &phi, &psi, u, v, &mu, &config, &settings).unwrap();
            let freq = frequency_side_form(&q, &phi, &psi, u, v, &mu, &config).unwrap();
            let rel = (space.value - freq.value).abs() / freq.value.abs();
            assert!(rel < 1e-3, "{} {} {rel}", space.value, freq.value);
            assert!(freq.imaginary.abs() <= 1e-10 * freq.absolute.max(1e-300), "{}", freq.imaginary);
        }
    }
}
