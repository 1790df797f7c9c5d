//! The box average `A^(p,q,t)` with `vartheta` kernels and its Cauchy-Schwarz chain.

use serde::Serialize;

use super::engine::{EngineSettings, FormEngine};
use super::Quadruple;
use crate::error::{Error, Result};
use crate::maximal::theta_average_at;
use crate::profile::Profile;

const CHAIN_SLACK: f64 = 1e-9;

fn check_resolved(quad: &Quadruple, t: f64) -> Result<()> {
    let h = quad.grid().spacing();
    if !(t >= h / 16.0) {
        return Err(Error::UnderResolved { t, h });
    }
    Ok(())
}

/// `F * [v x v x v x v]_t (p, q, p, q)` with `v = (1 + |x|)^-4`, evaluated in
/// the factored order: `x` and `x'` sums first, then one bilinear form in `y, y'`.
pub fn box_average(quad: &Quadruple, p: f64, q: f64, t: f64) -> Result<f64> {
    check_resolved(quad, t)?;
    let v = Profile::Vartheta;
    let settings = EngineSettings { significance_tol: 0.0, ..EngineSettings::default() };
    Ok(FormEngine::new(quad, [&v, &v, &v, &v], settings).integrand(p, q, t))
}

/// The same quantity as a direct quadruple sum over cells; `n <= 16`.
pub fn box_average_brute_force(quad: &Quadruple, p: f64, q: f64, t: f64) -> Result<f64> {
    check_resolved(quad, t)?;
    let grid = quad.grid();
    let (n, h, lw) = (grid.n(), grid.spacing(), grid.half_width());
    if n > 16 {
        return Err(Error::GridTooLarge { n, limit: 16 });
    }
    let v = Profile::Vartheta;
    let kp: Vec<f64> = (0..n).map(|i| v.kernel_cell(p, t, -lw + i as f64 * h, -lw + (i + 1) as f64 * h)).collect();
    let kq: Vec<f64> = (0..n).map(|i| v.kernel_cell(q, t, -lw + i as f64 * h, -lw + (i + 1) as f64 * h)).collect();
    let [f1, f2, f3, f4] = quad.fields();
    let mut total = 0.0;
    for x in 0..n {
        for y in 0..n {
            for xp in 0..n {
                for yp in 0..n {
                    total += f1.get(x, y) * f2.get(xp, y) * f3.get(xp, yp) * f4.get(x, yp) * kp[x] * kq[y] * kp[xp] * kq[yp];
                }
            }
        }
    }
    Ok(total)
}

/// Every link of `A <= A(1,2,2,1)^(1/2) A(4,3,3,4)^(1/2) <= prod_j A(j,j,j,j)^(1/4)
/// <= prod_j g_j^(1/2) <= prod_j theta_j^(1/2) <= prod_j M_j` at one point, with
/// `g_j = F_j^2 * [v x v]_t` and `theta_j = F_j^2 * [theta]_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCauchySchwarz {
    pub a: f64,
    pub s1: f64,
    pub s2: f64,
    pub diagonal: [f64; 4],
    pub g: [f64; 4],
    pub theta: [f64; 4],
    /// `prod_j M(F_j, C)`.
    pub bound: f64,
    /// Largest violation of any link, relative to its right-hand side.
    pub worst_excess: f64,
    pub pass: bool,
}

fn excess(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs) / rhs.abs().max(f64::MIN_POSITIVE)
}

/// Checks the chain at `(p, q, t)` against the supplied tree sizes `M(F_j, C)`.
pub fn box_cauchy_schwarz_check(quad: &Quadruple, p: f64, q: f64, t: f64, tree_sizes: [f64; 4]) -> Result<BoxCauchySchwarz> {
    let a = box_average(quad, p, q, t)?;
    let s1 = box_average(&quad.permuted([0, 1, 1, 0]), p, q, t)?;
    let s2 = box_average(&quad.permuted([3, 2, 2, 3]), p, q, t)?;
    let mut diagonal = [0.0; 4];
    let mut g = [0.0; 4];
    let mut theta = [0.0; 4];
    let v = Profile::Vartheta;
    let grid = quad.grid();
    let (n, h, lw) = (grid.n(), grid.spacing(), grid.half_width());
    let kp: Vec<f64> = (0..n).map(|i| v.kernel_cell(p, t, -lw + i as f64 * h, -lw + (i + 1) as f64 * h)).collect();
    let kq: Vec<f64> = (0..n).map(|i| v.kernel_cell(q, t, -lw + i as f64 * h, -lw + (i + 1) as f64 * h)).collect();
    for j in 0..4 {
        let f = quad.field(j);
        diagonal[j] = box_average(&quad.permuted([j; 4]), p, q, t)?;
        let mut s = 0.0;
        for y in 0..n {
            for x in 0..n {
                let val = f.get(x, y);
                s += val * val * kp[x] * kq[y];
            }
        }
        g[j] = s;
        theta[j] = theta_average_at(f, p, q, t)?;
    }
    let bound: f64 = tree_sizes.iter().product();
    let prod_root = |xs: &[f64; 4], e: f64| xs.iter().map(|x| x.max(0.0).powf(e)).product::<f64>();
    let links = [
        (a, (s1.max(0.0) * s2.max(0.0)).sqrt()),
        ((s1.max(0.0) * s2.max(0.0)).sqrt(), prod_root(&diagonal, 0.25)),
        (prod_root(&diagonal, 0.25), prod_root(&g, 0.5)),
        (prod_root(&g, 0.5), prod_root(&theta, 0.5)),
        (prod_root(&theta, 0.5), bound),
    ];
    let worst_excess = links.iter().map(|&(l, r)| excess(l, r)).fold(f64::NEG_INFINITY, f64::max);
    let pass = links.iter().all(|&(l, r)| l <= r + CHAIN_SLACK * r.abs().max(1e-300) + 1e-300);
    Ok(BoxCauchySchwarz { a, s1, s2, diagonal, g, theta, bound, worst_excess, pass })
}
