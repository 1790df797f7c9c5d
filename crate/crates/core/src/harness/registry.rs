//! The suite registry: names, claims checked, parameters with defaults and
//! the empirical constants each suite reports.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Dyadic,
    Kernels,
    Ftpair,
    Telescoping,
    Box,
    ErrorBoundary,
    Tree,
    Parseval,
    Restricted,
}

pub struct SuiteEntry {
    pub suite: Suite,
    pub name: &'static str,
    pub claims: &'static [&'static str],
    /// `(key, default)` with defaults written as TOML values.
    pub params: &'static [(&'static str, &'static str)],
    pub default_trials: usize,
    /// Empirical constants compared against the baseline.
    pub constants: &'static [&'static str],
    /// Wall-time limit for the whole suite, in seconds.
    pub time_limit: Option<f64>,
}

pub const SUITES: [SuiteEntry; 9] = [
    SuiteEntry {
        suite: Suite::Dyadic,
        name: "dyadic",
        claims: &[
            "leaves of a convex tree partition its root",
            "boundary ratio of every convex tree of depth <= 3 is at most the bound",
            "boundary ratio of random deep trees is within the calibrated constant",
            "tree text form round-trips",
        ],
        params: &[
            ("exhaustive_depth", "2"),
            ("depth", "8"),
            ("min_probability", "0.3"),
            ("max_probability", "0.8"),
            ("max_ratio", "144.0"),
        ],
        default_trials: 200,
        constants: &["C_bdry"],
        time_limit: Some(30.0),
    },
    SuiteEntry {
        suite: Suite::Kernels,
        name: "kernels",
        claims: &[
            "x^20 Phi(x) approaches 9!/2",
            "Phi(0) = 1/20",
            "phi^ vanishes at +-2",
            "cell-integrated kernels match adaptive quadrature",
            "profile integrals match closed forms",
        ],
        params: &[("asymptotic_x", "50.0"), ("asymptotic_tolerance", "0.01")],
        default_trials: 20,
        constants: &[],
        time_limit: None,
    },
    SuiteEntry {
        suite: Suite::Ftpair,
        name: "ftpair",
        claims: &[
            "Gaussian pairs satisfy the scale-derivative identity",
            "the square-function pair satisfies the identity to finite-difference accuracy",
            "phi^ vanishes at +-2",
        ],
        params: &[("alphas", "[1.0, 2.0, 5.0]")],
        default_trials: 0,
        constants: &[],
        time_limit: Some(1.0),
    },
    SuiteEntry {
        suite: Suite::Telescoping,
        name: "telescoping",
        claims: &[
            "the fundamental theorem of calculus in the scale variable",
            "the local telescoping estimate on convex trees",
        ],
        params: &[("steps", "64"), ("depth", "2"), ("probability", "0.6")],
        default_trials: 20,
        constants: &["C_tel"],
        time_limit: None,
    },
    SuiteEntry {
        suite: Suite::Box,
        name: "box",
        claims: &[
            "the box average is dominated by the product of tree sizes",
            "the separable box average matches brute force",
        ],
        params: &[("points", "20"), ("brute_n", "8"), ("depth", "3"), ("probability", "0.6")],
        default_trials: 50,
        constants: &[],
        time_limit: None,
    },
    SuiteEntry {
        suite: Suite::ErrorBoundary,
        name: "error-boundary",
        claims: &["the error sum is bounded by the tree sizes", "the boundary sum is bounded by the tree sizes"],
        params: &[("depth", "3"), ("probability", "0.6"), ("coarse", "8")],
        default_trials: 50,
        constants: &["C_err", "C_bnd"],
        time_limit: None,
    },
    SuiteEntry {
        suite: Suite::Tree,
        name: "tree",
        claims: &[
            "the single-tree estimate holds with a stable constant",
            "tree sizes of nested squares obey the generation bound",
            "theta is dominated on and off the unit ball",
            "the layer-cake approximation increases to its target",
        ],
        params: &[
            ("depth", "3"),
            ("probability", "0.6"),
            ("coarse", "8"),
            ("fine_n", "64"),
            ("max_change", "0.2"),
        ],
        default_trials: 100,
        constants: &["C_tree", "C_gen"],
        time_limit: None,
    },
    SuiteEntry {
        suite: Suite::Parseval,
        name: "parseval",
        claims: &["spatial and frequency-side evaluations of the truncated form agree"],
        params: &[("relative_tolerance", "1e-3"), ("support", "1.5")],
        default_trials: 10,
        constants: &[],
        time_limit: Some(60.0),
    },
    SuiteEntry {
        suite: Suite::Restricted,
        name: "restricted",
        claims: &[
            "the exceptional set is small and leaves most of the largest set",
            "selected trees are convex and cover the candidates",
            "exceptional squares pack and their sums decay",
            "the direct form is dominated by the tree-side majorant",
            "the restricted-type ratios are within the calibrated constants",
        ],
        params: &[
            ("alphas", "[[0.25, 0.25, 0.25, 0.25], [0.5, 0.5, 0.5, -0.5], [0.5, 0.1666666666666667, 0.1666666666666667, 0.1666666666666667]]"),
            ("shifts", "[0.0, 1.0, 4.0]"),
            ("min_fraction", "0.02"),
            ("max_fraction", "0.4"),
            ("threshold", "1024.0"),
            ("significance_tol", "1e-10"),
            ("policy", "\"alternate\""),
        ],
        default_trials: 50,
        constants: &["C_rt", "C_HL", "C_alpha_1", "C_alpha_2", "C_alpha_3"],
        time_limit: None,
    },
];

pub fn entry(suite: Suite) -> &'static SuiteEntry {
    SUITES.iter().find(|e| e.suite == suite).expect("every suite is registered")
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(entry(*self).name)
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        SUITES.iter().find(|e| e.name == s).map(|e| e.suite).ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

/// Suites with at least one empirical constant.
pub fn calibrated_suites() -> impl Iterator<Item = Suite> {
    SUITES.iter().filter(|e| !e.constants.is_empty()).map(|e| e.suite)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_and_defaults_parse() {
        for e in &SUITES {
            assert_eq!(e.name.parse::<Suite>().unwrap(), e.suite);
            assert!(!e.claims.is_empty());
            for (k, v) in e.params {
                assert!(format!("{k} = {v}").parse::<toml::Table>().is_ok(), "{}: {k}", e.name);
            }
        }
        assert!("nope".parse::<Suite>().is_err());
        let mut names: Vec<&str> = SUITES.iter().map(|e| e.name).collect();
        names.dedup();
        assert_eq!(names.len(), SUITES.len());
    }
}
