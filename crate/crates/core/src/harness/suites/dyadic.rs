//! Convex trees: leaf partitions, text form and the boundary ratio.

use rand::Rng;

use super::{random_tree, rng};
use crate::dyadic::{area_units, enumerate_convex_trees, ConvexTree, DyadicSquare};
use crate::error::Result;
use crate::harness::config::SuiteConfig;
use crate::harness::report::Trial;
use crate::harness::TrialSpec;

fn check_tree(trial: &mut Trial, tree: &ConvexTree, max_ratio: f64) {
    let root = tree.root();
    let leaves = tree.leaves();
    let finest = leaves.iter().map(|s| s.k).min().unwrap_or(root.k);
    let nested = leaves.iter().any(|l| (l.k + 1..=root.k).any(|k| l.ancestor(k).is_some_and(|a| leaves.contains(&a))));
    let area = area_units(leaves.iter().copied(), finest) == 1u128 << (2 * (root.k - finest) as u32);
    trial.check("leaves partition the root", area && !nested && leaves.iter().all(|l| root.contains(l)));
    trial.check("convex", tree.tree().is_convex());
    trial.check("text round trip", ConvexTree::from_text(&tree.to_text()).is_ok_and(|t| t == *tree));
    let ratio = tree.boundary_ratio();
    trial.constant("C_bdry", ratio);
    trial.check("boundary ratio within max_ratio", ratio <= max_ratio);
}

pub fn run(config: &SuiteConfig, spec: &TrialSpec) -> Result<Trial> {
    let max_ratio = config.f64_param("max_ratio")?;
    let mut trial = Trial::new(spec.id.clone(), spec.seed);
    if spec.id == "exhaustive" {
        let depth = config.usize_param("exhaustive_depth")? as u32;
        let trees = enumerate_convex_trees(DyadicSquare::unit(), depth);
        for tree in &trees {
            check_tree(&mut trial, tree, max_ratio);
        }
        trial.value("trees", trees.len() as f64);
        trial.value("max_ratio", trial.constants.get("C_bdry").copied().unwrap_or(0.0));
        trial.dump = format!("exhaustive depth {depth}\n");
        return Ok(trial);
    }
    let depth = config.usize_param("depth")? as u32;
    let (lo, hi) = (config.f64_param("min_probability")?, config.f64_param("max_probability")?);
    let mut r = rng(spec.seed);
    let p = r.gen_range(lo..=hi);
    let tree = random_tree(&mut r, depth, p);
    check_tree(&mut trial, &tree, max_ratio);
    trial.value("probability", p);
    trial.value("members", tree.len() as f64);
    trial.value("depth", (tree.root().k - tree.finest_scale()) as f64);
    trial.dump = tree.to_text();
    Ok(trial)
}
