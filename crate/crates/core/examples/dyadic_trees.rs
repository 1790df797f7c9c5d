//! Dyadic squares, convex trees, their leaves and the boundary lattice ratio.
//!
//! ```bash
//! cargo run --release --example dyadic_trees
//! ```

use entangled::dyadic::{area_units, enumerate_convex_trees, random_convex_tree, ConvexTree, DyadicSquare};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let unit = DyadicSquare::unit();
    let [a, b, _, _] = unit.children();
    let tree = ConvexTree::new(unit, [unit, a, b, a.children()[3]])?;
    println!("tree with {} members, finest scale {}", tree.len(), tree.finest_scale());
    let leaves = tree.leaves();
    let units = area_units(leaves.iter().copied(), tree.finest_scale() - 1);
    let full = area_units([unit], tree.finest_scale() - 1);
    println!("{} leaves covering {units} of {full} area units", leaves.len());
    println!("boundary ratio {:.3}", tree.boundary_ratio());

    let text = tree.to_text();
    assert_eq!(ConvexTree::from_text(&text)?, tree);
    println!("text form:\n{text}");

    let worst = enumerate_convex_trees(unit, 2)
        .iter()
        .map(ConvexTree::boundary_ratio)
        .fold(0.0, f64::max);
    println!("largest boundary ratio over all trees of depth <= 3: {worst:.3}");

    let deep = random_convex_tree(7, 8, 0.6);
    println!("random deep tree: {} members, ratio {:.3}", deep.len(), deep.boundary_ratio());
    Ok(())
}
