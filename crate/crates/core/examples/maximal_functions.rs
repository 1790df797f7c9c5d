//! Tree sizes, the quadratic maximal function, level sets and weak-type ratios.
//!
//! ```bash
//! cargo run --release --example maximal_functions
//! ```

use entangled::dyadic::{random_convex_tree, DyadicSquare};
use entangled::field::SampledField;
use entangled::maximal::{generation_ratio, level_set, quadratic_maximal, tree_size, weak_type_constant, LayerCake};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = SampledField::from_cells(2.0, 32, |x, y| if x * x + y * y < 0.5 { 1.0 } else { 0.0 })?;

    let tree = random_convex_tree(5, 3, 0.6);
    let squares: Vec<DyadicSquare> = tree.members().iter().copied().collect();
    let m = tree_size(&f, &squares)?;
    println!("tree size {:.4} from {} samples, attained at {:?}", m.value, m.samples, m.argmax);

    let r = DyadicSquare::unit();
    let s = r.children()[0].children()[3];
    println!("generation ratio M(S) / M(R) = {:.4}", generation_ratio(&f, &s, &r)?);

    let maximal = quadratic_maximal(&f)?;
    for lambda in [0.25, 0.5, 0.9] {
        println!("|{{M > {lambda}}}| = {:.4}", level_set(&maximal, lambda).measure);
    }
    println!("weak-type constant {:.4}", weak_type_constant(&f)?);

    for m in [1, 3, 9] {
        println!("layer cake m = {m}: {:.5} (target {:.5})", LayerCake::new(m).eval(0.7), LayerCake::target(0.7));
    }
    Ok(())
}
