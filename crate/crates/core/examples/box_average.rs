//! The separable box average and its Cauchy-Schwarz chain down to tree sizes.
//!
//! ```bash
//! cargo run --release --example box_average
//! ```

use entangled::dyadic::random_convex_tree;
use entangled::field::SampledField;
use entangled::forms::{box_average, box_average_brute_force, box_cauchy_schwarz_check, tree_size_product, Quadruple};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fields = [0.0, 1.0, 2.0, 3.0].map(|s| {
        SampledField::from_cells(1.0, 8, move |x, y| (3.0 * x + s).sin() * (2.0 * y - s).cos()).expect("grid")
    });
    let quad = Quadruple::new(fields)?;
    let (p, q, t) = (0.1, -0.2, 0.5);
    let fast = box_average(&quad, p, q, t)?;
    let brute = box_average_brute_force(&quad, p, q, t)?;
    println!("box average {fast:.12e}, brute force {brute:.12e}");

    let tree = random_convex_tree(11, 3, 0.6);
    let squares: Vec<_> = tree.members().iter().copied().collect();
    let sizes = tree_size_product(&quad, &squares)?;
    let chain = box_cauchy_schwarz_check(&quad, 0.5, 0.5, 0.25, sizes)?;
    println!("A = {:.4e} <= prod M = {:.4e}: {}", chain.a, chain.bound, chain.pass);
    Ok(())
}
