//! Telescoping in the scale variable, pointwise and for local forms on a tree.
//!
//! ```bash
//! cargo run --release --example telescoping
//! ```

use entangled::dyadic::random_convex_tree;
use entangled::field::SampledField;
use entangled::forms::{telescoping_check, EngineSettings, Quadruple};
use entangled::pairs::{ftc_telescoping, gaussian_pair, lin_grid, make_square_function_pair};
use entangled::profile::Profile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let xs = lin_grid(-4.0, 4.0, 101);
    for rho in [Profile::gaussian(1.0)?, Profile::phi()] {
        let c = ftc_telescoping(&rho, 0, &xs, 64)?;
        println!("{}: relative error {:.2e}", rho.name(), c.relative_error);
    }

    let field = SampledField::from_cells(2.0, 16, |x, y| (-(x * x + y * y)).exp())?;
    let quad = Quadruple::uniform(field)?;
    let tree = random_convex_tree(3, 2, 0.6);
    let report = telescoping_check(&quad, &tree, &gaussian_pair(1.0)?, &make_square_function_pair(), &EngineSettings::default())?;
    println!("tree of {} squares: lhs {:.4e}, scale {:.4e}, ratio {:.3e}", tree.len(), report.lhs, report.scale, report.ratio);
    Ok(())
}
