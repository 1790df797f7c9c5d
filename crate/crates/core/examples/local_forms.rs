//! Local forms over tree Whitney regions: signed, sublinear, error and boundary sums.
//!
//! ```bash
//! cargo run --release --example local_forms
//! ```

use entangled::dyadic::random_convex_tree;
use entangled::field::SampledField;
use entangled::forms::{boundary_sum, error_sum, local_form, sublinear_local_form, EngineSettings, Quadruple};
use entangled::profile::Profile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let field = SampledField::from_cells(2.0, 32, |x, y| (5.0 * x).sin().signum() * (3.0 * y).cos().signum())?;
    let quad = Quadruple::uniform(field)?;
    let tree = random_convex_tree(9, 3, 0.6);
    let squares: Vec<_> = tree.members().iter().copied().collect();
    let settings = EngineSettings::default();

    let (phi, psi) = (Profile::phi(), Profile::psi());
    let signed = local_form(&quad, &squares, [&phi, &psi, &phi, &psi], &settings);
    println!("signed local form {:.6e} ({} t samples)", signed.value, signed.t_samples);
    for u in [0.0, 1.0, 4.0] {
        let e = sublinear_local_form(&quad, &squares, &phi, &psi, u, 0.0, &settings);
        println!("sublinear form at u = {u}: {:.6e}", e.absolute);
    }

    let err = error_sum(&quad, &tree, &settings)?;
    let bnd = boundary_sum(&quad, &tree, &settings)?;
    println!("error sum ratio {:.4e}, boundary sum ratio {:.4e} (tail {:.1e})", err.ratio, bnd.ratio, bnd.tail_bound);
    Ok(())
}
