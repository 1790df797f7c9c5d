//! The scale-derivative Fourier identity for Gaussian and square-function pairs.
//!
//! ```bash
//! cargo run --release --example admissible_pairs
//! ```

use entangled::pairs::{ft_residual, gaussian_pair, make_square_function_pair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for alpha in [1.0, 2.0, 5.0] {
        let r = ft_residual(&gaussian_pair(alpha)?)?;
        println!("gaussian alpha = {alpha}: max residual {:.2e} at t = {:.3}, tau = {:.3}", r.max_residual, r.t, r.tau);
    }
    let r = ft_residual(&make_square_function_pair())?;
    println!("square function: max residual {:.2e} over {} points", r.max_residual, r.points);
    Ok(())
}
