//! The profiles phi and psi, their Fourier transforms and the kernel Phi.
//!
//! ```bash
//! cargo run --release --example kernels
//! ```

use entangled::pairs::{phi_superposition, PHI_ASYMPTOTIC_CONSTANT};
use entangled::profile::{phi_hat, psi_hat, Profile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for xi in [0.0, 0.5, 1.0, 1.5, 2.0, -2.0] {
        println!("xi = {xi:5.2}  phi^ = {:.6e}  psi^ = {:.6e}", phi_hat(xi), psi_hat(xi));
    }

    println!("Phi(0) = {:.12}", phi_superposition(0.0)?);
    for x in [10.0f64, 25.0, 50.0] {
        let scaled = x.powi(20) * phi_superposition(x)?;
        println!("x = {x:4}  x^20 Phi(x) / 181440 = {:.5}", scaled / PHI_ASYMPTOTIC_CONSTANT);
    }

    let phi = Profile::phi();
    let packet = phi.packet(4.0, 25);
    println!("phi(0) = {:.6}, packet(4) = {:.6e}", phi.eval(0.0), packet.eval(4.0));
    println!("phi total integral {:.6}", phi.total_integral());
    println!("cell kernel on [0, 0.25) at p = 0, t = 0.5: {:.6}", phi.kernel_cell(0.0, 0.5, 0.0, 0.25));
    Ok(())
}
