//! The truncated form evaluated in space and on the frequency side.
//!
//! ```bash
//! cargo run --release --example parseval
//! ```

use entangled::field::SampledField;
use entangled::forms::{frequency_side_form, truncated_form, CoefficientSequence, EngineSettings, Quadruple, TruncationConfig};
use entangled::profile::Profile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fields = [3.0, 5.0, 7.0, 11.0].map(|c| {
        SampledField::from_cells(2.0, 16, move |x, y| {
            if x.abs().max(y.abs()) < 1.5 { (c * x + 2.0 * y).sin().signum() } else { 0.0 }
        })
        .expect("grid")
    });
    let quad = Quadruple::new(fields)?;
    let config = TruncationConfig::new(2, 4)?;
    let mu = CoefficientSequence::constant(&config, 1.0)?;
    let (phi, psi) = (Profile::phi(), Profile::psi());
    let settings = EngineSettings { absolute: false, ..EngineSettings::default() };

    let spatial = truncated_form(&quad, &phi, &psi, 1.0, 0.0, &mu, &config, &settings)?;
    let spectral = frequency_side_form(&quad, &phi, &psi, 1.0, 0.0, &mu, &config)?;
    let rel = (spatial.value - spectral.value).abs() / spectral.value.abs();
    println!("spatial {:.8e}, frequency side {:.8e}, relative gap {rel:.2e}", spatial.value, spectral.value);
    println!("imaginary part left on the frequency side {:.1e}", spectral.imaginary);
    Ok(())
}
