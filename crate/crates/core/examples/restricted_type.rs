//! The stopping-time pipeline on a random restricted-type instance.
//!
//! ```bash
//! cargo run --release --example restricted_type
//! ```

use entangled::decomposition::{random_instance, restricted_type_verify, InstanceSpec, RestrictedOptions, SignPolicy};
use entangled::profile::Profile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = InstanceSpec {
        half_width: 2.0,
        n: 8,
        alpha: [0.25; 4],
        truncation: 1,
        min_fraction: 0.02,
        max_fraction: 0.4,
    };
    let inst = random_instance(&spec, 42)?;
    println!("set measures {:?}", [0, 1, 2, 3].map(|j| inst.measure(j)));

    let options = RestrictedOptions { policy: SignPolicy::RandomSigns, ..RestrictedOptions::default() };
    let mu = vec![1.0; 2 * inst.truncation as usize * options.steps_per_octave];
    let report = restricted_type_verify(&inst, &Profile::phi(), &Profile::psi(), 1.0, 0.0, &mu, &options)?;
    let h = &report.exceptional_set;
    println!("|H| = {:.4}, |E1| = {:.4}, |E1'| = {:.4}", h.measure, h.e1_measure, h.e1_prime_measure);
    println!("{} trees, convex {}, packing {}", report.trees.len(), report.convex, report.packing);
    println!("direct {:.4e} <= majorant {:.4e}: {}", report.direct, report.majorant, report.direct_within_majorant);
    println!("alpha ratio {:.4e}, pass {}", report.alpha_ratio, report.pass);
    Ok(())
}
