//! Running a verification suite from a configuration and replaying a trial.
//!
//! ```bash
//! cargo run --release --example harness
//! ```

use std::path::Path;

use entangled::harness::{self, ConfigFile, ReplayFile, RunOptions, Suite};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ConfigFile::parse("[run]\nseed = 3\n\n[suite.box]\ntrials = 4\n", Path::new("."))?;
    let suite = config.suite_config(Suite::Box)?;
    let report = harness::run_suite(&suite, &RunOptions::default())?;
    println!("{}: {} trials, pass {}", report.suite, report.trials.len(), report.summary.pass);

    let spec = &harness::plan(&suite)?[1];
    let trial = harness::run_trial(&suite, spec, None)?;
    let file = ReplayFile::from_trial(&suite, &trial);
    let replayed = harness::replay(&file, None, &RunOptions::default())?;
    println!("replay of {} reproduces its digest: {}", spec.id, replayed.summary.pass);
    Ok(())
}
