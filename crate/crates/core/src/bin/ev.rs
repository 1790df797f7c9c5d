//! `ev`: run verification suites and calibrate baselines.
//!
//! Exit codes: 0 when every check passes, 1 on an assertion failure, 2 on a
//! usage or configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use entangled::error::Error;
use entangled::harness::{self, ConfigFile, ReplayFile, Report, RunOptions, Suite, SUITES};

#[derive(Parser)]
#[command(name = "ev", about = "Verification suites for entangled singular forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one suite.
    Run {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Report path; replay files for failing trials go to `<out>.replays/`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rerun the single trial recorded in a replay file.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Write every trial's fields to this directory.
        #[arg(long)]
        dump_fields: Option<PathBuf>,
    },
    /// Run the calibrated suites and write a baseline.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List suites and the claims they check.
    List,
}

fn usage_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::UnknownSuite(_) | Error::Parse { .. } | Error::Io(_))
}

fn emit(report: &Report, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, report.to_json())?,
        None => println!("{}", report.to_json()),
    }
    let s = &report.summary;
    eprintln!(
        "{} {}: {} trials, {} failures, {:.2} s",
        if s.pass { "PASS" } else { "FAIL" },
        report.suite,
        report.trials.len(),
        s.failures.len(),
        report.wall_time_seconds
    );
    for f in s.failures.iter().take(20) {
        eprintln!("  {f}");
    }
    for n in &s.notes {
        eprintln!("  note: {n}");
    }
    Ok(())
}

fn run(command: Command) -> Result<bool, Error> {
    match command {
        Command::Run { suite, config, seed, trials, out, replay, dump_fields } => {
            let suite: Suite = suite.parse()?;
            let mut cfg = ConfigFile::load(&config)?.suite_config(suite)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            let options = RunOptions {
                dump_fields,
                replay_dir: out.as_ref().map(|o| PathBuf::from(format!("{}.replays", o.display()))),
            };
            let report = match replay {
                Some(path) => harness::replay(&ReplayFile::load(&path)?, Some(&cfg), &options)?,
                None => harness::run_suite(&cfg, &options)?,
            };
            emit(&report, out.as_deref())?;
            Ok(report.summary.pass)
        }
        Command::Calibrate { config, out } => {
            let (baseline, reports) = harness::calibrate(&ConfigFile::load(&config)?)?;
            baseline.save(&out)?;
            let mut pass = true;
            for r in &reports {
                let s = &r.summary;
                pass &= s.pass;
                eprintln!(
                    "{} {}: {} trials, {:.2} s, constants {:?}",
                    if s.pass { "PASS" } else { "FAIL" },
                    r.suite,
                    r.trials.len(),
                    r.wall_time_seconds,
                    s.max_constants
                );
                for f in s.failures.iter().take(20) {
                    eprintln!("  {f}");
                }
            }
            eprintln!("baseline written to {}", out.display());
            Ok(pass)
        }
        Command::List => {
            for e in &SUITES {
                println!("{} ({} trials)", e.name, e.default_trials);
                for c in e.claims {
                    println!("  - {c}");
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if usage_error(&e) { 2 } else { 1 })
        }
    }
}
