//! Entangled quadrilinear singular forms on the plane, their dyadic tree
//! decompositions and numerical verification of the estimates behind them.
//!
//! - [`dyadic`]: dyadic squares, convex trees, leaves, generations, boundary
//!   lattice ratios and Whitney regions.
//! - [`field`], [`profile`], [`pairs`]: sampled fields, the Gaussian and
//!   square-function profiles, wave packets and admissible pairs.
//! - [`forms`]: local, sublinear and truncated forms, box averages, the
//!   telescoping, error and boundary sums, and the frequency-side evaluator.
//! - [`maximal`]: tree sizes, the quadratic maximal function and level sets.
//! - [`decomposition`]: the restricted-type stopping-time pipeline.
//! - [`harness`]: seeded suites, reports, baselines and replay, driven by the
//!   `ev` binary.
//!
//! Runnable examples, one per capability, live in `examples/`.

pub mod dyadic;
pub mod error;
pub mod fft;
pub mod field;
pub mod pairs;
pub mod profile;
pub mod quad;
pub mod forms;
pub mod maximal;
pub mod decomposition;
pub mod harness;
