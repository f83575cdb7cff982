//! Sequential random projection.
//!
//! An incremental sketch `s_t = Σ x_i z_i` for scalar streams whose values may
//! depend on every previously drawn projection vector, together with the
//! machinery needed to check its concentration guarantee empirically:
//!
//! * [`distributions`]: unit-sphere sampling and goodness-of-fit / MGF oracles.
//! * [`sketch`]: the `(s, S, Y)` recursion, good events and the stopping time.
//! * [`bounds`]: the dimension planner, self-normalized accumulators, the
//!   anytime boundary and the Gaussian-mixture value.
//! * [`adversary`]: adaptive strategies producing `x_t` from the history.
//! * [`harness`]: seeded, parallel Monte Carlo trials and reports.
//! * [`cli`]: the `seqproj` command line front end.

pub mod adversary;
pub mod bounds;
pub mod cli;
pub mod distributions;
pub mod harness;
pub mod sketch;
pub mod stats;

mod error;

pub use error::{Error, Result};
