//! Intermediate performance of rateless (LT) codes.
//!
//! The crate covers the full loop from analysis to measurement:
//!
//! * [`degree_dist`]: soliton-family degree distributions and their
//!   generating functions;
//! * [`asymptotics`]: the asymptotic recovered fraction `s(r, P)` and its
//!   inverse `r(z, P)`;
//! * [`lp_bounds`]: LP outer bounds on `r(z)` over all distributions;
//! * [`lt_codec`]: an LT encoder and peeling decoder;
//! * [`sim_harness`]: seeded Monte Carlo runs of the codec against the
//!   asymptotic predictions;
//! * [`cli`]: the `fountain-lab` command line front end.

pub mod asymptotics;
pub mod cli;
pub mod degree_dist;
pub mod error;
pub mod lp_bounds;
pub mod lt_codec;
pub mod report;
pub mod sim_harness;

pub use degree_dist::DegreeDistribution;
pub use error::{Error, Result};
