//! Black-box configuration tuning on scaled-down testbeds.
//!
//! The crate is organized around the two halves of the workflow:
//!
//! 1. **Testbed planning** ([`scaling`], [`curves`], [`nnls`]): measure a
//!    handful of (data scale, machine count) points, fit a non-negative
//!    timing model, decide how many samples the model actually needs via
//!    learning-curve projection, and emit the testbed settings whose
//!    predicted time hits a requested fraction of the full-scale run time.
//! 2. **Configuration search** ([`tuner`], [`doe`], [`forest`]): spend a hard
//!    time budget on the planned testbed using latin-hypercube exploration,
//!    a random-forest surrogate, and bound-and-search exploitation, then
//!    validate the best candidates on the full-scale target.
//!
//! [`space`] defines mixed integer/real/boolean/categorical parameter
//! spaces, [`target`] abstracts the system under test (synthetic surfaces
//! and replayed logs ship in-crate), [`trial`] is the append-only trial log
//! every run is charged against, and [`metrics`] holds the evaluation
//! arithmetic (ranking quality, sampling cost, improvement).
//!
//! All randomness flows from a single master seed; identical inputs produce
//! byte-identical trial logs regardless of the `parallel` feature or
//! dispatch width.

pub mod curves;
pub mod doe;
pub mod error;
pub mod forest;
pub mod metrics;
pub mod nnls;
pub mod par;
pub mod scaling;
pub mod seed;
pub mod space;
pub mod target;
pub mod trial;
pub mod tuner;

pub use error::{Error, Result};
