//! Seed-sensitivity analysis for mixture-exposure models.
//!
//! Four estimators (CV-tuned lasso, group lasso, weighted quantile sum
//! regression and Bayesian kernel machine regression) share one seeded
//! random stream, and [`sweep`] runs any of them over a list of seeds and
//! summarizes how estimates and inference move from seed to seed.

pub mod bkmr;
pub mod data;
pub mod error;
pub mod io;
pub mod linalg;
pub mod optim;
pub mod penalized;
pub mod rng;
pub mod stats;
pub mod sweep;
pub mod wqs;

pub use data::{Dataset, GroupSpec};
pub use error::{Error, ErrorKind, Result};
pub use rng::SeedStream;
