//! Numerical machinery for path-dependent SDEs `dX = b(t,X)dt + σ(t,X)dW`
//! whose coefficients may look at the whole past of `X`: grid paths and
//! their Hölder and Cameron–Martin norms, balanced partitions with the
//! delayed interpolation `L_n`, non-anticipative coefficient functionals with
//! vertical and horizontal derivatives, skeleton ODE and SDE solvers, and
//! Monte Carlo experiments for Wong–Zakai type support approximations.

pub mod error;
pub mod exec;
pub mod experiments;
pub mod functionals;
pub mod io;
pub mod partitions;
pub mod paths;
pub mod solvers;
pub mod stochastics;

pub use error::{Error, Result};
pub use exec::Executor;
pub use partitions::{Partition, PartitionSweep};
pub use paths::{GridPath, TimeGrid};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
