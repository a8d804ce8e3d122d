//! Witnesses of macroscopic entanglement built from coarse-grained
//! collective intensities, with closed-form noise models, worst-case
//! measurement imperfections, threshold search, state optimization and a
//! Monte Carlo simulator of the full measurement scenario.

pub mod error;
pub mod linalg;
pub mod mcsim;
pub mod optimizer;
pub mod quantum;
pub mod robustness;
pub mod witness;

pub use error::{Error, Result};
