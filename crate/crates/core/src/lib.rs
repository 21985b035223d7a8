//! Harmonic state-space (HSS) modelling of converter-interfaced resources and
//! grids, closed-loop assembly, and harmonic stability analysis.

pub mod assembly;
pub mod cider;
pub mod error;
pub mod exec;
pub mod export;
pub mod grid;
pub mod harmonic;
pub mod linalg;
pub mod model;
pub mod run;
pub mod scenario;
pub mod stability;

pub use error::{HssError, Result};
