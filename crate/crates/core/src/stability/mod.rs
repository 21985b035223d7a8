//! Eigenvalue analysis of HSS models.

mod classify;
mod eigen;
mod fold;
mod htf;
mod lap;
mod spurious;
mod sweep;

pub use classify::{classify_eigenvalues, ClassifyOptions, EigenClassification, Evidence, Label, Parameter};
pub use eigen::{eigen_decompose, eigenvalues, EigenSolution, ModeEnergy, StateLabel};
pub use fold::{fold_to_strip, fold_value, strip_distance, Folded};
pub use htf::evaluate_htf;
pub use lap::{match_eigenvalues, solve_assignment, Matching};
pub use spurious::{detect_spurious, probe_distances, stability_verdict, SpuriousOptions, SpuriousReport, StabilityVerdict};
pub use sweep::{suspicious_pairs, sweep_parameter, EigenTrace, ModelFamily, SweepOptions};
