//! HSS model of a converter-interfaced resource (CIDER).

mod block;
pub mod builtin;
mod hss;
mod internal;
mod operating_point;
mod reference;
mod transform;

pub use block::{LiftedBlock, LtpBlock};
pub use hss::{assemble_cider_hss, CiderHss, CiderKind, CiderMatrices, CiderSpec, CiderTransforms, LiftedTransforms};
pub use internal::{assemble_internal_response, InternalResponse, InternalRouting};
pub use operating_point::{build_reference_block, linearize_reference, OperatingPoint, ReferenceBlock};
pub use reference::{LinearReference, PqReference, ReferencePlugin};
pub use transform::{default_pseudo_inverse, TransformSpec};
