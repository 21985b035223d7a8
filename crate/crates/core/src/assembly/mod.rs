//! Closing feedback loops: the generic closure shared with the resource
//! internal loop, and the power-system assembly of resources and grid.

mod feedback;
mod system;

pub use feedback::{close_feedback, ClosedFeedback, FeedbackProblem, WellPosedness};
pub use system::{
    assemble_system, build_interconnection, build_open_loop, close_loop, order_resources, stack_models,
    stack_resources, AssembledSystem, ClosedLoopSystem, OpenLoopSystem, ResourceStack,
};
