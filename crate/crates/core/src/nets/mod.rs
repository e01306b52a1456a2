//! Small differentiable networks used as the inference network and the
//! generator, with hand-written backward passes.

mod adam;
mod gradcheck;
mod mlp;

pub use adam::Adam;
pub use gradcheck::{central_difference_check, GradCheckReport, FD_STEP};
pub use mlp::{Activation, ForwardCache, Layer, Mlp};

/// Hidden width of every desk-scale network.
pub const HIDDEN: usize = 64;
