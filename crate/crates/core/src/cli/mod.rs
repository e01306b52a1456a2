//! Experiment orchestration: configuration, seeded training runs with
//! metrics and checkpoints, and the eval / interpolate / ablate drivers.
//!
//! Every artifact starts with the SHA-256 of the canonical config so a
//! file can always be traced back to the exact settings that produced it.

mod config;
mod runs;

pub use config::{DatasetKind, TrainConfig};
pub use runs::{
    median, output_root, pick_slots, resolve_output, run_ablate, run_eval, run_interpolate, run_train,
    AblationSummary, Checkpoint, EvalProbe, InterpolateRequest, RunSummary, SlotPolicy, Trainer, OUTPUT_ROOT_ENV,
};
