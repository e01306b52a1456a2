//! A life-long von Mises-Fisher mixture memory shared by a GAN
//! discriminator and generator, with the small networks, training loop,
//! synthetic data, and evaluation probes needed to run it at desk scale.
//!
//! The crate is organized bottom-up:
//!
//! - [`memory`]: the slot memory, its posterior and top-k inference, and
//!   incremental-EM / LRU writes.
//! - [`nets`]: feed-forward networks with explicit backward passes, a
//!   finite-difference checker, and Adam.
//! - [`gan`]: memory-conditional sampling, the adversarial losses, one
//!   training iteration, and the ablation variants.
//! - [`datasets`]: Gaussian rings, rendered shapes, and IDX files.
//! - [`eval`]: mode coverage, likelihood, prior entropy, interpolation,
//!   nearest neighbors, purity.
//! - [`cli`]: configuration, seeded runs, metrics files, and checkpoints.

pub mod cli;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod gan;
pub mod linalg;
pub mod memory;
pub mod nets;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use memory::{Label, MemoryParams, MemoryState, Query, SlotSelection, WriteOutcome};
