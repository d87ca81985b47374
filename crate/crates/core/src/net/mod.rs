//! Drift networks and their optimizer.

mod adam;
mod checkpoint;
mod drift;
mod mlp;

pub use adam::{Adam, AdamConfig, Ema};
pub use checkpoint::{Architecture, Checkpoint, CheckpointHeader, NetState, CHECKPOINT_FORMAT};
pub use drift::{DriftNet, NetConfig};
pub use mlp::{param_count, Activation, Mlp, Tape};
