//! Two-way bridge matching.

mod fit;
mod loss;
mod time;

pub use fit::{
    fit, fit_from, init_pair, validation_nll, FitOutcome, FitStatus, History, MetricRecord, ModelSpec, TrainConfig,
    TrainedPair,
};
pub use loss::{build_loss_batch, pointwise_objective, targets, two_way_loss, LossBatch, LossValue};
pub use time::{TimeMode, TimeSampler};
