//! Finite-width mean-field networks and one-sample SGD.
//!
//! Hidden sums are normalized by `1/N_ℓ`. Training time is measured on the limit
//! clock `t = k / N₁`, so a snapshot at `t` is taken after `⌊N₁ t⌋` SGD steps.

mod forward;
mod params;
mod schedule;
mod sgd;
pub mod single_layer;
mod train;

pub use forward::{forward_three_layer, forward_two_layer, ForwardCache, ForwardCache3};
pub use params::{init_params, init_three_layer, init_two_layer, InitBox, InitDistribution, Params, ThreeLayerParams, TwoLayerParams};
pub use schedule::{scaled_rates_for_depth, GroupRates, LearningRateSchedule, LearningRates, ScheduleMode};
pub use sgd::{sgd_step_three_layer, sgd_step_two_layer};
pub use train::{dataset_loss, train, Network, ParamNorms, TrainConfig, TrainSnapshot, TrainTrajectory};
