//! Particle discretizations of the infinite-width limit systems.
//!
//! Every `μ`-integral becomes an average over i.i.d. particle pools, and every
//! data integral becomes a full average over the dataset, so a limit run is a
//! deterministic function of its pools. The two-layer system carries particles
//! `C̃[c]`, `W̃¹[w]`, `W̃²[c][w][u]`; the three-layer system adds `W̃³[c][v]` and
//! re-indexes `W̃²[v][w][u]`.
//!
//! The intermediate finite-`N₂` system is the two-layer system run with a pool
//! of exactly `N₂` c-particles.

mod integrate;
mod pools;
mod three_layer;
mod two_layer;

pub use integrate::{integrate, IntegrateConfig, LimitSnapshot, LimitSystem, LimitTrajectory, Scheme, SnapshotPlan};
pub use pools::{ParticlePools, ThreeLayerPools};
pub use three_layer::{
    compute_fields_three_layer, integrate_limit_three_layer, limit_rhs_three_layer, ThreeLayerDrift, ThreeLayerFields,
    ThreeLayerLimit, ThreeLayerLimitState,
};
pub use two_layer::{
    compute_fields, compute_fields_batch, integrate_limit, intermediate_system, limit_loss, limit_outputs, limit_rhs, Drift, LimitFields, LimitState,
    TwoLayerLimit,
};
