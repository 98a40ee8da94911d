//! Reliability toolkit for K-repetition multichannel random access over
//! Rayleigh-fading subchannels.
//!
//! Two coding strategies are compared: uncoordinated diversity slotted
//! ALOHA, where each user picks its K repetition subchannels uniformly at
//! random, and deterministic assignment from a Steiner S(2,K,M) access
//! code. Reliability is evaluated both in closed form (surviving-diversity
//! and per-subchannel interferer distributions, collision-model outage via
//! a Gamma mixture) and by Monte-Carlo simulation of three receivers:
//! collision-discard MRC, interference-aware weighted MRC, and the
//! white-noise matched filter.
//!
//! See the crate examples for runnable entry points into each capability,
//! and the `ura-sim` binary for the CSV-emitting experiment runner.

pub mod access_codes;
pub mod analytics;
pub mod channel_mrc;
pub mod config;
pub mod experiments;
pub mod montecarlo;
pub mod oracle;

pub use access_codes::{
    allocate_steiner_patterns, build_steiner_code, read_code, sample_dsa_pattern, verify_steiner,
    write_code, AccessPattern, SteinerCode,
};
pub use analytics::{
    collision_outage, diversity_distribution, interferer_distribution, CodeKind, ScenarioParams,
};
pub use channel_mrc::{
    draw_channel, sinr_collision_model, sinr_weighted_mrc, sinr_wn_mf, ChannelRealization,
    Receiver, SinrResult,
};
pub use montecarlo::{estimate_outage, run_trial, OutageCurve, SimConfig};
