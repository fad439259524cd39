//! Solver library and Monte-Carlo simulator for joint sub-channel assignment
//! and power allocation in a single-cell OFDMA network with an imperfect
//! full-duplex base station and a mixture of half-duplex and imperfect
//! full-duplex users.
//!
//! The objective is the weighted downlink-plus-uplink sum-rate. The proposed
//! method runs in two steps: a greedy per-sub-channel pairing of downlink and
//! uplink users built on a closed-form two-link power optimization
//! ([`pairwise`], [`allocator`]), followed by a final power allocation over
//! the fixed assignment via difference-of-concave successive convexification
//! ([`dcpower`]). Comparison schemes and an exhaustive-search oracle live in
//! [`schemes`]; Monte-Carlo experiment plumbing in [`experiment`].

pub mod allocator;
pub mod channel;
pub mod dcpower;
pub mod error;
pub mod experiment;
pub mod model;
pub mod pairwise;
pub mod rate;
pub mod schemes;
pub mod units;

pub use error::{Error, Result};
pub use model::{
    Assignment, ChannelRealization, DuplexMode, NetworkScenario, PowerAllocation, RateReport,
    Topology,
};
