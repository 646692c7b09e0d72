//! Schedule generation, routing and wavelength assignment, and timing models
//! for all-reduce collectives on a WDM optical ring interconnect, with an
//! electrical fat-tree baseline for comparison.
//!
//! The crate is organized around an explicit communication plan: generators
//! ([`wrht`], [`baselines`]) produce a [`Schedule`] of per-step transfers,
//! [`rwa`] assigns wavelengths and detects fiber conflicts, and [`analysis`]
//! prices schedules under the optical and electrical cost models and checks
//! all-reduce correctness symbolically.

pub mod analysis;
pub mod baselines;
pub mod error;
pub mod rwa;
pub mod schedule;
pub mod topology;
pub mod wrht;

mod util;

pub use error::{Error, Result};
pub use schedule::{AlgorithmId, LaneSpan, Schedule, Stage, Step, Transfer};
pub use topology::{
    arc_path, ring_distance, shortest_direction, Direction, FatTreeParams, LinkSegment,
    RingTopology, Workload,
};
