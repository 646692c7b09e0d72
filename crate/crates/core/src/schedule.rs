//! Explicit communication plans: who sends what to whom, over which arc,
//! on which wavelength, at which step.

use serde::Serialize;

use crate::topology::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AlgorithmId {
    #[serde(rename = "wrht")]
    Wrht,
    #[serde(rename = "ring")]
    Ring,
    #[serde(rename = "h-ring")]
    HRing,
    #[serde(rename = "bt")]
    Bt,
    #[serde(rename = "rd")]
    Rd,
}

impl AlgorithmId {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmId::Wrht => "wrht",
            AlgorithmId::Ring => "ring",
            AlgorithmId::HRing => "h-ring",
            AlgorithmId::Bt => "bt",
            AlgorithmId::Rd => "rd",
        }
    }
}

/// Which phase of the all-reduce a step belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    #[serde(rename = "reduce")]
    Reduce,
    #[serde(rename = "all2all")]
    AllToAll,
    #[serde(rename = "broadcast")]
    Broadcast,
}

/// Half-open range of chunk lanes a transfer carries. Full-payload
/// algorithms run a single lane; chunked ones (ring, hierarchical ring)
/// track which slice of the gradient each transfer moves so the verifier
/// can follow every slice independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LaneSpan {
    pub start: u32,
    pub end: u32,
}

impl LaneSpan {
    pub fn new(start: u32, end: u32) -> Self {
        debug_assert!(start < end);
        LaneSpan { start, end }
    }

    pub fn single(lane: u32) -> Self {
        LaneSpan {
            start: lane,
            end: lane + 1,
        }
    }

    pub fn iter(&self) -> std::ops::Range<u32> {
        self.start..self.end
    }
}

/// One point-to-point transmission within a step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transfer {
    pub src: usize,
    pub dst: usize,
    pub direction: Direction,
    pub fiber: u32,
    pub wavelength: Option<u32>,
    pub payload_bits: f64,
    #[serde(skip)]
    pub lanes: LaneSpan,
}

impl Transfer {
    pub fn new(
        src: usize,
        dst: usize,
        direction: Direction,
        payload_bits: f64,
        lanes: LaneSpan,
    ) -> Self {
        debug_assert_ne!(src, dst);
        debug_assert!(payload_bits > 0.0);
        Transfer {
            src,
            dst,
            direction,
            fiber: 0,
            wavelength: None,
            payload_bits,
            lanes,
        }
    }
}

/// All transfers that start simultaneously after one reconfiguration.
#[derive(Debug, Clone, Serialize)]
pub struct Step {
    pub index: u32,
    pub stage: Stage,
    pub transfers: Vec<Transfer>,
}

/// A complete all-reduce plan for `n_nodes` nodes, each contributing
/// `payload_unit_bits` bits of gradient data.
#[derive(Debug, Clone, Serialize)]
pub struct Schedule {
    pub algorithm: AlgorithmId,
    pub n_nodes: usize,
    pub payload_unit_bits: f64,
    pub steps: Vec<Step>,
    /// Number of chunk lanes the payload is split into (1 for full-payload
    /// algorithms, `N` for chunked ring variants). Not serialized; the wire
    /// format carries only per-transfer payloads.
    #[serde(skip)]
    pub lane_count: u32,
}

impl Schedule {
    pub fn new(
        algorithm: AlgorithmId,
        n_nodes: usize,
        payload_unit_bits: f64,
        lane_count: u32,
    ) -> Self {
        Schedule {
            algorithm,
            n_nodes,
            payload_unit_bits,
            steps: Vec::new(),
            lane_count,
        }
    }

    pub fn push_step(&mut self, stage: Stage, transfers: Vec<Transfer>) {
        let index = self.steps.len() as u32;
        self.steps.push(Step {
            index,
            stage,
            transfers,
        });
    }

    pub fn step_count(&self) -> u64 {
        self.steps.len() as u64
    }

    pub fn transfers(&self) -> impl Iterator<Item = &Transfer> {
        self.steps.iter().flat_map(|s| s.transfers.iter())
    }
}
