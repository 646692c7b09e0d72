//! Ring topology model, fat-tree baseline parameters, and workload payloads.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Travel direction around the ring. Clockwise steps from node `i` to
/// `(i + 1) mod N`, counterclockwise to `(i - 1) mod N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "cw")]
    Clockwise,
    #[serde(rename = "ccw")]
    Counterclockwise,
}

impl Direction {
    pub fn opposite(self) -> Direction {
        match self {
            Direction::Clockwise => Direction::Counterclockwise,
            Direction::Counterclockwise => Direction::Clockwise,
        }
    }

    /// Ring successor of `node` when moving in this direction.
    pub fn next(self, node: usize, n_nodes: usize) -> usize {
        match self {
            Direction::Clockwise => (node + 1) % n_nodes,
            Direction::Counterclockwise => (node + n_nodes - 1) % n_nodes,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Clockwise => write!(f, "cw"),
            Direction::Counterclockwise => write!(f, "ccw"),
        }
    }
}

/// One fiber hop between adjacent ring nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct LinkSegment {
    pub from: usize,
    pub to: usize,
    pub direction: Direction,
    pub fiber: u32,
}

/// Optical ring interconnect: `N` nodes joined by per-direction fiber rings,
/// each fiber carrying `w` wavelength channels.
#[derive(Debug, Clone, Serialize)]
pub struct RingTopology {
    pub n_nodes: usize,
    pub n_wavelengths: u32,
    pub fibers_per_direction: u32,
    /// Bits per second carried by one wavelength channel.
    pub bandwidth_per_wavelength: f64,
    /// Per-step constant delay in seconds: resonator reconfiguration plus
    /// O/E/O conversion.
    pub reconfig_delay: f64,
}

impl RingTopology {
    pub const DEFAULT_WAVELENGTHS: u32 = 64;
    pub const DEFAULT_BANDWIDTH_BPS: f64 = 40e9;
    pub const DEFAULT_RECONFIG_DELAY_S: f64 = 25e-6;
    pub const DEFAULT_FIBERS_PER_DIRECTION: u32 = 2;

    pub fn new(n_nodes: usize, n_wavelengths: u32) -> Result<Self> {
        let topo = RingTopology {
            n_nodes,
            n_wavelengths,
            fibers_per_direction: Self::DEFAULT_FIBERS_PER_DIRECTION,
            bandwidth_per_wavelength: Self::DEFAULT_BANDWIDTH_BPS,
            reconfig_delay: Self::DEFAULT_RECONFIG_DELAY_S,
        };
        topo.validate()?;
        Ok(topo)
    }

    pub fn with_channel(mut self, bandwidth_bps: f64, reconfig_delay_s: f64) -> Result<Self> {
        self.bandwidth_per_wavelength = bandwidth_bps;
        self.reconfig_delay = reconfig_delay_s;
        self.validate()?;
        Ok(self)
    }

    pub fn with_fibers(mut self, fibers_per_direction: u32) -> Result<Self> {
        self.fibers_per_direction = fibers_per_direction;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(Error::domain(format!(
                "ring needs at least 2 nodes, got {}",
                self.n_nodes
            )));
        }
        if self.n_wavelengths < 1 {
            return Err(Error::domain("at least one wavelength is required"));
        }
        if self.fibers_per_direction < 1 {
            return Err(Error::domain("at least one fiber per direction is required"));
        }
        if !(self.bandwidth_per_wavelength > 0.0) {
            return Err(Error::domain("per-wavelength bandwidth must be positive"));
        }
        if !(self.reconfig_delay >= 0.0) {
            return Err(Error::domain("reconfiguration delay must be non-negative"));
        }
        Ok(())
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.n_nodes {
            return Err(Error::domain(format!(
                "node index {node} out of range for {} nodes",
                self.n_nodes
            )));
        }
        Ok(())
    }
}

/// Hop count from `src` to `dst` walking in `direction`.
pub fn ring_distance(n_nodes: usize, src: usize, dst: usize, direction: Direction) -> usize {
    match direction {
        Direction::Clockwise => (dst + n_nodes - src) % n_nodes,
        Direction::Counterclockwise => (src + n_nodes - dst) % n_nodes,
    }
}

/// Contiguous chain of fiber segments from `src` to `dst` in the given
/// direction. The chain has between 1 and `N - 1` hops.
pub fn arc_path(
    topo: &RingTopology,
    src: usize,
    dst: usize,
    direction: Direction,
    fiber: u32,
) -> Result<Vec<LinkSegment>> {
    topo.check_node(src)?;
    topo.check_node(dst)?;
    if src == dst {
        return Err(Error::EmptyPath(src));
    }
    if fiber >= topo.fibers_per_direction {
        return Err(Error::domain(format!(
            "fiber index {fiber} out of range for {} fibers per direction",
            topo.fibers_per_direction
        )));
    }
    let mut path = Vec::with_capacity(ring_distance(topo.n_nodes, src, dst, direction));
    let mut at = src;
    while at != dst {
        let next = direction.next(at, topo.n_nodes);
        path.push(LinkSegment {
            from: at,
            to: next,
            direction,
            fiber,
        });
        at = next;
    }
    Ok(path)
}

/// Direction minimizing the hop count between two distinct nodes. Exact
/// ties (`N/2` hops both ways) break clockwise so outputs are reproducible.
pub fn shortest_direction(
    topo: &RingTopology,
    src: usize,
    dst: usize,
) -> Result<(Direction, usize)> {
    topo.check_node(src)?;
    topo.check_node(dst)?;
    if src == dst {
        return Err(Error::domain(format!(
            "shortest direction undefined for src == dst == {src}"
        )));
    }
    let cw = ring_distance(topo.n_nodes, src, dst, Direction::Clockwise);
    let ccw = topo.n_nodes - cw;
    if cw <= ccw {
        Ok((Direction::Clockwise, cw))
    } else {
        Ok((Direction::Counterclockwise, ccw))
    }
}

/// Electrical fat-tree baseline parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FatTreeParams {
    pub router_ports: u32,
    pub levels: u32,
    /// Bits per second on each link.
    pub link_bandwidth: f64,
    /// Per-router forwarding delay in seconds.
    pub router_delay: f64,
    /// Recorded for completeness; per-packet serialization is not modeled.
    pub packet_size_bytes: u32,
}

impl Default for FatTreeParams {
    fn default() -> Self {
        FatTreeParams {
            router_ports: 32,
            levels: 2,
            link_bandwidth: 25e9,
            router_delay: 50e-6,
            packet_size_bytes: 64,
        }
    }
}

impl FatTreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.router_ports == 0 || self.levels == 0 || self.packet_size_bytes == 0 {
            return Err(Error::domain("fat-tree parameters must be positive"));
        }
        if !(self.link_bandwidth > 0.0) {
            return Err(Error::domain("fat-tree link bandwidth must be positive"));
        }
        if !(self.router_delay >= 0.0) {
            return Err(Error::domain("fat-tree router delay must be non-negative"));
        }
        Ok(())
    }

    /// Worst-case up-down route length through the tree.
    pub fn route_hops(&self) -> u32 {
        2 * self.levels
    }
}

/// A training workload: the gradient payload each node contributes to the
/// all-reduce.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Workload {
    pub name: String,
    pub param_count: u64,
    pub bytes_per_param: u32,
}

/// Model sizes used throughout the experiments, in parameters.
pub const WORKLOAD_PRESETS: [(&str, u64); 4] = [
    ("alexnet", 62_300_000),
    ("vgg16", 138_000_000),
    ("resnet50", 25_000_000),
    ("googlenet", 6_797_700),
];

impl Workload {
    pub fn new(name: impl Into<String>, param_count: u64, bytes_per_param: u32) -> Result<Self> {
        if param_count == 0 {
            return Err(Error::domain("workload needs at least one parameter"));
        }
        if bytes_per_param == 0 {
            return Err(Error::domain("bytes per parameter must be positive"));
        }
        Ok(Workload {
            name: name.into(),
            param_count,
            bytes_per_param,
        })
    }

    /// fp32 gradients.
    pub fn with_params(param_count: u64) -> Result<Self> {
        Workload::new("custom", param_count, 4)
    }

    pub fn preset(name: &str) -> Option<Workload> {
        let lower = name.to_ascii_lowercase();
        WORKLOAD_PRESETS
            .iter()
            .find(|(preset, _)| *preset == lower)
            .map(|&(preset, params)| Workload {
                name: preset.to_string(),
                param_count: params,
                bytes_per_param: 4,
            })
    }

    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        WORKLOAD_PRESETS.iter().map(|(name, _)| *name)
    }

    /// Transfer payload `d` in bits.
    pub fn payload_bits(&self) -> u64 {
        self.param_count * u64::from(self.bytes_per_param) * 8
    }
}
