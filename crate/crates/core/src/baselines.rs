//! Ring, binary-tree, hierarchical-ring, and recursive-doubling all-reduce
//! generators, plus closed-form step counts for every algorithm.

use crate::error::{Error, Result};
use crate::schedule::{AlgorithmId, LaneSpan, Schedule, Stage, Transfer};
use crate::topology::{shortest_direction, Direction, RingTopology};
use crate::util::ceil_log;
use crate::wrht::wrht_step_count;

/// Hierarchical-ring configuration: `g` nodes per intra-group ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HRingParams {
    pub g: usize,
}

impl HRingParams {
    pub fn new(g: usize) -> Result<Self> {
        if g < 2 {
            return Err(Error::domain(format!(
                "hierarchical ring needs at least 2 nodes per group, got {g}"
            )));
        }
        Ok(HRingParams { g })
    }

    pub fn validate_for(&self, n_nodes: usize) -> Result<()> {
        if self.g > n_nodes {
            return Err(Error::domain(format!(
                "group size {} exceeds node count {n_nodes}",
                self.g
            )));
        }
        if !n_nodes.is_multiple_of(self.g) {
            return Err(Error::domain(format!(
                "group size {} does not divide node count {n_nodes}",
                self.g
            )));
        }
        if n_nodes / self.g < 2 {
            return Err(Error::domain(
                "hierarchical ring needs at least 2 groups".to_string(),
            ));
        }
        Ok(())
    }
}

/// Closed-form hierarchical-ring step count `2(g^2 + N)/g + ceil(g/w) - 4`,
/// evaluated with exact integer arithmetic. Returns the value and whether it
/// was an exact integer; non-integral results (possible when `g` does not
/// divide `2N`) are rounded up.
pub fn hring_formula_steps(n_nodes: usize, g: usize, n_wavelengths: u32) -> Result<(u64, bool)> {
    if g < 2 {
        return Err(Error::domain("hierarchical ring formula needs g >= 2"));
    }
    if g > n_nodes {
        return Err(Error::domain(format!(
            "group size {g} exceeds node count {n_nodes}"
        )));
    }
    if n_wavelengths < 1 {
        return Err(Error::domain("at least one wavelength is required"));
    }
    let g = g as i128;
    let n = n_nodes as i128;
    let lane_rounds = (g as u128).div_ceil(u128::from(n_wavelengths)) as i128;
    let numerator = 2 * (g * g + n) + (lane_rounds - 4) * g;
    let exact = numerator % g == 0;
    let steps = numerator.div_euclid(g) + i128::from(!exact);
    if steps < 1 {
        return Err(Error::domain("hierarchical ring formula collapsed below 1 step"));
    }
    Ok((steps as u64, exact))
}

/// Closed-form step count for each algorithm. The hierarchical-ring value
/// is the published formula, which differs from the constructed schedule
/// (both are reported by the CLI).
pub fn analytic_steps(
    algorithm: AlgorithmId,
    n_nodes: usize,
    n_wavelengths: u32,
    g: Option<usize>,
    allow_all2all: bool,
) -> Result<u64> {
    if n_nodes < 2 {
        return Err(Error::domain(format!(
            "all-reduce needs at least 2 nodes, got {n_nodes}"
        )));
    }
    match algorithm {
        AlgorithmId::Ring => Ok(2 * (n_nodes as u64 - 1)),
        AlgorithmId::Bt => Ok(2 * ceil_log(2, n_nodes as u64)),
        AlgorithmId::HRing => {
            let g = g.ok_or_else(|| Error::domain("hierarchical ring needs a group size"))?;
            Ok(hring_formula_steps(n_nodes, g, n_wavelengths)?.0)
        }
        AlgorithmId::Rd => {
            let floor_log = (n_nodes as u64).ilog2() as u64;
            if n_nodes.is_power_of_two() {
                Ok(floor_log)
            } else {
                // Fold the extras in, run the power-of-two core, unfold.
                Ok(floor_log + 2)
            }
        }
        AlgorithmId::Wrht => wrht_step_count(n_nodes, n_wavelengths, allow_all2all),
    }
}

/// Transfers for one step of a ring pass over `participants`, where
/// `positions[k]` is the physical node of participant `k`. Participant `k`
/// sends chunk `(k + offset - step) mod k_count` to participant `k + 1`.
/// Chunk `c` occupies `lanes_per_chunk` verifier lanes starting at
/// `lane_base + c * lanes_per_chunk`.
#[allow(clippy::too_many_arguments)]
fn ring_pass_step(
    positions: &[usize],
    step: usize,
    offset: usize,
    payload_bits: f64,
    lanes_per_chunk: u32,
    route: impl Fn(usize, usize) -> Direction,
) -> Vec<Transfer> {
    let k_count = positions.len();
    let mut transfers = Vec::with_capacity(k_count);
    for (k, &src) in positions.iter().enumerate() {
        let next = (k + 1) % k_count;
        let dst = positions[next];
        let chunk = (k + offset + k_count - step % k_count) % k_count;
        let lanes = LaneSpan::new(
            chunk as u32 * lanes_per_chunk,
            (chunk as u32 + 1) * lanes_per_chunk,
        );
        transfers.push(Transfer::new(src, dst, route(k, next), payload_bits, lanes));
    }
    transfers
}

/// Classic chunked ring all-reduce: a reduce-scatter pass of `N - 1` steps
/// followed by an all-gather pass of `N - 1` steps, every node forwarding a
/// `d / N` chunk to its clockwise neighbor each step.
pub fn build_ring(n_nodes: usize, payload_bits: f64) -> Result<Schedule> {
    if n_nodes < 2 {
        return Err(Error::domain(format!(
            "ring all-reduce needs at least 2 nodes, got {n_nodes}"
        )));
    }
    if !(payload_bits > 0.0) {
        return Err(Error::domain("payload must be positive"));
    }
    let positions: Vec<usize> = (0..n_nodes).collect();
    let chunk_bits = payload_bits / n_nodes as f64;
    let mut schedule = Schedule::new(AlgorithmId::Ring, n_nodes, payload_bits, n_nodes as u32);
    for s in 0..n_nodes - 1 {
        schedule.push_step(
            Stage::Reduce,
            ring_pass_step(&positions, s, 0, chunk_bits, 1, |_, _| Direction::Clockwise),
        );
    }
    for s in 0..n_nodes - 1 {
        schedule.push_step(
            Stage::Broadcast,
            ring_pass_step(&positions, s, 1, chunk_bits, 1, |_, _| Direction::Clockwise),
        );
    }
    Ok(schedule)
}

/// Binary-tree all-reduce: in reduce step `i` the node at offset `2^(i-1)`
/// of each `2^i`-aligned group sends its running reduction to the group
/// head; the broadcast stage replays the steps in reverse.
pub fn build_bt(n_nodes: usize, payload_bits: f64) -> Result<Schedule> {
    if n_nodes < 2 {
        return Err(Error::domain(format!(
            "binary-tree all-reduce needs at least 2 nodes, got {n_nodes}"
        )));
    }
    if !(payload_bits > 0.0) {
        return Err(Error::domain("payload must be positive"));
    }
    let rounds = ceil_log(2, n_nodes as u64) as u32;
    let mut schedule = Schedule::new(AlgorithmId::Bt, n_nodes, payload_bits, 1);
    let level_transfers = |i: u32, downward: bool| -> Vec<Transfer> {
        let span = 1usize << i;
        let mut transfers = Vec::new();
        let mut head = 0;
        while head < n_nodes {
            let sender = head + span / 2;
            if sender < n_nodes {
                let (src, dst, direction) = if downward {
                    (head, sender, Direction::Clockwise)
                } else {
                    (sender, head, Direction::Counterclockwise)
                };
                transfers.push(Transfer::new(
                    src,
                    dst,
                    direction,
                    payload_bits,
                    LaneSpan::single(0),
                ));
            }
            head += span;
        }
        transfers
    };
    for i in 1..=rounds {
        schedule.push_step(Stage::Reduce, level_transfers(i, false));
    }
    for i in (1..=rounds).rev() {
        schedule.push_step(Stage::Broadcast, level_transfers(i, true));
    }
    Ok(schedule)
}

/// Recursive doubling: nodes pairwise exchange their full payload with the
/// partner at XOR distance `2^s` and reduce. Non-power-of-two node counts
/// fold the extras into the largest embedded power of two first and unfold
/// afterwards.
pub fn build_rd(n_nodes: usize, payload_bits: f64) -> Result<Schedule> {
    if n_nodes < 2 {
        return Err(Error::domain(format!(
            "recursive doubling needs at least 2 nodes, got {n_nodes}"
        )));
    }
    if !(payload_bits > 0.0) {
        return Err(Error::domain("payload must be positive"));
    }
    let core = if n_nodes.is_power_of_two() {
        n_nodes
    } else {
        1usize << n_nodes.ilog2()
    };
    // Directions only matter on the optical ring; the fat-tree model ignores
    // them. Route along the shorter arc for definiteness.
    let topo = RingTopology::new(n_nodes, 1)?;
    let route = |src: usize, dst: usize| shortest_direction(&topo, src, dst).map(|(d, _)| d);

    let mut schedule = Schedule::new(AlgorithmId::Rd, n_nodes, payload_bits, 1);
    if core < n_nodes {
        let mut folds = Vec::new();
        for extra in core..n_nodes {
            folds.push(Transfer::new(
                extra,
                extra - core,
                route(extra, extra - core)?,
                payload_bits,
                LaneSpan::single(0),
            ));
        }
        schedule.push_step(Stage::Reduce, folds);
    }
    let rounds = core.ilog2();
    for s in 0..rounds {
        let mut exchanges = Vec::with_capacity(core);
        for node in 0..core {
            let partner = node ^ (1usize << s);
            exchanges.push(Transfer::new(
                node,
                partner,
                route(node, partner)?,
                payload_bits,
                LaneSpan::single(0),
            ));
        }
        schedule.push_step(Stage::AllToAll, exchanges);
    }
    if core < n_nodes {
        let mut unfolds = Vec::new();
        for extra in core..n_nodes {
            unfolds.push(Transfer::new(
                extra - core,
                extra,
                route(extra - core, extra)?,
                payload_bits,
                LaneSpan::single(0),
            ));
        }
        schedule.push_step(Stage::Broadcast, unfolds);
    }
    Ok(schedule)
}

/// Hierarchical ring. Three phases:
///
/// 1. reduce-scatter inside every contiguous `g`-node group (`g - 1` steps,
///    chunks of `d / g`);
/// 2. an all-reduce per chunk lane among the `N / g` holders of that chunk,
///    spaced `g` apart around the ring (`2(N/g - 1)` ring-pass steps, run
///    for `ceil(g / w)` wavelength batches);
/// 3. all-gather inside every group (`g - 1` steps).
pub fn build_hring(
    n_nodes: usize,
    g: usize,
    n_wavelengths: u32,
    payload_bits: f64,
) -> Result<Schedule> {
    let params = HRingParams::new(g)?;
    params.validate_for(n_nodes)?;
    if n_wavelengths < 1 {
        return Err(Error::domain("at least one wavelength is required"));
    }
    if !(payload_bits > 0.0) {
        return Err(Error::domain("payload must be positive"));
    }
    let group_count = n_nodes / g;
    let chunk_bits = payload_bits / g as f64;
    let sub_chunk_bits = payload_bits / n_nodes as f64;
    let lanes_per_chunk = group_count as u32;
    let mut schedule = Schedule::new(AlgorithmId::HRing, n_nodes, payload_bits, n_nodes as u32);

    // Within a group the wrap transfer travels back along the group arc on
    // the counterclockwise fiber; everything else is a single clockwise hop.
    let intra_route = |from_offset: usize, to_offset: usize| {
        if to_offset > from_offset {
            Direction::Clockwise
        } else {
            Direction::Counterclockwise
        }
    };
    let intra_step = |step: usize, offset: usize| -> Vec<Transfer> {
        let mut transfers = Vec::with_capacity(n_nodes);
        for group in 0..group_count {
            let base = group * g;
            let positions: Vec<usize> = (base..base + g).collect();
            transfers.extend(ring_pass_step(
                &positions,
                step,
                offset,
                chunk_bits,
                lanes_per_chunk,
                |k, next| intra_route(positions[k] - base, positions[next] - base),
            ));
        }
        transfers
    };

    for s in 0..g - 1 {
        schedule.push_step(Stage::Reduce, intra_step(s, 0));
    }

    // After the reduce-scatter, chunk c is fully group-reduced at the member
    // with offset (c - 1) mod g. Those holders form one ring per chunk,
    // tiling the full circle clockwise. Chunk lanes beyond the wavelength
    // budget run in later sub-steps.
    let holder_offset = |chunk: usize| (chunk + g - 1) % g;
    let chunk_batches: Vec<Vec<usize>> = (0..g)
        .collect::<Vec<_>>()
        .chunks(n_wavelengths as usize)
        .map(|c| c.to_vec())
        .collect();
    let inter_step = |step: usize, offset: usize, batch: &[usize]| -> Vec<Transfer> {
        let mut transfers = Vec::new();
        for &chunk in batch {
            let positions: Vec<usize> = (0..group_count)
                .map(|k| k * g + holder_offset(chunk))
                .collect();
            for mut transfer in ring_pass_step(
                &positions,
                step,
                offset,
                sub_chunk_bits,
                1,
                |_, _| Direction::Clockwise,
            ) {
                // The lane index inside this chunk's ring, shifted into the
                // chunk's slice of the global lane space.
                transfer.lanes = LaneSpan::single(
                    chunk as u32 * lanes_per_chunk + transfer.lanes.start,
                );
                transfers.push(transfer);
            }
        }
        transfers
    };

    for s in 0..group_count - 1 {
        for batch in &chunk_batches {
            schedule.push_step(Stage::Reduce, inter_step(s, 0, batch));
        }
    }
    for s in 0..group_count - 1 {
        for batch in &chunk_batches {
            schedule.push_step(Stage::Broadcast, inter_step(s, 1, batch));
        }
    }

    for s in 0..g - 1 {
        schedule.push_step(Stage::Broadcast, intra_step(s, 1));
    }
    Ok(schedule)
}

/// Constructed hierarchical-ring step count:
/// `2(g - 1) + 2(N/g - 1) * ceil(g / w)`.
pub fn hring_constructed_steps(n_nodes: usize, g: usize, n_wavelengths: u32) -> Result<u64> {
    let params = HRingParams::new(g)?;
    params.validate_for(n_nodes)?;
    let lane_rounds = (g as u64).div_ceil(u64::from(n_wavelengths));
    Ok(2 * (g as u64 - 1) + 2 * (n_nodes as u64 / g as u64 - 1) * lane_rounds)
}
