//! Routing and wavelength assignment: first-fit over the ring fibers plus
//! conflict detection, and the closed-form wavelength demands the schedule
//! generators rely on.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::schedule::{Schedule, Step};
use crate::topology::{arc_path, Direction, LinkSegment, RingTopology};

/// Wavelengths needed to collect a `k`-member group at its middle node in
/// one step: `ceil((k - 1) / 2)` per fiber direction, and the two
/// directions reuse the same indices.
pub fn group_wavelength_demand(k: usize) -> u32 {
    (k / 2) as u32
}

/// Wavelengths sufficient for a full exchange among `r` nodes on a
/// bidirectional ring with shortest-arc routing: `ceil(r^2 / 8)`.
pub fn a2a_wavelength_bound(r: usize) -> Result<u64> {
    if r < 2 {
        return Err(Error::domain(format!(
            "all-to-all needs at least 2 participants, got {r}"
        )));
    }
    Ok(((r * r) as u64).div_ceil(8))
}

/// Identifies one fiber segment: all clockwise segments leaving `from` on a
/// given fiber are the same piece of glass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct SegmentKey {
    direction: Direction,
    fiber: u32,
    from: usize,
}

impl SegmentKey {
    fn of(segment: &LinkSegment) -> Self {
        SegmentKey {
            direction: segment.direction,
            fiber: segment.fiber,
            from: segment.from,
        }
    }
}

/// Bitmask of wavelength indices in use on one segment.
#[derive(Debug, Clone, Default)]
struct ChannelMask {
    words: Vec<u64>,
}

impl ChannelMask {
    fn with_capacity(n_wavelengths: u32) -> Self {
        ChannelMask {
            words: vec![0; (n_wavelengths as usize).div_ceil(64)],
        }
    }

    fn or_into(&self, acc: &mut [u64]) {
        for (a, w) in acc.iter_mut().zip(&self.words) {
            *a |= w;
        }
    }

    fn set(&mut self, wavelength: u32) {
        self.words[wavelength as usize / 64] |= 1u64 << (wavelength % 64);
    }

    fn load(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }
}

fn first_clear_bit(words: &[u64]) -> u32 {
    for (i, &word) in words.iter().enumerate() {
        if word != !0 {
            return i as u32 * 64 + (!word).trailing_zeros();
        }
    }
    words.len() as u32 * 64
}

/// Assign wavelengths to every transfer of a step by first fit: transfers
/// are processed sorted by `(src, dst)` and each takes the lowest index not
/// already used on any fiber segment of its arc.
pub fn assign_first_fit(step: &mut Step, topo: &RingTopology) -> Result<()> {
    step.transfers
        .sort_by_key(|t| (t.src, t.dst, t.lanes.start));
    let capacity = topo.n_wavelengths;
    let mut used: HashMap<SegmentKey, ChannelMask> = HashMap::new();
    for transfer in &mut step.transfers {
        if transfer.wavelength.is_some() {
            return Err(Error::domain(format!(
                "transfer {}->{} in step {} already has a wavelength",
                transfer.src, transfer.dst, step.index
            )));
        }
        let path = arc_path(topo, transfer.src, transfer.dst, transfer.direction, transfer.fiber)?;
        let mut busy = vec![0u64; (capacity as usize).div_ceil(64)];
        for segment in &path {
            if let Some(mask) = used.get(&SegmentKey::of(segment)) {
                mask.or_into(&mut busy);
            }
        }
        let wavelength = first_clear_bit(&busy);
        if wavelength >= capacity {
            let max_link_load = path
                .iter()
                .map(|s| used.get(&SegmentKey::of(s)).map_or(0, ChannelMask::load))
                .max()
                .unwrap_or(0)
                + 1;
            return Err(Error::WavelengthExhausted {
                step: step.index,
                src: transfer.src,
                dst: transfer.dst,
                needed: wavelength,
                capacity,
                max_link_load,
            });
        }
        for segment in &path {
            used.entry(SegmentKey::of(segment))
                .or_insert_with(|| ChannelMask::with_capacity(capacity))
                .set(wavelength);
        }
        transfer.wavelength = Some(wavelength);
    }
    Ok(())
}

/// First-fit over every step of a schedule. Steps are independent; the
/// resonators reconfigure between them, so no continuity is carried over.
pub fn assign_schedule(schedule: &mut Schedule, topo: &RingTopology) -> Result<()> {
    if schedule.n_nodes != topo.n_nodes {
        return Err(Error::domain(format!(
            "schedule is for {} nodes but topology has {}",
            schedule.n_nodes, topo.n_nodes
        )));
    }
    for step in &mut schedule.steps {
        assign_first_fit(step, topo)?;
    }
    Ok(())
}

/// Two transfers claiming the same wavelength on the same fiber segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    pub step: u32,
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub segment: LinkSegment,
    pub wavelength: u32,
}

/// Check an assigned step for wavelength collisions. Returns every
/// conflicting pair; an empty list means the step is realizable.
pub fn conflict_check(step: &Step, topo: &RingTopology) -> Result<Vec<Conflict>> {
    let mut seen: HashMap<(SegmentKey, u32), (usize, usize)> = HashMap::new();
    let mut conflicts = Vec::new();
    for transfer in &step.transfers {
        let wavelength = transfer.wavelength.ok_or(Error::IncompleteAssignment {
            step: step.index,
            src: transfer.src,
            dst: transfer.dst,
        })?;
        for segment in arc_path(topo, transfer.src, transfer.dst, transfer.direction, transfer.fiber)? {
            let key = (SegmentKey::of(&segment), wavelength);
            match seen.get(&key) {
                Some(&first) => conflicts.push(Conflict {
                    step: step.index,
                    first,
                    second: (transfer.src, transfer.dst),
                    segment,
                    wavelength,
                }),
                None => {
                    seen.insert(key, (transfer.src, transfer.dst));
                }
            }
        }
    }
    Ok(conflicts)
}

pub fn conflict_check_schedule(schedule: &Schedule, topo: &RingTopology) -> Result<Vec<Conflict>> {
    let mut conflicts = Vec::new();
    for step in &schedule.steps {
        conflicts.extend(conflict_check(step, topo)?);
    }
    Ok(conflicts)
}

/// Number of distinct wavelength indices a step uses.
pub fn wavelengths_used(step: &Step) -> u32 {
    let mut seen: Vec<u32> = step.transfers.iter().filter_map(|t| t.wavelength).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len() as u32
}

/// Heaviest fiber segment of a step: the number of transfers whose arcs
/// cross it. No wavelength assignment can use fewer indices than this on
/// the segment's fiber.
pub fn max_segment_load(step: &Step, topo: &RingTopology) -> Result<u32> {
    let mut loads: HashMap<SegmentKey, u32> = HashMap::new();
    for transfer in &step.transfers {
        for segment in arc_path(topo, transfer.src, transfer.dst, transfer.direction, transfer.fiber)? {
            *loads.entry(SegmentKey::of(&segment)).or_insert(0) += 1;
        }
    }
    Ok(loads.values().copied().max().unwrap_or(0))
}
