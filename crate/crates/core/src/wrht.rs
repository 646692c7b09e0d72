//! Wavelength-reused hierarchical-tree all-reduce on the optical ring.
//!
//! The reduce stage partitions the active nodes into contiguous groups of at
//! most `m = 2w + 1` members and collects each group's data at its middle
//! node in a single step, reusing wavelengths across groups and across the
//! two fiber directions. Recursion over the representatives stops early with
//! one all-to-all exchange once the survivors fit the ring's all-to-all
//! wavelength budget. The broadcast stage replays the reduce levels in
//! reverse with every transfer flipped.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::rwa::{a2a_wavelength_bound, assign_first_fit, wavelengths_used};
use crate::schedule::{AlgorithmId, LaneSpan, Schedule, Stage, Step, Transfer};
use crate::topology::{Direction, RingTopology};
use crate::util::{ceil_log, int_pow};

/// Largest group a single step can collect with `w` wavelengths: the middle
/// node receives from `w` neighbors per side, one wavelength each.
pub fn choose_group_size(n_wavelengths: u32) -> usize {
    2 * n_wavelengths as usize + 1
}

/// A contiguous run of active nodes and the member that collects for them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub members: Vec<usize>,
    pub representative: usize,
}

impl Group {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Position of the representative within `members`.
    pub fn rep_index(&self) -> usize {
        (self.members.len() - 1) / 2
    }
}

/// Split the active nodes, in ring order, into groups of `m` (the last group
/// keeps the remainder). The representative is the middle member, rounded
/// toward the head for even-sized groups.
pub fn partition_level(active: &[usize], m: usize) -> Result<Vec<Group>> {
    if active.is_empty() {
        return Err(Error::domain("cannot partition an empty node list"));
    }
    if m < 2 {
        return Err(Error::domain(format!("group size must be at least 2, got {m}")));
    }
    Ok(active
        .chunks(m)
        .map(|members| Group {
            members: members.to_vec(),
            representative: members[(members.len() - 1) / 2],
        })
        .collect())
}

/// Whether `r` representatives can finish with one all-to-all exchange under
/// `w` wavelengths, per the `ceil(r^2 / 8)` requirement. A single survivor
/// needs no exchange at all.
pub fn all2all_feasible(representatives: usize, n_wavelengths: u32) -> bool {
    match a2a_wavelength_bound(representatives) {
        Ok(bound) => bound <= u64::from(n_wavelengths),
        Err(_) => false,
    }
}

/// Wavelength indices first-fit actually consumes on the all-to-all
/// exchange among `r` participants. First-fit is a greedy coloring and can
/// exceed the `ceil(r^2 / 8)` link-load bound on these circular-arc
/// instances, so the builder checks this number, not just the bound, before
/// committing to the terminal exchange.
///
/// The value only depends on `r`: the conflict structure lives on the gaps
/// between consecutive participants, so any ring spacing first-fits
/// identically to the unit-spaced ring measured here.
pub fn all_to_all_wavelength_usage(r: usize) -> Result<u32> {
    if r < 2 {
        return Err(Error::domain(format!(
            "all-to-all needs at least 2 participants, got {r}"
        )));
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, u32>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&usage) = cache.lock().unwrap().get(&r) {
        return Ok(usage);
    }
    let headroom = (r * r / 4 + 16) as u32;
    let topo = RingTopology::new(r, headroom)?;
    let participants: Vec<usize> = (0..r).collect();
    let mut step = Step {
        index: 0,
        stage: Stage::AllToAll,
        transfers: all_to_all_transfers(&participants, 1.0),
    };
    assign_first_fit(&mut step, &topo)?;
    let usage = wavelengths_used(&step);
    cache.lock().unwrap().insert(r, usage);
    Ok(usage)
}

/// The gate the generator uses: the published requirement must hold and the
/// deterministic first-fit pass must actually land within `w`.
fn terminal_all2all_fits(representatives: usize, n_wavelengths: u32) -> Result<bool> {
    if !all2all_feasible(representatives, n_wavelengths) {
        return Ok(false);
    }
    Ok(all_to_all_wavelength_usage(representatives)? <= n_wavelengths)
}

/// The group structure behind a generated schedule.
#[derive(Debug, Clone)]
pub struct WrhtPlan {
    /// Group size cap `m = 2w + 1`.
    pub m: usize,
    /// Reduce levels in execution order; level `i` partitions the survivors
    /// of level `i - 1`.
    pub levels: Vec<Vec<Group>>,
    /// Whether the reduce stage ended with an all-to-all exchange.
    pub terminal_all2all: bool,
    pub step_count: u64,
}

impl WrhtPlan {
    /// Active node count after each reduce level, starting with `N` itself.
    pub fn active_counts(&self, n_nodes: usize) -> Vec<usize> {
        let mut counts = vec![n_nodes];
        for level in &self.levels {
            counts.push(level.len());
        }
        counts
    }
}

fn validate_inputs(n_nodes: usize, n_wavelengths: u32) -> Result<()> {
    if n_nodes < 2 {
        return Err(Error::domain(format!(
            "all-reduce needs at least 2 nodes, got {n_nodes}"
        )));
    }
    if n_wavelengths < 1 {
        return Err(Error::domain("at least one wavelength is required"));
    }
    Ok(())
}

/// Representatives left before the deepest reduce level:
/// `m* = ceil(N / m^(L-1))` with `L = ceil(log_m N)`. These are the nodes a
/// terminal all-to-all would have to connect.
pub fn terminal_representative_count(n_nodes: usize, n_wavelengths: u32) -> Result<usize> {
    validate_inputs(n_nodes, n_wavelengths)?;
    let m = choose_group_size(n_wavelengths) as u64;
    let levels = ceil_log(m, n_nodes as u64);
    let reach = int_pow(m, levels - 1);
    Ok((n_nodes as u128).div_ceil(reach) as usize)
}

/// Total communication steps of the generated schedule: `2L` without the
/// terminal all-to-all, `2L - 1` with it, where `L = ceil(log_m N)`.
pub fn wrht_step_count(n_nodes: usize, n_wavelengths: u32, allow_all2all: bool) -> Result<u64> {
    validate_inputs(n_nodes, n_wavelengths)?;
    let m = choose_group_size(n_wavelengths) as u64;
    let levels = ceil_log(m, n_nodes as u64);
    if allow_all2all {
        let survivors = terminal_representative_count(n_nodes, n_wavelengths)?;
        if terminal_all2all_fits(survivors, n_wavelengths)? {
            return Ok(2 * levels - 1);
        }
    }
    Ok(2 * levels)
}

/// Collect transfers for one reduce level: members behind the representative
/// send clockwise, members ahead send counterclockwise, so the two fiber
/// directions share wavelength indices.
pub fn collect_transfers(groups: &[Group], payload_bits: f64) -> Vec<Transfer> {
    let mut transfers = Vec::new();
    for group in groups {
        let rep_index = group.rep_index();
        for (position, &member) in group.members.iter().enumerate() {
            if position == rep_index {
                continue;
            }
            let direction = if position < rep_index {
                Direction::Clockwise
            } else {
                Direction::Counterclockwise
            };
            transfers.push(Transfer::new(
                member,
                group.representative,
                direction,
                payload_bits,
                LaneSpan::single(0),
            ));
        }
    }
    transfers
}

/// Mirror of [`collect_transfers`]: sources and destinations swapped,
/// directions inverted.
pub fn broadcast_transfers(groups: &[Group], payload_bits: f64) -> Vec<Transfer> {
    collect_transfers(groups, payload_bits)
        .into_iter()
        .map(|t| Transfer::new(
            t.dst,
            t.src,
            t.direction.opposite(),
            t.payload_bits,
            t.lanes,
        ))
        .collect()
}

/// Full exchange among `representatives` (listed in ring order). Each pair
/// routes along the shorter arc; antipodal pairs alternate direction by
/// sender parity so the two fiber directions carry balanced load, which is
/// what keeps first-fit within the `ceil(r^2 / 8)` wavelength budget.
pub fn all_to_all_transfers(representatives: &[usize], payload_bits: f64) -> Vec<Transfer> {
    let r = representatives.len();
    let mut transfers = Vec::with_capacity(r.saturating_mul(r.saturating_sub(1)));
    for (i, &src) in representatives.iter().enumerate() {
        for (j, &dst) in representatives.iter().enumerate() {
            if i == j {
                continue;
            }
            let forward = (j + r - i) % r;
            let direction = if 2 * forward < r {
                Direction::Clockwise
            } else if 2 * forward > r {
                Direction::Counterclockwise
            } else if i % 2 == 0 {
                Direction::Clockwise
            } else {
                Direction::Counterclockwise
            };
            transfers.push(Transfer::new(
                src,
                dst,
                direction,
                payload_bits,
                LaneSpan::single(0),
            ));
        }
    }
    transfers
}

/// Build the hierarchical-tree schedule. Every transfer carries the full
/// payload `d`; the reduction applied at each receiver keeps the transferred
/// size constant across levels.
pub fn build_wrht(
    n_nodes: usize,
    n_wavelengths: u32,
    payload_bits: f64,
    allow_all2all: bool,
) -> Result<(Schedule, WrhtPlan)> {
    validate_inputs(n_nodes, n_wavelengths)?;
    if !(payload_bits > 0.0) {
        return Err(Error::domain("payload must be positive"));
    }

    let m = choose_group_size(n_wavelengths);
    let mut active: Vec<usize> = (0..n_nodes).collect();
    let mut levels: Vec<Vec<Group>> = Vec::new();
    let mut terminal_all2all = false;

    let mut schedule = Schedule::new(AlgorithmId::Wrht, n_nodes, payload_bits, 1);

    loop {
        if active.len() == 1 {
            break;
        }
        if allow_all2all && terminal_all2all_fits(active.len(), n_wavelengths)? {
            terminal_all2all = true;
            break;
        }
        let groups = partition_level(&active, m)?;
        schedule.push_step(Stage::Reduce, collect_transfers(&groups, payload_bits));
        active = groups.iter().map(|g| g.representative).collect();
        levels.push(groups);
    }

    if terminal_all2all {
        schedule.push_step(Stage::AllToAll, all_to_all_transfers(&active, payload_bits));
    }

    for groups in levels.iter().rev() {
        schedule.push_step(Stage::Broadcast, broadcast_transfers(groups, payload_bits));
    }

    let plan = WrhtPlan {
        m,
        levels,
        terminal_all2all,
        step_count: schedule.step_count(),
    };
    debug_assert_eq!(
        plan.step_count,
        wrht_step_count(n_nodes, n_wavelengths, allow_all2all)?
    );
    Ok((schedule, plan))
}
