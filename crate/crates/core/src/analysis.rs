//! Communication-time models, step and time lower bounds, and the symbolic
//! all-reduce correctness oracle.

use crate::error::{Error, Result};
use crate::schedule::{AlgorithmId, Schedule};
use crate::topology::{FatTreeParams, RingTopology, Workload};
use crate::util::{ceil_log, NodeSet};

/// The `(a, B, d)` triple of the optical per-step cost: each step moves up
/// to `d` bits over one wavelength at `B` bits per second after paying the
/// reconfiguration overhead `a`.
#[derive(Debug, Clone)]
pub struct CostModel {
    pub bandwidth_per_wavelength: f64,
    pub step_overhead: f64,
    pub payload_bits: f64,
}

impl CostModel {
    pub fn new(bandwidth_per_wavelength: f64, step_overhead: f64, payload_bits: f64) -> Result<Self> {
        if !(bandwidth_per_wavelength > 0.0) {
            return Err(Error::domain("bandwidth must be positive"));
        }
        if !(step_overhead >= 0.0) {
            return Err(Error::domain("step overhead must be non-negative"));
        }
        if !(payload_bits > 0.0) {
            return Err(Error::domain("payload must be positive"));
        }
        Ok(CostModel {
            bandwidth_per_wavelength,
            step_overhead,
            payload_bits,
        })
    }

    pub fn for_workload(topo: &RingTopology, workload: &Workload) -> Result<Self> {
        CostModel::new(
            topo.bandwidth_per_wavelength,
            topo.reconfig_delay,
            workload.payload_bits() as f64,
        )
    }
}

/// Closed-form communication time for `theta` uniform steps:
/// `d * theta / B + a * theta`.
pub fn comm_time(theta: u64, model: &CostModel) -> f64 {
    let steps = theta as f64;
    model.payload_bits * steps / model.bandwidth_per_wavelength + model.step_overhead * steps
}

/// Fewest communication steps any grouping scheme can achieve on an
/// `N`-node ring with `w` wavelengths: `2 * ceil(log_(2w+1) N)`.
pub fn lower_bound_steps(n_nodes: usize, n_wavelengths: u32) -> Result<u64> {
    if n_nodes < 2 {
        return Err(Error::domain(format!(
            "all-reduce needs at least 2 nodes, got {n_nodes}"
        )));
    }
    if n_wavelengths < 1 {
        return Err(Error::domain("at least one wavelength is required"));
    }
    let m = 2 * u64::from(n_wavelengths) + 1;
    Ok(2 * ceil_log(m, n_nodes as u64))
}

/// Time corresponding to the step lower bound:
/// `2 d ceil(log_m N) / B + 2 a ceil(log_m N)` with `m = 2w + 1`.
pub fn lower_bound_time(n_nodes: usize, n_wavelengths: u32, model: &CostModel) -> Result<f64> {
    if n_nodes < 2 {
        return Err(Error::domain(format!(
            "all-reduce needs at least 2 nodes, got {n_nodes}"
        )));
    }
    if n_wavelengths < 1 {
        return Err(Error::domain("at least one wavelength is required"));
    }
    let m = 2 * u64::from(n_wavelengths) + 1;
    let levels = ceil_log(m, n_nodes as u64) as f64;
    Ok(2.0 * model.payload_bits * levels / model.bandwidth_per_wavelength
        + 2.0 * model.step_overhead * levels)
}

/// Timing of one schedule under a cost model.
#[derive(Debug, Clone)]
pub struct TimingReport {
    pub algorithm: AlgorithmId,
    pub n_nodes: usize,
    pub n_wavelengths: Option<u32>,
    pub step_count: u64,
    pub per_step_times: Vec<f64>,
    pub total_time: f64,
    pub lower_bound_steps: Option<u64>,
    pub lower_bound_time: Option<f64>,
    /// Set when an electrically-priced schedule carried optical wavelength
    /// assignments; they are meaningless on the fat tree and were ignored.
    pub wavelengths_ignored: bool,
}

fn max_payload(step: &crate::schedule::Step) -> Result<f64> {
    step.transfers
        .iter()
        .map(|t| t.payload_bits)
        .fold(None, |acc: Option<f64>, p| {
            Some(acc.map_or(p, |a| a.max(p)))
        })
        .ok_or_else(|| Error::domain("step has no transfers"))
}

/// Price an RWA-assigned schedule on the optical ring. Transfers within a
/// step run concurrently on distinct wavelengths, so each step costs its
/// largest transfer plus the reconfiguration overhead.
pub fn simulate_time(
    schedule: &Schedule,
    model: &CostModel,
    n_wavelengths: Option<u32>,
) -> Result<TimingReport> {
    let mut per_step_times = Vec::with_capacity(schedule.steps.len());
    for step in &schedule.steps {
        for transfer in &step.transfers {
            if transfer.wavelength.is_none() {
                return Err(Error::IncompleteAssignment {
                    step: step.index,
                    src: transfer.src,
                    dst: transfer.dst,
                });
            }
        }
        per_step_times.push(
            max_payload(step)? / model.bandwidth_per_wavelength + model.step_overhead,
        );
    }
    let total_time = per_step_times.iter().sum();
    let (lb_steps, lb_time) = match n_wavelengths {
        Some(w) => (
            Some(lower_bound_steps(schedule.n_nodes, w)?),
            Some(lower_bound_time(schedule.n_nodes, w, model)?),
        ),
        None => (None, None),
    };
    Ok(TimingReport {
        algorithm: schedule.algorithm,
        n_nodes: schedule.n_nodes,
        n_wavelengths,
        step_count: schedule.step_count(),
        per_step_times,
        total_time,
        lower_bound_steps: lb_steps,
        lower_bound_time: lb_time,
        wavelengths_ignored: false,
    })
}

/// Price a schedule on the electrical fat tree: each step pays the
/// worst-case up-down route through the routers plus the serialization of
/// its largest message.
pub fn electrical_time(schedule: &Schedule, params: &FatTreeParams) -> Result<TimingReport> {
    params.validate()?;
    let hops = f64::from(params.route_hops());
    let wavelengths_ignored = schedule.transfers().any(|t| t.wavelength.is_some());
    let mut per_step_times = Vec::with_capacity(schedule.steps.len());
    for step in &schedule.steps {
        per_step_times.push(hops * params.router_delay + max_payload(step)? / params.link_bandwidth);
    }
    let total_time = per_step_times.iter().sum();
    Ok(TimingReport {
        algorithm: schedule.algorithm,
        n_nodes: schedule.n_nodes,
        n_wavelengths: None,
        step_count: schedule.step_count(),
        per_step_times,
        total_time,
        lower_bound_steps: None,
        lower_bound_time: None,
        wavelengths_ignored,
    })
}

/// Outcome of the symbolic correctness check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// `node` never received the contribution of `missing` on chunk `lane`.
    Fail {
        node: usize,
        lane: u32,
        missing: usize,
    },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Per-node, per-lane sets of contributor identities. Node `i` starts with
/// `{i}` on every lane; sets only grow.
#[derive(Debug, Clone)]
pub struct VerificationState {
    n_nodes: usize,
    lane_count: u32,
    sets: Vec<NodeSet>,
}

impl VerificationState {
    pub fn new(n_nodes: usize, lane_count: u32) -> Self {
        let sets = (0..n_nodes)
            .flat_map(|node| {
                (0..lane_count).map(move |_| NodeSet::singleton(n_nodes, node))
            })
            .collect();
        VerificationState {
            n_nodes,
            lane_count,
            sets,
        }
    }

    fn index(&self, node: usize, lane: u32) -> usize {
        node * self.lane_count as usize + lane as usize
    }

    pub fn contains(&self, node: usize, lane: u32, contributor: usize) -> bool {
        self.sets[self.index(node, lane)].contains(contributor)
    }

    /// Apply one step with concurrent semantics: every receiver unions the
    /// sender's pre-step set, for each lane the transfer carries. Reduction
    /// and broadcast are both unions over contributor identities.
    pub fn apply_step(&mut self, step: &crate::schedule::Step) -> Result<()> {
        let mut updates = Vec::new();
        for transfer in &step.transfers {
            if transfer.src >= self.n_nodes || transfer.dst >= self.n_nodes {
                return Err(Error::domain(format!(
                    "transfer {}->{} references a node outside 0..{}",
                    transfer.src, transfer.dst, self.n_nodes
                )));
            }
            if transfer.lanes.end > self.lane_count || transfer.lanes.start >= transfer.lanes.end {
                return Err(Error::domain(format!(
                    "transfer {}->{} carries lanes {}..{} outside 0..{}",
                    transfer.src,
                    transfer.dst,
                    transfer.lanes.start,
                    transfer.lanes.end,
                    self.lane_count
                )));
            }
            for lane in transfer.lanes.iter() {
                updates.push((
                    self.index(transfer.dst, lane),
                    self.sets[self.index(transfer.src, lane)].clone(),
                ));
            }
        }
        for (target, incoming) in updates {
            self.sets[target].union_with(&incoming);
        }
        Ok(())
    }

    /// First `(node, lane, missing contributor)` still incomplete, if any.
    pub fn first_gap(&self) -> Option<(usize, u32, usize)> {
        for node in 0..self.n_nodes {
            for lane in 0..self.lane_count {
                if let Some(missing) = self.sets[self.index(node, lane)].first_missing(self.n_nodes)
                {
                    return Some((node, lane, missing));
                }
            }
        }
        None
    }
}

/// Symbolically execute a schedule and check that every node ends holding
/// contributions from all `N` nodes on every chunk lane.
pub fn verify_allreduce(schedule: &Schedule) -> Result<Verdict> {
    if schedule.lane_count == 0 {
        return Err(Error::domain("schedule has no chunk lanes"));
    }
    let mut state = VerificationState::new(schedule.n_nodes, schedule.lane_count);
    for step in &schedule.steps {
        state.apply_step(step)?;
    }
    Ok(match state.first_gap() {
        None => Verdict::Pass,
        Some((node, lane, missing)) => Verdict::Fail {
            node,
            lane,
            missing,
        },
    })
}
