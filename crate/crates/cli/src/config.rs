//! Command-line surface and experiment configuration.
//!
//! Precedence: command-line flags, then the `--params` JSON file, then the
//! built-in defaults (the simulated-architecture parameter table: 64
//! wavelengths at 40 Gbps, 25 us reconfiguration delay, a two-level 32-port
//! fat tree with 25 Gbps links and 50 us router delay).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use opticollect::{FatTreeParams, RingTopology, Workload};

use crate::commands::CmdError;

#[derive(Parser, Debug)]
#[command(
    name = "opticollect",
    version,
    about = "All-reduce schedules, wavelength assignment, and timing models for optical ring interconnects"
)]
pub struct Cli {
    /// JSON parameter file; explicit flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub params: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print analytic step counts for each algorithm and node count.
    Steps(CommonArgs),
    /// Generate one schedule, assign wavelengths, and dump it as JSON.
    Schedule(CommonArgs),
    /// Run the symbolic all-reduce correctness check on generated schedules.
    Verify(CommonArgs),
    /// Time one schedule under its platform's cost model.
    Time(CommonArgs),
    /// Emit one CSV row per (algorithm, N) grid point.
    Sweep(CommonArgs),
    /// Step-count comparison at N=1000, w=64, g=5.
    Table1(CommonArgs),
    /// The 15-node, 2-wavelength example schedules.
    Fig2(CommonArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Node count (repeatable).
    #[arg(long = "N", value_name = "NODES")]
    pub n: Vec<usize>,

    /// Wavelengths per fiber.
    #[arg(long)]
    pub w: Option<u32>,

    /// Intra-group node count for the hierarchical ring.
    #[arg(long)]
    pub g: Option<usize>,

    /// Algorithm (repeatable): wrht | ring | o-ring | e-ring | bt | h-ring | rd.
    #[arg(long)]
    pub alg: Vec<String>,

    /// Workload preset (alexnet | vgg16 | resnet50 | googlenet).
    #[arg(long)]
    pub model: Option<String>,

    /// End the reduce stage with an all-to-all among representatives when
    /// the wavelength budget allows it (default).
    #[arg(long, overrides_with = "no_all2all")]
    pub allow_all2all: bool,

    /// Always run the full tree depth; never use the terminal all-to-all.
    #[arg(long, overrides_with = "allow_all2all")]
    pub no_all2all: bool,

    /// Write CSV output here instead of standard output.
    #[arg(long, value_name = "CSV-PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub wavelengths: Option<u32>,
    pub fibers_per_direction: Option<u32>,
    pub bandwidth_per_wavelength_bps: Option<f64>,
    pub reconfig_delay_s: Option<f64>,
    pub g: Option<usize>,
    pub allow_all2all: Option<bool>,
    pub workload: Option<WorkloadSpec>,
    pub fat_tree: Option<FatTreeSpec>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub name: Option<String>,
    pub param_count: Option<u64>,
    pub bytes_per_param: Option<u32>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FatTreeSpec {
    pub router_ports: Option<u32>,
    pub levels: Option<u32>,
    pub link_bandwidth_bps: Option<f64>,
    pub router_delay_s: Option<f64>,
    pub packet_size_bytes: Option<u32>,
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub wavelengths: u32,
    pub fibers_per_direction: u32,
    pub bandwidth_per_wavelength: f64,
    pub reconfig_delay: f64,
    pub g: Option<usize>,
    pub allow_all2all: bool,
    pub workload: Workload,
    pub fat_tree: FatTreeParams,
}

impl Resolved {
    pub fn topology(&self, n_nodes: usize) -> Result<RingTopology, CmdError> {
        RingTopology::new(n_nodes, self.wavelengths)
            .and_then(|t| t.with_channel(self.bandwidth_per_wavelength, self.reconfig_delay))
            .and_then(|t| t.with_fibers(self.fibers_per_direction))
            .map_err(config_error)
    }

    pub fn payload_bits(&self) -> f64 {
        self.workload.payload_bits() as f64
    }
}

fn config_error(err: opticollect::Error) -> CmdError {
    CmdError {
        code: 2,
        message: err.to_string(),
    }
}

fn bad_config(message: impl Into<String>) -> CmdError {
    CmdError {
        code: 2,
        message: message.into(),
    }
}

fn load_params(path: &Option<PathBuf>) -> Result<ParamsFile, CmdError> {
    let Some(path) = path else {
        return Ok(ParamsFile::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad_config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| bad_config(format!("invalid parameter file {}: {e}", path.display())))
}

fn resolve_workload(
    model_flag: &Option<String>,
    file: &Option<WorkloadSpec>,
) -> Result<Workload, CmdError> {
    if let Some(name) = model_flag {
        return Workload::preset(name).ok_or_else(|| {
            bad_config(format!(
                "unknown workload {name:?}; presets: {}",
                Workload::preset_names().collect::<Vec<_>>().join(", ")
            ))
        });
    }
    if let Some(spec) = file {
        if let Some(count) = spec.param_count {
            let name = spec.name.clone().unwrap_or_else(|| "custom".to_string());
            return Workload::new(name, count, spec.bytes_per_param.unwrap_or(4))
                .map_err(config_error);
        }
        if let Some(name) = &spec.name {
            return Workload::preset(name)
                .ok_or_else(|| bad_config(format!("unknown workload {name:?}")));
        }
    }
    Ok(Workload::preset("resnet50").expect("builtin preset"))
}

pub fn resolve(params_path: &Option<PathBuf>, args: &CommonArgs) -> Result<Resolved, CmdError> {
    let file = load_params(params_path)?;
    let fat_file = file.fat_tree.unwrap_or_default();
    let fat_defaults = FatTreeParams::default();
    let fat_tree = FatTreeParams {
        router_ports: fat_file.router_ports.unwrap_or(fat_defaults.router_ports),
        levels: fat_file.levels.unwrap_or(fat_defaults.levels),
        link_bandwidth: fat_file
            .link_bandwidth_bps
            .unwrap_or(fat_defaults.link_bandwidth),
        router_delay: fat_file.router_delay_s.unwrap_or(fat_defaults.router_delay),
        packet_size_bytes: fat_file
            .packet_size_bytes
            .unwrap_or(fat_defaults.packet_size_bytes),
    };
    fat_tree.validate().map_err(config_error)?;

    let allow_all2all = if args.no_all2all {
        false
    } else if args.allow_all2all {
        true
    } else {
        file.allow_all2all.unwrap_or(true)
    };

    let resolved = Resolved {
        wavelengths: args
            .w
            .or(file.wavelengths)
            .unwrap_or(RingTopology::DEFAULT_WAVELENGTHS),
        fibers_per_direction: file
            .fibers_per_direction
            .unwrap_or(RingTopology::DEFAULT_FIBERS_PER_DIRECTION),
        bandwidth_per_wavelength: file
            .bandwidth_per_wavelength_bps
            .unwrap_or(RingTopology::DEFAULT_BANDWIDTH_BPS),
        reconfig_delay: file
            .reconfig_delay_s
            .unwrap_or(RingTopology::DEFAULT_RECONFIG_DELAY_S),
        g: args.g.or(file.g),
        allow_all2all,
        workload: resolve_workload(&args.model, &file.workload)?,
        fat_tree,
    };
    if resolved.wavelengths < 1 {
        return Err(bad_config("at least one wavelength is required"));
    }
    Ok(resolved)
}
