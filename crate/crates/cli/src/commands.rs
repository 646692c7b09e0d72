//! Subcommand implementations. Exit codes: 0 success, 2 configuration
//! error, 3 wavelength assignment infeasible, 4 verification failure.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use opticollect::analysis::{
    comm_time, electrical_time, lower_bound_steps, lower_bound_time, simulate_time, verify_allreduce,
    CostModel, TimingReport, Verdict,
};
use opticollect::baselines::{
    analytic_steps, build_bt, build_hring, build_rd, build_ring, hring_constructed_steps,
    hring_formula_steps,
};
use opticollect::rwa::{assign_schedule, conflict_check_schedule, wavelengths_used};
use opticollect::wrht::{
    all2all_feasible, build_wrht, terminal_representative_count, wrht_step_count,
};
use opticollect::{AlgorithmId, RingTopology, Schedule, Stage};

use crate::config::{resolve, Cli, Command, CommonArgs, Resolved};

#[derive(Debug)]
pub struct CmdError {
    pub code: u8,
    pub message: String,
}

impl CmdError {
    fn config(message: impl Into<String>) -> Self {
        CmdError {
            code: 2,
            message: message.into(),
        }
    }

    fn verification(message: impl Into<String>) -> Self {
        CmdError {
            code: 4,
            message: message.into(),
        }
    }
}

impl From<opticollect::Error> for CmdError {
    fn from(err: opticollect::Error) -> Self {
        let code = match err {
            opticollect::Error::WavelengthExhausted { .. } => 3,
            _ => 2,
        };
        CmdError {
            code,
            message: err.to_string(),
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CmdError> {
    match &cli.command {
        Command::Steps(args) => steps(&resolve(&cli.params, args)?, args),
        Command::Schedule(args) => schedule(&resolve(&cli.params, args)?, args),
        Command::Verify(args) => verify(&resolve(&cli.params, args)?, args),
        Command::Time(args) => time(&resolve(&cli.params, args)?, args),
        Command::Sweep(args) => sweep(&resolve(&cli.params, args)?, args),
        Command::Table1(args) => table1(&resolve(&cli.params, args)?, args),
        Command::Fig2(args) => fig2(&resolve(&cli.params, args)?),
    }
}

/// Algorithm plus the platform it runs on. `ring` and `o-ring` are the same
/// optical schedule; `e-ring` prices that schedule on the fat tree instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AlgChoice {
    Wrht,
    ORing,
    ERing,
    Bt,
    HRing,
    Rd,
}

impl AlgChoice {
    fn parse(token: &str) -> Result<Self, CmdError> {
        match token.to_ascii_lowercase().as_str() {
            "wrht" => Ok(AlgChoice::Wrht),
            "ring" | "o-ring" | "oring" => Ok(AlgChoice::ORing),
            "e-ring" | "ering" => Ok(AlgChoice::ERing),
            "bt" => Ok(AlgChoice::Bt),
            "h-ring" | "hring" => Ok(AlgChoice::HRing),
            "rd" => Ok(AlgChoice::Rd),
            other => Err(CmdError::config(format!(
                "unknown algorithm {other:?}; expected wrht | ring | o-ring | e-ring | bt | h-ring | rd"
            ))),
        }
    }

    fn label(self) -> &'static str {
        match self {
            AlgChoice::Wrht => "wrht",
            AlgChoice::ORing => "o-ring",
            AlgChoice::ERing => "e-ring",
            AlgChoice::Bt => "bt",
            AlgChoice::HRing => "h-ring",
            AlgChoice::Rd => "rd",
        }
    }

    fn is_electrical(self) -> bool {
        matches!(self, AlgChoice::ERing | AlgChoice::Rd)
    }

    fn algorithm(self) -> AlgorithmId {
        match self {
            AlgChoice::Wrht => AlgorithmId::Wrht,
            AlgChoice::ORing | AlgChoice::ERing => AlgorithmId::Ring,
            AlgChoice::Bt => AlgorithmId::Bt,
            AlgChoice::HRing => AlgorithmId::HRing,
            AlgChoice::Rd => AlgorithmId::Rd,
        }
    }
}

/// Seconds with nine significant digits.
fn fmt_time(seconds: f64) -> String {
    format!("{seconds:.8e}")
}

fn node_counts(args: &CommonArgs) -> Result<Vec<usize>, CmdError> {
    if args.n.is_empty() {
        return Err(CmdError::config("at least one --N is required"));
    }
    let sorted: BTreeSet<usize> = args.n.iter().copied().collect();
    for &n in &sorted {
        if n < 2 {
            return Err(CmdError::config(format!("N must be at least 2, got {n}")));
        }
    }
    Ok(sorted.into_iter().collect())
}

fn algorithms(args: &CommonArgs, cfg: &Resolved) -> Result<Vec<AlgChoice>, CmdError> {
    if args.alg.is_empty() {
        let mut defaults = vec![AlgChoice::Wrht, AlgChoice::ORing, AlgChoice::Bt];
        if cfg.g.is_some() {
            defaults.insert(2, AlgChoice::HRing);
        }
        return Ok(defaults);
    }
    args.alg.iter().map(|token| AlgChoice::parse(token)).collect()
}

fn group_size(cfg: &Resolved) -> Result<usize, CmdError> {
    cfg.g
        .ok_or_else(|| CmdError::config("the hierarchical ring needs --g"))
}

fn build(choice: AlgChoice, n: usize, cfg: &Resolved) -> Result<Schedule, CmdError> {
    let d = cfg.payload_bits();
    Ok(match choice {
        AlgChoice::Wrht => build_wrht(n, cfg.wavelengths, d, cfg.allow_all2all)?.0,
        AlgChoice::ORing | AlgChoice::ERing => build_ring(n, d)?,
        AlgChoice::Bt => build_bt(n, d)?,
        AlgChoice::HRing => build_hring(n, group_size(cfg)?, cfg.wavelengths, d)?,
        AlgChoice::Rd => build_rd(n, d)?,
    })
}

fn analytic(choice: AlgChoice, n: usize, cfg: &Resolved) -> Result<u64, CmdError> {
    let g = if choice == AlgChoice::HRing {
        Some(group_size(cfg)?)
    } else {
        cfg.g
    };
    Ok(analytic_steps(
        choice.algorithm(),
        n,
        cfg.wavelengths,
        g,
        cfg.allow_all2all,
    )?)
}

/// Assign wavelengths and require a conflict-free result.
fn prepare_optical(
    schedule: &mut Schedule,
    topo: &RingTopology,
) -> Result<(), CmdError> {
    assign_schedule(schedule, topo)?;
    let conflicts = conflict_check_schedule(schedule, topo)?;
    if let Some(first) = conflicts.first() {
        return Err(CmdError {
            code: 3,
            message: format!(
                "wavelength conflict in step {}: {}->{} and {}->{} share segment {}->{} on wavelength {}",
                first.step,
                first.first.0,
                first.first.1,
                first.second.0,
                first.second.1,
                first.segment.from,
                first.segment.to,
                first.wavelength
            ),
        });
    }
    Ok(())
}

fn fail_verdict(label: &str, n: usize, verdict: &Verdict) -> CmdError {
    match verdict {
        Verdict::Pass => unreachable!("only called on failures"),
        Verdict::Fail {
            node,
            lane,
            missing,
        } => CmdError::verification(format!(
            "{label} N={n}: node {node} never received the contribution of node {missing} (chunk lane {lane})"
        )),
    }
}

fn steps(cfg: &Resolved, args: &CommonArgs) -> Result<(), CmdError> {
    let ns = node_counts(args)?;
    let algs = algorithms(args, cfg)?;
    for &n in &ns {
        match cfg.g {
            Some(g) => println!("N={n} w={} g={g}", cfg.wavelengths),
            None => println!("N={n} w={}", cfg.wavelengths),
        }
        for &choice in &algs {
            match choice {
                AlgChoice::Wrht => {
                    let full = wrht_step_count(n, cfg.wavelengths, false)?;
                    let survivors = terminal_representative_count(n, cfg.wavelengths)?;
                    if all2all_feasible(survivors, cfg.wavelengths) {
                        let short = wrht_step_count(n, cfg.wavelengths, true)?;
                        println!(
                            "  {:<7} {full} (full tree) / {short} (terminal all-to-all among {survivors})",
                            choice.label()
                        );
                    } else {
                        println!(
                            "  {:<7} {full} (full tree; all-to-all among {survivors} infeasible, would give {})",
                            choice.label(),
                            2 * (full / 2) - 1
                        );
                    }
                }
                AlgChoice::HRing => {
                    let g = group_size(cfg)?;
                    let (formula, exact) = hring_formula_steps(n, g, cfg.wavelengths)?;
                    let note = if exact { "exact" } else { "rounded up" };
                    if n % g == 0 && n / g >= 2 {
                        let constructed = hring_constructed_steps(n, g, cfg.wavelengths)?;
                        println!(
                            "  {:<7} {formula} (formula, {note}; constructed {constructed})",
                            choice.label()
                        );
                    } else {
                        println!(
                            "  {:<7} {formula} (formula, {note}; not constructible, g does not divide N)",
                            choice.label()
                        );
                    }
                }
                _ => {
                    println!("  {:<7} {}", choice.label(), analytic(choice, n, cfg)?);
                }
            }
        }
    }
    Ok(())
}

fn single_point(args: &CommonArgs) -> Result<(String, usize), CmdError> {
    if args.alg.len() != 1 {
        return Err(CmdError::config("exactly one --alg is required"));
    }
    if args.n.len() != 1 {
        return Err(CmdError::config("exactly one --N is required"));
    }
    if args.n[0] < 2 {
        return Err(CmdError::config(format!(
            "N must be at least 2, got {}",
            args.n[0]
        )));
    }
    Ok((args.alg[0].clone(), args.n[0]))
}

fn schedule(cfg: &Resolved, args: &CommonArgs) -> Result<(), CmdError> {
    let (token, n) = single_point(args)?;
    let choice = AlgChoice::parse(&token)?;
    let mut sched = build(choice, n, cfg)?;
    if !choice.is_electrical() {
        let topo = cfg.topology(n)?;
        prepare_optical(&mut sched, &topo)?;
    }
    let json = serde_json::to_string_pretty(&sched)
        .map_err(|e| CmdError::config(format!("serialization failed: {e}")))?;
    println!("{json}");
    for step in &sched.steps {
        eprintln!(
            "step {} ({:?}): {} transfers, {} wavelengths",
            step.index,
            step.stage,
            step.transfers.len(),
            wavelengths_used(step)
        );
    }
    Ok(())
}

fn verify(cfg: &Resolved, args: &CommonArgs) -> Result<(), CmdError> {
    let ns = node_counts(args)?;
    let algs = algorithms(args, cfg)?;
    let mut failure: Option<CmdError> = None;
    for &choice in &algs {
        for &n in &ns {
            let sched = build(choice, n, cfg)?;
            let verdict = verify_allreduce(&sched)?;
            if verdict.passed() {
                println!("{} N={n}: PASS", choice.label());
            } else {
                println!("{} N={n}: FAIL", choice.label());
                failure.get_or_insert(fail_verdict(choice.label(), n, &verdict));
            }
        }
    }
    match failure {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

fn report_for(choice: AlgChoice, n: usize, cfg: &Resolved) -> Result<TimingReport, CmdError> {
    let mut sched = build(choice, n, cfg)?;
    if choice.is_electrical() {
        Ok(electrical_time(&sched, &cfg.fat_tree)?)
    } else {
        let topo = cfg.topology(n)?;
        prepare_optical(&mut sched, &topo)?;
        let model = CostModel::new(
            cfg.bandwidth_per_wavelength,
            cfg.reconfig_delay,
            cfg.payload_bits(),
        )?;
        Ok(simulate_time(&sched, &model, Some(cfg.wavelengths))?)
    }
}

fn time(cfg: &Resolved, args: &CommonArgs) -> Result<(), CmdError> {
    let (token, n) = single_point(args)?;
    let choice = AlgChoice::parse(&token)?;
    let report = report_for(choice, n, cfg)?;
    let platform = if choice.is_electrical() {
        "electrical fat tree"
    } else {
        "optical ring"
    };
    println!("algorithm:      {}", choice.label());
    println!("platform:       {platform}");
    println!("N:              {n}");
    println!("workload:       {} ({} bits)", cfg.workload.name, cfg.workload.payload_bits());
    println!("steps:          {}", report.step_count);
    println!("analytic steps: {}", analytic(choice, n, cfg)?);
    println!("total time:     {} s", fmt_time(report.total_time));
    let shortest = report.per_step_times.iter().cloned().fold(f64::MAX, f64::min);
    let longest = report.per_step_times.iter().cloned().fold(0.0, f64::max);
    println!(
        "per-step time:  {} .. {} s",
        fmt_time(shortest),
        fmt_time(longest)
    );
    if let (Some(lb_steps), Some(lb_time)) = (report.lower_bound_steps, report.lower_bound_time) {
        println!("lower bound:    {lb_steps} steps, {} s", fmt_time(lb_time));
    }
    Ok(())
}

fn sweep_rows(cfg: &Resolved, args: &CommonArgs) -> Result<String, CmdError> {
    let ns = node_counts(args)?;
    let algs = algorithms(args, cfg)?;
    let mut csv = String::from(
        "algorithm,N,w,g,m,steps,analytic_steps,total_time_s,payload_bits,verified\n",
    );
    for &choice in &algs {
        for &n in &ns {
            let mut sched = build(choice, n, cfg)?;
            let verdict = verify_allreduce(&sched)?;
            if !verdict.passed() {
                return Err(fail_verdict(choice.label(), n, &verdict));
            }
            let report = if choice.is_electrical() {
                electrical_time(&sched, &cfg.fat_tree)?
            } else {
                let topo = cfg.topology(n)?;
                prepare_optical(&mut sched, &topo)?;
                let model = CostModel::new(
                    cfg.bandwidth_per_wavelength,
                    cfg.reconfig_delay,
                    cfg.payload_bits(),
                )?;
                simulate_time(&sched, &model, Some(cfg.wavelengths))?
            };
            let g_column = match choice {
                AlgChoice::HRing => group_size(cfg)?.to_string(),
                _ => String::new(),
            };
            let m_column = match choice {
                AlgChoice::Wrht => (2 * cfg.wavelengths as usize + 1).to_string(),
                _ => String::new(),
            };
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},true",
                choice.label(),
                n,
                cfg.wavelengths,
                g_column,
                m_column,
                report.step_count,
                analytic(choice, n, cfg)?,
                fmt_time(report.total_time),
                cfg.workload.payload_bits()
            )
            .expect("writing to a string cannot fail");
        }
    }
    Ok(csv)
}

fn sweep(cfg: &Resolved, args: &CommonArgs) -> Result<(), CmdError> {
    let csv = sweep_rows(cfg, args)?;
    match &args.out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| CmdError::config(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn table1(cfg: &Resolved, args: &CommonArgs) -> Result<(), CmdError> {
    let n = match args.n.as_slice() {
        [] => 1000,
        [n] => *n,
        _ => return Err(CmdError::config("table1 takes at most one --N")),
    };
    if n < 2 {
        return Err(CmdError::config(format!("N must be at least 2, got {n}")));
    }
    let w = cfg.wavelengths;
    let g = cfg.g.unwrap_or(5);

    println!("step-count comparison at N={n}, w={w}, g={g}");
    println!();
    println!("  {:<7} {:<32} steps", "alg", "formula");
    println!(
        "  {:<7} {:<32} {}",
        "ring",
        "2(N-1)",
        analytic_steps(AlgorithmId::Ring, n, w, None, true)?
    );
    let (hring, exact) = hring_formula_steps(n, g, w)?;
    let mut hring_notes = vec![if exact {
        "exact".to_string()
    } else {
        "rounded up".to_string()
    }];
    if n % g == 0 && n / g >= 2 {
        hring_notes.push(format!(
            "constructed schedule: {}",
            hring_constructed_steps(n, g, w)?
        ));
    }
    if (n, g, w) == (1000, 5, 64) {
        hring_notes.push("reference table reports 411: unreproduced".to_string());
    }
    println!(
        "  {:<7} {:<32} {hring} ({})",
        "h-ring",
        "2(g^2+N)/g + ceil(g/w) - 4",
        hring_notes.join("; ")
    );
    println!(
        "  {:<7} {:<32} {}",
        "bt",
        "2 ceil(log2 N)",
        analytic_steps(AlgorithmId::Bt, n, w, None, true)?
    );
    let full = wrht_step_count(n, w, false)?;
    let survivors = terminal_representative_count(n, w)?;
    if all2all_feasible(survivors, w) {
        println!(
            "  {:<7} {:<32} {full} (full tree) / {} (terminal all-to-all among {survivors})",
            "wrht",
            "2L or 2L-1, L=ceil(log_(2w+1) N)",
            wrht_step_count(n, w, true)?
        );
    } else {
        println!(
            "  {:<7} {:<32} {full} (full tree; all-to-all among {survivors} infeasible)",
            "wrht",
            "2L or 2L-1, L=ceil(log_(2w+1) N)"
        );
    }
    Ok(())
}

fn fig2(cfg: &Resolved) -> Result<(), CmdError> {
    let n = 15;
    let w = 2;
    let topo = RingTopology::new(n, w)
        .and_then(|t| t.with_channel(cfg.bandwidth_per_wavelength, cfg.reconfig_delay))?;
    let d = cfg.payload_bits();

    let mut bt = build_bt(n, d)?;
    prepare_optical(&mut bt, &topo)?;
    let bt_verdict = verify_allreduce(&bt)?;
    let bt_usage: Vec<u32> = bt.steps.iter().map(wavelengths_used).collect();
    println!(
        "binary tree, N={n}: {} steps, wavelengths per step {:?}, verify {}",
        bt.step_count(),
        bt_usage,
        if bt_verdict.passed() { "PASS" } else { "FAIL" }
    );

    let (mut wrht, plan) = build_wrht(n, w, d, cfg.allow_all2all)?;
    prepare_optical(&mut wrht, &topo)?;
    let wrht_verdict = verify_allreduce(&wrht)?;
    println!(
        "wrht, N={n}, w={w}: {} steps (group size m={}), verify {}",
        wrht.step_count(),
        plan.m,
        if wrht_verdict.passed() { "PASS" } else { "FAIL" }
    );
    for step in &wrht.steps {
        let stage = match step.stage {
            Stage::Reduce => "reduce",
            Stage::AllToAll => "all2all",
            Stage::Broadcast => "broadcast",
        };
        println!(
            "  step {} ({stage}): {} transfers, {} wavelengths",
            step.index,
            step.transfers.len(),
            wavelengths_used(step)
        );
    }
    for (level, groups) in plan.levels.iter().enumerate() {
        let rendered: Vec<String> = groups
            .iter()
            .map(|g| {
                format!(
                    "[{}..{}] rep {}",
                    g.members.first().unwrap(),
                    g.members.last().unwrap(),
                    g.representative
                )
            })
            .collect();
        println!("  level {}: {}", level + 1, rendered.join(", "));
    }
    let model = CostModel::new(cfg.bandwidth_per_wavelength, cfg.reconfig_delay, d)?;
    println!(
        "wrht time: {} s (closed form {} s); step lower bound {}",
        fmt_time(simulate_time(&wrht, &model, Some(w))?.total_time),
        fmt_time(comm_time(wrht.step_count(), &model)),
        lower_bound_steps(n, w)?
    );
    let _ = lower_bound_time(n, w, &model)?;
    if !bt_verdict.passed() {
        return Err(fail_verdict("bt", n, &bt_verdict));
    }
    if !wrht_verdict.passed() {
        return Err(fail_verdict("wrht", n, &wrht_verdict));
    }
    Ok(())
}
