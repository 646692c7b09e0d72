//! Acceptance suite. Each criterion prints one PASS/FAIL line; failures
//! then panic with the full violation list.
//!
//! Criterion 8 asserts the complete published ordering chain for the
//! electrical-vs-optical comparison. Its `o-ring > wrht` link does not hold
//! at every grid point under this cost model (a chunked ring all-reduce
//! beats the constant-payload tree once the tree needs a second level), so
//! that test is expected to fail at exactly four grid points; the assertion
//! is kept as stated rather than weakened to match the model.

use std::process::Command;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use opticollect::analysis::{
    comm_time, electrical_time, lower_bound_steps, lower_bound_time, simulate_time,
    verify_allreduce, CostModel,
};
use opticollect::baselines::{
    analytic_steps, build_bt, build_hring, build_rd, build_ring, hring_formula_steps,
};
use opticollect::rwa::{
    a2a_wavelength_bound, assign_schedule, conflict_check_schedule, group_wavelength_demand,
    max_segment_load, wavelengths_used,
};
use opticollect::wrht::{all_to_all_transfers, build_wrht, wrht_step_count};
use opticollect::{AlgorithmId, FatTreeParams, RingTopology, Schedule, Stage, Step, Workload};

const TABLE2_BANDWIDTH: f64 = 40e9;
const TABLE2_RECONFIG: f64 = 25e-6;
const TABLE2_WAVELENGTHS: u32 = 64;

fn table2_topology(n: usize, w: u32) -> RingTopology {
    RingTopology::new(n, w)
        .and_then(|t| t.with_channel(TABLE2_BANDWIDTH, TABLE2_RECONFIG))
        .unwrap()
}

fn model_for(workload: &Workload) -> CostModel {
    CostModel::new(
        TABLE2_BANDWIDTH,
        TABLE2_RECONFIG,
        workload.payload_bits() as f64,
    )
    .unwrap()
}

fn finish(name: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("criterion {name}: PASS");
    } else {
        println!("criterion {name}: FAIL ({} violations)", failures.len());
        panic!("criterion {name} failed:\n{}", failures.join("\n"));
    }
}

fn check(failures: &mut Vec<String>, ok: bool, detail: impl FnOnce() -> String) {
    if !ok {
        failures.push(detail());
    }
}

fn assigned(mut schedule: Schedule, topo: &RingTopology) -> Schedule {
    assign_schedule(&mut schedule, topo).unwrap();
    assert!(conflict_check_schedule(&schedule, topo).unwrap().is_empty());
    schedule
}

#[test]
fn criterion_1_step_count_table() {
    let start = Instant::now();
    let mut failures = Vec::new();
    check(
        &mut failures,
        analytic_steps(AlgorithmId::Ring, 1000, 64, None, true).unwrap() == 1998,
        || "ring(1000) != 1998".to_string(),
    );
    check(
        &mut failures,
        analytic_steps(AlgorithmId::Bt, 1000, 64, None, true).unwrap() == 20,
        || "bt(1000) != 20".to_string(),
    );
    check(
        &mut failures,
        wrht_step_count(1000, 64, false).unwrap() == 4,
        || "wrht(1000, 64, full tree) != 4".to_string(),
    );
    let (hring, exact) = hring_formula_steps(1000, 5, 64).unwrap();
    check(&mut failures, hring == 407 && exact, || {
        format!("h-ring formula at (1000, g=5, w=64) gave {hring} (exact={exact}), expected exact 407")
    });
    println!(
        "  note: h-ring formula value is 407; the reference table prints 411, which the \
         formula does not reproduce (documented discrepancy)"
    );
    let elapsed = start.elapsed();
    check(&mut failures, elapsed.as_secs_f64() < 1.0, || {
        format!("step table took {elapsed:?}, budget 1 s")
    });
    finish("1 (step-count table)", failures);
}

#[test]
fn criterion_2_fifteen_node_example() {
    let mut failures = Vec::new();
    let bt = build_bt(15, 8e8).unwrap();
    check(&mut failures, bt.step_count() == 8, || {
        format!("bt(15) produced {} steps, expected 8", bt.step_count())
    });

    let topo = table2_topology(15, 2);
    let (wrht, _) = build_wrht(15, 2, 8e8, true).unwrap();
    check(&mut failures, wrht.step_count() == 3, || {
        format!("wrht(15, 2) produced {} steps, expected 3", wrht.step_count())
    });
    let wrht = assigned(wrht, &topo);
    for step in &wrht.steps {
        let used = wavelengths_used(step);
        check(&mut failures, used <= 2, || {
            format!("wrht(15, 2) step {} uses {used} wavelengths, budget 2", step.index)
        });
    }
    check(
        &mut failures,
        verify_allreduce(&wrht).unwrap().passed(),
        || "wrht(15, 2) failed the all-reduce oracle".to_string(),
    );
    finish("2 (fifteen-node example)", failures);
}

#[test]
fn criterion_3_closed_form_equivalence() {
    let mut failures = Vec::new();
    let workload = Workload::preset("resnet50").unwrap();
    let model = model_for(&workload);
    let mut rng = StdRng::seed_from_u64(7);
    for sample in 0..200 {
        let n = rng.gen_range(2usize..=4096);
        let w = rng.gen_range(1u32..=64);
        let topo = table2_topology(n, w);
        let schedules = [
            assigned(
                build_wrht(n, w, model.payload_bits, sample % 2 == 0).unwrap().0,
                &topo,
            ),
            assigned(build_bt(n, model.payload_bits).unwrap(), &topo),
        ];
        for sched in schedules {
            let simulated = simulate_time(&sched, &model, Some(w)).unwrap().total_time;
            let closed = comm_time(sched.step_count(), &model);
            let relative = (simulated - closed).abs() / closed;
            check(&mut failures, relative <= 1e-12, || {
                format!(
                    "{:?} n={n} w={w}: simulated {simulated} vs closed form {closed} (rel {relative:e})",
                    sched.algorithm
                )
            });
        }
    }
    finish("3 (closed-form equivalence, 200 samples)", failures);
}

#[test]
fn criterion_4_lower_bounds() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let workload = Workload::preset("resnet50").unwrap();
    let model = model_for(&workload);
    for n in 2usize..=4096 {
        for w in [1u32, 2, 4, 8, 16, 32, 64] {
            let bound = lower_bound_steps(n, w).unwrap();
            let steps = wrht_step_count(n, w, false).unwrap();
            if steps != bound {
                failures.push(format!("n={n} w={w}: steps {steps} != bound {bound}"));
            }
            let bound_time = lower_bound_time(n, w, &model).unwrap();
            let closed = comm_time(bound, &model);
            if bound_time != closed {
                failures.push(format!(
                    "n={n} w={w}: bound time {bound_time} != comm_time {closed}"
                ));
            }
            if failures.len() > 8 {
                finish("4 (step and time lower bounds)", failures);
                return;
            }
        }
    }
    let elapsed = start.elapsed();
    check(&mut failures, elapsed.as_secs_f64() < 10.0, || {
        format!("lower-bound sweep took {elapsed:?}, budget 10 s")
    });
    finish("4 (step and time lower bounds)", failures);
}

fn wrht_matrix() -> Vec<(usize, u32, bool)> {
    let mut points = Vec::new();
    for n in 2usize..=128 {
        for w in [1u32, 2, 4, 8, 64] {
            for allow in [false, true] {
                points.push((n, w, allow));
            }
        }
    }
    points
}

fn hring_matrix() -> Vec<(usize, usize, u32)> {
    let mut points = Vec::new();
    for n in [8usize, 16, 32, 64, 128] {
        for g in [2usize, 4, 8] {
            if n % g == 0 && n / g >= 2 {
                for w in [1u32, 64] {
                    points.push((n, g, w));
                }
            }
        }
    }
    points
}

#[test]
fn criterion_5_correctness_oracle() {
    let mut failures = Vec::new();
    for (n, w, allow) in wrht_matrix() {
        let (sched, _) = build_wrht(n, w, 32.0, allow).unwrap();
        check(
            &mut failures,
            verify_allreduce(&sched).unwrap().passed(),
            || format!("wrht n={n} w={w} allow={allow} failed verification"),
        );
    }
    for n in 2usize..=128 {
        for sched in [
            build_ring(n, 32.0).unwrap(),
            build_bt(n, 32.0).unwrap(),
            build_rd(n, 32.0).unwrap(),
        ] {
            check(
                &mut failures,
                verify_allreduce(&sched).unwrap().passed(),
                || format!("{:?} n={n} failed verification", sched.algorithm),
            );
        }
    }
    for (n, g, w) in hring_matrix() {
        let sched = build_hring(n, g, w, 32.0).unwrap();
        check(
            &mut failures,
            verify_allreduce(&sched).unwrap().passed(),
            || format!("h-ring n={n} g={g} w={w} failed verification"),
        );
    }
    // Mutation check: removing any single broadcast step must break the
    // all-reduce.
    for (n, w, allow) in [(15usize, 2u32, true), (27, 1, false), (64, 2, false), (128, 64, false)] {
        let (sched, _) = build_wrht(n, w, 32.0, allow).unwrap();
        let broadcast_indices: Vec<usize> = sched
            .steps
            .iter()
            .enumerate()
            .filter(|(_, s)| s.stage == Stage::Broadcast)
            .map(|(i, _)| i)
            .collect();
        check(&mut failures, !broadcast_indices.is_empty(), || {
            format!("wrht n={n} w={w} has no broadcast step to mutate")
        });
        for index in broadcast_indices {
            let mut mutated = sched.clone();
            mutated.steps.remove(index);
            check(
                &mut failures,
                !verify_allreduce(&mutated).unwrap().passed(),
                || format!("wrht n={n} w={w}: deleting broadcast step {index} still verifies"),
            );
        }
    }
    finish("5 (correctness oracle and mutation check)", failures);
}

#[test]
fn criterion_6_rwa_properties() {
    let mut failures = Vec::new();
    // Group-collect steps: first-fit usage per group equals ceil((k-1)/2).
    for (n, w, allow) in wrht_matrix() {
        if allow {
            continue;
        }
        let topo = table2_topology(n, w);
        let (sched, plan) = build_wrht(n, w, 32.0, false).unwrap();
        let sched = assigned(sched, &topo);
        let reduce_steps: Vec<&Step> = sched
            .steps
            .iter()
            .filter(|s| s.stage == Stage::Reduce)
            .collect();
        for (level, groups) in plan.levels.iter().enumerate() {
            for group in groups {
                let members = &group.members;
                let mut lambdas: Vec<u32> = reduce_steps[level]
                    .transfers
                    .iter()
                    .filter(|t| t.dst == group.representative && members.contains(&t.src))
                    .filter_map(|t| t.wavelength)
                    .collect();
                lambdas.sort_unstable();
                lambdas.dedup();
                let expected = group_wavelength_demand(members.len());
                check(
                    &mut failures,
                    lambdas.len() as u32 == expected,
                    || {
                        format!(
                            "n={n} w={w} level {level}: group of {} used {} wavelengths, expected {expected}",
                            members.len(),
                            lambdas.len()
                        )
                    },
                );
            }
        }
    }
    // All-to-all among equally spaced representatives: the routing keeps
    // every fiber segment within the ceil(r^2/8) wavelength requirement.
    for r in 2usize..=24 {
        let bound = a2a_wavelength_bound(r).unwrap();
        for spacing in [1usize, 5] {
            let n = (r * spacing).max(2);
            let topo = RingTopology::new(n, 256).unwrap();
            let reps: Vec<usize> = (0..r).map(|i| i * spacing).collect();
            let step = Step {
                index: 0,
                stage: Stage::AllToAll,
                transfers: all_to_all_transfers(&reps, 8.0),
            };
            let load = u64::from(max_segment_load(&step, &topo).unwrap());
            check(&mut failures, load <= bound, || {
                format!("a2a r={r} spacing={spacing}: segment load {load} > bound {bound}")
            });
        }
    }
    // Zero conflicts across the full generator matrix; `assigned` asserts
    // an empty conflict list internally.
    for (n, w, allow) in wrht_matrix() {
        let topo = table2_topology(n, w);
        let _ = assigned(build_wrht(n, w, 32.0, allow).unwrap().0, &topo);
    }
    for n in 2usize..=128 {
        let topo = table2_topology(n, 1);
        let _ = assigned(build_ring(n, 32.0).unwrap(), &topo);
        let _ = assigned(build_bt(n, 32.0).unwrap(), &topo);
    }
    for (n, g, w) in hring_matrix() {
        let topo = table2_topology(n, w);
        let _ = assigned(build_hring(n, g, w, 32.0).unwrap(), &topo);
    }
    finish("6 (wavelength assignment properties)", failures);
}

#[test]
fn criterion_7_optical_trend() {
    let mut failures = Vec::new();
    let grid = [1024usize, 2048, 3072, 4096];
    for name in Workload::preset_names() {
        let workload = Workload::preset(name).unwrap();
        let model = model_for(&workload);
        let time_of = |steps: u64| comm_time(steps, &model);

        let wrht: Vec<f64> = grid
            .iter()
            .map(|&n| time_of(wrht_step_count(n, TABLE2_WAVELENGTHS, false).unwrap()))
            .collect();
        let ring: Vec<f64> = grid
            .iter()
            .map(|&n| time_of(analytic_steps(AlgorithmId::Ring, n, TABLE2_WAVELENGTHS, None, false).unwrap()))
            .collect();
        let hring: Vec<f64> = grid
            .iter()
            .map(|&n| time_of(hring_formula_steps(n, 5, TABLE2_WAVELENGTHS).unwrap().0))
            .collect();
        let bt: Vec<f64> = grid
            .iter()
            .map(|&n| time_of(analytic_steps(AlgorithmId::Bt, n, TABLE2_WAVELENGTHS, None, false).unwrap()))
            .collect();

        for t in &wrht[1..] {
            check(&mut failures, *t == wrht[0], || {
                format!("{name}: tree time varies across the grid: {wrht:?}")
            });
        }
        for pair in ring.windows(2) {
            check(&mut failures, pair[1] > pair[0], || {
                format!("{name}: ring time not strictly increasing: {ring:?}")
            });
        }
        let first_delta = ring[1] - ring[0];
        for pair in ring.windows(2) {
            let delta = pair[1] - pair[0];
            check(
                &mut failures,
                (delta - first_delta).abs() <= 1e-9 * first_delta,
                || format!("{name}: ring growth not affine: deltas {delta} vs {first_delta}"),
            );
        }
        for (i, &n) in grid.iter().enumerate() {
            check(&mut failures, wrht[i] < hring[i], || {
                format!("{name} N={n}: wrht {} !< h-ring {}", wrht[i], hring[i])
            });
            check(&mut failures, hring[i] < ring[i], || {
                format!("{name} N={n}: h-ring {} !< ring {}", hring[i], ring[i])
            });
            check(&mut failures, bt[i] > wrht[i], || {
                format!("{name} N={n}: bt {} !> wrht {}", bt[i], wrht[i])
            });
        }
    }
    finish("7 (optical-trend ordering)", failures);
}

#[test]
fn criterion_8_electrical_vs_optical_trend() {
    let mut failures = Vec::new();
    let grid = [128usize, 256, 512, 1024];
    let fat_tree = FatTreeParams::default();
    for name in ["vgg16", "resnet50"] {
        let workload = Workload::preset(name).unwrap();
        let d = workload.payload_bits() as f64;
        let model = model_for(&workload);
        let electrical_step = f64::from(fat_tree.route_hops()) * fat_tree.router_delay
            + d / fat_tree.link_bandwidth;
        for &n in &grid {
            let e_ring = (2 * (n - 1)) as f64 * electrical_step;
            let rd = electrical_time(&build_rd(n, d).unwrap(), &fat_tree)
                .unwrap()
                .total_time;
            let topo = table2_topology(n, TABLE2_WAVELENGTHS);
            let o_ring = simulate_time(
                &assigned(build_ring(n, d).unwrap(), &topo),
                &model,
                Some(TABLE2_WAVELENGTHS),
            )
            .unwrap()
            .total_time;
            let wrht = simulate_time(
                &assigned(build_wrht(n, TABLE2_WAVELENGTHS, d, true).unwrap().0, &topo),
                &model,
                Some(TABLE2_WAVELENGTHS),
            )
            .unwrap()
            .total_time;

            check(&mut failures, e_ring > rd, || {
                format!("{name} N={n}: e-ring {e_ring:.6} !> rd {rd:.6}")
            });
            check(&mut failures, rd > o_ring, || {
                format!("{name} N={n}: rd {rd:.6} !> o-ring {o_ring:.6}")
            });
            check(&mut failures, o_ring > wrht, || {
                format!("{name} N={n}: o-ring {o_ring:.6} !> wrht {wrht:.6}")
            });
            check(&mut failures, e_ring > 2.0 * o_ring, || {
                format!("{name} N={n}: e-ring {e_ring:.6} not twice o-ring {o_ring:.6}")
            });
        }
    }
    finish("8 (electrical-vs-optical ordering)", failures);
}

#[test]
fn criterion_9_sweep_determinism() {
    let mut failures = Vec::new();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_opticollect"))
            .args([
                "sweep", "--alg", "wrht", "--alg", "ring", "--alg", "bt", "--N", "36", "--N",
                "24", "--w", "8", "--model", "googlenet",
            ])
            .output()
            .expect("sweep run")
    };
    let first = run();
    let second = run();
    check(&mut failures, first.status.success(), || {
        format!(
            "sweep exited with {:?}: {}",
            first.status.code(),
            String::from_utf8_lossy(&first.stderr)
        )
    });
    check(&mut failures, first.stdout == second.stdout, || {
        "consecutive sweep runs differ".to_string()
    });
    let text = String::from_utf8_lossy(&first.stdout);
    check(
        &mut failures,
        text.starts_with("algorithm,N,w,g,m,steps,analytic_steps,total_time_s,payload_bits,verified\n"),
        || format!("unexpected CSV header: {}", text.lines().next().unwrap_or("")),
    );
    check(&mut failures, text.lines().count() == 7, || {
        format!("expected 7 CSV lines, got {}", text.lines().count())
    });
    check(
        &mut failures,
        text.lines().skip(1).all(|line| line.ends_with(",true")),
        || "a row was emitted without the verification gate".to_string(),
    );
    finish("9 (sweep determinism)", failures);
}
