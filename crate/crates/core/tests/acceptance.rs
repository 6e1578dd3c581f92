//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line to stderr before asserting. The C26 degeneracy check is extended tier:
//! run it with `cargo test --release -p cqa-core --test acceptance -- --ignored`.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use cqa_core::diagnosis::{
    consistent_assignments, diagnosis_at, enumerate_valid, is_valid, DEFAULT_CAP,
};
use cqa_core::evolve::{Annealer, EvolutionResult, EvolveOptions, DEFAULT_TOL};
use cqa_core::hamiltonian::{driver_generators, ReducedIndex};
use cqa_core::instances::{random_circuit, sample_instances, seeded_rng, Filter};
use cqa_core::schedule::{envelopes, s_param, ParamSchedule, ScheduleSpec};
use cqa_core::spectrum::{gap_trace, min_gap, MinGap};
use cqa_core::{
    build_final, builtin_topology, generate_instance, generate_named, mfd_bruteforce,
    mfd_by_fault_planting, transition_graph_check, CampaignSpec, DriverSign, GateKind, Instance,
    MfdResult,
};
use rand_core::RngCore;

fn verdict(n: u32, what: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    // Straight to the stderr handle so the line shows up under output capture.
    let _ = writeln!(
        std::io::stderr(),
        "criterion {n:>2}: {tag}  {what}: {detail}"
    );
    assert!(ok, "criterion {n} failed: {what}: {detail}");
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn c17_instances(count: usize, seed: u64) -> Vec<Instance> {
    (0..count as u64)
        .map(|stream| generate_named("c17", seed, stream, Default::default()).unwrap())
        .collect()
}

fn filtered(base: &str, count: usize, seed: u64, filter: Filter) -> Vec<(Instance, MfdResult)> {
    let mut spec = CampaignSpec::new(base, count, seed);
    spec.filter = filter;
    sample_instances(&spec).unwrap().0
}

#[test]
fn criterion_01_nand_table() {
    #[rustfmt::skip]
    const TABLE: [&str; 32] = [
        "(0,0,0;0,0,1)", "(0,0,0;1,0,1)", "(0,0,0;0,1,1)", "(0,0,0;1,1,1)",
        "(1,0,0;0,0,1)", "(1,0,0;1,0,1)", "(1,0,0;0,1,1)", "(1,0,0;1,1,1)",
        "(0,1,0;0,0,1)", "(0,1,0;1,0,1)", "(0,1,0;0,1,1)", "(0,1,0;1,1,1)",
        "(1,1,0;0,0,0)", "(1,1,0;1,0,0)", "(1,1,0;0,1,0)", "(1,1,0;1,1,0)",
        "(0,0,1;0,0,0)", "(0,0,1;1,0,0)", "(0,0,1;0,1,0)", "(0,0,1;1,1,0)",
        "(1,0,1;0,0,0)", "(1,0,1;1,0,0)", "(1,0,1;0,1,0)", "(1,0,1;1,1,0)",
        "(0,1,1;0,0,0)", "(0,1,1;1,0,0)", "(0,1,1;0,1,0)", "(0,1,1;1,1,0)",
        "(1,1,1;0,0,1)", "(1,1,1;1,0,1)", "(1,1,1;0,1,1)", "(1,1,1;1,1,1)",
    ];
    let start = Instant::now();
    let mut got: Vec<String> = consistent_assignments(GateKind::Nand)
        .iter()
        .map(|c| c.to_string())
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let mut want: Vec<String> = TABLE.iter().map(|s| s.to_string()).collect();
    let raw = got.len();
    got.sort();
    want.sort();
    let ok = raw == 32 && got == want && elapsed < 1.0;
    verdict(
        1,
        "NAND consistent assignments",
        ok,
        format!("{raw} rows, match={}, {elapsed:.3}s", got == want),
    );
}

#[test]
fn criterion_02_valid_space_cardinality() {
    let start = Instant::now();
    let mut counts = Vec::new();
    let mut all_valid = true;
    for inst in c17_instances(20, 2) {
        let mut n = 0usize;
        for d in enumerate_valid(&inst, DEFAULT_CAP).unwrap() {
            all_valid &= is_valid(&inst, &d);
            n += 1;
        }
        counts.push(n);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = counts.iter().all(|&n| n == 1 << 15) && all_valid && elapsed < 60.0;
    verdict(
        2,
        "valid diagnoses per C17 instance",
        ok,
        format!(
            "{} instances, counts from {} to {}, all valid {all_valid}, {elapsed:.1}s",
            counts.len(),
            counts.iter().min().unwrap(),
            counts.iter().max().unwrap()
        ),
    );
}

#[test]
fn criterion_03_driver_structure() {
    let start = Instant::now();
    let mut ok = true;
    let mut fingerprints = Vec::new();
    for inst in c17_instances(20, 3) {
        let r = transition_graph_check(&inst).unwrap();
        ok &= r.connected && r.regular && r.degree == 21 && r.nodes == 1 << 15;
        fingerprints.push(r.masks);
    }
    let c17_same = fingerprints.windows(2).all(|w| w[0] == w[1]);
    let mut c26_masks = Vec::new();
    let mut c26_ok = true;
    for stream in 0..2 {
        let inst = generate_named("c26", 3, stream, Default::default()).unwrap();
        let r = transition_graph_check(&inst).unwrap();
        c26_ok &= r.connected && r.regular && r.degree == 30 && r.nodes == 1 << 22;
        c26_masks.push(r.masks);
    }
    let c26_same = c26_masks[0] == c26_masks[1];
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        3,
        "transition graph regular and connected",
        ok && c17_same && c26_ok && c26_same && elapsed < 120.0,
        format!(
            "C17 degree 21 on 20 instances {ok}, masks identical {c17_same}; C26 degree 30 {c26_ok}, masks identical {c26_same}; {elapsed:.1}s"
        ),
    );
}

#[test]
fn criterion_04_nand_moves() {
    let topo = builtin_topology("c17").unwrap();
    let mut ok = true;
    let mut details = Vec::new();
    for (g, gate) in topo.gates().iter().enumerate() {
        if gate.kind != GateKind::Nand {
            continue;
        }
        // The local state pins observed wires (primary inputs without a fault
        // flag, outputs), so search observations until one admits it.
        let (ni, no) = (topo.n_inputs(), topo.n_outputs());
        let found = (0..1usize << (ni + no)).find_map(|obs| {
            let inputs = (0..ni).map(|k| obs >> k & 1 == 1).collect();
            let outputs = (0..no).map(|k| obs >> (ni + k) & 1 == 1).collect();
            let inst = Instance::new(topo.clone(), inputs, outputs).unwrap();
            let index = ReducedIndex::new(&inst).unwrap();
            (0..index.dimension())
                .find(|&i| index.decode(i).local(gate).to_string() == "(1,0,0;0,0,1)")
                .map(|i| (inst, i))
        });
        let Some((inst, start)) = found else {
            ok = false;
            details.push(format!("gate {g}: no (1,0,0;0,0,1) state"));
            continue;
        };
        let before = diagnosis_at(&inst, start);
        let mut moved: Vec<String> = Vec::new();
        for gen in driver_generators(&topo).iter().filter(|x| x.gate == g) {
            let after = diagnosis_at(&inst, start ^ gen.mask);
            moved.push(after.local(gate).to_string());
            ok &= is_valid(&inst, &after);
            for w in 0..topo.wire_count() {
                let on_gate_input = gate.inputs.contains(&w);
                let flipped = before.wire_values[w] != after.wire_values[w];
                // Only the gate's own inputs change value; their fault flags
                // toggle with them, and the output flag follows consistency.
                ok &= !flipped || on_gate_input;
                let fault_changed = before.fault_flags[w] != after.fault_flags[w];
                if flipped {
                    ok &= fault_changed;
                } else if fault_changed {
                    ok &= gate.outputs.contains(&w);
                }
            }
        }
        moved.sort();
        let mut want = vec!["(0,0,0;1,0,1)", "(1,1,0;0,1,0)", "(0,1,0;1,1,1)"];
        want.sort();
        ok &= moved == want;
        details.push(format!("gate {g}: {}", moved.join(" ")));
    }
    verdict(
        4,
        "NAND generator moves from (1,0,0;0,0,1)",
        ok,
        details.join("; "),
    );
}

#[test]
fn criterion_05_gap_endpoints() {
    let start = Instant::now();
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut degenerate = 0;
    for inst in c17_instances(50, 5) {
        let trace = gap_trace(&inst, 3, DriverSign::Stoquastic).unwrap();
        let first = trace.samples.first().unwrap();
        let last = trace.samples.last().unwrap();
        let m = mfd_bruteforce(&inst).unwrap();
        let mut next = usize::MAX;
        for d in enumerate_valid(&inst, DEFAULT_CAP).unwrap() {
            let f = d.fault_count();
            if f > m.min_faults {
                next = next.min(f);
            }
        }
        let want_end = if m.degeneracy > 1 {
            degenerate += 1;
            0.0
        } else {
            2.0 * (next - m.min_faults) as f64
        };
        let e0 = (first.gap - 4.0).abs();
        let e1 = (last.gap - want_end).abs();
        worst = worst.max(e0).max(e1);
        ok &= first.s == 0.0 && last.s == 1.0 && e0 <= 1e-9 && e1 <= 1e-9;
        ok &= want_end == 0.0 || (want_end >= 2.0 && want_end % 2.0 == 0.0);
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        5,
        "gap(0) = 4 and gap(1) from fault counts",
        ok && elapsed < 600.0,
        format!("50 instances ({degenerate} degenerate), worst error {worst:.2e}, {elapsed:.1}s"),
    );
}

struct GapStudy {
    stoq: Vec<MinGap>,
    nonstoq: Vec<MinGap>,
    /// Wall time of each driver's 50 traces, sampling included in the first.
    seconds: [f64; 2],
}

fn gap_study() -> &'static GapStudy {
    static STUDY: OnceLock<GapStudy> = OnceLock::new();
    STUDY.get_or_init(|| {
        let start = Instant::now();
        let picked = filtered(
            "c17",
            50,
            6,
            Filter {
                non_degenerate: true,
                min_faults: None,
            },
        );
        let run = |sign| {
            picked
                .iter()
                .map(|(inst, _)| min_gap(&gap_trace(inst, 100, sign).unwrap()).unwrap())
                .collect::<Vec<_>>()
        };
        let stoq = run(DriverSign::Stoquastic);
        let first = start.elapsed().as_secs_f64();
        let nonstoq = run(DriverSign::NonStoquastic);
        let second = start.elapsed().as_secs_f64() - first;
        GapStudy {
            stoq,
            nonstoq,
            seconds: [first, second],
        }
    })
}

#[test]
fn criterion_06_gap_location() {
    let study = gap_study();
    let late = study.stoq.iter().filter(|m| m.s >= 2.0 / 3.0).count();
    let frac = late as f64 / study.stoq.len() as f64;
    let locs: Vec<f64> = study.stoq.iter().map(|m| m.s).collect();
    verdict(
        6,
        "minimum gap in the last third",
        frac >= 0.75 && study.seconds[0] < 1800.0,
        format!(
            "{late}/{} with s* >= 2/3 ({:.0}%), median s* {:.3}, {:.0}s",
            study.stoq.len(),
            100.0 * frac,
            median(&locs),
            study.seconds[0]
        ),
    );
}

#[test]
fn criterion_07_nonstoquastic_smaller_gap() {
    let study = gap_study();
    let gs: Vec<f64> = study.stoq.iter().map(|m| m.gap).collect();
    let gn: Vec<f64> = study.nonstoq.iter().map(|m| m.gap).collect();
    let (ms, mn) = (median(&gs), median(&gn));
    verdict(
        7,
        "non-stoquastic median min-gap below stoquastic",
        mn < ms && study.seconds[1] < 1800.0,
        format!(
            "median nonstoquastic {mn:.4} vs stoquastic {ms:.4} over {} instances, {:.0}s",
            gs.len(),
            study.seconds[1]
        ),
    );
}

struct AnnealStudy {
    /// Per instance: (linear 40, param 40, linear 80, param 80).
    runs: Vec<[EvolutionResult; 4]>,
    instances: Vec<Instance>,
}

fn anneal_study() -> &'static AnnealStudy {
    static STUDY: OnceLock<AnnealStudy> = OnceLock::new();
    STUDY.get_or_init(|| {
        let picked = filtered(
            "c17",
            21,
            8,
            Filter {
                non_degenerate: true,
                min_faults: Some(1),
            },
        );
        let opts = EvolveOptions::with_tol(DEFAULT_TOL);
        let mut runs = Vec::new();
        for (inst, _) in &picked {
            let a = Annealer::new(inst, DriverSign::Stoquastic).unwrap();
            let go = |spec: ScheduleSpec| a.run_spec(&spec, None, None, &opts).unwrap();
            runs.push([
                go(ScheduleSpec::linear(40.0)),
                go(ScheduleSpec::param(40.0, 20.0, 0.75)),
                go(ScheduleSpec::linear(80.0)),
                go(ScheduleSpec::param(80.0, 20.0, 0.75)),
            ]);
        }
        AnnealStudy {
            runs,
            instances: picked.into_iter().map(|(i, _)| i).collect(),
        }
    })
}

#[test]
fn criterion_08_param_beats_linear() {
    let study = anneal_study();
    let col = |k: usize| {
        median(
            &study
                .runs
                .iter()
                .map(|r| r[k].success_probability)
                .collect::<Vec<_>>(),
        )
    };
    let (l40, p40, l80, p80) = (col(0), col(1), col(2), col(3));
    verdict(
        8,
        "parameterized schedule beats linear",
        study.runs.len() >= 20 && p40 > l40 && p80 > l80,
        format!(
            "{} one-fault instances; Tf=40 median P param {p40:.3e} vs linear {l40:.3e}; Tf=80 param {p80:.3e} vs linear {l80:.3e}",
            study.runs.len()
        ),
    );
}

#[test]
#[ignore = "extended tier: C26 evolutions take hours"]
fn criterion_09_c26_degeneracy_trend() {
    let opts = EvolveOptions::with_tol(DEFAULT_TOL);
    let mut degeneracy = Vec::new();
    let mut success = Vec::new();
    for stream in 0..30 {
        let inst = generate_named("c26", 9, stream, Default::default()).unwrap();
        let a = Annealer::new(&inst, DriverSign::Stoquastic).unwrap();
        let r = a
            .run_spec(&ScheduleSpec::param(40.0, 20.0, 0.75), None, None, &opts)
            .unwrap();
        degeneracy.push(r.degeneracy as f64);
        success.push(r.success_probability);
    }
    let rho = spearman(&degeneracy, &success);
    let mut medians = Vec::new();
    for k in 1..=3 {
        let picked = filtered(
            "c26",
            10,
            90 + k as u64,
            Filter {
                non_degenerate: true,
                min_faults: Some(k),
            },
        );
        let logs: Vec<f64> = picked
            .iter()
            .map(|(inst, _)| {
                let t = gap_trace(inst, 100, DriverSign::Stoquastic).unwrap();
                min_gap(&t).unwrap().gap.log10()
            })
            .collect();
        medians.push(median(&logs));
    }
    let spread = medians.iter().cloned().fold(f64::MIN, f64::max)
        - medians.iter().cloned().fold(f64::MAX, f64::min);
    verdict(
        9,
        "C26 degeneracy helps, min-gap mildly dependent on fault count",
        rho > 0.0 && spread < 1.0,
        format!("Spearman {rho:.3} over 30 instances; median log10 min-gap by fault count {medians:.3?}, spread {spread:.3}"),
    );
}

#[test]
fn criterion_10_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = seeded_rng(10, 0);
    let mut checked = 0;
    let mut ok = true;
    let mut seed = 0u64;
    while checked < 200 {
        seed += 1;
        let n_in = 2 + (rng.next_u64() % 3) as usize;
        let n_gates = 1 + (rng.next_u64() % 5) as usize;
        let n_out = 1 + (rng.next_u64() % 3) as usize;
        let circuit = random_circuit(n_in, n_gates, n_out, seed);
        if circuit.free_wire_count() > 12 {
            continue;
        }
        let inst = generate_instance(&circuit, seed, rng.next_u64() % 8);
        let brute = mfd_bruteforce(&inst).unwrap();
        let h = build_final(&inst).unwrap();
        let diag = h.diagonal_values().unwrap();
        let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let argmin: Vec<usize> = (0..diag.len()).filter(|&i| diag[i] == lo).collect();
        let planted = mfd_by_fault_planting(&inst, circuit.wire_count());
        ok &= argmin == brute.mfd_set && planted.as_ref() == Some(&brute);
        checked += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        10,
        "final-Hamiltonian argmin, enumeration and fault planting agree",
        ok && elapsed < 300.0,
        format!("{checked} instances, {elapsed:.1}s"),
    );
}

#[test]
fn criterion_11_integrator_soundness() {
    let study = anneal_study();
    let worst = study
        .runs
        .iter()
        .flat_map(|r| r.iter().map(|e| e.norm_drift))
        .fold(0.0f64, f64::max);
    let half = EvolveOptions::with_tol(DEFAULT_TOL / 2.0);
    let mut max_delta = 0.0f64;
    for (inst, runs) in study.instances.iter().zip(&study.runs).take(5) {
        let a = Annealer::new(inst, DriverSign::Stoquastic).unwrap();
        let again = a.run_spec(&runs[1].schedule, None, None, &half).unwrap();
        max_delta = max_delta.max((again.success_probability - runs[1].success_probability).abs());
    }
    verdict(
        11,
        "norm drift and tolerance stability",
        worst < 1e-6 && max_delta < 1e-4,
        format!(
            "max drift {worst:.2e} over {} runs; max |dP| on halving tol {max_delta:.2e}",
            4 * study.runs.len()
        ),
    );
}

#[test]
fn criterion_12_schedule_algebra() {
    let mut rng = seeded_rng(12, 0);
    let mut unit = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let tf = 1.0 + 199.0 * unit();
        let t0 = tf * (0.02 + 0.96 * unit());
        let s0 = 0.01 + 0.98 * unit();
        let p = ParamSchedule::new(t0, s0, tf).unwrap();
        let (dq, dl) = p.branch_derivatives(t0);
        let errs = [
            s_param(0.0, t0, s0, tf).unwrap().abs(),
            (p.quadratic_branch(t0) - s0).abs(),
            (p.linear_branch(t0) - s0).abs(),
            (s_param(t0, t0, s0, tf).unwrap() - s0).abs(),
            (s_param(tf, t0, s0, tf).unwrap() - 1.0).abs(),
            (dq - dl).abs(),
        ];
        worst = errs.iter().cloned().fold(worst, f64::max);
    }
    let e0 = envelopes(0.0).unwrap();
    let e1 = envelopes(1.0).unwrap();
    let eh = envelopes(0.5).unwrap();
    let exact = (e0.a, e0.b, e0.c) == (1.0, 0.0, 0.0)
        && (e1.a, e1.b, e1.c) == (0.0, 0.0, 1.0)
        && eh.b == 1.0;
    verdict(
        12,
        "parameterized schedule identities",
        worst <= 1e-12 && exact,
        format!(
            "worst identity error {worst:.2e} over 100 triples; envelope boundaries exact {exact}"
        ),
    );
}
