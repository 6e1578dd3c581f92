//! Random instance families and experiment campaigns.
//!
//! Randomness comes from ChaCha8 seeded with the campaign seed; instance `k`
//! of a campaign reads stream `k` of that generator. Every draw of `n`
//! equally likely outcomes is `next_u64() % n`. For a base topology the draws
//! are, in order: one gate kind per two-input gate (canonical gate order,
//! index into NAND, AND, OR, NOR, XOR), one bit per circuit input, and, when
//! only a subset of outputs is flipped, one subset mask.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::circuit::{builtin_topology, parse_netlist, Circuit, GateKind};
use crate::diagnosis::{mfd_bruteforce, Instance, MfdResult};
use crate::error::{Error, Result};
use crate::evolve::{Annealer, EvolutionResult, EvolveOptions, DEFAULT_TOL};
use crate::format::{atomic_write, sig12};
use crate::hamiltonian::DriverSign;
use crate::schedule::{ScheduleKind, ScheduleSpec};
use crate::spectrum::{gap_trace_with, min_gap, EigenOptions, MinGap, SpectrumTrace, DEFAULT_GRID};

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    rng.next_u64() % n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFlip {
    /// Complement every output bit.
    #[default]
    All,
    /// Complement a uniformly drawn non-empty subset of outputs.
    RandomSubset,
}

pub fn generate_instance(topology: &Circuit, seed: u64, stream: u64) -> Instance {
    generate_instance_with(topology, seed, stream, OutputFlip::All)
}

pub fn generate_instance_with(
    topology: &Circuit,
    seed: u64,
    stream: u64,
    flip: OutputFlip,
) -> Instance {
    let mut rng = seeded_rng(seed, stream);
    let mut circuit = topology.clone();
    for gi in 0..circuit.gates().len() {
        if circuit.gates()[gi].kind.input_arity() == 2 {
            let kind = GateKind::TWO_INPUT[draw(&mut rng, 5) as usize];
            circuit = circuit.with_gate_kind(gi, kind).expect("arity preserved");
        }
    }
    let inputs: Vec<bool> = (0..circuit.n_inputs())
        .map(|_| draw(&mut rng, 2) == 1)
        .collect();
    let healthy = circuit
        .healthy_outputs(&inputs)
        .expect("input length matches");
    let no = healthy.len();
    let mask: u64 = match flip {
        OutputFlip::All => u64::MAX,
        OutputFlip::RandomSubset => 1 + draw(&mut rng, (1u64 << no) - 1),
    };
    let outputs = healthy
        .iter()
        .enumerate()
        .map(|(k, &b)| b ^ ((mask >> k) & 1 == 1))
        .collect();
    let mut inst = Instance::new(circuit, inputs, outputs).expect("lengths match");
    inst.seed = Some(seed);
    inst.meta.stream = Some(stream);
    inst.meta.provenance = Some("generated".to_string());
    inst
}

/// Instance of a shipped base, tagged with an id `<base>-s<seed>-<stream>`.
pub fn generate_named(base: &str, seed: u64, stream: u64, flip: OutputFlip) -> Result<Instance> {
    let topology = builtin_topology(base)?;
    let mut inst = generate_instance_with(&topology, seed, stream, flip);
    let base = base.to_ascii_lowercase();
    inst.meta.id = Some(format!("{base}-s{seed}-{stream:04}"));
    inst.meta.base = Some(base);
    Ok(inst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub min_faults: usize,
    pub degeneracy: usize,
}

pub fn classify(instance: &Instance) -> Result<Classification> {
    let m = mfd_bruteforce(instance)?;
    Ok(Classification {
        min_faults: m.min_faults,
        degeneracy: m.degeneracy,
    })
}

/// Random well-formed circuit over `n_inputs` inputs with `n_gates` gates of
/// two-input kinds, fan-outs inserted where wires are reused, and exactly
/// `n_outputs` outputs.
pub fn random_circuit(n_inputs: usize, n_gates: usize, n_outputs: usize, seed: u64) -> Circuit {
    assert!(n_inputs >= 1 && n_outputs >= 1);
    let mut b = Builder {
        rng: seeded_rng(seed, u64::MAX),
        pool: (0..n_inputs).map(|i| (format!("i{i}"), false)).collect(),
        body: String::new(),
        wires: 0,
        gates: 0,
    };
    for _ in 0..n_gates {
        while b.pool.len() < 2 || draw(&mut b.rng, 3) == 0 {
            b.fan();
            if b.pool.len() >= 2 && draw(&mut b.rng, 2) == 0 {
                break;
            }
        }
        b.two_input();
    }
    while b.pool.len() > n_outputs {
        b.two_input();
    }
    while b.pool.len() < n_outputs {
        b.fan();
    }
    for k in 0..b.pool.len() {
        if !b.pool[k].1 {
            let out = b.fresh();
            writeln!(b.body, "GATE g{} INV {} -> {out}", b.gates, b.pool[k].0).unwrap();
            b.gates += 1;
            b.pool[k] = (out, true);
        }
    }
    let mut text = String::new();
    for i in 0..n_inputs {
        writeln!(text, "INPUT i{i}").unwrap();
    }
    for (name, _) in &b.pool {
        writeln!(text, "OUTPUT {name}").unwrap();
    }
    text.push_str(&b.body);
    parse_netlist(&text).expect("generated netlist is well formed")
}

struct Builder {
    rng: ChaCha8Rng,
    /// Unconsumed wires and whether a gate drives them.
    pool: Vec<(String, bool)>,
    body: String,
    wires: usize,
    gates: usize,
}

impl Builder {
    fn fresh(&mut self) -> String {
        self.wires += 1;
        format!("w{}", self.wires - 1)
    }

    fn take(&mut self) -> String {
        let k = draw(&mut self.rng, self.pool.len() as u64) as usize;
        self.pool.swap_remove(k).0
    }

    fn fan(&mut self) {
        let src = self.take();
        let (a, b) = (self.fresh(), self.fresh());
        writeln!(self.body, "GATE g{} FAN {src} -> {a} {b}", self.gates).unwrap();
        self.gates += 1;
        self.pool.push((a, true));
        self.pool.push((b, true));
    }

    fn two_input(&mut self) {
        let (x, y) = (self.take(), self.take());
        let kind = GateKind::TWO_INPUT[draw(&mut self.rng, 5) as usize];
        let out = self.fresh();
        writeln!(self.body, "GATE g{} {kind} {x} {y} -> {out}", self.gates).unwrap();
        self.gates += 1;
        self.pool.push((out, true));
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filter {
    #[serde(default)]
    pub non_degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_faults: Option<usize>,
}

impl Filter {
    pub fn accepts(&self, c: &Classification) -> bool {
        (!self.non_degenerate || c.degeneracy == 1)
            && self.min_faults.is_none_or(|m| c.min_faults == m)
    }
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub base: String,
    pub count: usize,
    pub seed: u64,
    #[serde(default)]
    pub schedules: Vec<ScheduleSpec>,
    #[serde(default)]
    pub filter: Filter,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub driver: DriverSign,
    /// Compute gap traces and minimum gaps.
    #[serde(default = "default_true")]
    pub gaps: bool,
    /// Draws allowed before giving up; defaults to `100 * count`.
    #[serde(default)]
    pub attempt_budget: Option<usize>,
    #[serde(default)]
    pub flip: OutputFlip,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl CampaignSpec {
    pub fn new(base: &str, count: usize, seed: u64) -> Self {
        CampaignSpec {
            base: base.to_string(),
            count,
            seed,
            schedules: Vec::new(),
            filter: Filter::default(),
            output_dir: None,
            grid: DEFAULT_GRID,
            driver: DriverSign::Stoquastic,
            gaps: true,
            attempt_budget: None,
            flip: OutputFlip::All,
            tol: DEFAULT_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        builtin_topology(&self.base)?;
        if self.count == 0 {
            return Err(Error::OutOfRange(
                "campaign count must be at least 1".into(),
            ));
        }
        if self.grid < 3 && self.gaps {
            return Err(Error::TraceTooCoarse(self.grid));
        }
        for s in &self.schedules {
            s.validate()?;
        }
        Ok(())
    }
}

/// Draws instances until `count` pass the filter.
pub fn sample_instances(spec: &CampaignSpec) -> Result<(Vec<(Instance, MfdResult)>, usize)> {
    let budget = spec.attempt_budget.unwrap_or(100 * spec.count);
    let mut accepted = Vec::with_capacity(spec.count);
    let mut attempts = 0;
    while accepted.len() < spec.count {
        if attempts >= budget {
            return Err(Error::AttemptBudget {
                accepted: accepted.len(),
                wanted: spec.count,
                attempts,
            });
        }
        let inst = generate_named(&spec.base, spec.seed, attempts as u64, spec.flip)?;
        attempts += 1;
        let m = mfd_bruteforce(&inst)?;
        let c = Classification {
            min_faults: m.min_faults,
            degeneracy: m.degeneracy,
        };
        if spec.filter.accepts(&c) {
            accepted.push((inst, m));
        }
    }
    Ok((accepted, attempts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_id: String,
    pub seed: u64,
    pub stream: u64,
    pub min_faults: usize,
    pub degeneracy: usize,
    pub mfd_set: Vec<usize>,
    pub min_gap: Option<MinGap>,
    pub trace: Option<SpectrumTrace>,
    pub evolutions: Vec<EvolutionResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub base: String,
    pub seed: u64,
    pub accepted: usize,
    pub attempts: usize,
    pub draws_per_accept: f64,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOutput {
    pub records: Vec<InstanceRecord>,
    pub instances: Vec<Instance>,
    pub summary: CampaignSummary,
}

pub const AGGREGATE_HEADER: &str =
    "instance_id,seed,min_faults,degeneracy,min_gap,gap_location,tf,success_probability,schedule";

impl CampaignOutput {
    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from(AGGREGATE_HEADER);
        out.push('\n');
        for r in &self.records {
            let (g, loc) = match &r.min_gap {
                Some(m) => (sig12(m.gap), sig12(m.s)),
                None => (String::new(), String::new()),
            };
            let prefix = format!(
                "{},{},{},{},{g},{loc}",
                r.instance_id, r.seed, r.min_faults, r.degeneracy
            );
            if r.evolutions.is_empty() {
                writeln!(out, "{prefix},,,").unwrap();
            }
            for e in &r.evolutions {
                writeln!(
                    out,
                    "{prefix},{},{},{}",
                    sig12(e.tf),
                    sig12(e.success_probability),
                    e.schedule.name()
                )
                .unwrap();
            }
        }
        out
    }

    /// Writes `aggregate.csv`, `summary.json`, `instances/<id>.json` and
    /// `results/<id>.json` under `dir`, each file atomically.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir.join("instances"))?;
        std::fs::create_dir_all(dir.join("results"))?;
        for (inst, rec) in self.instances.iter().zip(&self.records) {
            atomic_write(
                &dir.join("instances")
                    .join(format!("{}.json", rec.instance_id)),
                inst.to_json().as_bytes(),
            )?;
            atomic_write(
                &dir.join("results")
                    .join(format!("{}.json", rec.instance_id)),
                crate::format::to_json_pretty(rec)?.as_bytes(),
            )?;
        }
        atomic_write(&dir.join("aggregate.csv"), self.aggregate_csv().as_bytes())?;
        atomic_write(
            &dir.join("summary.json"),
            crate::format::to_json_pretty(&self.summary)?.as_bytes(),
        )?;
        Ok(())
    }
}

/// Samples, classifies, traces and evolves the instances of a campaign.
/// `progress` receives one line per finished instance.
pub fn run_campaign(
    spec: &CampaignSpec,
    progress: &(dyn Fn(&str) + Sync),
) -> Result<CampaignOutput> {
    spec.validate()?;
    let (accepted, attempts) = sample_instances(spec)?;
    let needs_trace = spec.gaps
        || spec
            .schedules
            .iter()
            .any(|s| s.kind == ScheduleKind::OptAdia && s.trace_path.is_none());
    let total = accepted.len();
    let done = std::sync::atomic::AtomicUsize::new(0);

    let work = |(inst, mfd): &(Instance, MfdResult)| -> Result<InstanceRecord> {
        let annealer = Annealer::new(inst, spec.driver)?;
        let trace = if needs_trace {
            Some(gap_trace_with(
                annealer.hamiltonian(),
                spec.grid,
                &EigenOptions::default(),
            )?)
        } else {
            None
        };
        let mg = match &trace {
            Some(t) if spec.gaps => Some(min_gap(t)?),
            _ => None,
        };
        let opts = EvolveOptions {
            driver: spec.driver,
            ..EvolveOptions::with_tol(spec.tol)
        };
        let evolutions = spec
            .schedules
            .iter()
            .map(|s| annealer.run_spec(s, trace.as_ref(), None, &opts))
            .collect::<Result<Vec<_>>>()?;
        let id = inst.meta.id.clone().unwrap_or_default();
        let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        progress(&format!("[{n}/{total}] {id}"));
        Ok(InstanceRecord {
            instance_id: id,
            seed: spec.seed,
            stream: inst.meta.stream.unwrap_or(0),
            min_faults: mfd.min_faults,
            degeneracy: mfd.degeneracy,
            mfd_set: mfd.mfd_set.clone(),
            min_gap: mg,
            trace: trace.filter(|_| spec.gaps),
            evolutions,
        })
    };

    #[cfg(feature = "parallel")]
    let records: Vec<Result<InstanceRecord>> = {
        use rayon::prelude::*;
        accepted.par_iter().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let records: Vec<Result<InstanceRecord>> = accepted.iter().map(work).collect();
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;

    let rows = records.iter().map(|r| r.evolutions.len().max(1)).sum();
    Ok(CampaignOutput {
        summary: CampaignSummary {
            base: spec.base.to_ascii_lowercase(),
            seed: spec.seed,
            accepted: total,
            attempts,
            draws_per_accept: attempts as f64 / total as f64,
            rows,
        },
        instances: accepted.into_iter().map(|(i, _)| i).collect(),
        records,
    })
}
