//! `cqa`: generate fault-diagnosis instances, inspect their reduced
//! Hamiltonians, trace spectral gaps and run annealing simulations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cqa_core::diagnosis::{bits_to_string, diagnosis_at};
use cqa_core::evolve::{EvolveOptions, DEFAULT_TOL};
use cqa_core::format::{atomic_write, round_json, sig12, to_json_pretty};
use cqa_core::instances::{generate_named, OutputFlip};
use cqa_core::schedule::{OptAdiaMode, ScheduleKind, DEFAULT_SEGMENTS};
use cqa_core::spectrum::DEFAULT_GRID;
use cqa_core::{
    gap_trace, mfd_bruteforce, min_gap, run_campaign, transition_graph_check, Annealer,
    CampaignSpec, DriverSign, Error, Instance, ScheduleSpec, SpectrumTrace,
};

#[derive(Parser, Debug)]
#[command(
    name = "cqa",
    version,
    about = "Constrained quantum annealing for circuit fault diagnosis"
)]
struct Cli {
    /// Base seed for instance generation (overrides a campaign spec's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for trace grids and campaigns (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file, or directory for `gen` and `campaign`. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate random instances of a shipped topology.
    Gen {
        #[arg(long, default_value = "c17")]
        base: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Which disagreeing outputs to flip.
        #[arg(long, value_enum, default_value_t = Flip::All)]
        flip: Flip,
    },
    /// Minimum fault diagnoses by exhaustive enumeration.
    Mfd { instance: PathBuf },
    /// Report on the graph the driver induces on valid diagnoses.
    Graph {
        instance: PathBuf,
        /// Fail unless the graph is connected and regular.
        #[arg(long)]
        check: bool,
    },
    /// Ground and first excited energies along the anneal.
    Spectrum {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value = "stoq")]
        driver: DriverSign,
    },
    /// Simulate the closed-system anneal and report the success probability.
    Anneal(AnnealArgs),
    /// Run a campaign described by a JSON spec.
    Campaign { spec: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Flip {
    All,
    RandomSubset,
}

#[derive(Args, Debug)]
struct AnnealArgs {
    instance: PathBuf,
    #[arg(long, default_value = "param")]
    schedule: ScheduleKind,
    #[arg(long, default_value_t = 40.0)]
    tf: f64,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    s0: Option<f64>,
    /// Gap trace CSV for `opt-adia`; computed on the fly when absent.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    opt_adia_mode: Option<OptAdiaMode>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value = "stoq")]
    driver: DriverSign,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl Failure {
    fn input(e: Error) -> Self {
        Failure {
            code: 1,
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            kind: "usage".into(),
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_computational() { 2 } else { 1 };
        Failure {
            code,
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report(&Failure::usage(e.to_string().trim_end()));
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f);
            ExitCode::from(f.code)
        }
    }
}

fn report(f: &Failure) {
    eprintln!(
        "{}",
        json!({ "error": f.kind, "message": f.message, "exit_code": f.code })
    );
}

fn run(cli: &Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Gen { base, count, flip } => gen(cli, base, *count, *flip),
        Command::Mfd { instance } => mfd(cli, &load(instance)?),
        Command::Graph { instance, check } => graph(cli, &load(instance)?, *check),
        Command::Spectrum {
            instance,
            grid,
            driver,
        } => spectrum(cli, &load(instance)?, *grid, *driver),
        Command::Anneal(args) => anneal(cli, args),
        Command::Campaign { spec } => campaign(cli, spec),
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    Instance::load(path).map_err(|e| Failure {
        message: format!("{}: {e}", path.display()),
        ..Failure::input(e)
    })
}

/// Writes to `--out` atomically, or to stdout.
fn emit(cli: &Cli, text: &str) -> Outcome {
    match &cli.out {
        Some(p) => Ok(atomic_write(p, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_text(v: &Value) -> String {
    let mut v = v.clone();
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("json value serializes");
    s.push('\n');
    s
}

/// Renders rows under a header line, one record per line.
fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn gen(cli: &Cli, base: &str, count: usize, flip: Flip) -> Outcome {
    if count == 0 {
        return Err(Failure::usage("--count must be at least 1"));
    }
    let seed = cli.seed.unwrap_or(0);
    let flip = match flip {
        Flip::All => OutputFlip::All,
        Flip::RandomSubset => OutputFlip::RandomSubset,
    };
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("instances"));
    let instances = (0..count as u64)
        .map(|stream| generate_named(base, seed, stream, flip))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::input)?;
    std::fs::create_dir_all(&dir).map_err(Error::from)?;
    let mut rows = Vec::new();
    for inst in &instances {
        let id = inst.meta.id.clone().unwrap_or_default();
        let path = dir.join(format!("{id}.json"));
        atomic_write(&path, inst.to_json().as_bytes())?;
        rows.push(vec![
            id,
            path.display().to_string(),
            bits_to_string(&inst.inputs),
            bits_to_string(&inst.outputs),
        ]);
    }
    let header = ["instance_id", "path", "inputs", "outputs"];
    let text = match cli.format {
        Format::Csv => csv_text(&header, &rows),
        Format::Json => json_text(&Value::Array(
            rows.iter()
                .map(|r| {
                    Value::Object(
                        header
                            .iter()
                            .zip(r)
                            .map(|(k, v)| (k.to_string(), json!(v)))
                            .collect(),
                    )
                })
                .collect(),
        )),
    };
    print!("{text}");
    Ok(())
}

fn mfd(cli: &Cli, inst: &Instance) -> Outcome {
    let m = mfd_bruteforce(inst)?;
    let diagnoses: Vec<String> = m
        .mfd_set
        .iter()
        .map(|&i| diagnosis_at(inst, i).to_string())
        .collect();
    let text = match cli.format {
        Format::Json => json_text(&json!({
            "instance_id": inst.meta.id,
            "min_faults": m.min_faults,
            "degeneracy": m.degeneracy,
            "mfd_set": m.mfd_set,
            "diagnoses": diagnoses,
        })),
        Format::Csv => csv_text(
            &["min_faults", "degeneracy", "index", "diagnosis"],
            &m.mfd_set
                .iter()
                .zip(&diagnoses)
                .map(|(i, d)| {
                    vec![
                        m.min_faults.to_string(),
                        m.degeneracy.to_string(),
                        i.to_string(),
                        d.clone(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    };
    emit(cli, &text)
}

fn graph(cli: &Cli, inst: &Instance, check: bool) -> Outcome {
    let r = transition_graph_check(inst)?;
    let text = match cli.format {
        Format::Json => to_json_pretty(&r)?,
        Format::Csv => {
            let masks: Vec<String> = r.masks.iter().map(|m| m.to_string()).collect();
            let hist: Vec<String> = r
                .degree_histogram
                .iter()
                .map(|(d, n)| format!("{d}:{n}"))
                .collect();
            let pairs = [
                ("nodes", r.nodes.to_string()),
                ("regular", r.regular.to_string()),
                ("degree", r.degree.to_string()),
                ("connected", r.connected.to_string()),
                ("reachable", r.reachable.to_string()),
                ("degree_histogram", hist.join(" ")),
                ("masks", masks.join(" ")),
                ("mask_fingerprint", r.mask_fingerprint.clone()),
            ];
            csv_text(
                &["field", "value"],
                &pairs.map(|(k, v)| vec![k.to_string(), v]),
            )
        }
    };
    emit(cli, &text)?;
    if check && !(r.connected && r.regular) {
        return Err(Failure {
            code: 2,
            kind: "graph_check".into(),
            message: format!(
                "transition graph check failed: connected={}, regular={} ({} of {} nodes reachable)",
                r.connected, r.regular, r.reachable, r.nodes
            ),
        });
    }
    Ok(())
}

fn spectrum(cli: &Cli, inst: &Instance, grid: usize, driver: DriverSign) -> Outcome {
    if grid < 2 {
        return Err(Failure::usage("--grid must be at least 2"));
    }
    eprintln!("tracing {grid} points, driver {}", driver.name());
    let trace = gap_trace(inst, grid, driver)?;
    let text = match cli.format {
        Format::Csv => trace.to_csv(),
        Format::Json => {
            let mg = if grid >= 3 {
                Some(min_gap(&trace)?)
            } else {
                None
            };
            json_text(&json!({
                "instance_id": inst.meta.id,
                "driver": trace.driver,
                "grid": trace.grid,
                "degenerate": trace.degenerate,
                "min_gap": mg,
                "samples": trace.samples,
            }))
        }
    };
    emit(cli, &text)
}

fn anneal(cli: &Cli, a: &AnnealArgs) -> Outcome {
    let inst = load(&a.instance)?;
    let spec = ScheduleSpec {
        kind: a.schedule,
        tf: a.tf,
        t0: a.t0.or((a.schedule == ScheduleKind::Param).then_some(20.0)),
        s0: a.s0.or((a.schedule == ScheduleKind::Param).then_some(0.75)),
        segments: a
            .segments
            .or((a.schedule == ScheduleKind::OptAdia).then_some(DEFAULT_SEGMENTS)),
        trace_path: a.trace.clone(),
        opt_adia_mode: a
            .opt_adia_mode
            .or((a.schedule == ScheduleKind::OptAdia).then_some(OptAdiaMode::Time)),
    };
    spec.validate().map_err(Failure::input)?;
    if !(a.tol > 0.0 && a.tol < 1.0) {
        return Err(Failure::usage("--tol must lie in (0, 1)"));
    }
    let trace = match &a.trace {
        Some(p) => Some(SpectrumTrace::read_csv_file(p).map_err(Failure::input)?),
        None => None,
    };
    let opts = EvolveOptions {
        driver: a.driver,
        ..EvolveOptions::with_tol(a.tol)
    };
    let annealer = Annealer::new(&inst, a.driver)?;
    eprintln!(
        "annealing {} with {} schedule, tf {}",
        inst.meta.id.as_deref().unwrap_or("instance"),
        spec.name(),
        a.tf
    );
    let r = annealer.run_spec(&spec, trace.as_ref(), None, &opts)?;
    let text = match cli.format {
        Format::Json => to_json_pretty(&r)?,
        Format::Csv => csv_text(
            &[
                "instance_id",
                "schedule",
                "tf",
                "success_probability",
                "norm_drift",
                "steps",
                "min_faults",
                "degeneracy",
            ],
            &[vec![
                r.instance_id.clone().unwrap_or_default(),
                r.schedule.name().to_string(),
                sig12(r.tf),
                sig12(r.success_probability),
                sig12(r.norm_drift),
                r.steps.to_string(),
                r.min_faults.to_string(),
                r.degeneracy.to_string(),
            ]],
        ),
    };
    emit(cli, &text)
}

fn campaign(cli: &Cli, path: &Path) -> Outcome {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        message: format!("{}: {e}", path.display()),
        ..Failure::input(e.into())
    })?;
    let mut spec: CampaignSpec =
        serde_json::from_str(&text).map_err(|e| Failure::input(e.into()))?;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    // Relative trace paths inside the spec resolve against the spec file.
    if let Some(dir) = path.parent() {
        for s in &mut spec.schedules {
            if let Some(p) = &s.trace_path {
                if p.is_relative() {
                    s.trace_path = Some(dir.join(p));
                }
            }
        }
    }
    spec.validate().map_err(Failure::input)?;
    let dir = cli
        .out
        .clone()
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("campaign"));
    let output = run_campaign(&spec, &|line| eprintln!("{line}"))?;
    output.write(&dir)?;
    let text = match cli.format {
        Format::Json => to_json_pretty(&output.summary)?,
        Format::Csv => output.aggregate_csv(),
    };
    print!("{text}");
    Ok(())
}
