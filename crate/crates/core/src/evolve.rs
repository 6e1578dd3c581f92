//! Closed-system evolution `i dψ/dt = H(s(t)) ψ` on the valid subspace.
//!
//! Integration uses the Dormand-Prince 5(4) pair with FSAL and local
//! extrapolation. The local error estimate is measured in the Euclidean norm
//! of the state: a step is accepted when `|e| <= atol + rtol * |ψ|`. No projection
//! back onto the unit sphere happens during the run; the final norm drift is
//! reported instead.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnosis::{mfd_bruteforce, trivial_diagnosis, Instance, MfdResult};
use crate::error::{Error, Result};
use crate::hamiltonian::{AnnealingHamiltonian, DriverSign, Operator};
use crate::schedule::{Schedule, ScheduleKind, ScheduleSpec};
use crate::spectrum::{gap_trace, SpectrumTrace, DEFAULT_GRID};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DRIFT_BOUND: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub driver: DriverSign,
    /// Failure threshold on `| |ψ(Tf)| - 1 |`.
    pub drift_bound: f64,
    pub max_steps: usize,
    /// Subtract the current energy expectation from `H` at each step; this
    /// changes only the global phase and permits larger steps.
    pub energy_shift: bool,
    /// Largest amplitudes kept in the result.
    pub keep_top: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions::with_tol(DEFAULT_TOL)
    }
}

impl EvolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        EvolveOptions {
            rtol: tol,
            atol: tol,
            driver: DriverSign::Stoquastic,
            drift_bound: DRIFT_BOUND,
            max_steps: 10_000_000,
            energy_shift: true,
            keep_top: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEntry {
    pub index: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub instance_id: Option<String>,
    pub schedule: ScheduleSpec,
    pub tf: f64,
    pub success_probability: f64,
    pub norm_drift: f64,
    pub steps: usize,
    pub rejected_steps: usize,
    pub matvecs: usize,
    pub min_faults: usize,
    pub degeneracy: usize,
    pub initial_energy: f64,
    /// Largest final amplitudes, by magnitude.
    pub top_amplitudes: Vec<AmplitudeEntry>,
    #[serde(skip)]
    pub state: Vec<Complex64>,
}

/// `sum_{i in targets} |ψ_i|^2 / |ψ|^2`.
pub fn success_probability(state: &[Complex64], targets: &[usize]) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::EmptyTargetSet);
    }
    if let Some(&i) = targets.iter().find(|&&i| i >= state.len()) {
        return Err(Error::OutOfRange(format!(
            "target index {i} for dimension {}",
            state.len()
        )));
    }
    let total: f64 = state.iter().map(|a| a.norm_sqr()).sum();
    let hit: f64 = targets.iter().map(|&i| state[i].norm_sqr()).sum();
    Ok(hit / total)
}

/// Reusable evolution context for one instance: Hamiltonian parts and the
/// brute-force MFD set used for scoring.
pub struct Annealer {
    instance: Instance,
    hamiltonian: AnnealingHamiltonian,
    mfd: MfdResult,
    start: usize,
}

impl Annealer {
    pub fn new(instance: &Instance, driver: DriverSign) -> Result<Self> {
        let hamiltonian = AnnealingHamiltonian::new(instance, driver)?;
        let mfd = mfd_bruteforce(instance)?;
        let start =
            crate::diagnosis::reduced_index_of(instance, &trivial_diagnosis(instance).wire_values);
        Ok(Annealer {
            instance: instance.clone(),
            hamiltonian,
            mfd,
            start,
        })
    }

    pub fn hamiltonian(&self) -> &AnnealingHamiltonian {
        &self.hamiltonian
    }

    pub fn mfd(&self) -> &MfdResult {
        &self.mfd
    }

    pub fn initial_state(&self) -> Vec<Complex64> {
        let mut psi = vec![Complex64::default(); self.hamiltonian.dim()];
        psi[self.start] = Complex64::new(1.0, 0.0);
        psi
    }

    fn apply_h(
        &self,
        schedule: &Schedule,
        t: f64,
        y: &[Complex64],
        out: &mut [Complex64],
    ) -> Result<()> {
        self.hamiltonian.at(schedule.eval(t))?.apply(y, out);
        Ok(())
    }

    /// Evolves the trivial-diagnosis basis state over `schedule`.
    pub fn run(
        &self,
        schedule: &Schedule,
        spec: &ScheduleSpec,
        opts: &EvolveOptions,
    ) -> Result<EvolutionResult> {
        let tf = schedule.tf();
        if !(tf > 0.0 && tf.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "tf = {tf} must be positive"
            )));
        }
        let mut psi = self.initial_state();
        let initial_energy = self.hamiltonian.at(schedule.eval(0.0))?.expectation(&psi);
        let stats = dopri5(
            |t, y, out| self.apply_h(schedule, t, y, out),
            &mut psi,
            tf,
            opts,
        )?;
        let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let norm_drift = (norm - 1.0).abs();
        if norm_drift > opts.drift_bound {
            return Err(Error::NormDrift {
                drift: norm_drift,
                bound: opts.drift_bound,
            });
        }
        let success = success_probability(&psi, &self.mfd.mfd_set)?;
        psi.iter_mut().for_each(|a| *a /= norm);
        Ok(EvolutionResult {
            instance_id: self.instance.meta.id.clone(),
            schedule: spec.clone(),
            tf,
            success_probability: success,
            norm_drift,
            steps: stats.steps,
            rejected_steps: stats.rejected,
            matvecs: stats.evaluations,
            min_faults: self.mfd.min_faults,
            degeneracy: self.mfd.degeneracy,
            initial_energy,
            top_amplitudes: top_amplitudes(&psi, opts.keep_top),
            state: psi,
        })
    }

    /// Builds `spec` (an `opt_adia` spec without a trace gets one computed on
    /// the default grid with this annealer's driver) and runs it.
    pub fn run_spec(
        &self,
        spec: &ScheduleSpec,
        trace: Option<&SpectrumTrace>,
        base_dir: Option<&Path>,
        opts: &EvolveOptions,
    ) -> Result<EvolutionResult> {
        spec.validate()?;
        let computed;
        let trace = match trace {
            None if spec.kind == ScheduleKind::OptAdia && spec.trace_path.is_none() => {
                computed = gap_trace(&self.instance, DEFAULT_GRID, self.hamiltonian.sign)?;
                Some(&computed)
            }
            t => t,
        };
        let schedule = spec.build(trace, base_dir)?;
        self.run(&schedule, spec, opts)
    }
}

fn top_amplitudes(psi: &[Complex64], k: usize) -> Vec<AmplitudeEntry> {
    let mut idx: Vec<usize> = (0..psi.len()).collect();
    idx.sort_by(|&a, &b| {
        psi[b]
            .norm_sqr()
            .total_cmp(&psi[a].norm_sqr())
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx.into_iter()
        .map(|i| AmplitudeEntry {
            index: i,
            re: psi[i].re,
            im: psi[i].im,
        })
        .collect()
}

pub fn evolve(instance: &Instance, spec: &ScheduleSpec, tol: f64) -> Result<EvolutionResult> {
    let opts = EvolveOptions::with_tol(tol);
    Annealer::new(instance, opts.driver)?.run_spec(spec, None, None, &opts)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `i y' = H(t) y` from 0 to `tf` in place, where `apply_h(t, y, out)`
/// sets `out = H(t) y`.
pub fn dopri5<F>(
    mut apply_h: F,
    y: &mut [Complex64],
    tf: f64,
    opts: &EvolveOptions,
) -> Result<StepStats>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()>,
{
    let n = y.len();
    let zero = Complex64::default();
    let mut k: Vec<Vec<Complex64>> = (0..7).map(|_| vec![zero; n]).collect();
    let mut stage = vec![zero; n];
    let mut ynew = vec![zero; n];
    let mut stats = StepStats::default();

    // k = -i (H - shift) y
    let to_rate = |hy: &mut [Complex64], y: &[Complex64], shift: f64| {
        for (z, &v) in hy.iter_mut().zip(y) {
            let w = *z - v * shift;
            *z = Complex64::new(w.im, -w.re);
        }
    };
    let expectation = |y: &[Complex64], hy: &[Complex64]| {
        let num: f64 = y.iter().zip(hy).map(|(a, b)| (a.conj() * b).re).sum();
        num / y.iter().map(|a| a.norm_sqr()).sum::<f64>()
    };

    let mut t = 0.0;
    apply_h(t, y, &mut k[0])?;
    stats.evaluations += 1;
    let mut shift = if opts.energy_shift {
        expectation(y, &k[0])
    } else {
        0.0
    };
    to_rate(&mut k[0], y, shift);
    let mut h = initial_step(y, &k[0], tf, opts);

    while t < tf {
        if stats.steps + stats.rejected >= opts.max_steps {
            return Err(Error::StepUnderflow { t, h });
        }
        if t + h >= tf || tf - (t + h) < 1e-12 * tf {
            h = tf - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, &a) in A[s][..s].iter().enumerate() {
                    if a != 0.0 {
                        acc += k[j][i] * (h * a);
                    }
                }
                stage[i] = acc;
            }
            apply_h(t + C[s] * h, &stage, &mut k[s])?;
            to_rate(&mut k[s], &stage, shift);
            stats.evaluations += 1;
            if s == 6 {
                ynew.copy_from_slice(&stage);
            }
        }
        let mut e2 = 0.0;
        let mut y2 = 0.0;
        let mut n2 = 0.0;
        for i in 0..n {
            let mut e = zero;
            for (j, &w) in E.iter().enumerate() {
                if w != 0.0 {
                    e += k[j][i] * w;
                }
            }
            e2 += (e * h).norm_sqr();
            y2 += y[i].norm_sqr();
            n2 += ynew[i].norm_sqr();
        }
        let err = e2.sqrt() / (opts.atol + opts.rtol * y2.max(n2).sqrt());
        if err <= 1.0 {
            t = if h == tf - t { tf } else { t + h };
            y.copy_from_slice(&ynew);
            k.swap(0, 6);
            if opts.energy_shift {
                // k0 = -i (H - shift) y, so <y|i k0> / <y|y> = <H> - shift
                let ik: Vec<Complex64> = k[0].iter().map(|z| Complex64::new(-z.im, z.re)).collect();
                let next = shift + expectation(y, &ik);
                for (z, &v) in k[0].iter_mut().zip(y.iter()) {
                    *z += Complex64::new(0.0, next - shift) * v;
                }
                shift = next;
            }
            stats.steps += 1;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
        if h < 1e-14 * tf.max(1.0) && t < tf {
            return Err(Error::StepUnderflow { t, h });
        }
    }
    Ok(stats)
}

/// Step guess from the derivative magnitude (Hairer, Norsett, Wanner).
fn initial_step(y: &[Complex64], f0: &[Complex64], tf: f64, opts: &EvolveOptions) -> f64 {
    let d0 = y.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let d1 = f0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let scale = opts.atol + opts.rtol * d0;
    let h = if d1 * scale == 0.0 {
        1e-6
    } else {
        0.01 * (scale / d1).powf(0.2)
    };
    h.min(tf)
}
