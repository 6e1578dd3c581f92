//! Envelope functions and annealing schedules `s(t)`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{SpectrumTrace, DEGENERACY_THRESHOLD};

pub const DEFAULT_T0: f64 = 20.0;
pub const DEFAULT_S0: f64 = 0.75;
pub const DEFAULT_SEGMENTS: usize = 100;

/// Weights of the initial, driver and final Hamiltonians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelopes {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// `A = 1 - s^2`, `B = 4 s (1 - s)`, `C = s^2`.
pub fn envelopes(s: f64) -> Result<Envelopes> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfRange(format!("s = {s} outside [0, 1]")));
    }
    Ok(Envelopes {
        a: 1.0 - s * s,
        b: 4.0 * s * (1.0 - s),
        c: s * s,
    })
}

fn check_time(t: f64, tf: f64) -> Result<()> {
    if !(tf > 0.0 && tf.is_finite()) {
        return Err(Error::InvalidSchedule(format!(
            "tf = {tf} must be positive"
        )));
    }
    if !(0.0..=tf).contains(&t) {
        return Err(Error::OutOfRange(format!("t = {t} outside [0, {tf}]")));
    }
    Ok(())
}

pub fn s_linear(t: f64, tf: f64) -> Result<f64> {
    check_time(t, tf)?;
    Ok(t / tf)
}

/// Quadratic on `[0, T0]` through `s(T0) = s0`, linear on `[T0, Tf]` up to
/// `s(Tf) = 1`, with a continuous first derivative at `T0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSchedule {
    pub t0: f64,
    pub s0: f64,
    pub tf: f64,
}

impl ParamSchedule {
    pub fn new(t0: f64, s0: f64, tf: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0 < tf && tf.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "need 0 < t0 < tf, got t0 = {t0}, tf = {tf}"
            )));
        }
        if !(s0 > 0.0 && s0 < 1.0) {
            return Err(Error::InvalidSchedule(format!("need 0 < s0 < 1, got {s0}")));
        }
        Ok(ParamSchedule { t0, s0, tf })
    }

    /// Quadratic coefficients `(alpha, beta)` of `alpha t^2 + beta t`.
    pub fn quadratic(&self) -> (f64, f64) {
        let (t0, s0, tf) = (self.t0, self.s0, self.tf);
        let alpha = (s0 * tf / t0 - 1.0) / (t0 * (t0 - tf));
        let beta = (1.0 - s0 * (2.0 * tf / t0 - 1.0)) / (t0 - tf);
        (alpha, beta)
    }

    /// Slope and intercept of the linear piece.
    pub fn linear(&self) -> (f64, f64) {
        let (t0, s0, tf) = (self.t0, self.s0, self.tf);
        let slope = (s0 - 1.0) / (t0 - tf);
        let intercept = (1.0 - s0 * tf / t0) / (1.0 - tf / t0);
        (slope, intercept)
    }

    pub fn quadratic_branch(&self, t: f64) -> f64 {
        let (a, b) = self.quadratic();
        a * t * t + b * t
    }

    pub fn linear_branch(&self, t: f64) -> f64 {
        let (m, c) = self.linear();
        m * t + c
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < self.t0 {
            self.quadratic_branch(t)
        } else {
            self.linear_branch(t)
        }
    }

    /// One-sided derivatives at `t`: (quadratic branch, linear branch).
    pub fn branch_derivatives(&self, t: f64) -> (f64, f64) {
        let (a, b) = self.quadratic();
        (2.0 * a * t + b, self.linear().0)
    }

    /// Non-decreasing on `[0, Tf]`, i.e. `s0 >= T0 / (2 Tf - T0)`.
    pub fn is_monotone(&self) -> bool {
        self.quadratic().1 >= 0.0
    }
}

pub fn s_param(t: f64, t0: f64, s0: f64, tf: f64) -> Result<f64> {
    let p = ParamSchedule::new(t0, s0, tf)?;
    check_time(t, tf)?;
    Ok(p.eval(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptAdiaMode {
    /// Dwell time per segment proportional to `1 / gap^2`.
    #[default]
    Time,
    /// `ds/dt` proportional to `1 / gap^2`, i.e. dwell time proportional to `gap^2`.
    Slope,
}

impl std::str::FromStr for OptAdiaMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "time" => Ok(OptAdiaMode::Time),
            "slope" => Ok(OptAdiaMode::Slope),
            _ => Err(format!("unknown opt-adia mode `{s}` (time|slope)")),
        }
    }
}

/// Monotone piecewise-linear `s(t)` through `(t_k, s_k)` knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn tf(&self) -> f64 {
        *self.t.last().expect("at least two knots")
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.t.partition_point(|&x| x <= t);
        if k == 0 {
            return self.s[0];
        }
        if k >= self.t.len() {
            return *self.s.last().unwrap();
        }
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let (s0, s1) = (self.s[k - 1], self.s[k]);
        s0 + (s1 - s0) * (t - t0) / (t1 - t0)
    }
}

/// Gap-adapted schedule over `segments` equal s-intervals. The gap at each
/// interval midpoint is interpolated linearly from the trace.
pub fn s_opt_adia(
    trace: &SpectrumTrace,
    tf: f64,
    segments: usize,
    mode: OptAdiaMode,
) -> Result<PiecewiseLinear> {
    check_time(0.0, tf)?;
    if segments < 2 {
        return Err(Error::InvalidSchedule(format!(
            "opt_adia needs at least 2 segments, got {segments}"
        )));
    }
    let samples = &trace.samples;
    if samples.len() < 2 {
        return Err(Error::TraceTooCoarse(samples.len()));
    }
    let (first, last) = (samples[0].s, samples[samples.len() - 1].s);
    if first.abs() > 1e-12 || (last - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSchedule(format!(
            "trace must span s = 0..1, got {first}..{last}"
        )));
    }
    if let Some(p) = samples.iter().find(|p| p.gap <= DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateTrace { s: p.s });
    }
    let weights: Vec<f64> = (0..segments)
        .map(|k| {
            let g = trace.gap_at((k as f64 + 0.5) / segments as f64);
            match mode {
                OptAdiaMode::Time => 1.0 / (g * g),
                OptAdiaMode::Slope => g * g,
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut t = Vec::with_capacity(segments + 1);
    let mut acc = 0.0;
    t.push(0.0);
    for w in &weights[..segments - 1] {
        acc += w;
        t.push(tf * acc / total);
    }
    t.push(tf);
    let s = (0..=segments).map(|k| k as f64 / segments as f64).collect();
    Ok(PiecewiseLinear { t, s })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Linear { tf: f64 },
    Param(ParamSchedule),
    OptAdia(PiecewiseLinear),
}

impl Schedule {
    pub fn tf(&self) -> f64 {
        match self {
            Schedule::Linear { tf } => *tf,
            Schedule::Param(p) => p.tf,
            Schedule::OptAdia(p) => p.tf(),
        }
    }

    /// `s(t)`, clamped into `[0, 1]` against rounding at the ends.
    pub fn eval(&self, t: f64) -> f64 {
        let s = match self {
            Schedule::Linear { tf } => t / tf,
            Schedule::Param(p) => p.eval(t),
            Schedule::OptAdia(p) => p.eval(t),
        };
        s.clamp(0.0, 1.0)
    }

    /// `n` evenly spaced `(t, s(t))` samples including both ends.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        let tf = self.tf();
        (0..n)
            .map(|k| {
                let t = if k + 1 == n {
                    tf
                } else {
                    tf * k as f64 / (n - 1).max(1) as f64
                };
                (t, self.eval(t))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Linear,
    Param,
    #[serde(alias = "opt-adia")]
    OptAdia,
}

impl std::str::FromStr for ScheduleKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ScheduleKind::Linear),
            "param" => Ok(ScheduleKind::Param),
            "opt_adia" | "opt-adia" => Ok(ScheduleKind::OptAdia),
            _ => Err(format!("unknown schedule `{s}` (linear|param|opt-adia)")),
        }
    }
}

/// Serializable schedule description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub tf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt_adia_mode: Option<OptAdiaMode>,
}

impl ScheduleSpec {
    pub fn linear(tf: f64) -> Self {
        ScheduleSpec {
            kind: ScheduleKind::Linear,
            tf,
            t0: None,
            s0: None,
            segments: None,
            trace_path: None,
            opt_adia_mode: None,
        }
    }

    pub fn param(tf: f64, t0: f64, s0: f64) -> Self {
        ScheduleSpec {
            kind: ScheduleKind::Param,
            t0: Some(t0),
            s0: Some(s0),
            ..Self::linear(tf)
        }
    }

    pub fn opt_adia(tf: f64, segments: usize, mode: OptAdiaMode) -> Self {
        ScheduleSpec {
            kind: ScheduleKind::OptAdia,
            segments: Some(segments),
            opt_adia_mode: Some(mode),
            ..Self::linear(tf)
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ScheduleKind::Linear => "linear",
            ScheduleKind::Param => "param",
            ScheduleKind::OptAdia => "opt_adia",
        }
    }

    /// Checks parameters without touching any trace file.
    pub fn validate(&self) -> Result<()> {
        check_time(0.0, self.tf)?;
        match self.kind {
            ScheduleKind::Linear => Ok(()),
            ScheduleKind::Param => {
                let p = ParamSchedule::new(
                    self.t0.unwrap_or(DEFAULT_T0),
                    self.s0.unwrap_or(DEFAULT_S0),
                    self.tf,
                )?;
                if !p.is_monotone() {
                    return Err(Error::InvalidSchedule(format!(
                        "s(t) decreases near t = 0; need s0 >= t0 / (2 tf - t0) = {}",
                        p.t0 / (2.0 * p.tf - p.t0)
                    )));
                }
                Ok(())
            }
            ScheduleKind::OptAdia => {
                let segments = self.segments.unwrap_or(DEFAULT_SEGMENTS);
                if segments < 2 {
                    return Err(Error::InvalidSchedule(format!(
                        "opt_adia needs at least 2 segments, got {segments}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Builds the schedule; `opt_adia` uses `trace` or else loads `trace_path`
    /// (relative to `base_dir`).
    pub fn build(
        &self,
        trace: Option<&SpectrumTrace>,
        base_dir: Option<&Path>,
    ) -> Result<Schedule> {
        self.validate()?;
        match self.kind {
            ScheduleKind::Linear => Ok(Schedule::Linear { tf: self.tf }),
            ScheduleKind::Param => Ok(Schedule::Param(ParamSchedule::new(
                self.t0.unwrap_or(DEFAULT_T0),
                self.s0.unwrap_or(DEFAULT_S0),
                self.tf,
            )?)),
            ScheduleKind::OptAdia => {
                let loaded;
                let trace = match (trace, &self.trace_path) {
                    (Some(t), _) => t,
                    (None, Some(p)) => {
                        let path = match base_dir {
                            Some(d) if p.is_relative() => d.join(p),
                            _ => p.clone(),
                        };
                        loaded = SpectrumTrace::read_csv_file(&path)?;
                        &loaded
                    }
                    (None, None) => {
                        return Err(Error::InvalidSchedule(
                            "opt_adia needs a gap trace".to_string(),
                        ))
                    }
                };
                Ok(Schedule::OptAdia(s_opt_adia(
                    trace,
                    self.tf,
                    self.segments.unwrap_or(DEFAULT_SEGMENTS),
                    self.opt_adia_mode.unwrap_or_default(),
                )?))
            }
        }
    }
}
