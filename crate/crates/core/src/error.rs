use thiserror::Error;

use crate::circuit::{ParseError, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("structural violations: {}", join_violations(.0))]
    Structure(Vec<Violation>),

    #[error("{kind} expects {expected} input bit(s), got {got}")]
    Arity {
        kind: crate::circuit::GateKind,
        expected: usize,
        got: usize,
    },

    #[error("{what} has length {got}, expected {expected}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("reduced space needs {free_bits} free bits, cap is {cap}")]
    CapExceeded { free_bits: usize, cap: usize },

    #[error("output wire {wire} holds {value} but the observed output is {observed}")]
    OutputMismatch {
        wire: String,
        value: bool,
        observed: bool,
    },

    #[error("unknown topology `{0}` (expected c17 or c26)")]
    UnknownTopology(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("{0} is outside its valid range")]
    OutOfRange(String),

    #[error(
        "gap trace has a non-positive gap at s = {s}; gap-adapted schedules need a non-degenerate instance"
    )]
    DegenerateTrace { s: f64 },

    #[error("trace too coarse: {0} samples, need at least 3")]
    TraceTooCoarse(usize),

    #[error("operator dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("eigensolver did not converge at s = {s:?} (residual {residual:e} after {iterations} matrix-vector products)")]
    NonConvergence {
        s: Option<f64>,
        residual: f64,
        iterations: usize,
    },

    #[error("integrator step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("norm drift {drift:e} exceeds {bound:e}; tighten the integrator tolerance")]
    NormDrift { drift: f64, bound: f64 },

    #[error("success probability needs a non-empty target set")]
    EmptyTargetSet,

    #[error("only {accepted} of {wanted} instances passed the filter after {attempts} draws")]
    AttemptBudget {
        accepted: usize,
        wanted: usize,
        attempts: usize,
    },

    #[error("malformed bit string `{0}`")]
    BitString(String),

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors raised by the numerics or by resource guards, as opposed to bad input.
    pub fn is_computational(&self) -> bool {
        matches!(
            self,
            Error::CapExceeded { .. }
                | Error::NonConvergence { .. }
                | Error::StepUnderflow { .. }
                | Error::NormDrift { .. }
                | Error::AttemptBudget { .. }
                | Error::DegenerateTrace { .. }
                | Error::Io(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Structure(_) => "structure",
            Error::Arity { .. } => "arity",
            Error::Length { .. } => "length",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::OutputMismatch { .. } => "output_mismatch",
            Error::UnknownTopology(_) => "unknown_topology",
            Error::InvalidSchedule(_) => "invalid_schedule",
            Error::OutOfRange(_) => "out_of_range",
            Error::DegenerateTrace { .. } => "degenerate_trace",
            Error::TraceTooCoarse(_) => "trace_too_coarse",
            Error::DimensionMismatch(..) => "dimension_mismatch",
            Error::NonConvergence { .. } => "non_convergence",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::NormDrift { .. } => "norm_drift",
            Error::EmptyTargetSet => "empty_target_set",
            Error::AttemptBudget { .. } => "attempt_budget",
            Error::BitString(_) => "bit_string",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
