//! Initial, driver and final Hamiltonians on the reduced valid-diagnosis space.
//!
//! Operators act on vectors indexed by reduced index (see [`crate::diagnosis`]).
//! A gate-local driver term flips a non-empty subset of a gate's input wires
//! together with their fault flags; the fault flag of the gate output follows
//! from fault induction. On reduced indices that move is `i -> i ^ mask`, so
//! the driver is a sum of XOR generators whose masks depend only on the
//! circuit topology.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::diagnosis::{
    diagnosis_at, reduced_index_of, trivial_diagnosis, Decoder, Diagnosis, Instance, DEFAULT_CAP,
};
use crate::error::{Error, Result};
use crate::schedule::{envelopes, Envelopes};

/// Largest dimension for which explicit (coordinate) materialization is allowed.
pub const MATERIALIZE_LIMIT: usize = 1 << 16;

const CHUNK: usize = 1 << 12;
#[cfg(feature = "parallel")]
const PARALLEL_MIN_DIM: usize = 1 << 16;

/// Scalar types operators can act on.
pub trait Amplitude:
    Copy + Send + Sync + Default + Add<Output = Self> + Mul<f64, Output = Self> + 'static
{
}

impl Amplitude for f64 {}
impl Amplitude for Complex64 {}

/// A Hermitian (real symmetric) operator given by its action.
pub trait Operator: Sync {
    fn dim(&self) -> usize;

    /// `y = H x`.
    fn apply<T: Amplitude>(&self, x: &[T], y: &mut [T]);

    /// The diagonal, when the operator has no off-diagonal part.
    fn as_diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

/// Bijection between `0..2^(N - N_O)` and the valid diagnoses of an instance.
#[derive(Debug, Clone)]
pub struct ReducedIndex {
    instance: Instance,
    free_bit_order: Vec<usize>,
}

impl ReducedIndex {
    pub fn new(instance: &Instance) -> Result<Self> {
        Self::with_cap(instance, DEFAULT_CAP)
    }

    pub fn with_cap(instance: &Instance, cap: usize) -> Result<Self> {
        instance.check_cap(cap)?;
        Ok(ReducedIndex {
            instance: instance.clone(),
            free_bit_order: (0..instance.free_bits()).collect(),
        })
    }

    pub fn dimension(&self) -> usize {
        1 << self.free_bit_order.len()
    }

    /// Canonical wire id carried by each bit of the index, least significant first.
    pub fn free_bit_order(&self) -> &[usize] {
        &self.free_bit_order
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn decode(&self, index: usize) -> Diagnosis {
        diagnosis_at(&self.instance, index)
    }

    /// Index of a valid diagnosis; invalid ones are rejected.
    pub fn encode(&self, d: &Diagnosis) -> Option<usize> {
        if !crate::diagnosis::is_valid(&self.instance, d) {
            return None;
        }
        Some(reduced_index_of(&self.instance, &d.wire_values))
    }

    pub fn trivial_index(&self) -> usize {
        reduced_index_of(
            &self.instance,
            &trivial_diagnosis(&self.instance).wire_values,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DriverSign {
    /// Every driver matrix element is `-1`.
    #[default]
    #[serde(alias = "stoq")]
    Stoquastic,
    /// Globally sign-flipped driver, every element `+1`.
    #[serde(alias = "nonstoq")]
    NonStoquastic,
}

impl DriverSign {
    pub fn coefficient(self) -> f64 {
        match self {
            DriverSign::Stoquastic => -1.0,
            DriverSign::NonStoquastic => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DriverSign::Stoquastic => "stoquastic",
            DriverSign::NonStoquastic => "nonstoquastic",
        }
    }
}

impl std::str::FromStr for DriverSign {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "stoq" | "stoquastic" => Ok(DriverSign::Stoquastic),
            "nonstoq" | "nonstoquastic" | "non-stoquastic" => Ok(DriverSign::NonStoquastic),
            _ => Err(format!("unknown driver sign `{s}` (stoq|nonstoq)")),
        }
    }
}

/// Off-diagonal rule coupling index `i` to `i ^ mask` with `coefficient`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipGenerator {
    pub gate: usize,
    pub mask: usize,
    pub coefficient: f64,
}

/// One generator per non-empty subset of each gate's inputs, in gate order,
/// subsets numbered by port bitmask (`{i1}`, `{i2}`, `{i1, i2}`).
pub fn driver_generators(circuit: &Circuit) -> Vec<FlipGenerator> {
    let mut out = Vec::new();
    for (gi, g) in circuit.gates().iter().enumerate() {
        for subset in 1..1usize << g.inputs.len() {
            let mask = g
                .inputs
                .iter()
                .enumerate()
                .filter(|(p, _)| (subset >> p) & 1 == 1)
                .fold(0, |m, (_, &w)| m | (1 << w));
            out.push(FlipGenerator {
                gate: gi,
                mask,
                coefficient: DriverSign::Stoquastic.coefficient(),
            });
        }
    }
    out
}

/// Hermitian operator stored as an optional diagonal plus XOR generators.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOperator {
    dim: usize,
    diagonal: Option<Vec<f64>>,
    generators: Vec<FlipGenerator>,
}

impl ReducedOperator {
    pub fn diagonal(values: Vec<f64>) -> Self {
        ReducedOperator {
            dim: values.len(),
            diagonal: Some(values),
            generators: Vec::new(),
        }
    }

    pub fn from_generators(dim: usize, generators: Vec<FlipGenerator>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.mask == 0 || g.mask >= dim) {
            return Err(Error::OutOfRange(format!("generator mask {:#x}", g.mask)));
        }
        Ok(ReducedOperator {
            dim,
            diagonal: None,
            generators,
        })
    }

    pub fn diagonal_values(&self) -> Option<&[f64]> {
        self.diagonal.as_deref()
    }

    pub fn generators(&self) -> &[FlipGenerator] {
        &self.generators
    }

    /// Matrix element `<row|H|col>`.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let mut v = 0.0;
        if row == col {
            if let Some(d) = &self.diagonal {
                v += d[row];
            }
        }
        for g in &self.generators {
            if row ^ col == g.mask {
                v += g.coefficient;
            }
        }
        v
    }

    /// Nonzero entries as `(row, col, value)`, row-major.
    pub fn to_coo(&self) -> Result<Vec<(usize, usize, f64)>> {
        if self.dim > MATERIALIZE_LIMIT {
            return Err(Error::CapExceeded {
                free_bits: self.dim.trailing_zeros() as usize,
                cap: MATERIALIZE_LIMIT.trailing_zeros() as usize,
            });
        }
        let mut out = Vec::new();
        for row in 0..self.dim {
            let mut cols: BTreeMap<usize, f64> = BTreeMap::new();
            if let Some(d) = &self.diagonal {
                *cols.entry(row).or_default() += d[row];
            }
            for g in &self.generators {
                *cols.entry(row ^ g.mask).or_default() += g.coefficient;
            }
            out.extend(
                cols.into_iter()
                    .filter(|&(_, v)| v != 0.0)
                    .map(|(c, v)| (row, c, v)),
            );
        }
        Ok(out)
    }

    /// Coordinate-format dump, one `row col value` triple per line.
    pub fn write_coo<W: Write>(&self, mut w: W) -> Result<()> {
        for (r, c, v) in self.to_coo()? {
            writeln!(w, "{r} {c} {}", crate::format::sig12(v))?;
        }
        Ok(())
    }
}

impl Operator for ReducedOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply<T: Amplitude>(&self, x: &[T], y: &mut [T]) {
        let diags: Vec<(f64, &[f64])> = self.diagonal.iter().map(|d| (1.0, d.as_slice())).collect();
        let gens: Vec<(usize, f64)> = self
            .generators
            .iter()
            .map(|g| (g.mask, g.coefficient))
            .collect();
        xor_matvec(&diags, 0.0, &gens, x, y);
    }

    fn as_diagonal(&self) -> Option<Vec<f64>> {
        match (&self.diagonal, self.generators.is_empty()) {
            (Some(d), true) => Some(d.clone()),
            (None, true) => Some(vec![0.0; self.dim]),
            _ => None,
        }
    }
}

/// `y[i] = (sum_k w_k d_k[i] - shift) x[i] + sum_g c_g x[i ^ m_g]`, chunked so
/// each output element is accumulated in a fixed order.
fn xor_matvec<T: Amplitude>(
    diags: &[(f64, &[f64])],
    shift: f64,
    gens: &[(usize, f64)],
    x: &[T],
    y: &mut [T],
) {
    let kernel = |base: usize, out: &mut [T]| {
        for (j, o) in out.iter_mut().enumerate() {
            let i = base + j;
            let d = diags.iter().fold(-shift, |acc, &(w, v)| acc + w * v[i]);
            *o = x[i] * d;
        }
        for &(m, c) in gens {
            for (j, o) in out.iter_mut().enumerate() {
                *o = *o + x[(base + j) ^ m] * c;
            }
        }
    };
    #[cfg(feature = "parallel")]
    if y.len() >= PARALLEL_MIN_DIM {
        use rayon::prelude::*;
        y.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(k, out)| kernel(k * CHUNK, out));
        return;
    }
    for (k, out) in y.chunks_mut(CHUNK).enumerate() {
        kernel(k * CHUNK, out);
    }
}

fn diagonal_pass(
    instance: &Instance,
    mut f: impl FnMut(usize, &Decoder) -> (f64, f64),
) -> (Vec<f64>, Vec<f64>) {
    let dim = 1usize << instance.free_bits();
    let mut dec = Decoder::new(instance);
    let mut a = Vec::with_capacity(dim);
    let mut b = Vec::with_capacity(dim);
    for i in 0..dim {
        dec.load(i);
        let (x, y) = f(i, &dec);
        a.push(x);
        b.push(y);
    }
    (a, b)
}

/// Diagonal energies of the initial and final Hamiltonians.
fn initial_and_final(instance: &Instance) -> (Vec<f64>, Vec<f64>) {
    let n = instance.circuit.wire_count() as f64;
    let d0 = trivial_diagnosis(instance);
    let i0 = reduced_index_of(instance, &d0.wire_values);
    diagonal_pass(instance, |i, dec| {
        let wire_diff = (i ^ i0).count_ones() as usize;
        let fault_diff = dec
            .faults()
            .iter()
            .zip(&d0.fault_flags)
            .filter(|(a, b)| a != b)
            .count();
        let hamming = (wire_diff + fault_diff) as f64;
        (-2.0 * n + 2.0 * hamming, 2.0 * dec.fault_count() as f64 - n)
    })
}

/// `E(d) = -2N + 2 * hamming(d, d0)`, `d0` the trivial diagnosis.
pub fn build_initial(instance: &Instance) -> Result<ReducedOperator> {
    instance.check_cap(DEFAULT_CAP)?;
    Ok(ReducedOperator::diagonal(initial_and_final(instance).0))
}

/// `E(d) = 2 * faults(d) - N`.
pub fn build_final(instance: &Instance) -> Result<ReducedOperator> {
    instance.check_cap(DEFAULT_CAP)?;
    Ok(ReducedOperator::diagonal(initial_and_final(instance).1))
}

pub fn build_driver(instance: &Instance, sign: DriverSign) -> Result<ReducedOperator> {
    instance.check_cap(DEFAULT_CAP)?;
    let gens = driver_generators(&instance.circuit)
        .into_iter()
        .map(|g| FlipGenerator {
            coefficient: sign.coefficient(),
            ..g
        })
        .collect();
    ReducedOperator::from_generators(1 << instance.free_bits(), gens)
}

/// The three parts of the annealing Hamiltonian for one instance.
#[derive(Debug, Clone)]
pub struct AnnealingHamiltonian {
    pub initial: ReducedOperator,
    pub driver: ReducedOperator,
    pub final_: ReducedOperator,
    pub sign: DriverSign,
}

impl AnnealingHamiltonian {
    pub fn new(instance: &Instance, sign: DriverSign) -> Result<Self> {
        instance.check_cap(DEFAULT_CAP)?;
        let (hi, hf) = initial_and_final(instance);
        Ok(AnnealingHamiltonian {
            initial: ReducedOperator::diagonal(hi),
            driver: build_driver(instance, sign)?,
            final_: ReducedOperator::diagonal(hf),
            sign,
        })
    }

    /// Same instance with per-generator driver coefficients.
    pub fn with_driver_coefficients(mut self, coefficients: &[f64]) -> Result<Self> {
        if coefficients.len() != self.driver.generators.len() {
            return Err(Error::Length {
                what: "driver coefficients",
                expected: self.driver.generators.len(),
                got: coefficients.len(),
            });
        }
        for (g, &c) in self.driver.generators.iter_mut().zip(coefficients) {
            g.coefficient = c;
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.initial.dim
    }

    /// `H(s) = A(s) H_I + B(s) H_D + C(s) H_F`.
    pub fn at(&self, s: f64) -> Result<InstantHamiltonian<'_>> {
        assemble(envelopes(s)?, &self.initial, &self.driver, &self.final_)
    }
}

/// Matrix-free `A H_I + B H_D + C H_F`, optionally shifted by a multiple of
/// the identity.
#[derive(Debug, Clone)]
pub struct InstantHamiltonian<'a> {
    dim: usize,
    diags: Vec<(f64, &'a [f64])>,
    gens: Vec<(usize, f64)>,
    shift: f64,
}

pub fn assemble<'a>(
    env: Envelopes,
    initial: &'a ReducedOperator,
    driver: &'a ReducedOperator,
    final_: &'a ReducedOperator,
) -> Result<InstantHamiltonian<'a>> {
    let dim = initial.dim;
    for op in [driver, final_] {
        if op.dim != dim {
            return Err(Error::DimensionMismatch(dim, op.dim));
        }
    }
    let mut diags = Vec::new();
    let mut gens = Vec::new();
    for (w, op) in [(env.a, initial), (env.b, driver), (env.c, final_)] {
        if w == 0.0 {
            continue;
        }
        if let Some(d) = &op.diagonal {
            diags.push((w, d.as_slice()));
        }
        gens.extend(op.generators.iter().map(|g| (g.mask, w * g.coefficient)));
    }
    Ok(InstantHamiltonian {
        dim,
        diags,
        gens,
        shift: 0.0,
    })
}

impl InstantHamiltonian<'_> {
    /// Subtracts `shift` times the identity; only the global phase of a
    /// time evolution changes.
    pub fn shifted(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    /// Midpoint of the diagonal range, a cheap spectral centre.
    pub fn diagonal_midpoint(&self) -> f64 {
        let (lo, hi) = self.diagonal_range();
        0.5 * (lo + hi)
    }

    pub fn diagonal_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim {
            let d = self.diag_at(i);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }

    /// Upper bound on the spectral radius (Gershgorin).
    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.diagonal_range();
        let off: f64 = self.gens.iter().map(|&(_, c)| c.abs()).sum();
        lo.abs().max(hi.abs()) + off
    }

    #[inline]
    fn diag_at(&self, i: usize) -> f64 {
        self.diags
            .iter()
            .fold(-self.shift, |acc, &(w, v)| acc + w * v[i])
    }

    /// `<x|H|x>` for a normalized or unnormalized complex state, divided by `<x|x>`.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let mut y = vec![Complex64::default(); self.dim];
        self.apply(x, &mut y);
        let num: Complex64 = x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = x.iter().map(|a| a.norm_sqr()).sum();
        num.re / den
    }
}

impl Operator for InstantHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply<T: Amplitude>(&self, x: &[T], y: &mut [T]) {
        xor_matvec(&self.diags, self.shift, &self.gens, x, y);
    }

    fn as_diagonal(&self) -> Option<Vec<f64>> {
        if self.gens.is_empty() {
            Some((0..self.dim).map(|i| self.diag_at(i)).collect())
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphReport {
    pub nodes: usize,
    pub regular: bool,
    pub degree: usize,
    pub connected: bool,
    pub reachable: usize,
    /// Degree -> number of nodes with that degree.
    pub degree_histogram: BTreeMap<usize, usize>,
    /// Sorted generator masks; identical masks mean identical (isomorphic) graphs.
    pub masks: Vec<usize>,
    pub mask_fingerprint: String,
}

/// Structure of the graph the driver induces on the valid diagnoses.
pub fn transition_graph_check(instance: &Instance) -> Result<GraphReport> {
    let index = ReducedIndex::new(instance)?;
    let dim = index.dimension();
    let mut masks: Vec<usize> = driver_generators(&instance.circuit)
        .iter()
        .map(|g| g.mask)
        .collect();
    masks.sort_unstable();

    let mut histogram = BTreeMap::new();
    let mut neighbours = Vec::with_capacity(masks.len());
    for i in 0..dim {
        neighbours.clear();
        neighbours.extend(masks.iter().map(|m| i ^ m).filter(|&j| j != i));
        neighbours.sort_unstable();
        neighbours.dedup();
        *histogram.entry(neighbours.len()).or_insert(0) += 1;
    }

    let start = index.trivial_index();
    let mut seen = vec![false; dim];
    let mut queue = std::collections::VecDeque::from([start]);
    seen[start] = true;
    let mut reachable = 1;
    while let Some(i) = queue.pop_front() {
        for m in &masks {
            let j = i ^ m;
            if !seen[j] {
                seen[j] = true;
                reachable += 1;
                queue.push_back(j);
            }
        }
    }

    let regular = histogram.len() == 1;
    let degree = *histogram.keys().next().unwrap_or(&0);
    Ok(GraphReport {
        nodes: dim,
        regular,
        degree,
        connected: reachable == dim,
        reachable,
        degree_histogram: histogram,
        mask_fingerprint: fingerprint(&masks),
        masks,
    })
}

fn fingerprint(masks: &[usize]) -> String {
    // FNV-1a over the little-endian mask bytes
    let mut h: u64 = 0xcbf29ce484222325;
    for m in masks {
        for b in (*m as u64).to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    format!("{h:016x}")
}
