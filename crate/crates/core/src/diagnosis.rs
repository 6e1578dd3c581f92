//! Valid diagnoses under the stuck-at fault model.
//!
//! A diagnosis assigns a value `x_i` and a fault flag `f_i` to every wire. It
//! is valid for an instance when the output wires carry the observed outputs,
//! each circuit-input flag marks a disagreement with the applied input, and
//! every gate output flag marks a disagreement with the healthy gate function
//! evaluated on the gate's (possibly faulty) input values.
//!
//! Valid diagnoses are in bijection with the values of the free wires (all
//! wires but the circuit outputs). The reduced index of a diagnosis is the
//! integer whose bit `j` is the value of free wire `j`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::{parse_netlist, Circuit, GateKind, WireAssignment};
use crate::error::{Error, Result};

/// Largest number of free wires any enumeration-based operation accepts by default.
pub const DEFAULT_CAP: usize = 26;

/// Wire values and fault flags on the wires of a single gate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalConfig {
    pub inputs: Vec<bool>,
    pub outputs: Vec<bool>,
    pub input_faults: Vec<bool>,
    pub output_faults: Vec<bool>,
}

impl fmt::Display for LocalConfig {
    /// `(x_in..., x_out...;f_in..., f_out...)`, e.g. `(1,0,0;0,0,1)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits = |v: &[bool]| {
            v.iter()
                .map(|&b| if b { "1" } else { "0" })
                .collect::<Vec<_>>()
        };
        let xs: Vec<_> = bits(&self.inputs)
            .into_iter()
            .chain(bits(&self.outputs))
            .collect();
        let fs: Vec<_> = bits(&self.input_faults)
            .into_iter()
            .chain(bits(&self.output_faults))
            .collect();
        write!(f, "({};{})", xs.join(","), fs.join(","))
    }
}

/// Whether a local configuration is consistent with the healthy function of `kind`.
pub fn is_consistent(kind: GateKind, local: &LocalConfig) -> bool {
    if local.inputs.len() != kind.input_arity()
        || local.input_faults.len() != kind.input_arity()
        || local.outputs.len() != kind.output_arity()
        || local.output_faults.len() != kind.output_arity()
    {
        return false;
    }
    let healthy = kind.eval_packed(crate::circuit::pack(&local.inputs));
    local
        .outputs
        .iter()
        .zip(&local.output_faults)
        .enumerate()
        .all(|(p, (&x, &f))| f == (x != ((healthy >> p) & 1 == 1)))
}

/// Every consistent local configuration of a gate, ordered by wire values then
/// input fault bits (both read as binary numbers, first bit most significant).
pub fn consistent_assignments(kind: GateKind) -> Vec<LocalConfig> {
    let (ki, ko) = (kind.input_arity(), kind.output_arity());
    let width = 2 * ki + 2 * ko;
    let bit = |pattern: u32, pos: usize| (pattern >> (width - 1 - pos)) & 1 == 1;
    let mut out: Vec<LocalConfig> = (0..1u32 << width)
        .map(|p| LocalConfig {
            inputs: (0..ki).map(|i| bit(p, i)).collect(),
            outputs: (0..ko).map(|i| bit(p, ki + i)).collect(),
            input_faults: (0..ki).map(|i| bit(p, ki + ko + i)).collect(),
            output_faults: (0..ko).map(|i| bit(p, 2 * ki + ko + i)).collect(),
        })
        .filter(|l| is_consistent(kind, l))
        .collect();
    out.sort_by(|a, b| {
        (&a.inputs, &a.outputs, &a.input_faults).cmp(&(&b.inputs, &b.outputs, &b.input_faults))
    });
    out
}

/// Free-form metadata carried alongside an instance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

/// A circuit with an applied input vector and the observed (faulty) outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub circuit: Circuit,
    pub inputs: Vec<bool>,
    pub outputs: Vec<bool>,
    pub seed: Option<u64>,
    pub meta: InstanceMeta,
}

impl Instance {
    pub fn new(circuit: Circuit, inputs: Vec<bool>, outputs: Vec<bool>) -> Result<Instance> {
        if inputs.len() != circuit.n_inputs() {
            return Err(Error::Length {
                what: "applied inputs",
                expected: circuit.n_inputs(),
                got: inputs.len(),
            });
        }
        if outputs.len() != circuit.n_outputs() {
            return Err(Error::Length {
                what: "observed outputs",
                expected: circuit.n_outputs(),
                got: outputs.len(),
            });
        }
        Ok(Instance {
            circuit,
            inputs,
            outputs,
            seed: None,
            meta: InstanceMeta::default(),
        })
    }

    pub fn healthy_outputs(&self) -> Vec<bool> {
        self.circuit
            .healthy_outputs(&self.inputs)
            .expect("instance input length checked at construction")
    }

    /// Observed output bits that disagree with healthy propagation.
    pub fn flipped_outputs(&self) -> usize {
        self.healthy_outputs()
            .iter()
            .zip(&self.outputs)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn free_bits(&self) -> usize {
        self.circuit.free_wire_count()
    }

    pub fn check_cap(&self, cap: usize) -> Result<()> {
        let free_bits = self.free_bits();
        if free_bits > cap || free_bits >= usize::BITS as usize {
            return Err(Error::CapExceeded { free_bits, cap });
        }
        Ok(())
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            circuit: self.circuit.to_netlist_text(),
            inputs: bits_to_string(&self.inputs),
            outputs: bits_to_string(&self.outputs),
            seed: self.seed,
            metadata: self.meta.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Parses an instance file. A `circuit` field holding a single line is
    /// read as a path, relative to `base_dir` when given.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Instance> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.into_instance(base_dir)
    }

    pub fn load(path: &Path) -> Result<Instance> {
        let text = std::fs::read_to_string(path)?;
        Instance::from_json(&text, path.parent())
    }
}

/// On-disk instance description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    /// Inline netlist text, or a path to a netlist file.
    pub circuit: String,
    pub inputs: String,
    pub outputs: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub metadata: InstanceMeta,
}

impl InstanceFile {
    pub fn into_instance(self, base_dir: Option<&Path>) -> Result<Instance> {
        let text = if self.circuit.contains('\n') {
            self.circuit
        } else {
            let p = Path::new(self.circuit.trim());
            let p = match base_dir {
                Some(d) if p.is_relative() => d.join(p),
                _ => p.to_path_buf(),
            };
            std::fs::read_to_string(p)?
        };
        let circuit = parse_netlist(&text)?;
        let mut inst = Instance::new(
            circuit,
            bits_from_str(&self.inputs)?,
            bits_from_str(&self.outputs)?,
        )?;
        inst.seed = self.seed;
        inst.meta = self.metadata;
        Ok(inst)
    }
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn bits_from_str(s: &str) -> Result<Vec<bool>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::BitString(s.to_string())),
        })
        .collect()
}

/// Wire values `x_1..x_N` and fault flags `f_1..f_N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnosis {
    pub wire_values: Vec<bool>,
    pub fault_flags: Vec<bool>,
}

impl Diagnosis {
    pub fn fault_count(&self) -> usize {
        self.fault_flags.iter().filter(|&&f| f).count()
    }

    /// Hamming distance over all `2N` bits.
    pub fn hamming(&self, other: &Diagnosis) -> usize {
        let d = |a: &[bool], b: &[bool]| a.iter().zip(b).filter(|(x, y)| x != y).count();
        d(&self.wire_values, &other.wire_values) + d(&self.fault_flags, &other.fault_flags)
    }

    /// Faulty wires (canonical ids).
    pub fn fault_sites(&self) -> Vec<usize> {
        (0..self.fault_flags.len())
            .filter(|&i| self.fault_flags[i])
            .collect()
    }

    /// Restriction to the wires of one gate.
    pub fn local(&self, gate: &crate::circuit::Gate) -> LocalConfig {
        LocalConfig {
            inputs: gate.inputs.iter().map(|&w| self.wire_values[w]).collect(),
            outputs: gate.outputs.iter().map(|&w| self.wire_values[w]).collect(),
            input_faults: gate.inputs.iter().map(|&w| self.fault_flags[w]).collect(),
            output_faults: gate.outputs.iter().map(|&w| self.fault_flags[w]).collect(),
        }
    }
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{};{}",
            bits_to_string(&self.wire_values),
            bits_to_string(&self.fault_flags)
        )
    }
}

/// Fault flags implied by a full wire assignment whose outputs match the observation.
pub fn induced_fault_bits(instance: &Instance, wire_values: &WireAssignment) -> Result<Vec<bool>> {
    let c = &instance.circuit;
    if wire_values.len() != c.wire_count() {
        return Err(Error::Length {
            what: "wire assignment",
            expected: c.wire_count(),
            got: wire_values.len(),
        });
    }
    let wires = wire_values.as_slice();
    for (k, w) in c.output_ids().enumerate() {
        if wires[w] != instance.outputs[k] {
            return Err(Error::OutputMismatch {
                wire: c.wire_name(w).to_string(),
                value: wires[w],
                observed: instance.outputs[k],
            });
        }
    }
    let mut faults = vec![false; c.wire_count()];
    fill_faults(instance, wires, &mut faults);
    Ok(faults)
}

#[inline]
fn fill_faults(instance: &Instance, wires: &[bool], faults: &mut [bool]) {
    for (i, &applied) in instance.inputs.iter().enumerate() {
        faults[i] = wires[i] != applied;
    }
    for g in instance.circuit.gates() {
        let out = g.kind.eval_packed(g.packed_inputs(wires));
        for (p, &w) in g.outputs.iter().enumerate() {
            faults[w] = wires[w] != ((out >> p) & 1 == 1);
        }
    }
}

pub fn is_valid(instance: &Instance, d: &Diagnosis) -> bool {
    let c = &instance.circuit;
    let n = c.wire_count();
    if d.wire_values.len() != n || d.fault_flags.len() != n {
        return false;
    }
    let outputs_match = c
        .output_ids()
        .zip(&instance.outputs)
        .all(|(w, &o)| d.wire_values[w] == o);
    let inputs_match = instance
        .inputs
        .iter()
        .enumerate()
        .all(|(i, &a)| d.fault_flags[i] == (d.wire_values[i] != a));
    outputs_match && inputs_match && c.gates().iter().all(|g| is_consistent(g.kind, &d.local(g)))
}

/// Healthy propagation with the outputs forced to the observation; only the
/// disagreeing output wires are flagged.
pub fn trivial_diagnosis(instance: &Instance) -> Diagnosis {
    let c = &instance.circuit;
    let mut wires = c
        .propagate(&instance.inputs)
        .expect("instance input length checked at construction")
        .into_inner();
    for (k, w) in c.output_ids().enumerate() {
        wires[w] = instance.outputs[k];
    }
    let mut faults = vec![false; wires.len()];
    fill_faults(instance, &wires, &mut faults);
    Diagnosis {
        wire_values: wires,
        fault_flags: faults,
    }
}

/// Reduced index of a diagnosis: bit `j` is the value of free wire `j`.
pub fn reduced_index_of(instance: &Instance, wire_values: &[bool]) -> usize {
    (0..instance.free_bits())
        .filter(|&j| wire_values[j])
        .fold(0, |acc, j| acc | (1 << j))
}

/// Scratch-buffer decoder from reduced indices to diagnoses, for hot loops.
pub struct Decoder<'a> {
    instance: &'a Instance,
    wires: Vec<bool>,
    faults: Vec<bool>,
}

impl<'a> Decoder<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        let n = instance.circuit.wire_count();
        let mut wires = vec![false; n];
        for (k, w) in instance.circuit.output_ids().enumerate() {
            wires[w] = instance.outputs[k];
        }
        Decoder {
            instance,
            wires,
            faults: vec![false; n],
        }
    }

    /// Loads reduced index `index` and induces its fault flags.
    #[inline]
    pub fn load(&mut self, index: usize) {
        let free = self.instance.free_bits();
        for j in 0..free {
            self.wires[j] = (index >> j) & 1 == 1;
        }
        fill_faults(self.instance, &self.wires, &mut self.faults);
    }

    pub fn wires(&self) -> &[bool] {
        &self.wires
    }

    pub fn faults(&self) -> &[bool] {
        &self.faults
    }

    pub fn fault_count(&self) -> usize {
        self.faults.iter().filter(|&&f| f).count()
    }

    pub fn diagnosis(&self) -> Diagnosis {
        Diagnosis {
            wire_values: self.wires.clone(),
            fault_flags: self.faults.clone(),
        }
    }
}

pub fn diagnosis_at(instance: &Instance, index: usize) -> Diagnosis {
    let mut dec = Decoder::new(instance);
    dec.load(index);
    dec.diagnosis()
}

/// All `2^(N - N_O)` valid diagnoses in increasing reduced-index order.
pub fn enumerate_valid(
    instance: &Instance,
    cap: usize,
) -> Result<impl Iterator<Item = Diagnosis> + '_> {
    instance.check_cap(cap)?;
    let mut dec = Decoder::new(instance);
    Ok((0..1usize << instance.free_bits()).map(move |i| {
        dec.load(i);
        dec.diagnosis()
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MfdResult {
    pub min_faults: usize,
    pub degeneracy: usize,
    /// Reduced indices of every minimum-fault diagnosis, ascending.
    pub mfd_set: Vec<usize>,
}

/// Minimum fault diagnoses by exhaustive enumeration of the valid space.
pub fn mfd_bruteforce(instance: &Instance) -> Result<MfdResult> {
    mfd_bruteforce_with_cap(instance, DEFAULT_CAP)
}

pub fn mfd_bruteforce_with_cap(instance: &Instance, cap: usize) -> Result<MfdResult> {
    instance.check_cap(cap)?;
    let mut dec = Decoder::new(instance);
    let mut best = usize::MAX;
    let mut set = Vec::new();
    for i in 0..1usize << instance.free_bits() {
        dec.load(i);
        let f = dec.fault_count();
        if f < best {
            best = f;
            set.clear();
        }
        if f == best {
            set.push(i);
        }
    }
    Ok(MfdResult {
        min_faults: best,
        degeneracy: set.len(),
        mfd_set: set,
    })
}

/// Minimum fault diagnoses by planting faults on `k` wire sites for
/// `k = 0, 1, ...` and simulating. A planted site carries the complement of its
/// healthy value; a planting explains the instance when the simulated outputs
/// equal the observation. Searches up to `max_faults` sites.
pub fn mfd_by_fault_planting(instance: &Instance, max_faults: usize) -> Option<MfdResult> {
    let c = &instance.circuit;
    let n = c.wire_count();
    let mut planted = vec![false; n];
    let mut wires = vec![false; n];
    for k in 0..=max_faults.min(n) {
        let mut set = Vec::new();
        for_each_subset(n, k, &mut |sites| {
            planted.iter_mut().for_each(|p| *p = false);
            for &s in sites {
                planted[s] = true;
            }
            for i in 0..c.n_inputs() {
                wires[i] = instance.inputs[i] ^ planted[i];
            }
            for g in c.gates() {
                let out = g.kind.eval_packed(g.packed_inputs(&wires));
                for (p, &w) in g.outputs.iter().enumerate() {
                    wires[w] = ((out >> p) & 1 == 1) ^ planted[w];
                }
            }
            if c.output_ids()
                .zip(&instance.outputs)
                .all(|(w, &o)| wires[w] == o)
            {
                set.push(reduced_index_of(instance, &wires));
            }
        });
        if !set.is_empty() {
            set.sort_unstable();
            return Some(MfdResult {
                min_faults: k,
                degeneracy: set.len(),
                mfd_set: set,
            });
        }
    }
    None
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..=n - (k - cur.len()) {
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}
