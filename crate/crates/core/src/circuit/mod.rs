//! Structural netlists: gate kinds, canonical circuits and healthy logic evaluation.
//!
//! A [`Circuit`] is always validated and canonical. Wire ids are 0-based:
//! circuit inputs occupy `0..n_inputs`, internal wires follow in topological
//! order of their driving gates, and circuit outputs occupy the last
//! `n_outputs` ids. Gates are stored in topological order.

mod builtin;
mod netlist;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builtin::{builtin_topology, C17_NETLIST, C26_NETLIST};
pub use netlist::{parse_netlist, validate_structure, NetGate, Netlist, ParseError, Violation};

pub type WireId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Fan,
    Inv,
    And,
    Or,
    Xor,
    Nor,
    Nand,
}

impl GateKind {
    pub const ALL: [GateKind; 7] = [
        GateKind::Fan,
        GateKind::Inv,
        GateKind::And,
        GateKind::Or,
        GateKind::Xor,
        GateKind::Nor,
        GateKind::Nand,
    ];

    /// Kinds a random instance may draw for a two-input gate.
    pub const TWO_INPUT: [GateKind; 5] = [
        GateKind::Nand,
        GateKind::And,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Xor,
    ];

    pub fn input_arity(self) -> usize {
        match self {
            GateKind::Fan | GateKind::Inv => 1,
            _ => 2,
        }
    }

    pub fn output_arity(self) -> usize {
        match self {
            GateKind::Fan => 2,
            _ => 1,
        }
    }

    /// Healthy evaluation on packed bits: input port `p` is bit `p` of `inputs`,
    /// output port `p` is bit `p` of the result.
    #[inline]
    pub fn eval_packed(self, inputs: u8) -> u8 {
        let a = inputs & 1;
        let b = (inputs >> 1) & 1;
        match self {
            GateKind::Fan => a | (a << 1),
            GateKind::Inv => a ^ 1,
            GateKind::And => a & b,
            GateKind::Or => a | b,
            GateKind::Xor => a ^ b,
            GateKind::Nor => (a | b) ^ 1,
            GateKind::Nand => (a & b) ^ 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Fan => "FAN",
            GateKind::Inv => "INV",
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Xor => "XOR",
            GateKind::Nor => "NOR",
            GateKind::Nand => "NAND",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        GateKind::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown gate kind `{s}`"))
    }
}

/// Output bits of a healthy gate.
pub fn gate_eval(kind: GateKind, inputs: &[bool]) -> Result<Vec<bool>> {
    if inputs.len() != kind.input_arity() {
        return Err(Error::Arity {
            kind,
            expected: kind.input_arity(),
            got: inputs.len(),
        });
    }
    let out = kind.eval_packed(pack(inputs));
    Ok((0..kind.output_arity())
        .map(|p| (out >> p) & 1 == 1)
        .collect())
}

pub(crate) fn pack(bits: &[bool]) -> u8 {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (p, &b)| acc | ((b as u8) << p))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub name: String,
    pub kind: GateKind,
    pub inputs: Vec<WireId>,
    pub outputs: Vec<WireId>,
}

impl Gate {
    /// Packs the current values of this gate's input wires.
    #[inline]
    pub(crate) fn packed_inputs(&self, wires: &[bool]) -> u8 {
        self.inputs
            .iter()
            .enumerate()
            .fold(0, |acc, (p, &w)| acc | ((wires[w] as u8) << p))
    }
}

/// Bit per wire, indexed by canonical wire id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WireAssignment(Vec<bool>);

impl WireAssignment {
    pub fn new(bits: Vec<bool>) -> Self {
        WireAssignment(bits)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [bool] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<bool> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<WireId> for WireAssignment {
    type Output = bool;
    fn index(&self, w: WireId) -> &bool {
        &self.0[w]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    wire_names: Vec<String>,
    n_inputs: usize,
    n_outputs: usize,
    gates: Vec<Gate>,
    /// Gate driving each wire, `None` for circuit inputs.
    driver: Vec<Option<usize>>,
    /// Gate consuming each wire, `None` for circuit outputs.
    consumer: Vec<Option<usize>>,
}

impl Circuit {
    /// Validates a netlist and relabels its wires canonically.
    pub fn from_netlist(netlist: &Netlist) -> Result<Circuit> {
        let violations = validate_structure(netlist);
        if !violations.is_empty() {
            return Err(Error::Structure(violations));
        }
        Ok(netlist::canonicalize(netlist))
    }

    pub fn to_netlist(&self) -> Netlist {
        let name = |w: &WireId| self.wire_names[*w].clone();
        Netlist {
            inputs: self.input_ids().map(|w| name(&w)).collect(),
            outputs: self.output_ids().map(|w| name(&w)).collect(),
            gates: self
                .gates
                .iter()
                .map(|g| NetGate {
                    name: g.name.clone(),
                    kind: g.kind,
                    inputs: g.inputs.iter().map(name).collect(),
                    outputs: g.outputs.iter().map(name).collect(),
                    line: 0,
                })
                .collect(),
        }
    }

    /// Netlist text that parses back to an identical circuit.
    pub fn to_netlist_text(&self) -> String {
        self.to_netlist().to_string()
    }

    pub(crate) fn from_canonical_parts(
        wire_names: Vec<String>,
        n_inputs: usize,
        n_outputs: usize,
        gates: Vec<Gate>,
    ) -> Circuit {
        let n = wire_names.len();
        let mut driver = vec![None; n];
        let mut consumer = vec![None; n];
        for (gi, g) in gates.iter().enumerate() {
            for &w in &g.outputs {
                driver[w] = Some(gi);
            }
            for &w in &g.inputs {
                consumer[w] = Some(gi);
            }
        }
        Circuit {
            wire_names,
            n_inputs,
            n_outputs,
            gates,
            driver,
            consumer,
        }
    }

    pub fn wire_count(&self) -> usize {
        self.wire_names.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    /// Wires that are not circuit outputs; they parameterize the valid diagnoses.
    pub fn free_wire_count(&self) -> usize {
        self.wire_count() - self.n_outputs
    }

    pub fn input_ids(&self) -> std::ops::Range<WireId> {
        0..self.n_inputs
    }

    pub fn output_ids(&self) -> std::ops::Range<WireId> {
        self.wire_count() - self.n_outputs..self.wire_count()
    }

    pub fn is_output(&self, w: WireId) -> bool {
        w >= self.wire_count() - self.n_outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn wire_name(&self, w: WireId) -> &str {
        &self.wire_names[w]
    }

    pub fn wire_names(&self) -> &[String] {
        &self.wire_names
    }

    pub fn driver_of(&self, w: WireId) -> Option<usize> {
        self.driver[w]
    }

    pub fn consumer_of(&self, w: WireId) -> Option<usize> {
        self.consumer[w]
    }

    /// Number of gates with two and with one input, `(G2, G1)`.
    pub fn gate_arity_counts(&self) -> (usize, usize) {
        let g2 = self
            .gates
            .iter()
            .filter(|g| g.kind.input_arity() == 2)
            .count();
        (g2, self.gates.len() - g2)
    }

    /// Returns a copy with gate `gate` replaced by another kind of the same arity.
    pub fn with_gate_kind(&self, gate: usize, kind: GateKind) -> Result<Circuit> {
        let g = &self.gates[gate];
        if g.kind.input_arity() != kind.input_arity()
            || g.kind.output_arity() != kind.output_arity()
        {
            return Err(Error::Arity {
                kind,
                expected: g.kind.input_arity(),
                got: kind.input_arity(),
            });
        }
        let mut c = self.clone();
        c.gates[gate].kind = kind;
        Ok(c)
    }

    /// Healthy propagation of `inputs` through the circuit.
    pub fn propagate(&self, inputs: &[bool]) -> Result<WireAssignment> {
        if inputs.len() != self.n_inputs {
            return Err(Error::Length {
                what: "input vector",
                expected: self.n_inputs,
                got: inputs.len(),
            });
        }
        let mut wires = vec![false; self.wire_count()];
        wires[..self.n_inputs].copy_from_slice(inputs);
        for g in &self.gates {
            let out = g.kind.eval_packed(g.packed_inputs(&wires));
            for (p, &w) in g.outputs.iter().enumerate() {
                wires[w] = (out >> p) & 1 == 1;
            }
        }
        Ok(WireAssignment(wires))
    }

    /// Healthy output bits for the given inputs.
    pub fn healthy_outputs(&self, inputs: &[bool]) -> Result<Vec<bool>> {
        let wires = self.propagate(inputs)?;
        Ok(wires.as_slice()[self.output_ids()].to_vec())
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_netlist())
    }
}
