//! Line-oriented netlist text format.
//!
//! ```text
//! # comment
//! INPUT a
//! INPUT b
//! OUTPUT c
//! GATE g1 NAND a b -> c
//! GATE f1 FAN x -> y z
//! ```

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use super::{Circuit, Gate, GateKind, WireId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// A netlist as written: wires are names, nothing is validated yet.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Netlist {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub gates: Vec<NetGate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetGate {
    pub name: String,
    pub kind: GateKind,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Source line, 0 when built programmatically.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateInput(String),
    DuplicateOutput(String),
    InputIsOutput(String),
    DuplicateGateName(String),
    BadArity {
        gate: String,
        kind: GateKind,
        inputs: usize,
        outputs: usize,
    },
    UndrivenWire(String),
    DoubleDriven {
        wire: String,
        gates: Vec<String>,
    },
    UnconsumedWire(String),
    DoubleConsumed {
        wire: String,
        gates: Vec<String>,
    },
    DrivenInput {
        wire: String,
        gate: String,
    },
    ConsumedOutput {
        wire: String,
        gate: String,
    },
    Cycle {
        gates: Vec<String>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateInput(w) => write!(f, "wire `{w}` declared INPUT twice"),
            Violation::DuplicateOutput(w) => write!(f, "wire `{w}` declared OUTPUT twice"),
            Violation::InputIsOutput(w) => write!(f, "wire `{w}` is both INPUT and OUTPUT"),
            Violation::DuplicateGateName(g) => write!(f, "gate name `{g}` used twice"),
            Violation::BadArity {
                gate,
                kind,
                inputs,
                outputs,
            } => write!(
                f,
                "gate `{gate}` ({kind}) has {inputs} input(s) and {outputs} output(s), expected {} and {}",
                kind.input_arity(),
                kind.output_arity()
            ),
            Violation::UndrivenWire(w) => write!(f, "wire `{w}` is not driven by any gate"),
            Violation::DoubleDriven { wire, gates } => {
                write!(f, "wire `{wire}` is driven by several gates: {}", gates.join(", "))
            }
            Violation::UnconsumedWire(w) => write!(f, "wire `{w}` is not an input to any gate"),
            Violation::DoubleConsumed { wire, gates } => write!(
                f,
                "wire `{wire}` feeds more than one gate input: {}",
                gates.join(", ")
            ),
            Violation::DrivenInput { wire, gate } => {
                write!(f, "circuit input `{wire}` is driven by gate `{gate}`")
            }
            Violation::ConsumedOutput { wire, gate } => {
                write!(f, "circuit output `{wire}` feeds gate `{gate}`")
            }
            Violation::Cycle { gates } => {
                write!(f, "combinational cycle through gates {}", gates.join(", "))
            }
        }
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.inputs {
            writeln!(f, "INPUT {w}")?;
        }
        for w in &self.outputs {
            writeln!(f, "OUTPUT {w}")?;
        }
        for g in &self.gates {
            writeln!(
                f,
                "GATE {} {} {} -> {}",
                g.name,
                g.kind,
                g.inputs.join(" "),
                g.outputs.join(" ")
            )?;
        }
        Ok(())
    }
}

impl Netlist {
    pub fn parse(text: &str) -> std::result::Result<Netlist, ParseError> {
        let mut net = Netlist::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let body = raw.split('#').next().unwrap_or("");
            let tokens = tokenize(body);
            let Some(&(col, head)) = tokens.first() else {
                continue;
            };
            let err = |column: usize, message: String| ParseError {
                line,
                column,
                message,
            };
            match head.to_ascii_uppercase().as_str() {
                "INPUT" | "OUTPUT" => {
                    let (wcol, wire) = match tokens.get(1) {
                        Some(&t) => t,
                        None => {
                            return Err(err(col + head.len(), format!("{head} needs a wire name")))
                        }
                    };
                    if let Some(&(xcol, extra)) = tokens.get(2) {
                        return Err(err(xcol, format!("unexpected token `{extra}`")));
                    }
                    check_wire(wire).map_err(|m| err(wcol, m))?;
                    if head.eq_ignore_ascii_case("INPUT") {
                        net.inputs.push(wire.to_string());
                    } else {
                        net.outputs.push(wire.to_string());
                    }
                }
                "GATE" => {
                    let (ncol, name) = *tokens
                        .get(1)
                        .ok_or_else(|| err(col + head.len(), "GATE needs a name".into()))?;
                    if name == "->" {
                        return Err(err(ncol, "GATE needs a name".into()));
                    }
                    let (kcol, kind) = *tokens
                        .get(2)
                        .ok_or_else(|| err(ncol + name.len(), "GATE needs a kind".into()))?;
                    let kind: GateKind = kind.parse().map_err(|m| err(kcol, m))?;
                    let rest = &tokens[3..];
                    let arrow = rest
                        .iter()
                        .position(|&(_, t)| t == "->")
                        .ok_or_else(|| err(kcol, format!("gate `{name}` is missing `->`")))?;
                    let (ins, outs) = (&rest[..arrow], &rest[arrow + 1..]);
                    if ins.is_empty() {
                        return Err(err(rest[arrow].0, format!("gate `{name}` has no inputs")));
                    }
                    if outs.is_empty() {
                        return Err(err(
                            rest[arrow].0 + 2,
                            format!("gate `{name}` has no outputs"),
                        ));
                    }
                    for &(c, w) in ins.iter().chain(outs) {
                        check_wire(w).map_err(|m| err(c, m))?;
                    }
                    net.gates.push(NetGate {
                        name: name.to_string(),
                        kind,
                        inputs: ins.iter().map(|&(_, w)| w.to_string()).collect(),
                        outputs: outs.iter().map(|&(_, w)| w.to_string()).collect(),
                        line,
                    });
                }
                _ => return Err(err(col, format!("unknown directive `{head}`"))),
            }
        }
        Ok(net)
    }
}

fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn check_wire(w: &str) -> std::result::Result<(), String> {
    if w == "->" || w.contains("->") {
        Err(format!("`{w}` is not a valid wire name"))
    } else {
        Ok(())
    }
}

/// Parses and validates netlist text into a canonical [`Circuit`].
pub fn parse_netlist(text: &str) -> Result<Circuit> {
    let net = Netlist::parse(text)?;
    Circuit::from_netlist(&net)
}

/// Every structural rule the netlist breaks; empty iff it describes a valid circuit.
pub fn validate_structure(net: &Netlist) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    for w in &net.inputs {
        if !seen.insert(w.as_str()) {
            out.push(Violation::DuplicateInput(w.clone()));
        }
    }
    let inputs: HashSet<&str> = net.inputs.iter().map(String::as_str).collect();
    let mut seen = HashSet::new();
    for w in &net.outputs {
        if !seen.insert(w.as_str()) {
            out.push(Violation::DuplicateOutput(w.clone()));
        }
        if inputs.contains(w.as_str()) {
            out.push(Violation::InputIsOutput(w.clone()));
        }
    }
    let outputs: HashSet<&str> = net.outputs.iter().map(String::as_str).collect();

    let mut names = HashSet::new();
    for g in &net.gates {
        if !names.insert(g.name.as_str()) {
            out.push(Violation::DuplicateGateName(g.name.clone()));
        }
        if g.inputs.len() != g.kind.input_arity() || g.outputs.len() != g.kind.output_arity() {
            out.push(Violation::BadArity {
                gate: g.name.clone(),
                kind: g.kind,
                inputs: g.inputs.len(),
                outputs: g.outputs.len(),
            });
        }
    }

    // wire -> (driving gates, consuming gates), first-seen order for stable reports
    let mut order: Vec<&str> = Vec::new();
    let mut uses: HashMap<&str, (Vec<usize>, Vec<usize>)> = HashMap::new();
    for w in net.inputs.iter().chain(&net.outputs) {
        if !uses.contains_key(w.as_str()) {
            order.push(w.as_str());
            uses.insert(w.as_str(), (Vec::new(), Vec::new()));
        }
    }
    for (gi, g) in net.gates.iter().enumerate() {
        for w in &g.inputs {
            let e = uses.entry(w.as_str()).or_insert_with(|| {
                order.push(w.as_str());
                (Vec::new(), Vec::new())
            });
            e.1.push(gi);
        }
        for w in &g.outputs {
            let e = uses.entry(w.as_str()).or_insert_with(|| {
                order.push(w.as_str());
                (Vec::new(), Vec::new())
            });
            e.0.push(gi);
        }
    }

    let gate_names = |ids: &[usize]| ids.iter().map(|&i| net.gates[i].name.clone()).collect();
    for w in order {
        let (drivers, consumers) = &uses[w];
        let is_in = inputs.contains(w);
        let is_out = outputs.contains(w);
        if is_in {
            for &d in drivers {
                out.push(Violation::DrivenInput {
                    wire: w.to_string(),
                    gate: net.gates[d].name.clone(),
                });
            }
        } else {
            match drivers.len() {
                0 => out.push(Violation::UndrivenWire(w.to_string())),
                1 => {}
                _ => out.push(Violation::DoubleDriven {
                    wire: w.to_string(),
                    gates: gate_names(drivers),
                }),
            }
        }
        if is_out {
            for &c in consumers {
                out.push(Violation::ConsumedOutput {
                    wire: w.to_string(),
                    gate: net.gates[c].name.clone(),
                });
            }
        } else {
            match consumers.len() {
                0 => out.push(Violation::UnconsumedWire(w.to_string())),
                1 => {}
                _ => out.push(Violation::DoubleConsumed {
                    wire: w.to_string(),
                    gates: gate_names(consumers),
                }),
            }
        }
    }

    let (_, leftover) = topological_order(net);
    if !leftover.is_empty() {
        out.push(Violation::Cycle {
            gates: leftover
                .iter()
                .map(|&i| net.gates[i].name.clone())
                .collect(),
        });
    }
    out
}

/// Kahn's algorithm, always releasing the earliest-declared ready gate.
/// Returns the order and the gates left on cycles.
fn topological_order(net: &Netlist) -> (Vec<usize>, Vec<usize>) {
    let mut drivers: HashMap<&str, Vec<usize>> = HashMap::new();
    for (gi, g) in net.gates.iter().enumerate() {
        for w in &g.outputs {
            drivers.entry(w.as_str()).or_default().push(gi);
        }
    }
    let mut indegree = vec![0usize; net.gates.len()];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); net.gates.len()];
    for (gi, g) in net.gates.iter().enumerate() {
        for w in &g.inputs {
            for &d in drivers.get(w.as_str()).into_iter().flatten() {
                indegree[gi] += 1;
                succ[d].push(gi);
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = indegree
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(i, _)| Reverse(i))
        .collect();
    let mut order = Vec::with_capacity(net.gates.len());
    while let Some(Reverse(g)) = ready.pop() {
        order.push(g);
        for &h in &succ[g] {
            indegree[h] -= 1;
            if indegree[h] == 0 {
                ready.push(Reverse(h));
            }
        }
    }
    let leftover = (0..net.gates.len()).filter(|&g| indegree[g] > 0).collect();
    (order, leftover)
}

/// Relabels a structurally valid netlist: inputs first, internal wires in
/// topological order of their drivers, outputs last.
pub(super) fn canonicalize(net: &Netlist) -> Circuit {
    let (order, _) = topological_order(net);
    let outputs: HashSet<&str> = net.outputs.iter().map(String::as_str).collect();

    let mut ids: HashMap<&str, WireId> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    for w in &net.inputs {
        ids.insert(w.as_str(), names.len());
        names.push(w.clone());
    }
    for &gi in &order {
        for w in &net.gates[gi].outputs {
            if !outputs.contains(w.as_str()) {
                ids.insert(w.as_str(), names.len());
                names.push(w.clone());
            }
        }
    }
    for w in &net.outputs {
        ids.insert(w.as_str(), names.len());
        names.push(w.clone());
    }

    let gates = order
        .iter()
        .map(|&gi| {
            let g = &net.gates[gi];
            Gate {
                name: g.name.clone(),
                kind: g.kind,
                inputs: g.inputs.iter().map(|w| ids[w.as_str()]).collect(),
                outputs: g.outputs.iter().map(|w| ids[w.as_str()]).collect(),
            }
        })
        .collect();
    Circuit::from_canonical_parts(names, net.inputs.len(), net.outputs.len(), gates)
}

impl From<Vec<Violation>> for Error {
    fn from(v: Vec<Violation>) -> Self {
        Error::Structure(v)
    }
}
