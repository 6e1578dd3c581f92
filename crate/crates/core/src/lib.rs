//! Constrained quantum annealing for combinational circuit fault diagnosis.
//!
//! A circuit with an applied input and an observed (faulty) output defines a
//! fault-diagnosis instance. Its valid diagnoses span a `2^(N - N_O)`
//! dimensional subspace on which a gate-local driver acts without ever leaving
//! it. This crate builds that subspace and the annealing Hamiltonian, computes
//! spectral gaps along the anneal and integrates the Schrodinger equation
//! under several schedules.
//!
//! ```
//! use cqa_core::{builtin_topology, generate_instance, mfd_bruteforce};
//!
//! let c17 = builtin_topology("c17").unwrap();
//! let inst = generate_instance(&c17, 7, 0);
//! let mfd = mfd_bruteforce(&inst).unwrap();
//! assert!(mfd.min_faults >= 1);
//! ```

pub mod circuit;
pub mod diagnosis;
pub mod error;
pub mod evolve;
pub mod format;
pub mod hamiltonian;
pub mod instances;
pub mod schedule;
pub mod spectrum;

pub use circuit::{builtin_topology, parse_netlist, Circuit, Gate, GateKind, WireAssignment};
pub use diagnosis::{
    consistent_assignments, enumerate_valid, is_valid, mfd_bruteforce, mfd_by_fault_planting,
    trivial_diagnosis, Diagnosis, Instance, MfdResult,
};
pub use error::{Error, Result};
pub use evolve::{evolve, success_probability, Annealer, EvolutionResult, EvolveOptions};
pub use hamiltonian::{
    build_driver, build_final, build_initial, driver_generators, transition_graph_check,
    AnnealingHamiltonian, DriverSign, Operator, ReducedIndex, ReducedOperator,
};
pub use instances::{classify, generate_instance, generate_named, run_campaign, CampaignSpec};
pub use schedule::{envelopes, s_linear, s_opt_adia, s_param, Schedule, ScheduleSpec};
pub use spectrum::{gap_trace, lowest_eigenpairs, min_gap, SpectrumTrace};
