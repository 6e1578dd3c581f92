use cqa_core::diagnosis::is_valid;
use cqa_core::hamiltonian::{build_driver, build_initial, Operator, ReducedIndex};
use cqa_core::instances::{random_circuit, seeded_rng};
use cqa_core::{
    builtin_topology, generate_instance, parse_netlist, AnnealingHamiltonian, Diagnosis,
    DriverSign, Instance,
};
use num_complex::Complex64;
use rand_core::RngCore;

/// Every `2N`-bit string that `is_valid` accepts, found without the reduced index.
fn valid_by_exhaustion(inst: &Instance) -> Vec<Diagnosis> {
    let n = inst.circuit.wire_count();
    (0..1usize << (2 * n))
        .map(|bits| Diagnosis {
            wire_values: (0..n).map(|k| bits >> k & 1 == 1).collect(),
            fault_flags: (0..n).map(|k| bits >> (n + k) & 1 == 1).collect(),
        })
        .filter(|d| is_valid(inst, d))
        .collect()
}

/// Two valid diagnoses are joined when their wire values differ on a
/// non-empty subset of one gate's inputs and nowhere else.
fn adjacent(inst: &Instance, a: &Diagnosis, b: &Diagnosis) -> bool {
    let diff: Vec<usize> = (0..a.wire_values.len())
        .filter(|&w| a.wire_values[w] != b.wire_values[w])
        .collect();
    !diff.is_empty()
        && inst
            .circuit
            .gates()
            .iter()
            .any(|g| diff.iter().all(|w| g.inputs.contains(w)))
}

fn check_against_exhaustion(inst: &Instance) {
    let index = ReducedIndex::new(inst).unwrap();
    let valid = valid_by_exhaustion(inst);
    assert_eq!(valid.len(), index.dimension());
    let driver = build_driver(inst, DriverSign::Stoquastic).unwrap();
    for a in &valid {
        let i = index.encode(a).expect("valid diagnosis has an index");
        for b in &valid {
            let j = index.encode(b).unwrap();
            let want = if adjacent(inst, a, b) { -1.0 } else { 0.0 };
            assert_eq!(driver.entry(i, j), want, "{a} vs {b}");
        }
    }
}

#[test]
fn single_nand_adjacency_matches_full_space() {
    let c = parse_netlist("INPUT a\nINPUT b\nOUTPUT y\nGATE g NAND a b -> y\n").unwrap();
    for obs in 0..8usize {
        let inst = Instance::new(
            c.clone(),
            vec![obs & 1 == 1, obs & 2 == 2],
            vec![obs & 4 == 4],
        )
        .unwrap();
        check_against_exhaustion(&inst);
    }
}

#[test]
fn small_circuit_adjacency_matches_full_space() {
    let mut done = 0;
    let mut seed = 0;
    while done < 6 {
        seed += 1;
        let c = random_circuit(2, 2, 1, seed);
        if c.wire_count() > 7 {
            continue;
        }
        check_against_exhaustion(&generate_instance(&c, seed, 0));
        done += 1;
    }
}

fn random_state(rng: &mut impl RngCore, dim: usize) -> Vec<Complex64> {
    let mut u = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    (0..dim).map(|_| Complex64::new(u(), u())).collect()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[test]
fn instantaneous_hamiltonian_is_hermitian() {
    let topo = builtin_topology("c17").unwrap();
    let inst = generate_instance(&topo, 1, 0);
    let mut rng = seeded_rng(1, 1);
    for sign in [DriverSign::Stoquastic, DriverSign::NonStoquastic] {
        let h = AnnealingHamiltonian::new(&inst, sign).unwrap();
        for s in [0.0, 0.3, 0.75, 1.0] {
            let op = h.at(s).unwrap();
            let x = random_state(&mut rng, op.dim());
            let y = random_state(&mut rng, op.dim());
            let (mut hx, mut hy) = (
                vec![Complex64::default(); op.dim()],
                vec![Complex64::default(); op.dim()],
            );
            op.apply(&x, &mut hx);
            op.apply(&y, &mut hy);
            let lhs = inner(&y, &hx);
            let rhs = inner(&hy, &x);
            assert!(
                (lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0),
                "s={s}: {lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn driver_sign_sets_off_diagonal_sign() {
    let topo = builtin_topology("c17").unwrap();
    let inst = generate_instance(&topo, 2, 0);
    let stoq = build_driver(&inst, DriverSign::Stoquastic)
        .unwrap()
        .to_coo()
        .unwrap();
    let non = build_driver(&inst, DriverSign::NonStoquastic)
        .unwrap()
        .to_coo()
        .unwrap();
    assert_eq!(stoq.len(), (1 << 15) * 21);
    assert!(stoq.iter().all(|&(r, c, v)| r != c && v == -1.0));
    assert!(non.iter().all(|&(r, c, v)| r != c && v == 1.0));
}

#[test]
fn initial_hamiltonian_has_gap_four() {
    for base in ["c17", "c26"] {
        let topo = builtin_topology(base).unwrap();
        let inst = generate_instance(&topo, 3, 0);
        let n = topo.wire_count() as f64;
        let index = ReducedIndex::new(&inst).unwrap();
        let d = build_initial(&inst)
            .unwrap()
            .diagonal_values()
            .unwrap()
            .to_vec();
        let t = index.trivial_index();
        assert_eq!(d[t], -2.0 * n);
        assert_eq!(d.iter().filter(|&&v| v == -2.0 * n).count(), 1);
        let second = d
            .iter()
            .cloned()
            .filter(|&v| v > -2.0 * n)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(second, -2.0 * n + 4.0, "{base}");
    }
}
