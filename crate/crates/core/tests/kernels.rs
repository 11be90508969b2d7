use cforge::circuits::{build_library, Circuit};
use cforge::linalg::{circuit_unitary, unitarity_deviation};
use cforge::metrics::{global_phase_fix, operator_distance};
use cforge::targets::{block_diag_hamming, haar_random_unitary};
use cforge::{Gate, Mode, SubspaceBasis, SynthesisHamiltonian, SynthesisProblem, C64};
use proptest::prelude::*;

fn instance(n: usize) -> impl Strategy<Value = (Circuit, Vec<f64>, u64)> {
    let lib = build_library("allrot", n).unwrap();
    let k = lib.gates().len();
    (prop::collection::vec((0..k, -3.2f64..3.2), 1..7), any::<u64>()).prop_map(move |(picks, seed)| {
        let c = Circuit::new(picks.iter().map(|&(i, _)| lib.gates()[i]).collect());
        let t = picks.iter().map(|&(_, a)| a).collect();
        (c, t, seed)
    })
}

fn trace_overlap(u: &cforge::linalg::CMatrix, c: &Circuit, t: &[f64], labels: &[usize]) -> f64 {
    let n = u.nrows().trailing_zeros() as usize;
    let cu = circuit_unitary(c, t, n).unwrap();
    let w = cu.adjoint() * u;
    let tr: C64 = labels.iter().map(|&s| w[(s, s)]).sum();
    (tr / labels.len() as f64).norm_sqr()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradient_matches_central_differences((c, t, seed) in instance(2), proj in any::<bool>()) {
        let ham = if proj { SynthesisHamiltonian::Proj } else { SynthesisHamiltonian::Sum };
        let p = SynthesisProblem::new(haar_random_unitary(2, seed), Mode::FullSpace, ham).unwrap();
        let b = p.gradient(&c, &t).unwrap();
        let h = 1e-5;
        for j in 0..t.len() {
            let (mut tp, mut tm) = (t.clone(), t.clone());
            tp[j] += h;
            tm[j] -= h;
            let fd = -(p.energy(&c, &tp).unwrap() - p.energy(&c, &tm).unwrap()) / (4.0 * h);
            prop_assert!((b[j] - fd).abs() < 1e-7, "param {j}: {} vs {fd}", b[j]);
        }
    }

    #[test]
    fn qmt_is_symmetric_psd((c, t, seed) in instance(3)) {
        let p = SynthesisProblem::new(haar_random_unitary(3, seed), Mode::FullSpace, SynthesisHamiltonian::Sum).unwrap();
        let a = p.qmt(&c, &t).unwrap();
        prop_assert!((&a - a.transpose()).abs().max() < 1e-12);
        prop_assert!(a.symmetric_eigen().eigenvalues.min() > -1e-10);
    }

    #[test]
    fn proj_energy_is_trace_overlap((c, t, seed) in instance(3)) {
        let u = haar_random_unitary(3, seed);
        let p = SynthesisProblem::new(u.clone(), Mode::FullSpace, SynthesisHamiltonian::Proj).unwrap();
        let want = 1.0 - trace_overlap(&u, &c, &t, &(0..8).collect::<Vec<_>>());
        prop_assert!((p.energy(&c, &t).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn subspace_proj_energy_is_block_overlap((c, t, seed) in instance(3), weight in 1u32..3) {
        let (u, _) = block_diag_hamming(3, seed).unwrap();
        let basis = SubspaceBasis::hamming_weight(3, weight).unwrap();
        let labels = basis.labels().to_vec();
        let p = SynthesisProblem::new(u.clone(), Mode::Subspace(basis), SynthesisHamiltonian::Proj).unwrap();
        let want = 1.0 - trace_overlap(&u, &c, &t, &labels);
        prop_assert!((p.energy(&c, &t).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn phase_fix_is_optimal((c, t, seed) in instance(2), probe in -3.2f64..3.2) {
        let u = haar_random_unitary(2, seed);
        let cu = circuit_unitary(&c, &t, 2).unwrap();
        let Ok(phi) = global_phase_fix(&u, &cu) else { return Ok(()) };
        let frob = |a: f64| (&u - &cu * C64::from_polar(1.0, a)).norm();
        prop_assert!(frob(phi) <= frob(probe) + 1e-12);
    }
}

#[test]
fn sum_energy_counts_hamming_weight() {
    for label in 0..16usize {
        let e = SynthesisHamiltonian::Sum.basis_energy(label, 4);
        assert!((e - label.count_ones() as f64 / 4.0).abs() < 1e-15);
    }
    assert_eq!(SynthesisHamiltonian::Proj.basis_energy(0, 4), 0.0);
    assert_eq!(SynthesisHamiltonian::Proj.basis_energy(5, 4), 1.0);
}

#[test]
fn exact_circuit_has_zero_energy_and_gradient() {
    // RX(0.9) on qubit 1 as a target
    let c = Circuit::new(vec![Gate::rx(1)]);
    let u = circuit_unitary(&c, &[0.9], 2).unwrap();
    for ham in [SynthesisHamiltonian::Sum, SynthesisHamiltonian::Proj] {
        let p = SynthesisProblem::new(u.clone(), Mode::FullSpace, ham).unwrap();
        assert!(p.energy(&c, &[0.9]).unwrap() < 1e-12);
        assert!(p.gradient(&c, &[0.9]).unwrap()[0].abs() < 1e-10);
        let a = p.qmt(&c, &[0.9]).unwrap();
        assert!((a[(0, 0)] - 0.25).abs() < 1e-12);
    }
}

#[test]
fn swap_against_empty_circuit() {
    let eswap = Circuit::new(vec![Gate::eswap(0, 1).unwrap()]);
    let u = circuit_unitary(&eswap, &[std::f64::consts::PI], 2).unwrap();
    let p = SynthesisProblem::new(u.clone(), Mode::FullSpace, SynthesisHamiltonian::Proj).unwrap();
    let want = 1.0 - trace_overlap(&u, &Circuit::default(), &[], &[0, 1, 2, 3]);
    assert!((p.energy(&Circuit::default(), &[]).unwrap() - want).abs() < 1e-12);
}

#[test]
fn haar_samples_are_unitary_and_distributed() {
    // |U_00|² of a d-dimensional Haar unitary follows Beta(1, d - 1)
    let d = 4.0;
    let mut xs: Vec<f64> = (0..400)
        .map(|seed| {
            let u = haar_random_unitary(2, 10_000 + seed);
            assert!(unitarity_deviation(&u) < 1e-12);
            u[(0, 0)].norm_sqr()
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (1.0 - x).powf(d - 1.0);
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value
    assert!(ks < 1.63 / n.sqrt(), "KS statistic {ks}");
}

#[test]
fn distance_to_self_after_phase() {
    let u = haar_random_unitary(3, 3);
    let c = &u * C64::from_polar(1.0, 2.2);
    assert!(operator_distance(&u, &c).unwrap().distance < 1e-9);
}
