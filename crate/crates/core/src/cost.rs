//! Synthesis problems and their cost in the augmented space.
//!
//! The candidate circuit is scored on the output state
//! `|ψ₁⟩ = P† (C†(θ) U ⊗ 1) P |0…0⟩`, where `P` prepares a maximally entangled
//! state between the main register and a copy (full space) or an ancilla
//! register indexing a chosen basis (subspace). `|ψ₁⟩ = |0…0⟩` up to phase iff
//! `C ≂ U` on the probed space.
//!
//! All derivative work happens on `|ψ'⟩ = C†U P|0⟩`; `P†` is unitary so inner
//! products are unchanged, and the Hamiltonian is pulled back as `P H̃ P†`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::linalg::{ensure_unitary, qubits_of, CMatrix};
use crate::simcore::{
    ancilla_qubits, apply_circuit_in_place, check_basis, derivatives_in_place, inner, StateVector, C64,
};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Tolerance for accepting a target as unitary.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthesisHamiltonian {
    /// `(1/2N) Σ_k (1 − σᶻ_k)`: Hamming weight over register size.
    #[default]
    Sum,
    /// `1 − |0⟩⟨0|`
    Proj,
}

impl SynthesisHamiltonian {
    /// Diagonal entry for basis state `label` on `n_aug` qubits.
    pub fn basis_energy(self, label: usize, n_aug: usize) -> f64 {
        match self {
            SynthesisHamiltonian::Sum => label.count_ones() as f64 / n_aug as f64,
            SynthesisHamiltonian::Proj => {
                if label == 0 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

impl std::str::FromStr for SynthesisHamiltonian {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(SynthesisHamiltonian::Sum),
            "proj" => Ok(SynthesisHamiltonian::Proj),
            other => Err(Error::InvalidArgument(format!("unknown Hamiltonian `{other}` (sum|proj)"))),
        }
    }
}

/// Distinct computational basis labels spanning the compiled subspace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceBasis {
    labels: Vec<usize>,
}

impl SubspaceBasis {
    pub fn new(labels: Vec<usize>, n_qubits: usize) -> Result<Self> {
        check_basis(&labels, n_qubits)?;
        Ok(Self { labels })
    }

    /// All labels of Hamming weight `weight`, ascending.
    pub fn hamming_weight(n_qubits: usize, weight: u32) -> Result<Self> {
        let labels = (0..1usize << n_qubits).filter(|l| l.count_ones() == weight).collect();
        Self::new(labels, n_qubits)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    FullSpace,
    Subspace(SubspaceBasis),
}

/// The entangling preparation `P` and its inverse, applied as linear maps.
#[derive(Debug, Clone)]
enum Preparation {
    /// Hadamards on the main register, then CNOT from qubit `k` to `n + k`.
    Bell { n: usize },
    /// Uniform superposition over the first `d₁` ancilla labels, then
    /// `|x⟩|j⟩ ↦ |x ⊕ s_j⟩|j⟩`.
    Subspace { n: usize, m: usize, labels: Vec<usize>, ancilla: AncillaPrep },
}

#[derive(Debug, Clone)]
enum AncillaPrep {
    /// `d₁ = 2^m`: Hadamard on every ancilla qubit.
    Hadamard,
    /// Householder reflection swapping `|0⟩` and the uniform state on `d₁` labels.
    Reflection { v: Vec<f64>, v_norm_sqr: f64 },
}

fn hadamard(amps: &mut [C64], q: usize) {
    let bit = 1usize << q;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a, b) = (amps[i], amps[i | bit]);
            amps[i] = (a + b) * r;
            amps[i | bit] = (a - b) * r;
        }
    }
}

impl Preparation {
    fn n_aug(&self) -> usize {
        match self {
            Preparation::Bell { n } => 2 * n,
            Preparation::Subspace { n, m, .. } => n + m,
        }
    }

    fn apply_xor(&self, amps: &mut [C64]) {
        match self {
            Preparation::Bell { n } => {
                let d = 1usize << n;
                for y in 0..d {
                    for x in 0..d {
                        let y2 = y ^ x;
                        if y2 > y {
                            amps.swap(x + d * y, x + d * y2);
                        }
                    }
                }
            }
            Preparation::Subspace { n, labels, .. } => {
                let d = 1usize << n;
                for (j, &s) in labels.iter().enumerate() {
                    let col = &mut amps[d * j..d * (j + 1)];
                    for x in 0..d {
                        if x ^ s > x {
                            col.swap(x, x ^ s);
                        }
                    }
                }
            }
        }
    }

    fn apply_local(&self, amps: &mut [C64]) {
        match self {
            Preparation::Bell { n } => (0..*n).for_each(|q| hadamard(amps, q)),
            Preparation::Subspace { n, m, ancilla, .. } => match ancilla {
                AncillaPrep::Hadamard => (*n..n + m).for_each(|q| hadamard(amps, q)),
                AncillaPrep::Reflection { v, v_norm_sqr } => {
                    let d = 1usize << n;
                    for x in 0..d {
                        let dot: C64 = v.iter().enumerate().map(|(j, &vj)| amps[x + d * j] * vj).sum();
                        let f = dot * (2.0 / v_norm_sqr);
                        for (j, &vj) in v.iter().enumerate() {
                            amps[x + d * j] -= f * vj;
                        }
                    }
                }
            },
        }
    }

    /// `P`; both factors are self-inverse, so `P†` is the reverse order.
    fn forward(&self, amps: &mut [C64]) {
        self.apply_local(amps);
        self.apply_xor(amps);
    }

    fn inverse(&self, amps: &mut [C64]) {
        self.apply_xor(amps);
        self.apply_local(amps);
    }
}

/// Target unitary plus probed space and cost Hamiltonian.
#[derive(Debug, Clone)]
pub struct SynthesisProblem {
    n: usize,
    target: CMatrix,
    mode: Mode,
    hamiltonian: SynthesisHamiltonian,
    prep: Preparation,
    /// `P|0⟩`
    reference: Vec<C64>,
    /// `(U ⊗ 1) P|0⟩`
    choi: Vec<C64>,
}

/// Energy, gradient and metric at one parameter point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub energy: f64,
    pub gradient: Vec<f64>,
    pub qmt: DMatrix<f64>,
}

impl SynthesisProblem {
    pub fn new(target: CMatrix, mode: Mode, hamiltonian: SynthesisHamiltonian) -> Result<Self> {
        let n = qubits_of(&target)?;
        ensure_unitary(&target, UNITARITY_TOL)?;
        let d = 1usize << n;
        let prep = match &mode {
            Mode::FullSpace => Preparation::Bell { n },
            Mode::Subspace(basis) => {
                check_basis(basis.labels(), n)?;
                let d1 = basis.len();
                let m = ancilla_qubits(d1);
                let ancilla = if d1 == 1 << m {
                    AncillaPrep::Hadamard
                } else {
                    let u = 1.0 / (d1 as f64).sqrt();
                    let mut v: Vec<f64> = (0..1usize << m).map(|j| if j < d1 { -u } else { 0.0 }).collect();
                    v[0] += 1.0;
                    let v_norm_sqr = v.iter().map(|x| x * x).sum();
                    AncillaPrep::Reflection { v, v_norm_sqr }
                };
                Preparation::Subspace { n, m, labels: basis.labels().to_vec(), ancilla }
            }
        };
        let mut reference = vec![ZERO; 1 << prep.n_aug()];
        reference[0] = C64::new(1.0, 0.0);
        prep.forward(&mut reference);

        // (U ⊗ 1)|Φ⟩: each ancilla slice is U applied to the main-register column
        let mut choi = vec![ZERO; reference.len()];
        for (slice_out, slice_in) in choi.chunks_mut(d).zip(reference.chunks(d)) {
            for (x, out) in slice_out.iter_mut().enumerate() {
                *out = (0..d).map(|y| target[(x, y)] * slice_in[y]).sum();
            }
        }
        Ok(Self { n, target, mode, hamiltonian, prep, reference, choi })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// Qubits of the augmented register.
    pub fn n_aug(&self) -> usize {
        self.prep.n_aug()
    }

    pub fn target(&self) -> &CMatrix {
        &self.target
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn hamiltonian(&self) -> SynthesisHamiltonian {
        self.hamiltonian
    }

    fn check(&self, circuit: &Circuit, theta: &[f64]) -> Result<()> {
        circuit.check_params(theta)?;
        circuit.validate(self.n)
    }

    /// `|ψ'⟩ = C†(θ) U P|0⟩`.
    fn pulled_state(&self, circuit: &Circuit, theta: &[f64]) -> Vec<C64> {
        let mut amps = self.choi.clone();
        apply_circuit_in_place(&mut amps, circuit.gates(), theta, true);
        amps
    }

    fn energy_of_pulled(&self, psi: &[C64]) -> f64 {
        let e = match self.hamiltonian {
            SynthesisHamiltonian::Proj => 1.0 - inner(&self.reference, psi).norm_sqr(),
            SynthesisHamiltonian::Sum => {
                let mut out = psi.to_vec();
                self.prep.inverse(&mut out);
                let n_aug = self.n_aug();
                out.iter()
                    .enumerate()
                    .map(|(b, a)| self.hamiltonian.basis_energy(b, n_aug) * a.norm_sqr())
                    .sum()
            }
        };
        e.clamp(0.0, 1.0)
    }

    /// `P H̃ P† |ψ'⟩`
    fn pulled_hamiltonian_action(&self, psi: &[C64]) -> Vec<C64> {
        match self.hamiltonian {
            SynthesisHamiltonian::Proj => {
                let ov = inner(&self.reference, psi);
                psi.iter().zip(&self.reference).map(|(p, r)| p - ov * r).collect()
            }
            SynthesisHamiltonian::Sum => {
                let mut out = psi.to_vec();
                self.prep.inverse(&mut out);
                let n_aug = self.n_aug();
                for (b, a) in out.iter_mut().enumerate() {
                    *a *= self.hamiltonian.basis_energy(b, n_aug);
                }
                self.prep.forward(&mut out);
                out
            }
        }
    }

    /// `|ψ₁⟩ = P† C†(θ) U P |0…0⟩` on the augmented register.
    pub fn output_state(&self, circuit: &Circuit, theta: &[f64]) -> Result<StateVector> {
        self.check(circuit, theta)?;
        let mut amps = self.pulled_state(circuit, theta);
        self.prep.inverse(&mut amps);
        StateVector::from_amplitudes(self.n_aug(), amps)
    }

    /// `⟨ψ₁|H̃|ψ₁⟩ ∈ [0, 1]`.
    pub fn energy(&self, circuit: &Circuit, theta: &[f64]) -> Result<f64> {
        self.check(circuit, theta)?;
        Ok(self.energy_of_pulled(&self.pulled_state(circuit, theta)))
    }

    /// Energy without argument checks, for inner loops that already validated.
    pub(crate) fn energy_unchecked(&self, circuit: &Circuit, theta: &[f64]) -> f64 {
        self.energy_of_pulled(&self.pulled_state(circuit, theta))
    }

    /// `B_i = −Re⟨∂_iψ₁|H̃|ψ₁⟩`, i.e. `−½ ∂E/∂θ_i`.
    pub fn gradient(&self, circuit: &Circuit, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate(circuit, theta)?.gradient)
    }

    /// `A_ij = Re(⟨∂_iψ|∂_jψ⟩ − ⟨∂_iψ|ψ⟩⟨ψ|∂_jψ⟩)`.
    pub fn qmt(&self, circuit: &Circuit, theta: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.evaluate(circuit, theta)?.qmt)
    }

    /// Energy, gradient and metric from one derivative sweep.
    pub fn evaluate(&self, circuit: &Circuit, theta: &[f64]) -> Result<Evaluation> {
        self.check(circuit, theta)?;
        let (psi, derivs) = derivatives_in_place(self.choi.clone(), circuit.gates(), theta, true);
        let energy = self.energy_of_pulled(&psi);
        let h_psi = self.pulled_hamiltonian_action(&psi);
        let gradient = derivs.iter().map(|d| -inner(d, &h_psi).re).collect();

        let n = derivs.len();
        let overlaps: Vec<C64> = derivs.iter().map(|d| inner(d, &psi)).collect();
        let mut qmt = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = (inner(&derivs[i], &derivs[j]) - overlaps[i] * overlaps[j].conj()).re;
                qmt[(i, j)] = v;
                qmt[(j, i)] = v;
            }
        }
        Ok(Evaluation { energy, gradient, qmt })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{Axis, Gate};
    use crate::linalg::circuit_unitary;
    use nalgebra::DMatrix;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_z() -> CMatrix {
        DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
    }

    #[test]
    fn z_target_against_empty_circuit() {
        // P†(Z⊗1)P|00⟩ = |10⟩ (qubit 0 flipped): PROJ sees 1, SUM sees one of two qubits set.
        let proj = SynthesisProblem::new(pauli_z(), Mode::FullSpace, SynthesisHamiltonian::Proj).unwrap();
        let out = proj.output_state(&Circuit::default(), &[]).unwrap();
        assert!((out.amplitudes()[1].norm() - 1.0).abs() < 1e-14);
        assert!((proj.energy(&Circuit::default(), &[]).unwrap() - 1.0).abs() < 1e-14);
        let sum = SynthesisProblem::new(pauli_z(), Mode::FullSpace, SynthesisHamiltonian::Sum).unwrap();
        assert!((sum.energy(&Circuit::default(), &[]).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn identity_target_empty_circuit() {
        let p = SynthesisProblem::new(CMatrix::identity(4, 4), Mode::FullSpace, SynthesisHamiltonian::Sum).unwrap();
        let out = p.output_state(&Circuit::default(), &[]).unwrap();
        assert!((out.amplitudes()[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert_eq!(p.energy(&Circuit::default(), &[]).unwrap(), 0.0);
        assert!(p.gradient(&Circuit::default(), &[]).unwrap().is_empty());
    }

    #[test]
    fn swap_target_proj_energy() {
        let mut swap = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(i, j)] = c(1.0, 0.0);
        }
        let p = SynthesisProblem::new(swap, Mode::FullSpace, SynthesisHamiltonian::Proj).unwrap();
        assert!((p.energy(&Circuit::default(), &[]).unwrap() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn exact_circuit_has_zero_energy_and_gradient() {
        let circ = Circuit::new(vec![Gate::rx(0), Gate::crot(Axis::Y, 0, 1).unwrap(), Gate::rz(1)]);
        let theta = [0.4, -1.1, 2.3];
        let u = circuit_unitary(&circ, &theta, 2).unwrap();
        for h in [SynthesisHamiltonian::Sum, SynthesisHamiltonian::Proj] {
            for mode in [Mode::FullSpace, Mode::Subspace(SubspaceBasis::new(vec![1, 2, 3], 2).unwrap())] {
                let p = SynthesisProblem::new(u.clone(), mode, h).unwrap();
                let ev = p.evaluate(&circ, &theta).unwrap();
                assert!(ev.energy <= 1e-12, "{}", ev.energy);
                assert!(ev.gradient.iter().all(|b| b.abs() < 1e-10));
                let out = p.output_state(&circ, &theta).unwrap();
                assert!((out.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sum_energy_of_basis_states_is_hamming_fraction() {
        for label in 0..16usize {
            let e = SynthesisHamiltonian::Sum.basis_energy(label, 4);
            assert_eq!(e, label.count_ones() as f64 / 4.0);
        }
        assert_eq!(SynthesisHamiltonian::Proj.basis_energy(0, 4), 0.0);
        assert_eq!(SynthesisHamiltonian::Proj.basis_energy(5, 4), 1.0);
        assert_eq!(SynthesisHamiltonian::Sum.basis_energy(15, 4), 1.0);
    }

    #[test]
    fn single_rx_metric_on_bell_input() {
        let p = SynthesisProblem::new(CMatrix::identity(2, 2), Mode::FullSpace, SynthesisHamiltonian::Sum).unwrap();
        for theta in [0.0, 0.7, 2.9] {
            let a = p.qmt(&Circuit::new(vec![Gate::rx(0)]), &[theta]).unwrap();
            assert!((a[(0, 0)] - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn duplicated_gate_gives_identical_rows() {
        let p = SynthesisProblem::new(CMatrix::identity(4, 4), Mode::FullSpace, SynthesisHamiltonian::Sum).unwrap();
        let g = Gate::crot(Axis::X, 1, 0).unwrap();
        let a = p.qmt(&Circuit::new(vec![Gate::ry(1), g, g]), &[0.3, 0.5, 0.9]).unwrap();
        for k in 0..3 {
            assert!((a[(1, k)] - a[(2, k)]).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_unitary_and_ancilla_gates() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 0)] = c(2.0, 0.0);
        assert!(matches!(
            SynthesisProblem::new(m, Mode::FullSpace, SynthesisHamiltonian::Sum),
            Err(Error::NotUnitary(_))
        ));
        let p = SynthesisProblem::new(CMatrix::identity(2, 2), Mode::FullSpace, SynthesisHamiltonian::Sum).unwrap();
        assert!(matches!(
            p.energy(&Circuit::new(vec![Gate::rx(1)]), &[0.1]),
            Err(Error::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn subspace_preparation_is_consistent() {
        // P P† = 1 and P|0⟩ matches the direct construction, for both ancilla variants
        for labels in [vec![1usize, 2, 4, 8], vec![3, 5, 6], vec![7]] {
            let basis = SubspaceBasis::new(labels.clone(), 4).unwrap();
            let p = SynthesisProblem::new(CMatrix::identity(16, 16), Mode::Subspace(basis), SynthesisHamiltonian::Sum)
                .unwrap();
            let direct = crate::simcore::prepare_subspace_entangled(&labels, 4).unwrap();
            for (a, b) in p.reference.iter().zip(direct.amplitudes()) {
                assert!((a - b).norm() < 1e-14);
            }
            let mut v: Vec<C64> = (0..p.reference.len()).map(|i| c((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
            let orig = v.clone();
            p.prep.inverse(&mut v);
            p.prep.forward(&mut v);
            for (a, b) in v.iter().zip(&orig) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
