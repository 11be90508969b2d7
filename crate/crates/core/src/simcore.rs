//! Dense statevector engine.
//!
//! Qubit `k` is bit `k` of the basis-state label (qubit 0 is the least significant
//! bit). Matrix exports, basis labels and the augmented registers all follow this
//! single convention.

use num_complex::Complex64;

use crate::circuits::{Axis, Circuit, Gate};
use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// The computational basis state `|label⟩`.
    pub fn basis(n_qubits: usize, label: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if label >= dim {
            return Err(Error::LabelOutOfRange { label, n_qubits });
        }
        let mut amps = vec![ZERO; dim];
        amps[label] = ONE;
        Ok(Self { n_qubits, amps })
    }

    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0).expect("label 0 always fits")
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: amps.len() });
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amps, &other.amps)
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Applies `gate(theta)` in place.
    pub fn apply(&mut self, gate: &Gate, theta: f64) -> Result<()> {
        gate.validate(self.n_qubits)?;
        apply_gate_in_place(&mut self.amps, gate, theta);
        Ok(())
    }
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

/// `G(theta)|ψ⟩` as a new state.
pub fn apply_gate(state: &StateVector, gate: &Gate, theta: f64) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(gate, theta)?;
    Ok(out)
}

/// Applies `C(θ) = C_{N-1}(θ_{N-1}) ⋯ C_0(θ_0)` or, with `adjoint`, its inverse.
pub fn apply_circuit(state: &StateVector, circuit: &Circuit, theta: &[f64], adjoint: bool) -> Result<StateVector> {
    circuit.check_params(theta)?;
    circuit.validate(state.n_qubits)?;
    let mut out = state.clone();
    apply_circuit_in_place(&mut out.amps, circuit.gates(), theta, adjoint);
    Ok(out)
}

pub(crate) fn apply_circuit_in_place(amps: &mut [C64], gates: &[Gate], theta: &[f64], adjoint: bool) {
    if adjoint {
        for (g, &t) in gates.iter().zip(theta).rev() {
            apply_gate_in_place(amps, g, -t);
        }
    } else {
        for (g, &t) in gates.iter().zip(theta) {
            apply_gate_in_place(amps, g, t);
        }
    }
}

/// `∂|ψ(θ)⟩/∂θ_i` for every gate `i`, where `|ψ(θ)⟩ = C(θ)|input⟩`.
pub fn derivative_states(circuit: &Circuit, theta: &[f64], input: &StateVector) -> Result<Vec<StateVector>> {
    circuit.check_params(theta)?;
    circuit.validate(input.n_qubits)?;
    let (_, derivs) = derivatives_in_place(input.amps.clone(), circuit.gates(), theta, false);
    Ok(derivs
        .into_iter()
        .map(|amps| StateVector { n_qubits: input.n_qubits, amps })
        .collect())
}

/// Single sweep over the gates in application order. Each derivative vector is
/// branched off the running state at its gate and carried along by every later
/// gate. Returns the final state and the derivative vectors indexed by circuit
/// position (not application order).
pub(crate) fn derivatives_in_place(
    mut state: Vec<C64>,
    gates: &[Gate],
    theta: &[f64],
    adjoint: bool,
) -> (Vec<C64>, Vec<Vec<C64>>) {
    let n = gates.len();
    let order: Vec<usize> = if adjoint { (0..n).rev().collect() } else { (0..n).collect() };
    let sign = if adjoint { -1.0 } else { 1.0 };
    // live[p] holds the derivative for the gate applied at step p
    let mut live: Vec<Vec<C64>> = Vec::with_capacity(n);
    for &i in &order {
        let g = &gates[i];
        let t = sign * theta[i];
        apply_gate_in_place(&mut state, g, t);
        for d in live.iter_mut() {
            apply_gate_in_place(d, g, t);
        }
        let mut d = state.clone();
        apply_generator_in_place(&mut d, g, sign);
        live.push(d);
    }
    let mut by_index: Vec<Vec<C64>> = vec![Vec::new(); n];
    for (step, d) in live.into_iter().enumerate() {
        by_index[order[step]] = d;
    }
    (state, by_index)
}

/// `(1/√2^n) Σ_k |k⟩_H |k⟩_H'` with `H` on qubits `0..n` and the copy on `n..2n`.
pub fn prepare_bell_pairs(n: usize) -> Result<StateVector> {
    if n < 1 {
        return Err(Error::InvalidArgument("Bell-pair preparation needs n >= 1".into()));
    }
    let d = 1usize << n;
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut amps = vec![ZERO; d * d];
    for k in 0..d {
        amps[k + d * k] = amp;
    }
    Ok(StateVector { n_qubits: 2 * n, amps })
}

/// Number of ancilla qubits needed to index `d1` basis states.
pub fn ancilla_qubits(d1: usize) -> usize {
    let mut m = 0;
    while (1usize << m) < d1 {
        m += 1;
    }
    m
}

/// `(1/√d₁) Σ_j |s_j⟩_H |j⟩_anc` on `n + ⌈log₂ d₁⌉` qubits.
pub fn prepare_subspace_entangled(basis: &[usize], n: usize) -> Result<StateVector> {
    check_basis(basis, n)?;
    let d = 1usize << n;
    let d1 = basis.len();
    let m = ancilla_qubits(d1);
    let amp = C64::new(1.0 / (d1 as f64).sqrt(), 0.0);
    let mut amps = vec![ZERO; d << m];
    for (j, &s) in basis.iter().enumerate() {
        amps[s + d * j] = amp;
    }
    Ok(StateVector { n_qubits: n + m, amps })
}

pub(crate) fn check_basis(basis: &[usize], n: usize) -> Result<()> {
    if basis.is_empty() {
        return Err(Error::InvalidArgument("subspace basis is empty".into()));
    }
    let d = 1usize << n;
    let mut seen = vec![false; d];
    for &s in basis {
        if s >= d {
            return Err(Error::LabelOutOfRange { label: s, n_qubits: n });
        }
        if std::mem::replace(&mut seen[s], true) {
            return Err(Error::DuplicateBasisLabel(s));
        }
    }
    Ok(())
}

fn rotation_matrix(axis: Axis, theta: f64) -> [[C64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    match axis {
        Axis::X => [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]],
        Axis::Y => [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]],
        Axis::Z => [[C64::new(c, -s), ZERO], [ZERO, C64::new(c, s)]],
    }
}

fn pauli_matrix(axis: Axis) -> [[C64; 2]; 2] {
    match axis {
        Axis::X => [[ZERO, ONE], [ONE, ZERO]],
        Axis::Y => [[ZERO, -I], [I, ZERO]],
        Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
    }
}

fn scale(m: [[C64; 2]; 2], f: C64) -> [[C64; 2]; 2] {
    [[m[0][0] * f, m[0][1] * f], [m[1][0] * f, m[1][1] * f]]
}

/// Applies a 2x2 matrix on `target`, restricted to labels with `control` set.
/// Labels with the control bit clear are multiplied by `off_block`.
fn apply_2x2(amps: &mut [C64], target: usize, control: Option<usize>, m: [[C64; 2]; 2], off_block: C64) {
    let tbit = 1usize << target;
    let cbit = control.map_or(0, |c| 1usize << c);
    for i in 0..amps.len() {
        if i & tbit != 0 {
            continue;
        }
        if i & cbit != cbit {
            if off_block != ONE {
                amps[i] *= off_block;
                amps[i | tbit] *= off_block;
            }
            continue;
        }
        let j = i | tbit;
        let (a, b) = (amps[i], amps[j]);
        amps[i] = m[0][0] * a + m[0][1] * b;
        amps[j] = m[1][0] * a + m[1][1] * b;
    }
}

pub(crate) fn apply_gate_in_place(amps: &mut [C64], gate: &Gate, theta: f64) {
    match *gate {
        Gate::Rot { axis, target } => apply_2x2(amps, target, None, rotation_matrix(axis, theta), ONE),
        Gate::CRot { axis, control, target } => {
            apply_2x2(amps, target, Some(control), rotation_matrix(axis, theta), ONE)
        }
        Gate::ESwap { a, b } => {
            // exp(iθ/2 SWAP) = cos(θ/2) 1 + i sin(θ/2) SWAP
            let (s, c) = (theta / 2.0).sin_cos();
            let diag = C64::new(c, s);
            let cc = C64::new(c, 0.0);
            let is = C64::new(0.0, s);
            let (abit, bbit) = (1usize << a, 1usize << b);
            for i in 0..amps.len() {
                match (i & abit != 0, i & bbit != 0) {
                    (false, false) | (true, true) => amps[i] *= diag,
                    (true, false) => {
                        let j = (i & !abit) | bbit;
                        let (x, y) = (amps[i], amps[j]);
                        amps[i] = cc * x + is * y;
                        amps[j] = is * x + cc * y;
                    }
                    (false, true) => {}
                }
            }
        }
        Gate::GPhase => {
            let p = C64::from_polar(1.0, theta);
            amps.iter_mut().for_each(|a| *a *= p);
        }
    }
}

/// Multiplies by `sign · dG/dθ · G(θ)⁻¹`, the generator factor of the gate.
pub(crate) fn apply_generator_in_place(amps: &mut [C64], gate: &Gate, sign: f64) {
    match *gate {
        Gate::Rot { axis, target } => {
            let m = scale(pauli_matrix(axis), C64::new(0.0, -0.5 * sign));
            apply_2x2(amps, target, None, m, ONE);
        }
        Gate::CRot { axis, control, target } => {
            let m = scale(pauli_matrix(axis), C64::new(0.0, -0.5 * sign));
            apply_2x2(amps, target, Some(control), m, ZERO);
        }
        Gate::ESwap { a, b } => {
            let f = C64::new(0.0, 0.5 * sign);
            let (abit, bbit) = (1usize << a, 1usize << b);
            for i in 0..amps.len() {
                match (i & abit != 0, i & bbit != 0) {
                    (false, false) | (true, true) => amps[i] *= f,
                    (true, false) => {
                        let j = (i & !abit) | bbit;
                        let (x, y) = (amps[i], amps[j]);
                        amps[i] = f * y;
                        amps[j] = f * x;
                    }
                    (false, true) => {}
                }
            }
        }
        Gate::GPhase => {
            let f = C64::new(0.0, sign);
            amps.iter_mut().for_each(|a| *a *= f);
        }
    }
}
