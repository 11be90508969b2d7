use nalgebra::DMatrix;

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::simcore::{apply_circuit_in_place, C64};

pub type CMatrix = DMatrix<C64>;

/// `max |U†U − 1|` over entries.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let prod = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - C64::new(want, 0.0)).norm());
        }
    }
    worst
}

pub fn ensure_unitary(u: &CMatrix, tol: f64) -> Result<()> {
    if !u.is_square() {
        return Err(Error::DimensionMismatch { expected: u.nrows(), found: u.ncols() });
    }
    let dev = unitarity_deviation(u);
    if dev > tol {
        return Err(Error::NotUnitary(dev));
    }
    Ok(())
}

/// Number of qubits for a `2^n`-dimensional square matrix.
pub fn qubits_of(u: &CMatrix) -> Result<usize> {
    let d = u.nrows();
    if d == 0 || !d.is_power_of_two() || u.ncols() != d {
        return Err(Error::InvalidArgument(format!("{}x{} is not a qubit operator", u.nrows(), u.ncols())));
    }
    Ok(d.trailing_zeros() as usize)
}

/// Dense matrix of `C(θ)` on `n_qubits`, column `k` being `C(θ)|k⟩`.
pub fn circuit_unitary(circuit: &Circuit, theta: &[f64], n_qubits: usize) -> Result<CMatrix> {
    circuit.check_params(theta)?;
    circuit.validate(n_qubits)?;
    let d = 1usize << n_qubits;
    let mut u = CMatrix::zeros(d, d);
    let mut col = vec![C64::new(0.0, 0.0); d];
    for k in 0..d {
        col.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
        col[k] = C64::new(1.0, 0.0);
        apply_circuit_in_place(&mut col, circuit.gates(), theta, false);
        u.set_column(k, &nalgebra::DVector::from_column_slice(&col));
    }
    Ok(u)
}
