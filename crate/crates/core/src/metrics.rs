//! Global-phase-invariant operator distance and the global-phase fix-up.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::circuits::Circuit;
use crate::cost::{SubspaceBasis, UNITARITY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{circuit_unitary, ensure_unitary, qubits_of, CMatrix};
use crate::simcore::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceReport {
    /// `min_φ ‖U − e^{iφ} C‖`, in `[0, 2]`.
    pub distance: f64,
    /// The minimising `φ`.
    pub optimal_phase: f64,
    /// Width of the smallest arc holding every eigenphase of `U†C`
    /// (0 for the subspace variant, where eigenphases are not used).
    pub eigenphase_span: f64,
}

fn check_pair(u: &CMatrix, c: &CMatrix) -> Result<()> {
    if u.shape() != c.shape() {
        return Err(Error::DimensionMismatch { expected: u.nrows(), found: c.nrows() });
    }
    ensure_unitary(u, UNITARITY_TOL)?;
    ensure_unitary(c, UNITARITY_TOL)
}

/// Eigenphases of a unitary, sorted into `[-π, π)`.
pub fn eigenphases(w: &CMatrix) -> Vec<f64> {
    let (_, t) = w.clone().schur().unpack();
    let mut phases: Vec<f64> = t.diagonal().iter().map(|z| wrap(z.arg())).collect();
    phases.sort_by(f64::total_cmp);
    phases
}

fn wrap(a: f64) -> f64 {
    a - TAU * (a / TAU + 0.5).floor()
}

/// `min_φ ‖U − e^{iφ}C‖₂`. With eigenphases `λ_k` of `U†C`,
/// `‖U − e^{iφ}C‖ = max_k |1 − e^{i(φ+λ_k)}|`, minimised by centring the
/// smallest arc of width `w` holding every `λ_k`, which gives `2 sin(w/4)`.
pub fn operator_distance(u: &CMatrix, c: &CMatrix) -> Result<DistanceReport> {
    check_pair(u, c)?;
    let phases = eigenphases(&(u.adjoint() * c));
    let k = phases.len();
    // largest circular gap; the arc starts right after it
    let (mut best_gap, mut start) = (phases[0] + TAU - phases[k - 1], 0);
    for i in 1..k {
        let gap = phases[i] - phases[i - 1];
        if gap > best_gap {
            best_gap = gap;
            start = i;
        }
    }
    let span = (TAU - best_gap).max(0.0);
    let centre = wrap(phases[start] + span / 2.0);
    Ok(DistanceReport {
        distance: 2.0 * (span / 4.0).sin(),
        optimal_phase: wrap(-centre),
        eigenphase_span: span,
    })
}

pub fn circuit_distance(u: &CMatrix, circuit: &Circuit, theta: &[f64]) -> Result<DistanceReport> {
    let n = qubits_of(u)?;
    operator_distance(u, &circuit_unitary(circuit, theta, n)?)
}

fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// Minimises `f` over a full period: coarse grid, then golden-section search
/// in the bracket around the best grid point.
fn minimise_periodic(f: impl Fn(f64) -> f64, grid: usize, tol: f64) -> (f64, f64) {
    let h = TAU / grid as f64;
    let (mut best_phi, mut best) = (-PI, f(-PI));
    for i in 1..grid {
        let phi = -PI + h * i as f64;
        let v = f(phi);
        if v < best {
            best = v;
            best_phi = phi;
        }
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best_phi - h, best_phi + h);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let phi = (a + b) / 2.0;
    let v = f(phi);
    if v < best {
        (wrap(phi), v)
    } else {
        (wrap(best_phi), best)
    }
}

fn compress(m: &CMatrix, labels: &[usize]) -> CMatrix {
    CMatrix::from_fn(labels.len(), labels.len(), |i, j| m[(labels[i], labels[j])])
}

/// Distance between the compressions `Π_S U Π_S` and `Π_S C Π_S`. The
/// compressions are sub-unitary in general, so the phase is found numerically.
pub fn subspace_operator_distance(u: &CMatrix, c: &CMatrix, basis: &SubspaceBasis) -> Result<DistanceReport> {
    check_pair(u, c)?;
    if basis.is_empty() {
        return Err(Error::InvalidArgument("subspace basis is empty".into()));
    }
    let n = qubits_of(u)?;
    crate::simcore::check_basis(basis.labels(), n)?;
    let (us, cs) = (compress(u, basis.labels()), compress(c, basis.labels()));
    let objective = |phi: f64| spectral_norm(&(&us - &cs * C64::from_polar(1.0, phi)));
    let (phi, distance) = minimise_periodic(objective, 720, 1e-12);
    Ok(DistanceReport { distance, optimal_phase: phi, eigenphase_span: 0.0 })
}

/// `arg Tr(C†U)`: appending a global phase gate with this angle to `C`
/// minimises `‖U − e^{iθ}C‖_F`.
pub fn global_phase_fix(u: &CMatrix, c: &CMatrix) -> Result<f64> {
    if u.shape() != c.shape() {
        return Err(Error::DimensionMismatch { expected: u.nrows(), found: c.nrows() });
    }
    let tr = (c.adjoint() * u).trace();
    if tr.norm() <= 1e-12 * u.nrows() as f64 {
        return Err(Error::UndefinedPhase);
    }
    Ok(tr.arg())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::haar_random_unitary;

    /// Brute-force `min_φ ‖U − e^{iφ}C‖` on a fine grid plus local refinement.
    fn grid_oracle(u: &CMatrix, c: &CMatrix) -> f64 {
        let f = |phi: f64| spectral_norm(&(u - c * C64::from_polar(1.0, phi)));
        let mut best = (0.0, f64::INFINITY);
        for i in 0..10_000 {
            let phi = -PI + TAU * i as f64 / 10_000.0;
            let v = f(phi);
            if v < best.1 {
                best = (phi, v);
            }
        }
        let h = TAU / 10_000.0;
        (0..=2000).map(|i| f(best.0 - h + 2.0 * h * i as f64 / 2000.0)).fold(best.1, f64::min)
    }

    fn z1() -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]))
    }

    #[test]
    fn identical_and_phase_shifted() {
        let u = haar_random_unitary(2, 4);
        assert!(operator_distance(&u, &u).unwrap().distance < 1e-10);
        for alpha in [0.3, -2.0, 3.1] {
            let c = &u * C64::from_polar(1.0, alpha);
            let r = operator_distance(&u, &c).unwrap();
            assert!(r.distance < 1e-10);
            assert!((wrap(r.optimal_phase + alpha)).abs() < 1e-8);
        }
    }

    #[test]
    fn z_against_identity() {
        let r = operator_distance(&CMatrix::identity(2, 2), &z1()).unwrap();
        assert!((r.distance - 2f64.sqrt()).abs() < 1e-12);
        assert!((grid_oracle(&CMatrix::identity(2, 2), &z1()) - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn closed_form_matches_grid_oracle() {
        for seed in 0..6 {
            let u = haar_random_unitary(2, seed);
            let c = haar_random_unitary(2, seed + 100);
            let fast = operator_distance(&u, &c).unwrap();
            assert!((fast.distance - grid_oracle(&u, &c)).abs() < 1e-6, "seed {seed}");
            // the reported phase attains the distance
            let at = spectral_norm(&(&u - &c * C64::from_polar(1.0, fast.optimal_phase)));
            assert!((at - fast.distance).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetry_and_phase_invariance() {
        for seed in 0..5 {
            let u = haar_random_unitary(2, seed);
            let c = haar_random_unitary(2, seed + 50);
            let d = operator_distance(&u, &c).unwrap().distance;
            assert!((d - operator_distance(&c, &u).unwrap().distance).abs() < 1e-10);
            let u2 = &u * C64::from_polar(1.0, 0.7);
            let c2 = &c * C64::from_polar(1.0, -1.9);
            assert!((d - operator_distance(&u2, &c2).unwrap().distance).abs() < 1e-10);
            assert!(d <= spectral_norm(&(&u - &c)) + 1e-12);
            assert!((0.0..=2.0).contains(&d));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let u = CMatrix::identity(2, 2);
        assert!(operator_distance(&u, &CMatrix::identity(4, 4)).is_err());
        let mut bad = CMatrix::identity(2, 2);
        bad[(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(operator_distance(&u, &bad), Err(Error::NotUnitary(_))));
        assert!(matches!(global_phase_fix(&CMatrix::identity(2, 2), &z1()), Err(Error::UndefinedPhase)));
    }

    #[test]
    fn subspace_distance_cases() {
        let (u, bases) = crate::targets::block_diag_hamming(3, 2).unwrap();
        assert!(subspace_operator_distance(&u, &u, &bases[1]).unwrap().distance < 1e-9);
        let full = SubspaceBasis::new((0..8).collect(), 3).unwrap();
        let c = haar_random_unitary(3, 9);
        let a = subspace_operator_distance(&u, &c, &full).unwrap().distance;
        let b = operator_distance(&u, &c).unwrap().distance;
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn phase_fix() {
        let u = haar_random_unitary(2, 8);
        let c = &u * C64::from_polar(1.0, -0.3);
        assert!((global_phase_fix(&u, &c).unwrap() - 0.3).abs() < 1e-10);
        assert!(global_phase_fix(&u, &u).unwrap().abs() < 1e-12);
    }
}
