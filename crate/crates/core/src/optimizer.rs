//! Imaginary-time parameter optimisation with a regularised metric and an
//! exponential step-size search.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::circuits::Circuit;
use crate::cost::SynthesisProblem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub delta_abs: f64,
    pub delta_rel: f64,
    pub k_max_opt: usize,
    pub n_conv: usize,
    pub kappa: f64,
    pub lambda0: f64,
    pub lambda_min: f64,
    /// Maximum number of step-size growths per line search.
    pub max_growth: usize,
    pub tikhonov_eps: f64,
    pub tikhonov_floor: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            delta_abs: 1e-5,
            delta_rel: 1e-3,
            k_max_opt: 500,
            n_conv: 5,
            kappa: 1.4,
            lambda0: 0.05,
            lambda_min: 1e-5,
            max_growth: 60,
            tikhonov_eps: 1e-6,
            tikhonov_floor: 1e-10,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.kappa > 1.0
            && self.lambda0 > self.lambda_min
            && self.lambda_min > 0.0
            && self.k_max_opt >= 1
            && self.n_conv >= 1
            && self.delta_abs >= 0.0
            && self.delta_rel >= 0.0
            && self.tikhonov_eps >= 0.0
            && self.tikhonov_floor > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("inconsistent optimizer settings: {self:?}")))
        }
    }
}

const REL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerStep {
    pub iteration: usize,
    pub energy: f64,
    pub lambda: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub theta: Vec<f64>,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Metric from the last iteration, `None` if no iteration ran.
    pub qmt_last: Option<DMatrix<f64>>,
}

/// `A + εI` with `ε = max(eps_scale · tr A / dim, floor)`.
pub fn tikhonov_regularise(a: &DMatrix<f64>, eps_scale: f64, floor: f64) -> DMatrix<f64> {
    let dim = a.nrows().max(1);
    let eps = (eps_scale * a.trace() / dim as f64).max(floor);
    a + DMatrix::identity(a.nrows(), a.ncols()) * eps
}

fn solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let x = match a.clone().cholesky() {
        Some(ch) => ch.solve(b),
        None => a.lu().solve(b).ok_or(Error::LinearSolve)?,
    };
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::LinearSolve)
    }
}

/// Step-size search on `λ ↦ energy_at(λ)` over the grid `λ₀κʲ`: moves toward
/// the lower neighbour until the centre is no worse than both sides, the
/// step falls to `λ_min`, or the growth cap is reached.
pub fn choose_lambda_by(mut energy_at: impl FnMut(f64) -> f64, cfg: &OptimizerConfig) -> f64 {
    let lambda = |j: i32| cfg.lambda0 * cfg.kappa.powi(j);
    let mut cache: HashMap<i32, f64> = HashMap::new();
    let mut e = |j: i32| *cache.entry(j).or_insert_with(|| energy_at(lambda(j)));
    let mut j = 0i32;
    loop {
        if lambda(j) <= cfg.lambda_min || j >= cfg.max_growth as i32 {
            return lambda(j);
        }
        let (lo, mid, hi) = (e(j - 1), e(j), e(j + 1));
        if mid <= lo && mid <= hi {
            return lambda(j);
        }
        if hi < lo {
            j += 1;
        } else {
            j -= 1;
        }
    }
}

/// Step size along `θ − λΔ`.
pub fn choose_lambda(
    problem: &SynthesisProblem,
    circuit: &Circuit,
    theta: &[f64],
    delta: &[f64],
    cfg: &OptimizerConfig,
) -> Result<f64> {
    problem.energy(circuit, theta)?;
    if delta.len() != theta.len() {
        return Err(Error::LengthMismatch { params: delta.len(), gates: theta.len() });
    }
    let mut trial = theta.to_vec();
    Ok(choose_lambda_by(
        |l| {
            shifted(&mut trial, theta, delta, l);
            problem.energy_unchecked(circuit, &trial)
        },
        cfg,
    ))
}

fn shifted(out: &mut [f64], theta: &[f64], delta: &[f64], lambda: f64) {
    for ((o, t), d) in out.iter_mut().zip(theta).zip(delta) {
        *o = t - lambda * d;
    }
}

fn is_quiet(prev: f64, now: f64, cfg: &OptimizerConfig) -> bool {
    let change = (now - prev).abs();
    change < cfg.delta_abs || change / now.max(REL_FLOOR) < cfg.delta_rel
}

pub fn optimise_parameters(
    problem: &SynthesisProblem,
    circuit: &Circuit,
    theta0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<OptimizeOutcome> {
    run(problem, circuit, theta0, cfg, None)
}

/// As [`optimise_parameters`], also returning one record per iteration.
pub fn optimise_parameters_traced(
    problem: &SynthesisProblem,
    circuit: &Circuit,
    theta0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<(OptimizeOutcome, Vec<OptimizerStep>)> {
    let mut trace = Vec::new();
    let out = run(problem, circuit, theta0, cfg, Some(&mut trace))?;
    Ok((out, trace))
}

fn run(
    problem: &SynthesisProblem,
    circuit: &Circuit,
    theta0: &[f64],
    cfg: &OptimizerConfig,
    mut trace: Option<&mut Vec<OptimizerStep>>,
) -> Result<OptimizeOutcome> {
    let mut energy = problem.energy(circuit, theta0)?;
    let mut theta = theta0.to_vec();
    if circuit.is_empty() {
        return Ok(OptimizeOutcome { theta, energy, iterations: 0, converged: true, qmt_last: None });
    }
    let mut trial = theta.clone();
    let mut quiet = 0;
    let mut qmt_last = None;
    for k in 1..=cfg.k_max_opt {
        let eval = problem.evaluate(circuit, &theta)?;
        let b = DVector::from_vec(eval.gradient);
        let a = tikhonov_regularise(&eval.qmt, cfg.tikhonov_eps, cfg.tikhonov_floor);
        qmt_last = Some(eval.qmt);
        // B = −½∇E, so the descent direction for θ − λΔ is Δ = −A⁻¹B
        let delta: Vec<f64> = solve(a, &b)?.iter().map(|x| -x).collect();
        let lambda = choose_lambda_by(
            |l| {
                shifted(&mut trial, &theta, &delta, l);
                problem.energy_unchecked(circuit, &trial)
            },
            cfg,
        );
        shifted(&mut trial, &theta, &delta, lambda);
        let next = problem.energy_unchecked(circuit, &trial);
        if let Some(t) = trace.as_deref_mut() {
            t.push(OptimizerStep { iteration: k, energy: next.min(energy), lambda, gradient_norm: b.norm() });
        }
        if next > energy {
            // no downhill step exists along Δ; later iterations would repeat this one
            return Ok(OptimizeOutcome { theta, energy, iterations: k, converged: true, qmt_last });
        }
        let prev = energy;
        theta.copy_from_slice(&trial);
        energy = next;
        quiet = if is_quiet(prev, energy, cfg) { quiet + 1 } else { 0 };
        if quiet >= cfg.n_conv {
            return Ok(OptimizeOutcome { theta, energy, iterations: k, converged: true, qmt_last });
        }
    }
    Ok(OptimizeOutcome { theta, energy, iterations: cfg.k_max_opt, converged: false, qmt_last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{Axis, Gate};
    use crate::cost::{Mode, SynthesisHamiltonian};
    use crate::linalg::circuit_unitary;

    fn rx_problem(angle: f64, h: SynthesisHamiltonian) -> SynthesisProblem {
        let c = Circuit::new(vec![Gate::rx(0)]);
        SynthesisProblem::new(circuit_unitary(&c, &[angle], 1).unwrap(), Mode::FullSpace, h).unwrap()
    }

    fn centred(a: f64, period: f64) -> f64 {
        a - period * (a / period + 0.5).floor()
    }

    #[test]
    fn single_rotation_recovers_angle() {
        for h in [SynthesisHamiltonian::Sum, SynthesisHamiltonian::Proj] {
            let p = rx_problem(0.7, h);
            let out = optimise_parameters(&p, &Circuit::new(vec![Gate::rx(0)]), &[0.0], &Default::default()).unwrap();
            assert!(out.converged);
            assert!(centred(out.theta[0] - 0.7, 4.0 * std::f64::consts::PI).abs() < 1e-6, "{:?}", out.theta);
        }
    }

    #[test]
    fn stationary_start_stays_put() {
        let p = rx_problem(0.7, SynthesisHamiltonian::Sum);
        let cfg = OptimizerConfig::default();
        let out = optimise_parameters(&p, &Circuit::new(vec![Gate::rx(0)]), &[0.7], &cfg).unwrap();
        assert!(out.converged && out.iterations <= cfg.n_conv);
        assert!((out.theta[0] - 0.7).abs() < 1e-8);
    }

    #[test]
    fn energies_never_increase() {
        let c = Circuit::new(vec![Gate::ry(0), Gate::crot(Axis::X, 0, 1).unwrap(), Gate::rz(1), Gate::rx(0)]);
        let u = crate::targets::haar_random_unitary(2, 3);
        let p = SynthesisProblem::new(u, Mode::FullSpace, SynthesisHamiltonian::Sum).unwrap();
        let (_, trace) = optimise_parameters_traced(&p, &c, &[0.1, 0.2, 0.3, 0.4], &Default::default()).unwrap();
        let e0 = p.energy(&c, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut prev = e0;
        for s in &trace {
            assert!(s.energy <= prev + 1e-12);
            prev = s.energy;
        }
    }

    #[test]
    fn empty_circuit_returns_bare_energy() {
        let p = rx_problem(0.7, SynthesisHamiltonian::Proj);
        let out = optimise_parameters(&p, &Circuit::default(), &[], &Default::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!((out.energy - p.energy(&Circuit::default(), &[]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn lambda_on_quadratic() {
        let cfg = OptimizerConfig::default();
        let best = cfg.lambda0 * cfg.kappa.powi(3);
        let got = choose_lambda_by(|l| (l - best).powi(2), &cfg);
        assert!(got / best < cfg.kappa + 1e-12 && best / got < cfg.kappa + 1e-12);
        // every step uphill
        let got = choose_lambda_by(|l| l, &cfg);
        assert!(got <= cfg.lambda_min);
        // flat
        assert_eq!(choose_lambda_by(|_| 0.3, &cfg), cfg.lambda0);
    }

    #[test]
    fn lambda_growth_is_capped() {
        let cfg = OptimizerConfig::default();
        let got = choose_lambda_by(|l| -l, &cfg);
        assert!((got - cfg.lambda0 * cfg.kappa.powi(cfg.max_growth as i32)).abs() < 1e-9 * got);
    }

    #[test]
    fn regularisation() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(tikhonov_regularise(&z, 1e-6, 1e-10), DMatrix::identity(3, 3) * 1e-10);
        let i = DMatrix::<f64>::identity(2, 2);
        assert_eq!(tikhonov_regularise(&i, 1e-6, 1e-10), DMatrix::identity(2, 2) * (1.0 + 1e-6));
        let v = DVector::from_vec(vec![1.0, 2.0]);
        let rank1 = &v * v.transpose();
        let x = solve(tikhonov_regularise(&rank1, 1e-6, 1e-10), &v).unwrap();
        assert!(x.iter().all(|a| a.is_finite()));
        assert!((&rank1 * &x - &v).norm() < 1e-4);
    }
}
