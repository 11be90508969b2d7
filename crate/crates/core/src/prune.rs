//! Removal of gates that do not contribute: vanishing parameters, linearly
//! dependent metric rows, then trial deletion with re-optimisation.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::circuits::Circuit;
use crate::cost::SynthesisProblem;
use crate::error::{Error, Result};
use crate::optimizer::{optimise_parameters, OptimizerConfig};

pub type IndexSet = BTreeSet<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PruneConfig {
    /// Parameters closer than this to a multiple of the gate's identity period are dropped.
    pub eps_param: f64,
    /// Tolerance of the metric-row parallelism test.
    pub eps_qmt: f64,
    /// Energy increase accepted per removal.
    pub eps_remove: f64,
    /// Removals must also leave the energy at or below this value.
    pub ceiling: f64,
}

pub const EPS_QMT: f64 = 1e-3;
pub const EPS_PARAM_CAP: f64 = 1e-4;
pub const EPS_REMOVE_FLOOR: f64 = 1e-12;

impl PruneConfig {
    /// Thresholds derived from the removal budget, with `eps_param` capped.
    pub fn from_budget(eps_remove: f64, eps_qmt: f64) -> Self {
        let eps_remove = eps_remove.abs().max(EPS_REMOVE_FLOOR);
        Self { eps_param: eps_remove.min(EPS_PARAM_CAP), eps_qmt, eps_remove, ceiling: f64::INFINITY }
    }

    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = ceiling;
        self
    }

    fn accepts(&self, before: f64, after: f64, removals: usize) -> bool {
        after < before + removals as f64 * self.eps_remove && after <= self.ceiling
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PruneReport {
    pub energy_before: f64,
    pub energy_after: f64,
    pub small_parameter: usize,
    pub merged: usize,
    pub hard_removed: usize,
    pub optimizer_iterations: usize,
}

impl PruneReport {
    pub fn removals(&self) -> usize {
        self.small_parameter + self.merged + self.hard_removed
    }
}

#[derive(Debug, Clone)]
pub struct PruneOutcome {
    pub circuit: Circuit,
    pub theta: Vec<f64>,
    pub energy: f64,
    pub report: PruneReport,
    /// Removed positions in deletion order, each relative to the circuit at that moment.
    pub deletions: Vec<usize>,
}

/// `a − b⌊a/b + ½⌋ ∈ [−b/2, b/2)`.
pub fn centred_mod(a: f64, b: f64) -> f64 {
    a - b * (a / b + 0.5).floor()
}

/// Removes the gates at `remove`, shifting the surviving entries of `keep`.
pub fn delete(
    circuit: &Circuit,
    theta: &[f64],
    keep: &IndexSet,
    remove: &IndexSet,
) -> Result<(Circuit, Vec<f64>, IndexSet)> {
    circuit.check_params(theta)?;
    if let Some(&bad) = remove.iter().find(|&&d| d >= circuit.len()) {
        return Err(Error::IndexOutOfRange { index: bad, len: circuit.len() });
    }
    let mut c = circuit.clone();
    let mut t = theta.to_vec();
    let mut r = keep.clone();
    for &d in remove.iter().rev() {
        c.remove(d);
        t.remove(d);
        r = r.into_iter().filter(|&n| n != d).map(|n| if n > d { n - 1 } else { n }).collect();
    }
    Ok((c, t, r))
}

fn parallel_rows(a: &nalgebra::DMatrix<f64>, k: usize, n: usize, eps: f64) -> bool {
    let (rk, rn) = (a.row(k), a.row(n));
    (rk.dot(&rn) - rk.norm() * rn.norm()).abs() < eps
}

/// Prunes candidates `r` in three stages; stage 1 scans every gate.
pub fn prune(
    problem: &SynthesisProblem,
    circuit: &Circuit,
    theta: &[f64],
    r: &IndexSet,
    cfg: &PruneConfig,
    opt: &OptimizerConfig,
) -> Result<PruneOutcome> {
    let energy_before = problem.energy(circuit, theta)?;
    if let Some(&bad) = r.iter().find(|&&k| k >= circuit.len()) {
        return Err(Error::IndexOutOfRange { index: bad, len: circuit.len() });
    }
    let mut report = PruneReport { energy_before, ..Default::default() };

    let small: IndexSet = circuit
        .gates()
        .iter()
        .zip(theta)
        .enumerate()
        .filter(|(_, (g, t))| centred_mod(**t, g.identity_period()).abs() < cfg.eps_param)
        .map(|(k, _)| k)
        .collect();
    let mut deletions = Vec::new();
    let (mut c, mut t, mut r) = (circuit.clone(), theta.to_vec(), r.clone());
    let mut energy = energy_before;
    if !small.is_empty() {
        let (c1, t1, r1) = delete(circuit, theta, &r, &small)?;
        let e1 = problem.energy(&c1, &t1)?;
        if cfg.accepts(energy, e1, small.len()) {
            report.small_parameter = small.len();
            deletions.extend(small.iter().rev());
            (c, t, r, energy) = (c1, t1, r1, e1);
        }
    }

    // Merge gate n into an earlier gate k when their metric rows are parallel.
    if !r.is_empty() {
        let a = problem.qmt(&c, &t)?;
        let mut alive = vec![true; c.len()];
        let mut work = t.clone();
        for &k in &r {
            for n in k + 1..c.len() {
                if !alive[k] || !alive[n] || !parallel_rows(&a, k, n, cfg.eps_qmt) {
                    continue;
                }
                let mut trial = work.clone();
                trial[k] += trial[n];
                alive[n] = false;
                let (tc, tt) = compact(&c, &trial, &alive);
                let e = problem.energy(&tc, &tt)?;
                if cfg.accepts(energy, e, 1) {
                    work = trial;
                    energy = e;
                    report.merged += 1;
                } else {
                    alive[n] = true;
                }
            }
        }
        let gone: IndexSet = alive.iter().enumerate().filter(|(_, a)| !**a).map(|(i, _)| i).collect();
        deletions.extend(gone.iter().rev());
        let (c2, t2, r2) = delete(&c, &work, &r, &gone)?;
        c = c2;
        t = t2;
        let mut pending = r2;
        while let Some(k) = pending.pop_last() {
            let mut trial_c = c.clone();
            trial_c.remove(k);
            let mut trial_t = t.clone();
            trial_t.remove(k);
            let Ok(out) = optimise_parameters(problem, &trial_c, &trial_t, opt) else {
                continue;
            };
            report.optimizer_iterations += out.iterations;
            if cfg.accepts(energy, out.energy, 1) {
                deletions.push(k);
                c = trial_c;
                t = out.theta;
                energy = out.energy;
                report.hard_removed += 1;
            }
        }
    }
    report.energy_after = energy;
    Ok(PruneOutcome { circuit: c, theta: t, energy, report, deletions })
}

fn compact(c: &Circuit, theta: &[f64], alive: &[bool]) -> (Circuit, Vec<f64>) {
    let gates = c.gates().iter().zip(alive).filter(|(_, a)| **a).map(|(g, _)| *g).collect();
    let t = theta.iter().zip(alive).filter(|(_, a)| **a).map(|(t, _)| *t).collect();
    (Circuit::new(gates), t)
}

/// Repeats a full prune until a pass removes nothing.
pub fn prune_to_fixpoint(
    problem: &SynthesisProblem,
    circuit: &Circuit,
    theta: &[f64],
    cfg: &PruneConfig,
    opt: &OptimizerConfig,
) -> Result<PruneOutcome> {
    let mut out = prune(problem, circuit, theta, &(0..circuit.len()).collect(), cfg, opt)?;
    let mut total = out.report.clone();
    let mut deletions = out.deletions.clone();
    while out.report.removals() > 0 && !out.circuit.is_empty() {
        out = prune(problem, &out.circuit, &out.theta, &(0..out.circuit.len()).collect(), cfg, opt)?;
        total.small_parameter += out.report.small_parameter;
        total.merged += out.report.merged;
        total.hard_removed += out.report.hard_removed;
        total.optimizer_iterations += out.report.optimizer_iterations;
        deletions.extend(&out.deletions);
    }
    total.energy_after = out.energy;
    out.report = total;
    out.deletions = deletions;
    Ok(out)
}
