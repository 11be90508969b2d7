//! Circuit-structure search: hill climbing, random search and tabu search.
//!
//! Candidates of one iteration are evaluated in parallel. Each random
//! candidate draws from its own generator stream, derived from the seed,
//! the iteration and the sample number, so results do not depend on the
//! number of worker threads.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{apply_move, draw_random_move, generate_moves, Circuit, GateLibrary, Move};
use crate::cost::SynthesisProblem;
use crate::error::{Error, Result};
use crate::optimizer::{optimise_parameters, OptimizerConfig};
use crate::prune::{prune, prune_to_fixpoint, IndexSet, PruneConfig, PruneReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Hill,
    Random,
    Tabu,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hill" => Ok(Self::Hill),
            "random" => Ok(Self::Random),
            "tabu" => Ok(Self::Tabu),
            other => Err(Error::InvalidArgument(format!("unknown algorithm `{other}`"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hill => "hill",
            Self::Random => "random",
            Self::Tabu => "tabu",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub k_max: usize,
    pub e_conv: f64,
    pub n_moves: usize,
    pub n_samp: usize,
    pub t_tabu: usize,
    pub eps_qmt: f64,
    pub seed: u64,
    /// Worker threads for candidate evaluation; 0 uses the global pool.
    pub jobs: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Random,
            k_max: 10_000,
            e_conv: 1e-8,
            n_moves: 30,
            n_samp: 10,
            t_tabu: 20,
            eps_qmt: crate::prune::EPS_QMT,
            seed: 0,
            jobs: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_moves == 0 || self.n_samp == 0 || self.t_tabu == 0 || self.k_max == 0 {
            return Err(Error::InvalidArgument("k_max, n_moves, n_samp and t_tabu must be positive".into()));
        }
        if !(self.e_conv > 0.0) || !(self.eps_qmt > 0.0) {
            return Err(Error::InvalidArgument("e_conv and eps_qmt must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    NoImprovement,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub energy: f64,
    pub gate_count: usize,
    pub accepted: bool,
    /// Candidates that were optimised in this iteration.
    pub candidates: usize,
}

/// Tabu-list history, enough to replay the list's bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TabuEvent {
    /// A move was drawn and applied; `fallback` marks a draw from the unfiltered set.
    Performed { iteration: usize, mv: Move, fallback: bool },
    /// A rejected candidate's insertion at this index was rolled back.
    Undone { index: usize },
    /// The incumbent lost the gate at this index.
    Deleted { index: usize },
}

/// Performed moves with the iteration they were recorded in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TabuList {
    t_tabu: usize,
    entries: Vec<(Move, usize)>,
}

impl TabuList {
    pub fn new(t_tabu: usize) -> Self {
        Self { t_tabu, entries: Vec::new() }
    }

    pub fn entries(&self) -> &[(Move, usize)] {
        &self.entries
    }

    pub fn is_tabu(&self, mv: &Move, iteration: usize) -> bool {
        self.entries.iter().any(|(m, at)| m == mv && iteration - at < self.t_tabu)
    }

    pub fn record(&mut self, mv: Move, iteration: usize) {
        self.entries.push((mv, iteration));
    }

    pub fn expire(&mut self, iteration: usize) {
        let t = self.t_tabu;
        self.entries.retain(|(_, at)| iteration - at < t);
    }

    /// A gate was inserted at `m`.
    pub fn on_insert(&mut self, m: usize) {
        for (mv, _) in &mut self.entries {
            if mv.index >= m {
                mv.index += 1;
            }
        }
    }

    /// The gate at `m` was deleted.
    pub fn on_delete(&mut self, m: usize) {
        self.entries.retain(|(mv, _)| mv.index != m);
        for (mv, _) in &mut self.entries {
            if mv.index > m {
                mv.index -= 1;
            }
        }
    }

    /// The insertion at `m` was rolled back; moves aimed at `m` keep pointing there.
    pub fn undo_insert(&mut self, m: usize) {
        for (mv, _) in &mut self.entries {
            if mv.index > m {
                mv.index -= 1;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub circuit: Circuit,
    pub theta: Vec<f64>,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub reason: StopReason,
    pub trace: Vec<TraceRecord>,
    /// Optimiser iterations over all candidates and prunes.
    pub optimizer_iterations: usize,
    pub final_prune: Option<PruneReport>,
    /// Settings of the final prune, for re-running it.
    pub final_prune_config: Option<PruneConfig>,
    pub tabu_log: Vec<TabuEvent>,
}

/// Runs the configured algorithm from `(c0, theta0)`.
pub fn search(
    problem: &SynthesisProblem,
    lib: &GateLibrary,
    c0: &Circuit,
    theta0: &[f64],
    cfg: &SearchConfig,
    opt: &OptimizerConfig,
) -> Result<SearchResult> {
    match cfg.algorithm {
        Algorithm::Hill => hill_climb(problem, lib, c0, theta0, cfg, opt),
        Algorithm::Random => random_search(problem, lib, c0, theta0, cfg, opt),
        Algorithm::Tabu => tabu_search(problem, lib, c0, theta0, cfg, opt),
    }
}

struct State<'a> {
    problem: &'a SynthesisProblem,
    opt: &'a OptimizerConfig,
    cfg: &'a SearchConfig,
    circuit: Circuit,
    theta: Vec<f64>,
    energy: f64,
    eps_remove: f64,
    trace: Vec<TraceRecord>,
    optimizer_iterations: usize,
    tabu_log: Vec<TabuEvent>,
}

impl<'a> State<'a> {
    fn start(
        problem: &'a SynthesisProblem,
        lib: &GateLibrary,
        c0: &Circuit,
        theta0: &[f64],
        cfg: &'a SearchConfig,
        opt: &'a OptimizerConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        opt.validate()?;
        if lib.n_qubits() != problem.n_qubits() {
            return Err(Error::DimensionMismatch { expected: problem.n_qubits(), found: lib.n_qubits() });
        }
        let energy = problem.energy(c0, theta0)?;
        let trace = vec![TraceRecord { iteration: 0, energy, gate_count: c0.len(), accepted: true, candidates: 0 }];
        Ok(Self {
            problem,
            opt,
            cfg,
            circuit: c0.clone(),
            theta: theta0.to_vec(),
            energy,
            eps_remove: cfg.e_conv / 10.0,
            trace,
            optimizer_iterations: 0,
            tabu_log: Vec::new(),
        })
    }

    fn accept(&mut self, circuit: Circuit, theta: Vec<f64>, energy: f64) {
        self.eps_remove = (self.energy - energy).abs() / 50.0;
        self.circuit = circuit;
        self.theta = theta;
        self.energy = energy;
    }

    fn record(&mut self, iteration: usize, accepted: bool, candidates: usize) {
        self.trace.push(TraceRecord {
            iteration,
            energy: self.energy,
            gate_count: self.circuit.len(),
            accepted,
            candidates,
        });
    }

    fn converged(&self) -> bool {
        self.energy < self.cfg.e_conv
    }

    /// Final prune over all gates, kept below the convergence threshold.
    fn finish(mut self, iterations: usize, reason: StopReason) -> Result<SearchResult> {
        let mut final_prune = None;
        let mut final_prune_config = None;
        if reason == StopReason::Converged {
            let pcfg = PruneConfig::from_budget(self.eps_remove, self.cfg.eps_qmt).with_ceiling(self.cfg.e_conv.next_down());
            let out = prune_to_fixpoint(self.problem, &self.circuit, &self.theta, &pcfg, self.opt)?;
            self.optimizer_iterations += out.report.optimizer_iterations;
            self.circuit = out.circuit;
            self.theta = out.theta;
            self.energy = out.energy;
            final_prune = Some(out.report);
            final_prune_config = Some(pcfg);
        }
        let converged = self.converged();
        Ok(SearchResult {
            circuit: self.circuit,
            theta: self.theta,
            energy: self.energy,
            iterations,
            converged,
            reason,
            trace: self.trace,
            optimizer_iterations: self.optimizer_iterations,
            final_prune,
            final_prune_config,
            tabu_log: self.tabu_log,
        })
    }
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Lowest-energy successful candidate, first one on ties.
fn best_of<T>(cands: Vec<Option<(T, f64)>>) -> Option<(T, f64)> {
    let mut best: Option<(T, f64)> = None;
    for (item, e) in cands.into_iter().flatten() {
        if best.as_ref().is_none_or(|(_, b)| e < *b) {
            best = Some((item, e));
        }
    }
    best
}

/// Evaluates every move each iteration and keeps the best; stops when no
/// move improves the energy.
pub fn hill_climb(
    problem: &SynthesisProblem,
    lib: &GateLibrary,
    c0: &Circuit,
    theta0: &[f64],
    cfg: &SearchConfig,
    opt: &OptimizerConfig,
) -> Result<SearchResult> {
    let mut st = State::start(problem, lib, c0, theta0, cfg, opt)?;
    if st.converged() {
        return st.finish(0, StopReason::Converged);
    }
    for k in 1..=cfg.k_max {
        let moves = generate_moves(&st.circuit, lib);
        let (c, t) = (&st.circuit, &st.theta);
        let results = with_pool(cfg.jobs, || {
            moves
                .par_iter()
                .map(|&mv| {
                    let (mc, mt) = apply_move(c, t, mv).ok()?;
                    let out = optimise_parameters(problem, &mc, &mt, opt).ok()?;
                    Some((out.iterations, out.converged.then_some((mc, out.theta, out.energy))))
                })
                .collect::<Vec<_>>()
        })?;
        st.optimizer_iterations += results.iter().flatten().map(|(i, _)| i).sum::<usize>();
        let best = best_of(
            results.into_iter().map(|r| r.and_then(|(_, c)| c).map(|(c, t, e)| ((c, t), e))).collect(),
        );
        match best {
            Some(((c, t), e)) if e < st.energy => {
                st.accept(c, t, e);
                st.record(k, true, moves.len());
            }
            _ => {
                st.record(k, false, moves.len());
                return st.finish(k, StopReason::NoImprovement);
            }
        }
        if st.converged() {
            return st.finish(k, StopReason::Converged);
        }
    }
    st.finish(cfg.k_max, StopReason::IterationLimit)
}

/// One candidate: random moves applied in sequence, then optimisation.
struct Candidate {
    circuit: Circuit,
    theta: Vec<f64>,
    energy: f64,
    converged: bool,
    iterations: usize,
    /// Indices of the new gates in the candidate circuit.
    new_gates: IndexSet,
    /// Insertion positions in order, each relative to the circuit at that moment.
    inserted: Vec<usize>,
    tabu: Option<TabuList>,
    events: Vec<TabuEvent>,
}

const JITTER_SCALE: f64 = 1e-2;

fn candidate_rng(seed: u64, iteration: usize, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((iteration as u64) << 24) | sample as u64);
    rng
}

fn build_candidate(
    problem: &SynthesisProblem,
    lib: &GateLibrary,
    base: (&Circuit, &[f64]),
    n_moves: usize,
    rng: &mut ChaCha8Rng,
    mut tabu: Option<(TabuList, usize)>,
    opt: &OptimizerConfig,
) -> Result<Candidate> {
    let (mut c, mut t) = (base.0.clone(), base.1.to_vec());
    let mut new_gates = IndexSet::new();
    let mut inserted = Vec::with_capacity(n_moves);
    let mut events = Vec::new();
    for _ in 0..n_moves {
        let moves = generate_moves(&c, lib);
        let mv = match tabu.as_mut() {
            Some((list, k)) => {
                let allowed: Vec<Move> = moves.iter().filter(|m| !list.is_tabu(m, *k)).copied().collect();
                let fallback = allowed.is_empty();
                let mv = draw_random_move(if fallback { &moves } else { &allowed }, rng)?;
                list.on_insert(mv.index);
                list.record(mv, *k);
                events.push(TabuEvent::Performed { iteration: *k, mv, fallback });
                mv
            }
            None => draw_random_move(&moves, rng)?,
        };
        (c, t) = apply_move(&c, &t, mv)?;
        let m = mv.index;
        new_gates = new_gates.into_iter().map(|j| if j >= m { j + 1 } else { j }).collect();
        new_gates.insert(m);
        inserted.push(m);
    }
    // Gates inserted at exactly zero sit on a critical point whenever the
    // target shares a symmetry with the circuit (real targets, conserved
    // Hamming weight), so new gates start at a small random angle.
    let jitter = Normal::new(0.0, JITTER_SCALE).expect("positive scale");
    for &j in &new_gates {
        t[j] += jitter.sample(rng);
    }
    let out = optimise_parameters(problem, &c, &t, opt)?;
    Ok(Candidate {
        circuit: c,
        theta: out.theta,
        energy: out.energy,
        converged: out.converged,
        iterations: out.iterations,
        new_gates,
        inserted,
        tabu: tabu.map(|(l, _)| l),
        events,
    })
}

/// Random search; with `tabu` set, one sample per iteration and the tabu list filter.
fn sampled_search(
    problem: &SynthesisProblem,
    lib: &GateLibrary,
    c0: &Circuit,
    theta0: &[f64],
    cfg: &SearchConfig,
    opt: &OptimizerConfig,
    use_tabu: bool,
) -> Result<SearchResult> {
    let mut st = State::start(problem, lib, c0, theta0, cfg, opt)?;
    if st.converged() {
        return st.finish(0, StopReason::Converged);
    }
    let n_samp = if use_tabu { 1 } else { cfg.n_samp };
    let mut tabu = use_tabu.then(|| TabuList::new(cfg.t_tabu));
    for k in 1..=cfg.k_max {
        if let Some(list) = tabu.as_mut() {
            list.expire(k);
        }
        let (c, t) = (&st.circuit, st.theta.as_slice());
        let shared_tabu = tabu.clone();
        let cands = with_pool(cfg.jobs, || {
            (0..n_samp)
                .into_par_iter()
                .map(|m| {
                    let mut rng = candidate_rng(cfg.seed, k, m);
                    let list = shared_tabu.clone().map(|l| (l, k));
                    build_candidate(problem, lib, (c, t), cfg.n_moves, &mut rng, list, opt).ok()
                })
                .collect::<Vec<_>>()
        })?;
        st.optimizer_iterations += cands.iter().flatten().map(|c| c.iterations).sum::<usize>();
        let prev_energy = st.energy;
        let mut accepted = false;
        let mut new_gates = IndexSet::new();
        let mut tabu_events = Vec::new();
        let best = best_of(cands.into_iter().map(|c| c.filter(|c| c.converged).map(|c| { let e = c.energy; (c, e) })).collect());
        if let Some((mut cand, e)) = best {
            tabu_events = std::mem::take(&mut cand.events);
            if e < st.energy {
                accepted = true;
                new_gates = cand.new_gates;
                if let Some(list) = cand.tabu.take() {
                    tabu = Some(list);
                }
                st.accept(cand.circuit, cand.theta, e);
            } else if let Some(mut list) = cand.tabu.take() {
                for &m in cand.inserted.iter().rev() {
                    list.undo_insert(m);
                    tabu_events.push(TabuEvent::Undone { index: m });
                }
                tabu = Some(list);
            }
        }
        st.tabu_log.extend(tabu_events);

        let pcfg = PruneConfig::from_budget(st.eps_remove, cfg.eps_qmt).with_ceiling(prev_energy);
        let out = prune(problem, &st.circuit, &st.theta, &new_gates, &pcfg, opt)?;
        st.optimizer_iterations += out.report.optimizer_iterations;
        if let Some(list) = tabu.as_mut() {
            for &d in &out.deletions {
                list.on_delete(d);
                st.tabu_log.push(TabuEvent::Deleted { index: d });
            }
        }
        st.circuit = out.circuit;
        st.theta = out.theta;
        st.energy = out.energy;
        st.record(k, accepted, n_samp);
        if st.converged() {
            return st.finish(k, StopReason::Converged);
        }
    }
    st.finish(cfg.k_max, StopReason::IterationLimit)
}

pub fn random_search(
    problem: &SynthesisProblem,
    lib: &GateLibrary,
    c0: &Circuit,
    theta0: &[f64],
    cfg: &SearchConfig,
    opt: &OptimizerConfig,
) -> Result<SearchResult> {
    sampled_search(problem, lib, c0, theta0, cfg, opt, false)
}

pub fn tabu_search(
    problem: &SynthesisProblem,
    lib: &GateLibrary,
    c0: &Circuit,
    theta0: &[f64],
    cfg: &SearchConfig,
    opt: &OptimizerConfig,
) -> Result<SearchResult> {
    sampled_search(problem, lib, c0, theta0, cfg, opt, true)
}
