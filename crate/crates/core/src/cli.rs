//! Command-line front end: `synth`, `eval`, `distance` and `show`.
//!
//! Exit codes: 0 converged (or command succeeded), 1 synthesis did not
//! converge, 2 usage or input error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::circuits::{build_library, format_circuit, parse_circuit, Circuit, Gate, LibraryName};
use crate::cost::{Mode, SubspaceBasis, SynthesisProblem};
use crate::error::{Error, Result};
use crate::linalg::{circuit_unitary, CMatrix};
use crate::metrics::{global_phase_fix, operator_distance, subspace_operator_distance, DistanceReport};
use crate::optimizer::OptimizerConfig;
use crate::prune::PruneReport;
use crate::search::{search, Algorithm, SearchConfig, SearchResult, StopReason};
use crate::targets::{initial_swap_network, TargetSpec};

#[derive(Debug, Parser)]
#[command(name = "cforge", version, about = "Variational quantum circuit synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a circuit implementing a target unitary.
    Synth(SynthArgs),
    /// Print the cost of a stored circuit against a target.
    Eval(EvalArgs),
    /// Print the operator distance between a target and a stored circuit as JSON.
    Distance(DistanceArgs),
    /// Summarise a stored circuit.
    Show(ShowArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// qft:N, toffoli:N, haar:N:SEED, blockdiag:N:SEED[:WEIGHT] or file:PATH
    #[arg(long)]
    pub target: Option<String>,
    /// allrot, nnrot or swapnet
    #[arg(long)]
    pub library: Option<String>,
    /// hill, random or tabu
    #[arg(long)]
    pub algorithm: Option<String>,
    /// sum or proj
    #[arg(long)]
    pub hamiltonian: Option<String>,
    /// full, subspace, subspace:weight=W or subspace:file=PATH
    #[arg(long)]
    pub mode: Option<String>,
    /// empty, swapnet or file:PATH
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long, env = "CFORGE_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for candidate evaluation.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Append a global phase gate so the circuit matches the target's phase.
    #[arg(long)]
    pub fix_phase: bool,
    /// Use the bit-reversed QFT convention.
    #[arg(long)]
    pub qft_bit_reversed: bool,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub e_conv: Option<f64>,
    #[arg(long)]
    pub n_moves: Option<usize>,
    #[arg(long)]
    pub n_samp: Option<usize>,
    #[arg(long)]
    pub t_tabu: Option<usize>,
    #[arg(long)]
    pub eps_qmt: Option<f64>,
    #[arg(long)]
    pub delta_abs: Option<f64>,
    #[arg(long)]
    pub delta_rel: Option<f64>,
    #[arg(long)]
    pub k_max_opt: Option<usize>,
    #[arg(long)]
    pub n_conv: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub lambda0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value = "full")]
    pub mode: String,
    #[arg(long)]
    pub qft_bit_reversed: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value = "sum")]
    pub hamiltonian: String,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[command(flatten)]
    pub problem: ProblemArgs,
}

#[derive(Debug, Args)]
pub struct ShowArgs {
    #[arg(long)]
    pub circuit: PathBuf,
}

/// Everything a synthesis run depends on. Serialised into `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub target: String,
    pub library: String,
    pub hamiltonian: String,
    pub mode: String,
    /// `None` picks the swap network for nnrot/swapnet and the empty circuit for allrot.
    pub initial: Option<String>,
    pub output_dir: PathBuf,
    pub fix_phase: bool,
    pub qft_bit_reversed: bool,
    #[serde(flatten)]
    pub search: SearchConfig,
    #[serde(flatten)]
    pub optimizer: OptimizerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            target: String::new(),
            library: "allrot".into(),
            hamiltonian: "sum".into(),
            mode: "full".into(),
            initial: None,
            output_dir: PathBuf::from("."),
            fix_phase: false,
            qft_bit_reversed: false,
            search: SearchConfig::default(),
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl RunConfig {
    /// File values (if any) overridden by explicit flags.
    pub fn from_args(args: &SynthArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => serde_json::from_str(&fs::read_to_string(path)?)
                .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:expr),* $(,)?) => {
                $(if let Some(v) = &args.$flag { $field = v.clone().into(); })*
            };
        }
        set!(target => cfg.target, library => cfg.library, hamiltonian => cfg.hamiltonian,
             mode => cfg.mode, output_dir => cfg.output_dir);
        if let Some(v) = &args.initial {
            cfg.initial = Some(v.clone());
        }
        if let Some(a) = &args.algorithm {
            cfg.search.algorithm = a.parse()?;
        }
        set!(seed => cfg.search.seed, jobs => cfg.search.jobs, k_max => cfg.search.k_max,
             e_conv => cfg.search.e_conv, n_moves => cfg.search.n_moves, n_samp => cfg.search.n_samp,
             t_tabu => cfg.search.t_tabu, eps_qmt => cfg.search.eps_qmt,
             delta_abs => cfg.optimizer.delta_abs, delta_rel => cfg.optimizer.delta_rel,
             k_max_opt => cfg.optimizer.k_max_opt, n_conv => cfg.optimizer.n_conv,
             kappa => cfg.optimizer.kappa, lambda0 => cfg.optimizer.lambda0);
        cfg.fix_phase |= args.fix_phase;
        cfg.qft_bit_reversed |= args.qft_bit_reversed;
        if cfg.target.is_empty() {
            return Err(Error::InvalidArgument("no target given".into()));
        }
        Ok(cfg)
    }
}

/// Target matrix with the probed space and Hamiltonian.
pub struct Resolved {
    pub target: CMatrix,
    pub basis: Option<SubspaceBasis>,
    pub problem: SynthesisProblem,
}

/// Reads a basis file: whitespace-separated labels, `#` comments.
pub fn parse_basis(text: &str, n_qubits: usize) -> Result<SubspaceBasis> {
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for tok in line.split('#').next().unwrap_or("").split_whitespace() {
            labels.push(tok.parse().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad label `{tok}`") })?);
        }
    }
    SubspaceBasis::new(labels, n_qubits)
}

pub fn resolve_problem(target: &str, mode: &str, hamiltonian: &str, bit_reversed: bool) -> Result<Resolved> {
    let spec: TargetSpec = target.parse()?;
    let u = spec.build(bit_reversed)?;
    let n = crate::linalg::qubits_of(&u)?;
    let basis = match mode {
        "full" => None,
        "subspace" => {
            let w = spec
                .subspace_weight()
                .ok_or_else(|| Error::InvalidArgument("subspace mode needs a weight or basis file".into()))?;
            Some(SubspaceBasis::hamming_weight(n, w)?)
        }
        m => match m.strip_prefix("subspace:") {
            Some(rest) => {
                if let Some(w) = rest.strip_prefix("weight=") {
                    let w = w.parse().map_err(|_| Error::InvalidArgument(format!("bad weight in `{m}`")))?;
                    Some(SubspaceBasis::hamming_weight(n, w)?)
                } else if let Some(path) = rest.strip_prefix("file=") {
                    Some(parse_basis(&fs::read_to_string(path)?, n)?)
                } else {
                    return Err(Error::InvalidArgument(format!("unknown mode `{m}`")));
                }
            }
            None => return Err(Error::InvalidArgument(format!("unknown mode `{m}`"))),
        },
    };
    let mode = basis.clone().map_or(Mode::FullSpace, Mode::Subspace);
    let problem = SynthesisProblem::new(u.clone(), mode, hamiltonian.parse()?)?;
    Ok(Resolved { target: u, basis, problem })
}

pub fn load_circuit(path: &Path) -> Result<(Circuit, Vec<f64>)> {
    parse_circuit(&fs::read_to_string(path)?)
}

fn initial_circuit(cfg: &RunConfig, n: usize) -> Result<(Circuit, Vec<f64>)> {
    let library: LibraryName = cfg.library.parse()?;
    let choice = cfg.initial.clone().unwrap_or_else(|| match library {
        LibraryName::Allrot => "empty".into(),
        _ => "swapnet".into(),
    });
    let (c, t) = match choice.as_str() {
        "empty" => (Circuit::default(), Vec::new()),
        "swapnet" => initial_swap_network(n)?,
        other => match other.strip_prefix("file:") {
            Some(path) => load_circuit(Path::new(path))?,
            None => return Err(Error::InvalidArgument(format!("unknown initial circuit `{other}`"))),
        },
    };
    c.validate(n)?;
    Ok((c, t))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub converged: bool,
    pub reason: StopReason,
    pub energy: f64,
    pub gate_count: usize,
    pub gate_histogram: BTreeMap<String, usize>,
    pub iterations: usize,
    pub optimizer_iterations: usize,
    pub wall_time_s: f64,
    pub distance: DistanceReport,
    pub distance_kind: String,
    pub global_phase: Option<f64>,
    pub final_prune: Option<PruneReport>,
    pub circuit_path: PathBuf,
}

pub fn gate_histogram(c: &Circuit) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for g in c.gates() {
        *h.entry(g.kind().name().to_string()).or_insert(0) += 1;
    }
    h
}

fn distance_for(res: &Resolved, c: &Circuit, t: &[f64]) -> Result<(DistanceReport, &'static str)> {
    let n = res.problem.n_qubits();
    let cu = circuit_unitary(c, t, n)?;
    Ok(match &res.basis {
        None => (operator_distance(&res.target, &cu)?, "full"),
        Some(b) => (subspace_operator_distance(&res.target, &cu, b)?, "subspace"),
    })
}

pub fn trace_csv(result: &SearchResult) -> String {
    let mut out = String::from("iter,energy,gate_count,accepted\n");
    for r in &result.trace {
        out.push_str(&format!("{},{:?},{},{}\n", r.iteration, r.energy, r.gate_count, u8::from(r.accepted)));
    }
    out
}

/// Runs a synthesis and writes `circuit.txt`, `trace.csv` and `report.json`.
pub fn run_synth(cfg: &RunConfig) -> Result<RunReport> {
    let started = Instant::now();
    let res = resolve_problem(&cfg.target, &cfg.mode, &cfg.hamiltonian, cfg.qft_bit_reversed)?;
    let n = res.problem.n_qubits();
    let lib = build_library(&cfg.library, n)?;
    let (c0, t0) = initial_circuit(cfg, n)?;
    let mut search_cfg = cfg.search.clone();
    if search_cfg.algorithm == Algorithm::Hill {
        search_cfg.n_moves = 1;
    }
    let result = search(&res.problem, &lib, &c0, &t0, &search_cfg, &cfg.optimizer)?;

    let (mut circuit, mut theta) = (result.circuit.clone(), result.theta.clone());
    let mut global_phase = None;
    if cfg.fix_phase {
        let cu = circuit_unitary(&circuit, &theta, n)?;
        // an undefined phase leaves the circuit as is
        if let Ok(phi) = global_phase_fix(&res.target, &cu) {
            circuit.push(Gate::GPhase);
            theta.push(phi);
            global_phase = Some(phi);
        }
    }
    let (distance, kind) = distance_for(&res, &circuit, &theta)?;

    fs::create_dir_all(&cfg.output_dir)?;
    let circuit_path = cfg.output_dir.join("circuit.txt");
    fs::write(&circuit_path, format_circuit(&circuit, &theta)?)?;
    fs::write(cfg.output_dir.join("trace.csv"), trace_csv(&result))?;
    let report = RunReport {
        config: cfg.clone(),
        converged: result.converged,
        reason: result.reason,
        energy: result.energy,
        gate_count: result.circuit.len(),
        gate_histogram: gate_histogram(&result.circuit),
        iterations: result.iterations,
        optimizer_iterations: result.optimizer_iterations,
        wall_time_s: started.elapsed().as_secs_f64(),
        distance,
        distance_kind: kind.into(),
        global_phase,
        final_prune: result.final_prune.clone(),
        circuit_path,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    fs::write(cfg.output_dir.join("report.json"), json + "\n")?;
    Ok(report)
}

pub fn run_eval(args: &EvalArgs) -> Result<f64> {
    let p = &args.problem;
    let res = resolve_problem(&p.target, &p.mode, &args.hamiltonian, p.qft_bit_reversed)?;
    let (c, t) = load_circuit(&args.circuit)?;
    res.problem.energy(&c, &t)
}

pub fn run_distance(args: &DistanceArgs) -> Result<DistanceReport> {
    let p = &args.problem;
    let res = resolve_problem(&p.target, &p.mode, "sum", p.qft_bit_reversed)?;
    let (c, t) = load_circuit(&args.circuit)?;
    Ok(distance_for(&res, &c, &t)?.0)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report types serialise")
}

/// Parses `argv` and runs the selected command.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Synth(args) => RunConfig::from_args(args).and_then(|cfg| run_synth(&cfg)).map(|r| {
            println!(
                "converged={} energy={:e} gates={} iterations={} distance={:e}",
                r.converged, r.energy, r.gate_count, r.iterations, r.distance.distance
            );
            r.converged
        }),
        Command::Eval(args) => run_eval(args).map(|e| {
            println!("{e:?}");
            true
        }),
        Command::Distance(args) => run_distance(args).map(|d| {
            println!("{}", to_json(&d));
            true
        }),
        Command::Show(args) => load_circuit(&args.circuit).map(|(c, _)| {
            println!("gates: {}", c.len());
            println!("qubits: {}", c.min_qubits());
            for (kind, count) in gate_histogram(&c) {
                println!("{kind}: {count}");
            }
            true
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"target": "qft:2", "n_samp": 3, "kappa": 1.2, "seed": 5}"#).unwrap();
        let cli = Cli::try_parse_from(["cforge", "synth", "--config", path.to_str().unwrap(), "--seed", "9"]).unwrap();
        let Command::Synth(args) = cli.command else { panic!() };
        let cfg = RunConfig::from_args(&args).unwrap();
        assert_eq!((cfg.target.as_str(), cfg.search.n_samp, cfg.search.seed), ("qft:2", 3, 9));
        assert_eq!(cfg.optimizer.kappa, 1.2);
        assert_eq!(cfg.search.n_moves, 30);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = RunConfig { target: "toffoli:3".into(), ..Default::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn modes() {
        assert!(resolve_problem("qft:2", "full", "sum", false).unwrap().basis.is_none());
        let r = resolve_problem("blockdiag:3:1", "subspace:weight=1", "proj", false).unwrap();
        assert_eq!(r.basis.unwrap().labels(), &[1, 2, 4]);
        assert!(resolve_problem("blockdiag:3:1", "subspace", "proj", false).is_err());
        assert!(resolve_problem("blockdiag:3:1:2", "subspace", "proj", false).is_ok());
        assert!(resolve_problem("qft:2", "half", "sum", false).is_err());
    }

    #[test]
    fn basis_file_parsing() {
        let b = parse_basis("# weight one\n1 2\n4\n", 3).unwrap();
        assert_eq!(b.labels(), &[1, 2, 4]);
        assert!(parse_basis("1 x", 3).is_err());
        assert!(parse_basis("1 1", 3).is_err());
    }
}
