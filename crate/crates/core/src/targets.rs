//! Target unitaries and initial circuits.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::circuits::{Circuit, Gate};
use crate::cost::{SubspaceBasis, UNITARITY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{ensure_unitary, qubits_of, CMatrix};
use crate::simcore::C64;

/// Discrete Fourier transform `U_jk = ω^{jk}/√2^n`. With `bit_reversed`, the
/// output qubit order is reversed (the textbook circuit without final swaps).
pub fn qft_unitary(n: usize, bit_reversed: bool) -> Result<CMatrix> {
    if n < 1 {
        return Err(Error::InvalidArgument("QFT needs n >= 1".into()));
    }
    let d = 1usize << n;
    let norm = 1.0 / (d as f64).sqrt();
    let u = CMatrix::from_fn(d, d, |j, k| {
        let row = if bit_reversed { reverse_bits(j, n) } else { j };
        // reduce the exponent first so large n keeps full precision
        let e = (row * k) % d;
        C64::from_polar(norm, 2.0 * PI * e as f64 / d as f64)
    });
    Ok(u)
}

fn reverse_bits(x: usize, n: usize) -> usize {
    (0..n).fold(0, |acc, b| acc | (((x >> b) & 1) << (n - 1 - b)))
}

/// Pauli X on qubit 0 controlled by qubits `1..n`.
pub fn toffoli_unitary(n: usize) -> Result<CMatrix> {
    if n < 2 {
        return Err(Error::InvalidArgument("Toffoli needs n >= 2".into()));
    }
    let d = 1usize << n;
    let mut u = CMatrix::identity(d, d);
    let (a, b) = (d - 2, d - 1);
    u[(a, a)] = C64::new(0.0, 0.0);
    u[(b, b)] = C64::new(0.0, 0.0);
    u[(a, b)] = C64::new(1.0, 0.0);
    u[(b, a)] = C64::new(1.0, 0.0);
    Ok(u)
}

/// Haar-distributed `dim x dim` unitary: QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_matrix(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..dim {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 { rkk / rkk.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, k)] *= phase;
        }
    }
    q
}

pub fn haar_random_unitary(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_matrix(1 << n, &mut rng)
}

/// Independent Haar blocks on each Hamming-weight class. Returns the unitary and
/// one basis per weight `0..=n`, labels ascending.
pub fn block_diag_hamming(n: usize, seed: u64) -> Result<(CMatrix, Vec<SubspaceBasis>)> {
    if n < 2 {
        return Err(Error::InvalidArgument("block-diagonal target needs n >= 2".into()));
    }
    let d = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = CMatrix::zeros(d, d);
    let mut bases = Vec::with_capacity(n + 1);
    for w in 0..=n as u32 {
        let basis = SubspaceBasis::hamming_weight(n, w)?;
        let block = haar_matrix(basis.len(), &mut rng);
        for (a, &la) in basis.labels().iter().enumerate() {
            for (b, &lb) in basis.labels().iter().enumerate() {
                u[(la, lb)] = block[(a, b)];
            }
        }
        bases.push(basis);
    }
    Ok((u, bases))
}

/// `n + 1` brickwork layers of parameterised swaps, even pairs then odd pairs,
/// all at angle 0.
pub fn initial_swap_network(n: usize) -> Result<(Circuit, Vec<f64>)> {
    if n < 2 {
        return Err(Error::InvalidArgument("swap network needs n >= 2".into()));
    }
    let mut circuit = Circuit::default();
    for _ in 0..=n {
        for start in [0, 1] {
            for a in (start..n - 1).step_by(2) {
                circuit.push(Gate::eswap(a, a + 1)?);
            }
        }
    }
    let theta = vec![0.0; circuit.len()];
    Ok((circuit, theta))
}

/// Text form: first line `n`, then `2^n` rows of `2^n` entries `re+imj`.
pub fn format_unitary(u: &CMatrix) -> Result<String> {
    let n = qubits_of(u)?;
    let mut out = format!("{n}\n");
    for i in 0..u.nrows() {
        let row: Vec<String> = (0..u.ncols()).map(|j| format_complex(u[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok(out)
}

fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{}{:?}j", z.re, sign, z.im.abs())
}

fn parse_complex(tok: &str) -> Option<C64> {
    let body = match tok.strip_suffix('j') {
        Some(b) => b,
        None => return tok.parse().ok().map(|re| C64::new(re, 0.0)),
    };
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => {
            let re = body[..i].parse().ok()?;
            let im: f64 = body[i..].trim_start_matches('+').parse().ok()?;
            Some(C64::new(re, im))
        }
        None => body.parse().ok().map(|im| C64::new(0.0, im)),
    }
}

/// Parses and validates a unitary file.
pub fn parse_unitary(text: &str) -> Result<CMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    });
    let (l0, first) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty unitary file".into() })?;
    let n: usize = first
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line: l0 + 1, msg: format!("expected qubit count, found `{first}`") })?;
    if n > 16 {
        return Err(Error::Parse { line: l0 + 1, msg: format!("{n} qubits is beyond this engine") });
    }
    let d = 1usize << n;
    let mut u = CMatrix::zeros(d, d);
    let mut rows = 0;
    for (lineno, line) in lines {
        if rows == d {
            return Err(Error::Parse { line: lineno + 1, msg: "more rows than 2^n".into() });
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != d {
            return Err(Error::Parse { line: lineno + 1, msg: format!("expected {d} entries, found {}", toks.len()) });
        }
        for (j, t) in toks.iter().enumerate() {
            u[(rows, j)] = parse_complex(t)
                .ok_or_else(|| Error::Parse { line: lineno + 1, msg: format!("bad complex entry `{t}`") })?;
        }
        rows += 1;
    }
    if rows != d {
        return Err(Error::Parse { line: text.lines().count(), msg: format!("expected {d} rows, found {rows}") });
    }
    ensure_unitary(&u, UNITARITY_TOL)?;
    Ok(u)
}

/// Target selector as written on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSpec {
    Qft(usize),
    Toffoli(usize),
    Haar { n: usize, seed: u64 },
    BlockDiagHamming { n: usize, seed: u64, weight: Option<u32> },
    File(PathBuf),
}

impl std::str::FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse target `{s}`"));
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(TargetSpec::File(PathBuf::from(path)));
        }
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<u64> { parts.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        match (parts[0], parts.len()) {
            ("qft", 2) => Ok(TargetSpec::Qft(num(1)? as usize)),
            ("toffoli", 2) => Ok(TargetSpec::Toffoli(num(1)? as usize)),
            ("haar", 3) => Ok(TargetSpec::Haar { n: num(1)? as usize, seed: num(2)? }),
            ("blockdiag", 3 | 4) => Ok(TargetSpec::BlockDiagHamming {
                n: num(1)? as usize,
                seed: num(2)?,
                weight: if parts.len() == 4 { Some(num(3)? as u32) } else { None },
            }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Qft(n) => write!(f, "qft:{n}"),
            TargetSpec::Toffoli(n) => write!(f, "toffoli:{n}"),
            TargetSpec::Haar { n, seed } => write!(f, "haar:{n}:{seed}"),
            TargetSpec::BlockDiagHamming { n, seed, weight: None } => write!(f, "blockdiag:{n}:{seed}"),
            TargetSpec::BlockDiagHamming { n, seed, weight: Some(w) } => write!(f, "blockdiag:{n}:{seed}:{w}"),
            TargetSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Largest main register the engine builds targets for.
pub const MAX_TARGET_QUBITS: usize = 10;

impl TargetSpec {
    /// Materialises the unitary, checking it before it is used anywhere.
    pub fn build(&self, qft_bit_reversed: bool) -> Result<CMatrix> {
        let n_check = |n: usize| {
            if n > MAX_TARGET_QUBITS {
                Err(Error::InvalidArgument(format!("{n} qubits exceeds the limit of {MAX_TARGET_QUBITS}")))
            } else {
                Ok(())
            }
        };
        let u = match self {
            TargetSpec::Qft(n) => {
                n_check(*n)?;
                qft_unitary(*n, qft_bit_reversed)?
            }
            TargetSpec::Toffoli(n) => {
                n_check(*n)?;
                toffoli_unitary(*n)?
            }
            TargetSpec::Haar { n, seed } => {
                n_check(*n)?;
                haar_random_unitary(*n, *seed)
            }
            TargetSpec::BlockDiagHamming { n, seed, .. } => {
                n_check(*n)?;
                block_diag_hamming(*n, *seed)?.0
            }
            TargetSpec::File(path) => parse_unitary(&std::fs::read_to_string(path)?)?,
        };
        ensure_unitary(&u, UNITARITY_TOL)?;
        Ok(u)
    }

    pub fn subspace_weight(&self) -> Option<u32> {
        match self {
            TargetSpec::BlockDiagHamming { weight, .. } => *weight,
            _ => None,
        }
    }
}
