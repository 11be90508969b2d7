//! Gates, gate libraries, circuits and structure edits.

mod gate;
mod text;

use std::fmt;

use indexmap::IndexSet;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gate::{Axis, Gate, GateKind};
pub use text::{format_circuit, parse_circuit};

/// Ordered gate sequence. Gate 0 is applied first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Circuit {
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(gates: Vec<Gate>) -> Self {
        Self { gates }
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn insert(&mut self, index: usize, gate: Gate) {
        self.gates.insert(index, gate);
    }

    pub fn remove(&mut self, index: usize) -> Gate {
        self.gates.remove(index)
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.gates.len() {
            return Err(Error::LengthMismatch { params: theta.len(), gates: self.gates.len() });
        }
        Ok(())
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        self.gates.iter().try_for_each(|g| g.validate(n_qubits))
    }

    /// Smallest register the circuit fits on.
    pub fn min_qubits(&self) -> usize {
        self.gates.iter().filter_map(Gate::max_qubit).max().map_or(0, |q| q + 1)
    }
}

impl FromIterator<Gate> for Circuit {
    fn from_iter<T: IntoIterator<Item = Gate>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LibraryName {
    Allrot,
    Nnrot,
    Swapnet,
}

impl LibraryName {
    pub fn as_str(self) -> &'static str {
        match self {
            LibraryName::Allrot => "allrot",
            LibraryName::Nnrot => "nnrot",
            LibraryName::Swapnet => "swapnet",
        }
    }
}

impl fmt::Display for LibraryName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LibraryName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "allrot" => Ok(LibraryName::Allrot),
            "nnrot" => Ok(LibraryName::Nnrot),
            "swapnet" => Ok(LibraryName::Swapnet),
            other => Err(Error::UnknownLibrary(other.to_string())),
        }
    }
}

/// Finite, ordered set of gates the structure search may insert.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateLibrary {
    name: String,
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl GateLibrary {
    pub fn from_gates(name: impl Into<String>, n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut seen = IndexSet::new();
        for g in gates {
            g.validate(n_qubits)?;
            if matches!(g, Gate::GPhase) {
                return Err(Error::InvalidArgument("GPHASE cannot be a library gate".into()));
            }
            if !seen.insert(g) {
                return Err(Error::InvalidArgument(format!("duplicate library gate {g}")));
            }
        }
        Ok(Self { name: name.into(), n_qubits, gates: seen.into_iter().collect() })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

/// Builds one of the named libraries: all single-qubit rotations plus
/// controlled rotations on every ordered pair (`allrot`), on neighbouring
/// pairs of an open chain (`nnrot`), or parameterised swaps between
/// neighbours (`swapnet`).
pub fn build_library(name: &str, n_qubits: usize) -> Result<GateLibrary> {
    let which: LibraryName = name.parse()?;
    if n_qubits < 1 {
        return Err(Error::InvalidArgument("library needs at least one qubit".into()));
    }
    let mut gates = Vec::new();
    for k in 0..n_qubits {
        for axis in Axis::ALL {
            gates.push(Gate::rot(axis, k));
        }
    }
    match which {
        LibraryName::Allrot | LibraryName::Nnrot => {
            for target in 0..n_qubits {
                for control in 0..n_qubits {
                    let neighbours = target.abs_diff(control) == 1;
                    if control == target || (which == LibraryName::Nnrot && !neighbours) {
                        continue;
                    }
                    for axis in Axis::ALL {
                        gates.push(Gate::crot(axis, control, target)?);
                    }
                }
            }
        }
        LibraryName::Swapnet => {
            for k in 0..n_qubits.saturating_sub(1) {
                gates.push(Gate::eswap(k, k + 1)?);
            }
        }
    }
    GateLibrary::from_gates(which.as_str(), n_qubits, gates)
}

/// Insertion of `gate` before position `index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Move {
    pub gate: Gate,
    pub index: usize,
}

impl Move {
    pub fn new(gate: Gate, index: usize) -> Self {
        Self { gate, index }
    }
}

/// Moves that do not place a gate next to an identical gate on any qubit
/// timeline it shares. Order is deterministic: qubit, then position, then
/// library order; duplicates keep their first occurrence.
pub fn generate_moves(circuit: &Circuit, lib: &GateLibrary) -> Vec<Move> {
    let mut moves: IndexSet<Move> = IndexSet::new();
    if circuit.is_empty() {
        moves.extend(lib.gates().iter().map(|&g| Move::new(g, 0)));
        return moves.into_iter().collect();
    }
    for k in 0..lib.n_qubits() {
        let mut left: Option<&Gate> = None;
        let mut last = None;
        for (p, g) in circuit.gates().iter().enumerate().filter(|(_, g)| g.acts_on(k)) {
            for cand in lib.gates() {
                if Some(cand) != left && cand != g {
                    moves.insert(Move::new(*cand, p));
                }
            }
            left = Some(g);
            last = Some(p);
        }
        if let Some(p) = last {
            for cand in lib.gates() {
                if Some(cand) != left {
                    moves.insert(Move::new(*cand, p + 1));
                }
            }
        }
    }
    moves.into_iter().filter(|m| !merges_with_neighbour(circuit, m)).collect()
}

/// Whether the inserted gate would sit next to an identical gate on one of
/// its own qubit timelines.
fn merges_with_neighbour(circuit: &Circuit, mv: &Move) -> bool {
    let (before, after) = circuit.gates().split_at(mv.index);
    let top = mv.gate.max_qubit().unwrap_or(0);
    (0..=top).filter(|&q| mv.gate.acts_on(q)).any(|q| {
        before.iter().rev().find(|g| g.acts_on(q)) == Some(&mv.gate)
            || after.iter().find(|g| g.acts_on(q)) == Some(&mv.gate)
    })
}

/// Inserts the move's gate with parameter 0.
pub fn apply_move(circuit: &Circuit, theta: &[f64], mv: Move) -> Result<(Circuit, Vec<f64>)> {
    circuit.check_params(theta)?;
    if mv.index > circuit.len() {
        return Err(Error::IndexOutOfRange { index: mv.index, len: circuit.len() });
    }
    let mut c = circuit.clone();
    let mut t = theta.to_vec();
    c.insert(mv.index, mv.gate);
    t.insert(mv.index, 0.0);
    Ok((c, t))
}

/// Picks single-qubit and two-qubit moves with equal probability, then a
/// uniform move within the chosen group.
pub fn draw_random_move<R: Rng + ?Sized>(moves: &[Move], rng: &mut R) -> Result<Move> {
    if moves.is_empty() {
        return Err(Error::EmptyMoveSet);
    }
    let (pairs, singles): (Vec<&Move>, Vec<&Move>) = moves.iter().partition(|m| m.gate.is_two_qubit());
    let group = match (singles.is_empty(), pairs.is_empty()) {
        (false, true) => &singles,
        (true, false) => &pairs,
        _ => {
            if rng.random_bool(0.5) {
                &singles
            } else {
                &pairs
            }
        }
    };
    Ok(*group[rng.random_range(0..group.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn library_sizes() {
        assert_eq!(build_library("allrot", 3).unwrap().len(), 27);
        assert_eq!(build_library("nnrot", 3).unwrap().len(), 21);
        assert_eq!(build_library("swapnet", 3).unwrap().len(), 11);
        assert!(matches!(build_library("ring", 3), Err(Error::UnknownLibrary(_))));
        assert_eq!(build_library("allrot", 4).unwrap(), build_library("allrot", 4).unwrap());
    }

    #[test]
    fn nnrot_controls_are_neighbours() {
        let lib = build_library("nnrot", 4).unwrap();
        for g in lib.gates() {
            if let Gate::CRot { control, target, .. } = g {
                assert_eq!(control.abs_diff(*target), 1);
            }
        }
        // both directions present
        assert!(lib.gates().contains(&Gate::crot(Axis::X, 0, 1).unwrap()));
        assert!(lib.gates().contains(&Gate::crot(Axis::X, 1, 0).unwrap()));
    }

    fn lib_xy() -> GateLibrary {
        GateLibrary::from_gates("xy", 1, vec![Gate::rx(0), Gate::ry(0)]).unwrap()
    }

    #[test]
    fn moves_on_empty_circuit() {
        let moves = generate_moves(&Circuit::default(), &lib_xy());
        assert_eq!(moves, vec![Move::new(Gate::rx(0), 0), Move::new(Gate::ry(0), 0)]);
    }

    #[test]
    fn moves_exclude_mergeable_neighbours() {
        let moves = generate_moves(&Circuit::new(vec![Gate::rx(0)]), &lib_xy());
        assert_eq!(moves, vec![Move::new(Gate::ry(0), 0), Move::new(Gate::ry(0), 1)]);
    }

    #[test]
    fn moves_never_duplicate_neighbour_on_timeline() {
        let lib = build_library("allrot", 2).unwrap();
        let c = Circuit::new(vec![Gate::rx(0), Gate::rx(1)]);
        let moves = generate_moves(&c, &lib);
        for m in &moves {
            if m.gate == Gate::rx(0) {
                // qubit-0 timeline holds gate 0 only: positions 0 and 1 are adjacent to it
                assert!(m.index != 0 && m.index != 1, "{m:?}");
            }
        }
        let unique: std::collections::HashSet<_> = moves.iter().collect();
        assert_eq!(unique.len(), moves.len());
    }

    #[test]
    fn apply_move_inserts_zero() {
        let g = Gate::ry(0);
        let (c, t) = apply_move(&Circuit::default(), &[], Move::new(g, 0)).unwrap();
        assert_eq!((c.gates(), t.as_slice()), (&[g][..], &[0.0][..]));

        let base = Circuit::new(vec![Gate::rx(0), Gate::rz(0)]);
        let (c, t) = apply_move(&base, &[0.1, 0.2], Move::new(g, 1)).unwrap();
        assert_eq!(c.gates(), &[Gate::rx(0), g, Gate::rz(0)]);
        assert_eq!(t, vec![0.1, 0.0, 0.2]);

        let (c, _) = apply_move(&base, &[0.1, 0.2], Move::new(g, 2)).unwrap();
        assert_eq!(c.gates()[2], g);
        assert!(matches!(
            apply_move(&base, &[0.1, 0.2], Move::new(g, 3)),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn draw_balances_groups() {
        let mut moves = vec![Move::new(Gate::rx(0), 0)];
        for i in 0..99 {
            moves.push(Move::new(Gate::crot(Axis::Z, 0, 1).unwrap(), i));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hits = (0..10_000)
            .filter(|_| !draw_random_move(&moves, &mut rng).unwrap().gate.is_two_qubit())
            .count();
        let frac = hits as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn draw_degenerate_and_empty() {
        let moves = vec![Move::new(Gate::rx(0), 0), Move::new(Gate::ry(0), 0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hits = (0..4000).filter(|_| draw_random_move(&moves, &mut rng).unwrap() == moves[0]).count();
        assert!((hits as f64 / 4000.0 - 0.5).abs() < 0.03);
        assert!(matches!(draw_random_move(&[], &mut rng), Err(Error::EmptyMoveSet)));

        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            assert_eq!(draw_random_move(&moves, &mut a).unwrap(), draw_random_move(&moves, &mut b).unwrap());
        }
    }
}
