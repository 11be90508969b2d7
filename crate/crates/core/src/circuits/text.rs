//! Line-oriented circuit files: `KIND target [control] theta`, one gate per
//! line in application order, `#` starts a comment.
//!
//! ```text
//! RX 0 0.25
//! CRX 1 0 1.5707963267948966
//! ESWAP 0 1 3.141592653589793
//! GPHASE -0.3
//! ```

use std::fmt::Write as _;

use super::{Axis, Circuit, Gate, GateKind};
use crate::error::{Error, Result};

pub fn format_circuit(circuit: &Circuit, theta: &[f64]) -> Result<String> {
    circuit.check_params(theta)?;
    let mut out = String::new();
    for (g, t) in circuit.gates().iter().zip(theta) {
        // `{:?}` on f64 is the shortest representation that round-trips
        writeln!(out, "{g} {t:?}").expect("writing to a String");
    }
    Ok(out)
}

pub fn parse_circuit(text: &str) -> Result<(Circuit, Vec<f64>)> {
    let mut gates = Vec::new();
    let mut theta = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: lineno + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let kind: GateKind = fields[0].parse().map_err(|e: Error| err(e.to_string()))?;
        let qubits_needed = match kind {
            GateKind::GPHASE => 0,
            GateKind::RX | GateKind::RY | GateKind::RZ => 1,
            _ => 2,
        };
        if fields.len() != qubits_needed + 2 {
            return Err(err(format!("{} expects {} qubit field(s) and an angle", kind.name(), qubits_needed)));
        }
        let qubit = |i: usize| -> Result<usize> {
            fields[1 + i].parse().map_err(|_| err(format!("bad qubit index `{}`", fields[1 + i])))
        };
        let angle: f64 = fields[qubits_needed + 1]
            .parse()
            .map_err(|_| err(format!("bad angle `{}`", fields[qubits_needed + 1])))?;
        let to_gate = |r: Result<Gate>| r.map_err(|e| err(e.to_string()));
        let gate = match kind {
            GateKind::RX => Gate::rot(Axis::X, qubit(0)?),
            GateKind::RY => Gate::rot(Axis::Y, qubit(0)?),
            GateKind::RZ => Gate::rot(Axis::Z, qubit(0)?),
            GateKind::CRX => to_gate(Gate::crot(Axis::X, qubit(1)?, qubit(0)?))?,
            GateKind::CRY => to_gate(Gate::crot(Axis::Y, qubit(1)?, qubit(0)?))?,
            GateKind::CRZ => to_gate(Gate::crot(Axis::Z, qubit(1)?, qubit(0)?))?,
            GateKind::ESWAP => to_gate(Gate::eswap(qubit(0)?, qubit(1)?))?,
            GateKind::GPHASE => Gate::GPhase,
        };
        gates.push(gate);
        theta.push(angle);
    }
    Ok((Circuit::new(gates), theta))
}
