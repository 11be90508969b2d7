use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// Gate family without qubit binding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    CRX,
    CRY,
    CRZ,
    ESWAP,
    GPHASE,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::CRX => "CRX",
            GateKind::CRY => "CRY",
            GateKind::CRZ => "CRZ",
            GateKind::ESWAP => "ESWAP",
            GateKind::GPHASE => "GPHASE",
        }
    }
}

impl std::str::FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "RX" => GateKind::RX,
            "RY" => GateKind::RY,
            "RZ" => GateKind::RZ,
            "CRX" => GateKind::CRX,
            "CRY" => GateKind::CRY,
            "CRZ" => GateKind::CRZ,
            "ESWAP" => GateKind::ESWAP,
            "GPHASE" => GateKind::GPHASE,
            other => return Err(Error::InvalidArgument(format!("unknown gate kind `{other}`"))),
        })
    }
}

/// A parameterised primitive bound to specific qubits.
///
/// Every variant is `exp(-i θ/2 · generator)` for some Hermitian generator, except
/// `ESwap` which follows `exp(+i θ/2 · SWAP)` and `GPhase` which is `e^{iθ}`.
/// Equality is structural: two instances are equal iff kind and qubits match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gate {
    Rot { axis: Axis, target: usize },
    CRot { axis: Axis, control: usize, target: usize },
    /// Parameterised swap; qubits stored with `a < b`.
    ESwap { a: usize, b: usize },
    GPhase,
}

impl Serialize for Gate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Gate {
    pub fn rot(axis: Axis, target: usize) -> Gate {
        Gate::Rot { axis, target }
    }

    pub fn rx(target: usize) -> Gate {
        Gate::rot(Axis::X, target)
    }

    pub fn ry(target: usize) -> Gate {
        Gate::rot(Axis::Y, target)
    }

    pub fn rz(target: usize) -> Gate {
        Gate::rot(Axis::Z, target)
    }

    pub fn crot(axis: Axis, control: usize, target: usize) -> Result<Gate> {
        if control == target {
            return Err(Error::ControlIsTarget(control));
        }
        Ok(Gate::CRot { axis, control, target })
    }

    pub fn eswap(i: usize, j: usize) -> Result<Gate> {
        if i == j {
            return Err(Error::InvalidArgument(format!("ESWAP needs two distinct qubits, got {i} twice")));
        }
        Ok(Gate::ESwap { a: i.min(j), b: i.max(j) })
    }

    pub fn kind(&self) -> GateKind {
        match *self {
            Gate::Rot { axis: Axis::X, .. } => GateKind::RX,
            Gate::Rot { axis: Axis::Y, .. } => GateKind::RY,
            Gate::Rot { axis: Axis::Z, .. } => GateKind::RZ,
            Gate::CRot { axis: Axis::X, .. } => GateKind::CRX,
            Gate::CRot { axis: Axis::Y, .. } => GateKind::CRY,
            Gate::CRot { axis: Axis::Z, .. } => GateKind::CRZ,
            Gate::ESwap { .. } => GateKind::ESWAP,
            Gate::GPhase => GateKind::GPHASE,
        }
    }

    pub fn acts_on(&self, qubit: usize) -> bool {
        match *self {
            Gate::Rot { target, .. } => target == qubit,
            Gate::CRot { control, target, .. } => control == qubit || target == qubit,
            Gate::ESwap { a, b } => a == qubit || b == qubit,
            Gate::GPhase => false,
        }
    }

    /// Highest qubit index touched, if any.
    pub fn max_qubit(&self) -> Option<usize> {
        match *self {
            Gate::Rot { target, .. } => Some(target),
            Gate::CRot { control, target, .. } => Some(control.max(target)),
            Gate::ESwap { b, .. } => Some(b),
            Gate::GPhase => None,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::CRot { .. } | Gate::ESwap { .. })
    }

    /// Parameter period after which the gate returns to the identity up to a global phase.
    pub fn identity_period(&self) -> f64 {
        use std::f64::consts::PI;
        match self {
            Gate::CRot { .. } => 4.0 * PI,
            _ => 2.0 * PI,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if let Gate::CRot { control, target, .. } = *self {
            if control == target {
                return Err(Error::ControlIsTarget(control));
            }
        }
        match self.max_qubit() {
            Some(q) if q >= n_qubits => Err(Error::QubitOutOfRange { qubit: q, n_qubits }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Gate {
    /// `KIND target [control]`, the qubit part of a circuit-file line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Rot { axis, target } => write!(f, "R{} {}", axis.letter(), target),
            Gate::CRot { axis, control, target } => write!(f, "CR{} {} {}", axis.letter(), target, control),
            Gate::ESwap { a, b } => write!(f, "ESWAP {a} {b}"),
            Gate::GPhase => write!(f, "GPHASE"),
        }
    }
}
