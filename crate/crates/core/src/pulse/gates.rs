//! Target gates and their decompositions into drivable two-level rotations.
//!
//! Sequences are listed in application order: the first rotation acts first.
//! Levels encode three qubits as `|n⟩ ≡ |b₁b₂b₃⟩` with `n` in binary.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::mono::{rotation_product, RotationSpec};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    U1,
    U4,
    Toffoli,
}

impl Gate {
    pub const ALL: [Gate; 3] = [Gate::U1, Gate::U4, Gate::Toffoli];

    pub fn name(&self) -> &'static str {
        match self {
            Gate::U1 => "U1",
            Gate::U4 => "U4",
            Gate::Toffoli => "Toffoli",
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "u1" => Ok(Gate::U1),
            "u4" => Ok(Gate::U4),
            "toffoli" | "ccx" => Ok(Gate::Toffoli),
            _ => Err(Error::UnknownGate(s.to_string())),
        }
    }
}

/// `R_Z(θ) = R_X(π/2) R_Y(θ) R_X(-π/2)` on levels `(j, k)`, in application order.
pub fn decompose_rz(j: usize, k: usize, theta: f64) -> [RotationSpec; 3] {
    [
        RotationSpec::x(j, k, -PI / 2.0),
        RotationSpec::y(j, k, theta),
        RotationSpec::x(j, k, PI / 2.0),
    ]
}

/// π rotation on `(6, 7)` followed by phase gates on each adjacent pair,
/// with every `R_Z` expanded into three equatorial rotations (22 in total).
pub fn toffoli_sequence() -> Vec<RotationSpec> {
    const PHASES: [(usize, usize, f64); 7] = [
        (6, 7, 0.75),
        (5, 6, 1.5),
        (4, 5, 1.25),
        (3, 4, 1.0),
        (2, 3, 0.75),
        (1, 2, 0.5),
        (0, 1, 0.25),
    ];
    let mut seq = vec![RotationSpec::x(6, 7, PI)];
    for (j, k, a) in PHASES {
        seq.extend(decompose_rz(j, k, a * PI));
    }
    seq
}

pub fn gate_sequence(gate: Gate) -> Vec<RotationSpec> {
    match gate {
        Gate::U1 => decompose_rz(6, 7, 0.75 * PI).to_vec(),
        Gate::U4 => {
            let mut seq = vec![RotationSpec::x(6, 7, PI)];
            seq.extend(decompose_rz(6, 7, 0.75 * PI));
            seq
        }
        Gate::Toffoli => toffoli_sequence(),
    }
}

/// The ideal `d × d` gate. `U1` and `U4` are the exact rotation products; the
/// Toffoli is the permutation swapping `|110⟩` and `|111⟩`, which equals the
/// rotation product times `e^{iπ/8}`.
pub fn target_unitary(gate: Gate, d: usize) -> Result<CMatrix> {
    if d < 8 {
        return Err(Error::LevelOutOfRange { index: 7, dim: d });
    }
    Ok(match gate {
        Gate::U1 | Gate::U4 => rotation_product(&gate_sequence(gate), d),
        Gate::Toffoli => {
            let mut u = CMatrix::identity(d, d);
            u[(6, 6)] = c(0.0, 0.0);
            u[(7, 7)] = c(0.0, 0.0);
            u[(6, 7)] = c(1.0, 0.0);
            u[(7, 6)] = c(1.0, 0.0);
            u
        }
    })
}
