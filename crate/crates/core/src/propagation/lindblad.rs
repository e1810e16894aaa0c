//! Lindblad generator and its adjoint, in the `H0` eigenbasis.

use crate::error::{Error, Result};
use crate::linalg::{anticommutator, c, commutator, CMatrix, I};
use crate::spin::SpinSystem;

/// Jump operators `L_α` (eigenbasis) with rates `γ_α` (1/μs).
#[derive(Clone, Debug, Default)]
pub struct LindbladModel {
    jumps: Vec<(CMatrix, f64)>,
}

impl LindbladModel {
    pub fn new(jumps: Vec<(CMatrix, f64)>) -> Result<Self> {
        for (l, rate) in &jumps {
            if !(*rate >= 0.0) || !rate.is_finite() {
                return Err(Error::InvalidParameter(format!("Lindblad rate must be ≥ 0, got {rate}")));
            }
            if !l.is_square() {
                return Err(Error::InvalidParameter("jump operators must be square".into()));
            }
        }
        Ok(Self { jumps })
    }

    /// No dissipation.
    pub fn closed() -> Self {
        Self::default()
    }

    /// `d` projectors `|n⟩⟨n|` onto the energy levels, each at rate `1/T₂`.
    /// `t2 = ∞` gives zero rates.
    pub fn dephasing(d: usize, t2: f64) -> Result<Self> {
        if !(t2 > 0.0) {
            return Err(Error::InvalidParameter(format!("T2 must be positive, got {t2}")));
        }
        let rate = 1.0 / t2;
        let jumps = (0..d)
            .map(|n| {
                let mut p = CMatrix::zeros(d, d);
                p[(n, n)] = c(1.0, 0.0);
                (p, rate)
            })
            .collect();
        Self::new(jumps)
    }

    pub fn jumps(&self) -> &[(CMatrix, f64)] {
        &self.jumps
    }

    pub fn is_closed(&self) -> bool {
        self.jumps.iter().all(|(_, r)| *r == 0.0)
    }

    /// Dissipator `D(ρ) = Σ γ (L ρ L† - ½{L†L, ρ})`.
    pub fn dissipator(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
        for (l, rate) in &self.jumps {
            if *rate == 0.0 {
                continue;
            }
            let ld = l.adjoint();
            let ldl = &ld * l;
            out += (l * rho * &ld - anticommutator(&ldl, rho).scale(0.5)).scale(*rate);
        }
        out
    }

    /// Adjoint dissipator `D†(A) = Σ γ (L† A L - ½{L†L, A})`.
    pub fn dissipator_adjoint(&self, a: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(a.nrows(), a.ncols());
        for (l, rate) in &self.jumps {
            if *rate == 0.0 {
                continue;
            }
            let ld = l.adjoint();
            let ldl = &ld * l;
            out += (&ld * a * l - anticommutator(&ldl, a).scale(0.5)).scale(*rate);
        }
        out
    }
}

/// `H(t) = H0 + f V` in the eigenbasis.
pub fn hamiltonian(sys: &SpinSystem, f: f64) -> CMatrix {
    sys.h0_eigen() + sys.drive_eigen.scale(f)
}

/// `dρ/dt = -i[H0 + f V, ρ] + D(ρ)`.
pub fn lindbladian_apply(sys: &SpinSystem, model: &LindbladModel, f: f64, rho: &CMatrix) -> CMatrix {
    commutator(&hamiltonian(sys, f), rho) * (-I) + model.dissipator(rho)
}

/// `L†(A) = +i[H0 + f V, A] + D†(A)`, adjoint under `Tr(A† B)`.
pub fn lindbladian_adjoint_apply(sys: &SpinSystem, model: &LindbladModel, f: f64, a: &CMatrix) -> CMatrix {
    commutator(&hamiltonian(sys, f), a) * I + model.dissipator_adjoint(a)
}

/// Dense `d² × d²` matrix of `ρ ↦ L(ρ)` acting on row-major `vec(ρ)`.
pub fn superoperator(sys: &SpinSystem, model: &LindbladModel, f: f64) -> CMatrix {
    let d = sys.dim();
    let mut s = CMatrix::zeros(d * d, d * d);
    let mut basis = CMatrix::zeros(d, d);
    for n in 0..d {
        for m in 0..d {
            basis[(n, m)] = c(1.0, 0.0);
            let col = lindbladian_apply(sys, model, f, &basis);
            basis[(n, m)] = c(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    s[(i * d + j, n * d + m)] = col[(i, j)];
                }
            }
        }
    }
    s
}
