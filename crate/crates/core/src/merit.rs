//! Target-state sets and the multi-target fidelity functional.
//!
//! Evolved states are compared with their targets in the interaction frame
//! at `t = T`. The reported infidelity is `1 - F̄` and excludes the penalty.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{c, trace_product, unitarity_defect, CMatrix};
use crate::propagation::{
    propagate_final, propagate_unitary, to_interaction_frame, unitary_to_interaction_frame, LindbladModel,
    PropagatorConfig,
};
use crate::pulse::Waveform;
use crate::spin::SpinSystem;

pub const UNITARITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct StateSet {
    pub initial: Vec<CMatrix>,
    pub targets: Vec<CMatrix>,
    /// `Σ_k Tr[(ρ_k⁰)²]`.
    pub normalization: f64,
}

impl StateSet {
    /// Targets `U ρ_k⁰ U†` for the given initial states.
    pub fn new(initial: Vec<CMatrix>, u_target: &CMatrix) -> Result<Self> {
        let defect = unitarity_defect(u_target);
        if defect > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary(defect));
        }
        let targets = initial.iter().map(|r| u_target * r * u_target.adjoint()).collect();
        let normalization = initial.iter().map(|r| trace_product(r, r).re).sum();
        Ok(Self { initial, targets, normalization })
    }

    pub fn len(&self) -> usize {
        self.initial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.initial.first().map(|r| r.nrows()).unwrap_or(0)
    }

    pub fn retarget(&mut self, u_target: &CMatrix) -> Result<()> {
        *self = Self::new(std::mem::take(&mut self.initial), u_target)?;
        Ok(())
    }
}

/// `|k⟩⟨k|` for every level plus the uniform superposition `(ρ_d)_ij = 1/d`.
pub fn goerz_state_set(d: usize, u_target: &CMatrix) -> Result<StateSet> {
    let mut initial = Vec::with_capacity(d + 1);
    for k in 0..d {
        let mut r = CMatrix::zeros(d, d);
        r[(k, k)] = c(1.0, 0.0);
        initial.push(r);
    }
    initial.push(CMatrix::from_element(d, d, c(1.0 / d as f64, 0.0)));
    StateSet::new(initial, u_target)
}

/// `Tr[ρ ρ_target]`.
pub fn state_fidelity(rho: &CMatrix, target: &CMatrix) -> f64 {
    trace_product(rho, target).re
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeritValue {
    /// `G = F̄ + P`.
    pub g: f64,
    pub fidelity: f64,
    pub penalty: f64,
}

impl MeritValue {
    pub fn new(fidelity: f64, penalty: f64) -> Self {
        Self { g: fidelity + penalty, fidelity, penalty }
    }

    pub fn infidelity(&self) -> f64 {
        1.0 - self.fidelity
    }
}

/// Combines interaction-frame final states with the penalty value.
pub fn multitarget_merit(set: &StateSet, finals: &[CMatrix], penalty: f64) -> Result<MeritValue> {
    if finals.len() != set.len() {
        return Err(Error::CardinalityMismatch { expected: set.len(), got: finals.len() });
    }
    let sum: f64 = finals.iter().zip(&set.targets).map(|(r, t)| state_fidelity(r, t)).sum();
    Ok(MeritValue::new(sum / set.normalization, penalty))
}

pub fn infidelity(g: f64) -> f64 {
    1.0 - g
}

/// Average fidelity `F̄` of a waveform under `model`, by density-matrix propagation.
pub fn evaluate_fidelity(
    sys: &SpinSystem,
    model: &LindbladModel,
    pulse: &dyn Waveform,
    set: &StateSet,
    cfg: &PropagatorConfig,
) -> Result<f64> {
    let t = pulse.duration();
    let finals = set
        .initial
        .par_iter()
        .map(|r| propagate_final(sys, model, pulse, r, cfg).map(|x| to_interaction_frame(sys, &x, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(multitarget_merit(set, &finals, 0.0)?.fidelity)
}

/// `F̄` for closed dynamics computed from the propagator `U(T)` instead of
/// propagating each density matrix.
pub fn unitary_fidelity(sys: &SpinSystem, pulse: &dyn Waveform, set: &StateSet, cfg: &PropagatorConfig) -> Result<f64> {
    let t = pulse.duration();
    let u = unitary_to_interaction_frame(sys, &propagate_unitary(sys, pulse, cfg)?, t);
    let finals: Vec<CMatrix> = set.initial.iter().map(|r| &u * r * u.adjoint()).collect();
    Ok(multitarget_merit(set, &finals, 0.0)?.fidelity)
}
