//! Merit function of a Fourier-parametrized pulse and its gradient.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{c, Planar};
use crate::merit::{MeritValue, StateSet};
use crate::propagation::{from_interaction_frame, time_grid, KickTable, LindbladModel, PropagatorConfig, SplitPlan};
use crate::pulse::fourier::fill_basis;
use crate::pulse::{penalty_samples, FourierPulse, Waveform};
use crate::spin::SpinSystem;

/// Everything needed to evaluate `G(u)` repeatedly: the propagation plan,
/// the basis functions at every kick time, the initial states and the
/// lab-frame costate terminal values `λ_k(T) = ½ e^{-iH0T} ρ_k^target e^{iH0T}`.
pub struct ControlProblem {
    template: FourierPulse,
    plan: SplitPlan,
    basis: Vec<f64>,
    initial: Vec<Planar>,
    terminal: Vec<Planar>,
    normalization: f64,
    penalty_samples: usize,
    max_stored: usize,
}

impl ControlProblem {
    pub fn new(
        sys: &SpinSystem,
        model: &LindbladModel,
        template: FourierPulse,
        set: &StateSet,
        cfg: &PropagatorConfig,
    ) -> Result<Self> {
        if !cfg.scheme.is_splitting() {
            return Err(Error::InvalidParameter(format!(
                "gradients need a splitting scheme, got {:?}",
                cfg.scheme
            )));
        }
        if set.dim() != sys.dim() {
            return Err(Error::CardinalityMismatch { expected: sys.dim(), got: set.dim() });
        }
        let grid = time_grid(sys, &template, cfg)?;
        let plan = SplitPlan::new(sys, model, &grid, cfg.scheme)?;
        let np = template.n_params();
        let mut basis = vec![0.0; plan.n_kicks() * np];
        for (row, &t) in basis.chunks_mut(np.max(1)).zip(plan.kick_times()) {
            fill_basis(template.harmonics(), template.duration(), t, row);
        }
        let t = template.duration();
        let terminal = set
            .targets
            .iter()
            .map(|tgt| Planar::from_matrix(&(from_interaction_frame(sys, tgt, t) * c(0.5, 0.0))))
            .collect();
        Ok(Self {
            penalty_samples: penalty_samples(template.harmonics()),
            template,
            plan,
            basis,
            initial: set.initial.iter().map(Planar::from_matrix).collect(),
            terminal,
            normalization: set.normalization,
            max_stored: cfg.max_stored_states,
        })
    }

    pub fn n_params(&self) -> usize {
        self.template.n_params()
    }

    pub fn template(&self) -> &FourierPulse {
        &self.template
    }

    pub fn n_kicks(&self) -> usize {
        self.plan.n_kicks()
    }

    pub fn pulse(&self, u: &[f64]) -> Result<FourierPulse> {
        self.template.clone().with_params(u.to_vec())
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n_params() {
            return Err(Error::CardinalityMismatch { expected: self.n_params(), got: u.len() });
        }
        Ok(())
    }

    fn ftilde(&self, u: &[f64]) -> Vec<f64> {
        let np = self.n_params();
        (0..self.plan.n_kicks())
            .map(|j| self.basis[j * np..(j + 1) * np].iter().zip(u).map(|(b, x)| b * x).sum())
            .collect()
    }

    fn kicks(&self, ftilde: &[f64]) -> Result<KickTable> {
        let clamp = self.template.clamp();
        let amps: Vec<f64> = ftilde.iter().map(|&x| clamp.value(x)).collect();
        self.plan.kicks(&amps)
    }

    /// `G(u)` without the gradient.
    pub fn merit(&self, u: &[f64]) -> Result<MeritValue> {
        self.check(u)?;
        let table = self.kicks(&self.ftilde(u))?;
        let overlaps: Vec<f64> = self
            .initial
            .par_iter()
            .zip(&self.terminal)
            .map(|(x0, lam)| 2.0 * lam.inner(&self.plan.forward(&table, x0)).re)
            .collect();
        let fidelity = overlaps.iter().sum::<f64>() / self.normalization;
        let penalty = self.pulse(u)?.penalty(self.penalty_samples);
        Ok(MeritValue::new(fidelity, penalty))
    }

    /// `G(u)` and `∇G(u)`, exact for the discretized dynamics.
    pub fn merit_and_gradient(&self, u: &[f64]) -> Result<(MeritValue, Vec<f64>)> {
        self.check(u)?;
        let ftilde = self.ftilde(u);
        let table = self.kicks(&ftilde)?;
        let per_state: Vec<(f64, Vec<f64>)> = self
            .initial
            .par_iter()
            .zip(&self.terminal)
            .map(|(x0, lam)| {
                let (rho_t, sens) = self.plan.sensitivity(&table, x0, lam, self.max_stored);
                (2.0 * lam.inner(&rho_t).re, sens)
            })
            .collect();

        // fixed summation order over states
        let n = self.plan.n_kicks();
        let mut dg = vec![0.0; n];
        let mut fidelity = 0.0;
        for (f, sens) in &per_state {
            fidelity += f;
            for (acc, s) in dg.iter_mut().zip(sens) {
                *acc += 2.0 * s;
            }
        }
        fidelity /= self.normalization;

        let np = self.n_params();
        let clamp = self.template.clamp();
        let mut grad = vec![0.0; np];
        for j in 0..n {
            let w = dg[j] * clamp.derivative(ftilde[j]) / self.normalization;
            if w != 0.0 {
                for (g, b) in grad.iter_mut().zip(&self.basis[j * np..(j + 1) * np]) {
                    *g += w * b;
                }
            }
        }
        let pulse = self.pulse(u)?;
        let penalty = pulse.penalty(self.penalty_samples);
        for (g, p) in grad.iter_mut().zip(pulse.penalty_grad(self.penalty_samples)) {
            *g += p;
        }
        Ok((MeritValue::new(fidelity, penalty), grad))
    }

    /// Central differences of `G` in every parameter (2·2M merit evaluations).
    pub fn finite_difference_gradient(&self, u: &[f64], step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {step}")));
        }
        self.check(u)?;
        let mut x = u.to_vec();
        let mut grad = Vec::with_capacity(u.len());
        for m in 0..u.len() {
            x[m] = u[m] + step;
            let plus = self.merit(&x)?.g;
            x[m] = u[m] - step;
            let minus = self.merit(&x)?.g;
            x[m] = u[m];
            grad.push((plus - minus) / (2.0 * step));
        }
        Ok(grad)
    }
}
