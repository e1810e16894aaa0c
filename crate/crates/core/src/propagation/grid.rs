//! Step-size rule and time grids.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_STEPS_PER_PERIOD: f64 = 40.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `e^{L0 h/2} e^{-i f(t+h/2) V h} e^{L0 h/2}`; each factor is CPTP.
    #[default]
    Strang,
    /// Fourth-order triple-jump composition of Strang substeps.
    Yoshida4,
    /// Generator frozen at the step midpoint, exponentiated in full.
    ExpMidpoint,
    /// Classical Runge-Kutta on the generator.
    Rk4,
}

impl Scheme {
    /// Schemes with an exact discrete adjoint, usable for gradients.
    pub fn is_splitting(&self) -> bool {
        matches!(self, Scheme::Strang | Scheme::Yoshida4)
    }

    pub fn order(&self) -> u32 {
        match self {
            Scheme::Strang | Scheme::ExpMidpoint => 2,
            Scheme::Yoshida4 | Scheme::Rk4 => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagatorConfig {
    pub scheme: Scheme,
    /// Steps per period of the fastest frequency present (≥ 40).
    pub steps_per_period: f64,
    /// Explicit step; must itself satisfy the 40-steps-per-period rule.
    pub dt: Option<f64>,
    /// Upper bound on stored post-kick states per trajectory before the
    /// gradient switches to checkpoint-and-recompute.
    pub max_stored_states: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Strang,
            steps_per_period: MIN_STEPS_PER_PERIOD,
            dt: None,
            max_stored_states: 1 << 16,
        }
    }
}

impl PropagatorConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        Self { scheme, ..Self::default() }
    }

    /// Largest step permitted for a fastest angular frequency `omega`.
    pub fn max_step(&self, omega: f64) -> Result<f64> {
        if !(self.steps_per_period >= MIN_STEPS_PER_PERIOD) {
            return Err(Error::InvalidParameter(format!(
                "steps_per_period must be ≥ {MIN_STEPS_PER_PERIOD}, got {}",
                self.steps_per_period
            )));
        }
        let rule = if omega > 0.0 { 2.0 * PI / (MIN_STEPS_PER_PERIOD * omega) } else { f64::INFINITY };
        match self.dt {
            Some(dt) => {
                if !(dt > 0.0) {
                    return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
                }
                if dt > rule * (1.0 + 1e-12) {
                    return Err(Error::StepTooLarge { dt, max: rule });
                }
                Ok(dt)
            }
            None if omega > 0.0 => Ok(2.0 * PI / (self.steps_per_period * omega)),
            None => Ok(f64::INFINITY),
        }
    }

    pub fn grid(&self, duration: f64, omega: f64, breakpoints: &[f64]) -> Result<TimeGrid> {
        TimeGrid::new(duration, self.max_step(omega)?, breakpoints)
    }
}

/// Steps `(t_i, h_i)` covering `[0, T]`, uniform between breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    pub steps: Vec<(f64, f64)>,
    pub duration: f64,
}

/// Minimum number of steps on any interval, so that drive-only dynamics
/// (no static Hamiltonian) are still resolved.
const MIN_STEPS_PER_INTERVAL: usize = 16;

impl TimeGrid {
    pub fn new(duration: f64, max_step: f64, breakpoints: &[f64]) -> Result<Self> {
        if !(duration >= 0.0) || !duration.is_finite() {
            return Err(Error::InvalidParameter(format!("duration must be finite and ≥ 0, got {duration}")));
        }
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&t| t > 0.0 && t < duration)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * duration);
        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(0.0);
        edges.extend(cuts);
        edges.push(duration);

        let mut steps = Vec::new();
        for w in edges.windows(2) {
            let len = w[1] - w[0];
            if len <= 0.0 {
                continue;
            }
            let n = ((len / max_step).ceil() as usize).max(MIN_STEPS_PER_INTERVAL);
            let h = len / n as f64;
            steps.extend((0..n).map(|i| (w[0] + i as f64 * h, h)));
        }
        Ok(Self { steps, duration })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Same breakpoints with every interval split into twice as many steps.
    pub fn refined(&self) -> Self {
        let steps = self
            .steps
            .iter()
            .flat_map(|&(t, h)| [(t, 0.5 * h), (t + 0.5 * h, 0.5 * h)])
            .collect();
        Self { steps, duration: self.duration }
    }
}
