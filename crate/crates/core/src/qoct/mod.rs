//! Gradient-based pulse optimization with restarts.

pub mod lbfgs;
mod problem;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use lbfgs::{maximize, OptimizerKind, SearchSettings, StopReason};
pub use problem::ControlProblem;

use crate::error::{Error, Result};
use crate::merit::MeritValue;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizationConfig {
    pub max_iterations: usize,
    /// Convergence threshold on `|ΔG|` between accepted iterates.
    pub tolerance: f64,
    pub gradient_tolerance: f64,
    pub restarts: usize,
    /// Half-width of the uniform initial draw; `None` means `κ / (4M)`.
    pub init_scale: Option<f64>,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub memory: usize,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-9,
            gradient_tolerance: 1e-9,
            restarts: 10,
            init_scale: None,
            seed: 0,
            optimizer: OptimizerKind::Lbfgs,
            memory: 10,
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be ≥ 1".into()));
        }
        if let Some(s) = self.init_scale {
            if !(s > 0.0) {
                return Err(Error::InvalidParameter(format!("init_scale must be positive, got {s}")));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be ≥ 0, got {}", self.tolerance)));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer, used to derive independent seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of restart `r`; independent of the total number of restarts.
pub fn restart_seed(master: u64, r: usize) -> u64 {
    splitmix64(splitmix64(master) ^ (r as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub merit: MeritValue,
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestartSummary {
    pub seed: u64,
    pub merit: MeritValue,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
    pub history: Vec<IterationRecord>,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub best_u: Vec<f64>,
    pub best: MeritValue,
    pub best_restart: usize,
    pub restarts: Vec<RestartSummary>,
    pub wall_time: f64,
}

impl OptimizationResult {
    /// `G` per iteration of the best restart.
    pub fn history(&self) -> Vec<f64> {
        self.restarts[self.best_restart].history.iter().map(|h| h.merit.g).collect()
    }

    pub fn converged(&self) -> bool {
        self.restarts[self.best_restart].stop.converged()
    }
}

/// Runs `cfg.restarts` independent ascents from `u ~ U(-σ_u, σ_u)^{2M}` and
/// keeps the best.
pub fn optimize(problem: &ControlProblem, cfg: &OptimizationConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    let start = Instant::now();
    let template = problem.template();
    let scale = cfg
        .init_scale
        .unwrap_or(template.kappa() / (4.0 * template.harmonics() as f64));
    let settings = SearchSettings {
        kind: cfg.optimizer,
        max_iterations: cfg.max_iterations,
        tolerance: cfg.tolerance,
        gradient_tolerance: cfg.gradient_tolerance,
        memory: cfg.memory,
        initial_step: scale,
    };

    let mut restarts = Vec::with_capacity(cfg.restarts);
    let mut best: Option<(usize, Vec<f64>, MeritValue)> = None;
    for r in 0..cfg.restarts {
        let seed = restart_seed(cfg.seed, r);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u0: Vec<f64> = (0..problem.n_params()).map(|_| rng.gen_range(-scale..scale)).collect();
        let outcome = maximize(
            |u: &[f64]| problem.merit_and_gradient(u).map(|(m, g)| (m.g, g, m)),
            u0,
            &settings,
        )?;
        let history = outcome
            .history
            .iter()
            .enumerate()
            .map(|(i, it)| IterationRecord { iteration: i, merit: it.aux, grad_norm: it.grad_norm })
            .collect();
        log::debug!(
            "restart {r}: G = {:.10} after {} iterations ({:?})",
            outcome.value,
            outcome.history.len() - 1,
            outcome.stop
        );
        if outcome.value.is_finite() && best.as_ref().is_none_or(|b| outcome.value > b.2.g) {
            best = Some((r, outcome.x.clone(), outcome.aux));
        }
        restarts.push(RestartSummary {
            seed,
            merit: outcome.aux,
            iterations: outcome.history.len() - 1,
            evaluations: outcome.evaluations,
            stop: outcome.stop,
            history,
        });
    }
    let Some((best_restart, best_u, best)) = best else {
        return Err(Error::AllRestartsDiverged(cfg.restarts));
    };
    Ok(OptimizationResult { best_u, best, best_restart, restarts, wall_time: start.elapsed().as_secs_f64() })
}

/// Per-iteration table `restart iter G F P grad_norm` for every restart.
pub fn write_trace(path: &Path, result: &OptimizationResult) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "# restart iter G F P grad_norm")?;
    for (r, summary) in result.restarts.iter().enumerate() {
        for h in &summary.history {
            writeln!(
                out,
                "{r} {} {:.15e} {:.15e} {:.15e} {:.6e}",
                h.iteration, h.merit.g, h.merit.fidelity, h.merit.penalty, h.grad_norm
            )?;
        }
    }
    out.flush()?;
    Ok(())
}
