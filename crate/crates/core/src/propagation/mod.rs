//! Driven Lindblad dynamics, the backward costate equation and unitary
//! propagation. All operators are expressed in the `H0` eigenbasis; time runs
//! in the lab frame.

mod generic;
pub mod grid;
pub mod lindblad;
pub mod splitting;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

pub use grid::{PropagatorConfig, Scheme, TimeGrid};
pub use lindblad::{hamiltonian, lindbladian_adjoint_apply, lindbladian_apply, superoperator, LindbladModel};
pub use splitting::{KickTable, SplitPlan};

use crate::error::Result;
use crate::linalg::{CMatrix, Planar};
use crate::pulse::Waveform;
use crate::spin::SpinSystem;

/// Sampled states `(t_i, X_i)` in ascending time.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&CMatrix> {
        self.states.last()
    }
}

/// Time grid for propagating `pulse` on `sys` under `cfg`.
pub fn time_grid(sys: &SpinSystem, pulse: &dyn Waveform, cfg: &PropagatorConfig) -> Result<TimeGrid> {
    let omega = sys.max_transition_frequency().max(pulse.max_frequency());
    cfg.grid(pulse.duration(), omega, &pulse.breakpoints())
}

fn plan_and_kicks(
    sys: &SpinSystem,
    model: &LindbladModel,
    pulse: &dyn Waveform,
    cfg: &PropagatorConfig,
) -> Result<(SplitPlan, KickTable)> {
    let grid = time_grid(sys, pulse, cfg)?;
    let plan = SplitPlan::new(sys, model, &grid, cfg.scheme)?;
    let amps: Vec<f64> = plan.kick_times().iter().map(|&t| pulse.value(t)).collect();
    let table = plan.kicks(&amps)?;
    Ok((plan, table))
}

/// `ρ(T)` from `ρ(0) = rho0`.
pub fn propagate_final(
    sys: &SpinSystem,
    model: &LindbladModel,
    pulse: &dyn Waveform,
    rho0: &CMatrix,
    cfg: &PropagatorConfig,
) -> Result<CMatrix> {
    Ok(propagate_forward(sys, model, pulse, rho0, cfg, usize::MAX)?
        .states
        .pop()
        .expect("trajectory holds the final state"))
}

/// Forward solution of the Lindblad equation, recording `t = 0`, every
/// `every`-th internal sample and `t = T`.
///
/// For splitting schemes the internal samples sit right after each drive
/// kick and are labelled by the kick time; for the other schemes they are
/// step ends.
pub fn propagate_forward(
    sys: &SpinSystem,
    model: &LindbladModel,
    pulse: &dyn Waveform,
    rho0: &CMatrix,
    cfg: &PropagatorConfig,
    every: usize,
) -> Result<Trajectory> {
    let every = every.max(1);
    let mut traj = Trajectory { times: vec![0.0], states: vec![rho0.clone()] };
    let end = if cfg.scheme.is_splitting() {
        let (plan, table) = plan_and_kicks(sys, model, pulse, cfg)?;
        let times = plan.kick_times();
        plan.forward_with(&table, &Planar::from_matrix(rho0), |j, x| {
            if j % every == 0 {
                traj.times.push(times[j]);
                traj.states.push(x.to_matrix());
            }
        })
        .to_matrix()
    } else {
        let grid = time_grid(sys, pulse, cfg)?;
        let n = grid.len();
        generic::forward(sys, model, pulse, &grid, cfg.scheme, rho0, |i, t, x| {
            if i % every == 0 && i + 1 < n {
                traj.times.push(t);
                traj.states.push(x.clone());
            }
        })?
    };
    traj.times.push(pulse.duration());
    traj.states.push(end);
    Ok(traj)
}

/// Backward solution of `λ̇ = -L†λ` from `λ(T) = lambda_t`, sampled at the
/// same points as [`propagate_forward`] with the same `every`, so that
/// `Tr(λ†ρ)` can be compared point by point.
pub fn propagate_costate(
    sys: &SpinSystem,
    model: &LindbladModel,
    pulse: &dyn Waveform,
    lambda_t: &CMatrix,
    cfg: &PropagatorConfig,
    every: usize,
) -> Result<Trajectory> {
    let every = every.max(1);
    let mut times = vec![pulse.duration()];
    let mut states = vec![lambda_t.clone()];
    let start = if cfg.scheme.is_splitting() {
        let (plan, table) = plan_and_kicks(sys, model, pulse, cfg)?;
        let kt = plan.kick_times();
        plan.backward_with(&table, &Planar::from_matrix(lambda_t), |j, x| {
            if j % every == 0 {
                times.push(kt[j]);
                states.push(x.to_matrix());
            }
        })
        .to_matrix()
    } else {
        let grid = time_grid(sys, pulse, cfg)?;
        generic::backward(sys, model, pulse, &grid, cfg.scheme, lambda_t, |i, t, x| {
            // λ at the start of step i is paired with ρ at the end of step i-1
            if i >= 1 && (i - 1) % every == 0 {
                times.push(t);
                states.push(x.clone());
            }
        })?
    };
    times.push(0.0);
    states.push(start);
    times.reverse();
    states.reverse();
    Ok(Trajectory { times, states })
}

/// Time-ordered evolution operator `U(T)` for `H(t) = H0 + f(t) V`.
pub fn propagate_unitary(sys: &SpinSystem, pulse: &dyn Waveform, cfg: &PropagatorConfig) -> Result<CMatrix> {
    if cfg.scheme.is_splitting() {
        let (plan, table) = plan_and_kicks(sys, &LindbladModel::closed(), pulse, cfg)?;
        Ok(plan.unitary(&table))
    } else {
        let grid = time_grid(sys, pulse, cfg)?;
        generic::unitary(sys, pulse, &grid, cfg.scheme)
    }
}

/// `ρ_I = e^{iH0t} ρ e^{-iH0t}`.
pub fn to_interaction_frame(sys: &SpinSystem, rho: &CMatrix, t: f64) -> CMatrix {
    let e = &sys.energies;
    CMatrix::from_fn(rho.nrows(), rho.ncols(), |n, m| rho[(n, m)] * Complex64::from_polar(1.0, (e[n] - e[m]) * t))
}

/// Inverse of [`to_interaction_frame`].
pub fn from_interaction_frame(sys: &SpinSystem, rho: &CMatrix, t: f64) -> CMatrix {
    to_interaction_frame(sys, rho, -t)
}

/// `U_I = e^{iH0t} U`.
pub fn unitary_to_interaction_frame(sys: &SpinSystem, u: &CMatrix, t: f64) -> CMatrix {
    let e = &sys.energies;
    CMatrix::from_fn(u.nrows(), u.ncols(), |n, m| u[(n, m)] * Complex64::from_polar(1.0, e[n] * t))
}

/// Writes `t`, populations `ρ_nn` and `|ρ_jk|` for the requested coherences.
pub fn write_trajectory(path: &Path, traj: &Trajectory, coherences: &[(usize, usize)]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let d = traj.states.first().map(|s| s.nrows()).unwrap_or(0);
    write!(out, "# t_us")?;
    for n in 0..d {
        write!(out, " p{n}")?;
    }
    for (j, k) in coherences {
        write!(out, " abs_rho{j}{k}")?;
    }
    writeln!(out)?;
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        write!(out, "{t:.12e}")?;
        for n in 0..d {
            write!(out, " {:.12e}", rho[(n, n)].re)?;
        }
        for &(j, k) in coherences {
            write!(out, " {:.12e}", rho[(j, k)].norm())?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
