//! Control waveforms: clamped Fourier pulses for optimization and
//! monochromatic rotation sequences as the baseline.

pub mod clamp;
pub mod export;
pub mod fourier;
pub mod gates;
pub mod mono;

pub use clamp::{clamp_phi, clamp_phi_prime, Clamp};
pub use fourier::{harmonic_cutoff, penalty_samples, FourierPulse};
pub use gates::{decompose_rz, gate_sequence, target_unitary, toffoli_sequence, Gate};
pub use mono::{min_duration, rotation_pulse, PulseSequence, RotationSpec, Segment};

/// A real control signal `f(t)` on `[0, T]` (mT).
pub trait Waveform: Sync {
    fn value(&self, t: f64) -> f64;

    fn duration(&self) -> f64;

    /// Highest angular frequency the signal is meant to carry (rad/μs), used
    /// by the step-size rule.
    fn max_frequency(&self) -> f64 {
        0.0
    }

    /// Interior times where the signal may be discontinuous. Propagation grids
    /// place step boundaries on them.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `f ≡ 0` on `[0, T]`.
#[derive(Clone, Copy, Debug)]
pub struct ZeroPulse {
    pub duration: f64,
}

impl Waveform for ZeroPulse {
    fn value(&self, _t: f64) -> f64 {
        0.0
    }

    fn duration(&self) -> f64 {
        self.duration
    }
}

/// Wraps a closure as a waveform.
pub struct FnWaveform<F> {
    pub f: F,
    pub duration: f64,
}

impl<F: Fn(f64) -> f64 + Sync> Waveform for FnWaveform<F> {
    fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn duration(&self) -> f64 {
        self.duration
    }
}
