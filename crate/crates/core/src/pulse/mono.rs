//! Monochromatic square-envelope pulses implementing two-level rotations.
//!
//! Within the subspace of levels `(j, k)` the Pauli matrices take `|j⟩` as the
//! first basis vector: `σ_z = |j⟩⟨j| - |k⟩⟨k|`, `σ_x = |j⟩⟨k| + |k⟩⟨j|`,
//! `σ_y = -i|j⟩⟨k| + i|k⟩⟨j|`, and `R_n(θ) = exp(-iθ n·σ/2)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Waveform;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::spin::{SpinSystem, FORBIDDEN_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    pub j: usize,
    pub k: usize,
    pub axis: [f64; 3],
    pub theta: f64,
}

impl RotationSpec {
    pub fn new(j: usize, k: usize, axis: [f64; 3], theta: f64) -> Self {
        Self { j, k, axis, theta }
    }

    pub fn x(j: usize, k: usize, theta: f64) -> Self {
        Self::new(j, k, [1.0, 0.0, 0.0], theta)
    }

    pub fn y(j: usize, k: usize, theta: f64) -> Self {
        Self::new(j, k, [0.0, 1.0, 0.0], theta)
    }

    pub fn z(j: usize, k: usize, theta: f64) -> Self {
        Self::new(j, k, [0.0, 0.0, 1.0], theta)
    }

    /// Same rotation with `θ ≥ 0` (axis flipped if needed).
    pub fn canonical(&self) -> Self {
        if self.theta < 0.0 {
            Self {
                axis: self.axis.map(|x| -x),
                theta: -self.theta,
                ..*self
            }
        } else {
            *self
        }
    }

    pub fn is_equatorial(&self) -> bool {
        self.axis[2].abs() < 1e-12
    }

    /// The rotation as a `d × d` unitary, identity outside the `(j, k)` block.
    pub fn matrix(&self, d: usize) -> CMatrix {
        let [nx, ny, nz] = self.axis;
        let norm = (nx * nx + ny * ny + nz * nz).sqrt();
        let (nx, ny, nz) = (nx / norm, ny / norm, nz / norm);
        let (s, co) = (0.5 * self.theta).sin_cos();
        let mut u = CMatrix::identity(d, d);
        let (j, k) = (self.j, self.k);
        // cos(θ/2) I - i sin(θ/2) n·σ
        u[(j, j)] = c(co, -s * nz);
        u[(k, k)] = c(co, s * nz);
        u[(j, k)] = c(-s * ny, -s * nx);
        u[(k, j)] = c(s * ny, -s * nx);
        u
    }
}

/// Product of rotations listed in application order (first element acts first).
pub fn rotation_product(rotations: &[RotationSpec], d: usize) -> CMatrix {
    rotations
        .iter()
        .fold(CMatrix::identity(d, d), |acc, r| r.matrix(d) * acc)
}

/// Duration, phase and carrier of the square pulse realizing one rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonochromaticPulse {
    pub duration: f64,
    pub phase: f64,
    pub carrier: f64,
    pub amplitude: f64,
}

/// Square pulse `A cos(ω_jk t + φ)` that implements `r` in the interaction
/// picture within the rotating-wave approximation: `A t_f |⟨j|V|k⟩| = θ`, and
/// `φ` aligns the effective rotation axis with `r.axis`.
pub fn rotation_pulse(sys: &SpinSystem, r: &RotationSpec, amplitude: f64) -> Result<MonochromaticPulse> {
    if !(amplitude > 0.0) {
        return Err(Error::InvalidParameter(format!("amplitude must be positive, got {amplitude}")));
    }
    if !r.is_equatorial() {
        return Err(Error::AxisNotEquatorial(r.axis[2]));
    }
    let r = r.canonical();
    let element = sys.drive_element(r.j, r.k)?;
    let coupling = element.norm();
    if coupling < FORBIDDEN_TOLERANCE {
        return Err(Error::ForbiddenTransition { j: r.j, k: r.k, element: coupling });
    }
    let carrier = sys.transition_frequency(r.j, r.k)?;
    let axis_angle = r.axis[1].atan2(r.axis[0]);
    let beta = element.arg();
    // With ω = |E_k - E_j|, the co-rotating term of cos(ωt + φ)⟨j|V|k⟩ gives an
    // effective axis at angle φ - β when E_j > E_k and -(φ + β) otherwise.
    let phase = if sys.energies[r.j] > sys.energies[r.k] {
        axis_angle + beta
    } else {
        -axis_angle - beta
    };
    Ok(MonochromaticPulse {
        duration: r.theta / (amplitude * coupling),
        phase: phase.rem_euclid(2.0 * PI),
        carrier,
        amplitude,
    })
}

/// `Σ_i θ_i / |⟨j_i|V|k_i⟩|` (mT·μs).
pub fn pulse_area(sys: &SpinSystem, rotations: &[RotationSpec]) -> Result<f64> {
    let mut area = 0.0;
    for r in rotations {
        let r = r.canonical();
        let coupling = sys.drive_element(r.j, r.k)?.norm();
        if coupling < FORBIDDEN_TOLERANCE {
            return Err(Error::ForbiddenTransition { j: r.j, k: r.k, element: coupling });
        }
        area += r.theta / coupling;
    }
    Ok(area)
}

/// Shortest sequence duration allowed by the amplitude bound.
pub fn min_duration(sys: &SpinSystem, rotations: &[RotationSpec], max_amplitude: f64) -> Result<f64> {
    if !(max_amplitude > 0.0) {
        return Err(Error::InvalidParameter(format!("A_max must be positive, got {max_amplitude}")));
    }
    Ok(pulse_area(sys, rotations)? / max_amplitude)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub rotation: RotationSpec,
    pub amplitude: f64,
    pub start: f64,
    pub duration: f64,
    pub carrier: f64,
    pub phase: f64,
}

impl Segment {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

/// Contiguous, non-overlapping monochromatic segments.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSequence {
    segments: Vec<Segment>,
    total: f64,
}

impl PulseSequence {
    pub fn new(mut segments: Vec<Segment>) -> Result<Self> {
        segments.sort_by(|a, b| a.start.total_cmp(&b.start));
        for w in segments.windows(2) {
            let tol = 1e-12 * w[0].end().abs().max(1e-12);
            if w[1].start < w[0].end() - tol {
                return Err(Error::OverlappingSegments(w[1].start));
            }
        }
        let total = segments.last().map(|s| s.end()).unwrap_or(0.0);
        Ok(Self { segments, total })
    }

    /// Concatenates the rotations (application order) at a common amplitude.
    pub fn build(sys: &SpinSystem, rotations: &[RotationSpec], amplitude: f64) -> Result<Self> {
        let mut start = 0.0;
        let mut segments = Vec::with_capacity(rotations.len());
        for r in rotations {
            let p = rotation_pulse(sys, r, amplitude)?;
            segments.push(Segment {
                rotation: r.canonical(),
                amplitude,
                start,
                duration: p.duration,
                carrier: p.carrier,
                phase: p.phase,
            });
            start += p.duration;
        }
        Self::new(segments)
    }

    /// Fixes the total duration `T` and lowers the common amplitude
    /// accordingly; fails when `T < T_min` at `max_amplitude`.
    pub fn with_duration(
        sys: &SpinSystem,
        rotations: &[RotationSpec],
        duration: f64,
        max_amplitude: f64,
    ) -> Result<Self> {
        let t_min = min_duration(sys, rotations, max_amplitude)?;
        if duration < t_min * (1.0 - 1e-12) {
            return Err(Error::BelowMinimumDuration { t: duration, t_min });
        }
        let amplitude = pulse_area(sys, rotations)? / duration;
        let mut seq = Self::build(sys, rotations, amplitude)?;
        // absorb rounding so the sequence ends exactly at T
        seq.total = duration;
        Ok(seq)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.total
    }

    /// `f(t) = Σ_i A_i Π_{t_i}^{t_i + t_f,i}(t) cos(ω_i t + φ_i)`.
    pub fn eval(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .filter(|s| t >= s.start && t < s.end())
            .map(|s| s.amplitude * (s.carrier * t + s.phase).cos())
            .sum()
    }
}

impl Waveform for PulseSequence {
    fn value(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn duration(&self) -> f64 {
        self.total
    }

    fn max_frequency(&self) -> f64 {
        self.segments.iter().map(|s| s.carrier).fold(0.0, f64::max)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.segments
            .iter()
            .map(|s| s.end())
            .filter(|&t| t > 0.0 && t < self.total)
            .collect()
    }
}
