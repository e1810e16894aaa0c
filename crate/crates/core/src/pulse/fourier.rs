//! Clamped Fourier-series control pulses and the out-of-band spectral penalty.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::clamp::Clamp;
use super::Waveform;
use crate::error::{Error, Result};

/// Largest harmonic index `m` with `2πm/T ≤ ω_max`.
pub fn harmonic_cutoff(omega_max: f64, duration: f64) -> usize {
    (omega_max * duration / (2.0 * PI) + 1e-9).floor().max(0.0) as usize
}

/// Sample count used by the penalty: the smallest power of two ≥ max(1024, 8M).
pub fn penalty_samples(harmonics: usize) -> usize {
    (8 * harmonics).max(1024).next_power_of_two()
}

/// `f(u, t) = Φ(f̃(u, t))` with
/// `f̃(u, t) = Σ_m u_{2m} cos(ω_m t) + u_{2m-1} sin(ω_m t)`, `ω_m = 2πm/T`.
///
/// Parameters are stored 0-based: `u[2(m-1)]` multiplies `sin(ω_m t)` and
/// `u[2(m-1)+1]` multiplies `cos(ω_m t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierPulse {
    pub u: Vec<f64>,
    harmonics: usize,
    duration: f64,
    clamp: Clamp,
    alpha: f64,
    omega_max: f64,
}

impl FourierPulse {
    /// A zero pulse with `M = floor(ω_max T / 2π)` harmonics.
    pub fn new(duration: f64, omega_max: f64, kappa: f64, alpha: f64) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::InvalidParameter(format!("pulse duration must be positive, got {duration}")));
        }
        if !(omega_max > 0.0) {
            return Err(Error::InvalidParameter(format!("ω_max must be positive, got {omega_max}")));
        }
        if !(alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("penalty weight must be ≥ 0, got {alpha}")));
        }
        let harmonics = harmonic_cutoff(omega_max, duration);
        if harmonics == 0 {
            return Err(Error::InvalidParameter(
                "ω_max·T/2π < 1: no harmonic fits below the cutoff".into(),
            ));
        }
        Ok(Self {
            u: vec![0.0; 2 * harmonics],
            harmonics,
            duration,
            clamp: Clamp::new(kappa)?,
            alpha,
            omega_max,
        })
    }

    pub fn with_params(mut self, u: Vec<f64>) -> Result<Self> {
        if u.len() != 2 * self.harmonics {
            return Err(Error::InvalidParameter(format!(
                "expected {} parameters, got {}",
                2 * self.harmonics,
                u.len()
            )));
        }
        self.u = u;
        Ok(self)
    }

    pub fn set_params(&mut self, u: &[f64]) {
        self.u.copy_from_slice(u);
    }

    pub fn harmonics(&self) -> usize {
        self.harmonics
    }

    pub fn n_params(&self) -> usize {
        2 * self.harmonics
    }

    pub fn kappa(&self) -> f64 {
        self.clamp.kappa()
    }

    pub fn clamp(&self) -> &Clamp {
        &self.clamp
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn omega(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.duration
    }

    /// The raw series `f̃(u, t)`.
    pub fn eval_ftilde(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for m in 1..=self.harmonics {
            let (s, c) = (self.omega(m) * t).sin_cos();
            acc += self.u[2 * (m - 1)] * s + self.u[2 * (m - 1) + 1] * c;
        }
        acc
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.clamp.value(self.eval_ftilde(t))
    }

    /// `∂f̃/∂u` at `t`.
    pub fn basis(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_params()];
        fill_basis(self.harmonics, self.duration, t, &mut out);
        out
    }

    /// `∂f/∂u = Φ'(f̃) ∂f̃/∂u`.
    pub fn param_grad(&self, t: f64) -> Vec<f64> {
        let slope = self.clamp.derivative(self.eval_ftilde(t));
        let mut g = self.basis(t);
        g.iter_mut().for_each(|x| *x *= slope);
        g
    }

    fn sample_times(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        (0..n).map(move |i| self.duration * i as f64 / n as f64)
    }

    /// Discrete Fourier coefficients `F_k = (1/N) Σ_n f(t_n) e^{-2πikn/N}` of
    /// the clamped pulse sampled on `t_n = nT/N`. Parseval:
    /// `Σ_k |F_k|² = (1/N) Σ_n f(t_n)²`.
    pub fn spectrum(&self, samples: usize) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self
            .sample_times(samples)
            .map(|t| Complex64::new(self.eval(t), 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(samples).process(&mut buf);
        let scale = 1.0 / samples as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
        buf
    }

    /// Whether DFT bin `k` (of `samples`) lies above ω_max in absolute frequency.
    pub fn out_of_band(&self, k: usize, samples: usize) -> bool {
        let signed = if k <= samples / 2 { k } else { samples - k };
        signed > harmonic_cutoff(self.omega_max, self.duration)
    }

    /// Fraction of the pulse power above ω_max.
    pub fn out_of_band_fraction(&self, samples: usize) -> f64 {
        let spec = self.spectrum(samples);
        let total: f64 = spec.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let out: f64 = spec
            .iter()
            .enumerate()
            .filter(|(k, _)| self.out_of_band(*k, samples))
            .map(|(_, z)| z.norm_sqr())
            .sum();
        out / total
    }

    /// `P(u) = -α Σ_{|ω_k| > ω_max} |F_k|²`.
    pub fn penalty(&self, samples: usize) -> f64 {
        if self.alpha == 0.0 {
            return 0.0;
        }
        let spec = self.spectrum(samples);
        -self.alpha
            * spec
                .iter()
                .enumerate()
                .filter(|(k, _)| self.out_of_band(*k, samples))
                .map(|(_, z)| z.norm_sqr())
                .sum::<f64>()
    }

    /// Exact gradient of [`penalty`](Self::penalty) through the transform and Φ'.
    pub fn penalty_grad(&self, samples: usize) -> Vec<f64> {
        let mut grad = vec![0.0; self.n_params()];
        if self.alpha == 0.0 {
            return grad;
        }
        let n = samples;
        let ftilde: Vec<f64> = self.sample_times(n).map(|t| self.eval_ftilde(t)).collect();
        let mut planner = FftPlanner::new();
        let mut buf: Vec<Complex64> = ftilde
            .iter()
            .map(|&x| Complex64::new(self.clamp.value(x), 0.0))
            .collect();
        planner.plan_fft_forward(n).process(&mut buf);
        // keep only out-of-band coefficients F_k = buf_k / N
        for (k, z) in buf.iter_mut().enumerate() {
            if self.out_of_band(k, n) {
                *z /= n as f64;
            } else {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        // r_n = Σ_out F_k e^{+2πikn/N};  ∂P/∂f_n = -(2α/N) Re r_n
        planner.plan_fft_inverse(n).process(&mut buf);
        let mut h: Vec<Complex64> = buf
            .iter()
            .zip(&ftilde)
            .map(|(r, &x)| Complex64::new(-2.0 * self.alpha / n as f64 * r.re * self.clamp.derivative(x), 0.0))
            .collect();
        // project onto the basis: H_m = Σ_n h_n e^{-2πimn/N}
        planner.plan_fft_forward(n).process(&mut h);
        for m in 1..=self.harmonics {
            let hm = h[m % n];
            grad[2 * (m - 1)] = -hm.im;
            grad[2 * (m - 1) + 1] = hm.re;
        }
        grad
    }

    /// `(t, f)` pairs on a uniform grid over `[0, T]`.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        (0..=n)
            .map(|i| {
                let t = self.duration * i as f64 / n as f64;
                (t, self.eval(t))
            })
            .collect()
    }
}

/// Writes `[sin(ω_1 t), cos(ω_1 t), sin(ω_2 t), …]` into `out`.
pub(crate) fn fill_basis(harmonics: usize, duration: f64, t: f64, out: &mut [f64]) {
    let (s1, c1) = (2.0 * PI * t / duration).sin_cos();
    // angle-addition recurrence, re-seeded every 16 harmonics to bound drift
    let (mut s, mut c) = (s1, c1);
    for m in 1..=harmonics {
        if m > 1 {
            if m % 16 == 1 {
                let (sm, cm) = (2.0 * PI * m as f64 * t / duration).sin_cos();
                s = sm;
                c = cm;
            } else {
                let ns = s * c1 + c * s1;
                let nc = c * c1 - s * s1;
                s = ns;
                c = nc;
            }
        }
        out[2 * (m - 1)] = s;
        out[2 * (m - 1) + 1] = c;
    }
}

impl Waveform for FourierPulse {
    fn value(&self, t: f64) -> f64 {
        self.eval(t)
    }

    fn duration(&self) -> f64 {
        self.duration
    }

    fn max_frequency(&self) -> f64 {
        self.omega_max
    }
}
