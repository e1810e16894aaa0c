//! Plain-text pulse files: waveform `(t, f)`, spectrum `(ω, Re F, Im F)` and
//! the Fourier parameters of an optimized pulse.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{FourierPulse, Waveform};
use crate::error::{Error, Result};

/// Samples `f` at `t_n = nT/N`, `n = 0…N-1`.
pub fn sample_uniform(w: &dyn Waveform, samples: usize) -> Vec<f64> {
    let t = w.duration();
    (0..samples).map(|n| w.value(t * n as f64 / samples as f64)).collect()
}

/// Non-negative-frequency half of the normalized DFT of any waveform:
/// `(ω_k = 2πk/T, F_k)` for `k = 0…N/2`.
pub fn waveform_spectrum(w: &dyn Waveform, samples: usize) -> Vec<(f64, Complex64)> {
    let mut buf: Vec<Complex64> = sample_uniform(w, samples)
        .into_iter()
        .map(|x| Complex64::new(x, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(samples).process(&mut buf);
    let scale = 1.0 / samples as f64;
    let dw = 2.0 * std::f64::consts::PI / w.duration();
    buf.iter()
        .take(samples / 2 + 1)
        .enumerate()
        .map(|(k, z)| (dw * k as f64, z * scale))
        .collect()
}

pub fn write_waveform(path: &Path, w: &dyn Waveform, points: usize) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "# t_us f_mT")?;
    let t = w.duration();
    for i in 0..=points {
        let ti = t * i as f64 / points as f64;
        // the closed end belongs to no segment; report the left limit instead
        let v = if i == points { w.value(ti * (1.0 - 1e-15)) } else { w.value(ti) };
        writeln!(out, "{ti:.12e} {v:.12e}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_spectrum(path: &Path, w: &dyn Waveform, samples: usize) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "# omega_rad_per_us re_F im_F")?;
    for (omega, z) in waveform_spectrum(w, samples) {
        writeln!(out, "{omega:.12e} {:.12e} {:.12e}", z.re, z.im)?;
    }
    out.flush()?;
    Ok(())
}

/// Serializable description of a [`FourierPulse`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub duration: f64,
    pub omega_max: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub harmonics: usize,
    pub u: Vec<f64>,
}

impl PulseParams {
    pub fn from_pulse(p: &FourierPulse) -> Self {
        Self {
            duration: p.duration(),
            omega_max: p.omega_max(),
            kappa: p.kappa(),
            alpha: p.alpha(),
            harmonics: p.harmonics(),
            u: p.u.clone(),
        }
    }

    pub fn to_pulse(&self) -> Result<FourierPulse> {
        let p = FourierPulse::new(self.duration, self.omega_max, self.kappa, self.alpha)?;
        if p.harmonics() != self.harmonics {
            return Err(Error::CardinalityMismatch { expected: p.harmonics(), got: self.harmonics });
        }
        p.with_params(self.u.clone())
    }
}

pub fn write_params(path: &Path, p: &FourierPulse) -> Result<()> {
    let text = toml::to_string(&PulseParams::from_pulse(p)).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn read_params(path: &Path) -> Result<FourierPulse> {
    let text = fs::read_to_string(path)?;
    let params: PulseParams = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    params.to_pulse()
}
