//! The five-method comparison protocol over duration and `T₂` sweeps.
//!
//! Durations and dephasing times are given in units of `τ = 2π/ω₆₇`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::merit::{evaluate_fidelity, goerz_state_set, StateSet};
use crate::propagation::{LindbladModel, PropagatorConfig};
use crate::pulse::export::{write_params, write_spectrum, write_waveform};
use crate::pulse::{gate_sequence, target_unitary, FourierPulse, Gate, PulseSequence, Waveform};
use crate::qoct::{optimize, write_trace, ControlProblem, OptimizationConfig};
use crate::spin::{build_system, SpinParameters, SpinSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "M-S")]
    MonoClosed,
    #[serde(rename = "M-L")]
    MonoOpen,
    #[serde(rename = "QOCT-S-S")]
    ClosedClosed,
    #[serde(rename = "QOCT-S-L")]
    ClosedOpen,
    #[serde(rename = "QOCT-L-L")]
    OpenOpen,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::MonoClosed, Method::MonoOpen, Method::ClosedClosed, Method::ClosedOpen, Method::OpenOpen];

    pub fn label(&self) -> &'static str {
        match self {
            Method::MonoClosed => "M-S",
            Method::MonoOpen => "M-L",
            Method::ClosedClosed => "QOCT-S-S",
            Method::ClosedOpen => "QOCT-S-L",
            Method::OpenOpen => "QOCT-L-L",
        }
    }

    pub fn is_monochromatic(&self) -> bool {
        matches!(self, Method::MonoClosed | Method::MonoOpen)
    }

    /// Whether the result is evaluated with dephasing.
    pub fn is_open(&self) -> bool {
        matches!(self, Method::MonoOpen | Method::ClosedOpen | Method::OpenOpen)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSettings {
    /// Amplitude bound, mT.
    pub a_max_mt: f64,
    /// `ω_max` as a multiple of `ω₆₇`.
    pub omega_max_multiplier: f64,
    /// Weight of the out-of-band penalty.
    pub alpha: f64,
}

impl Default for ControlSettings {
    fn default() -> Self {
        Self { a_max_mt: 10.0, omega_max_multiplier: 4.0, alpha: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub gate: Gate,
    pub durations_tau: Vec<f64>,
    pub t2_tau: Vec<f64>,
    pub methods: Vec<Method>,
    pub output_dir: PathBuf,
    /// Write waveform, spectrum and parameter files for optimized pulses.
    pub write_pulses: bool,
    pub spin: SpinParameters,
    pub control: ControlSettings,
    pub optimizer: OptimizationConfig,
    pub propagator: PropagatorConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            gate: Gate::U1,
            durations_tau: vec![2.0, 4.0, 6.0, 7.68, 10.5, 12.0, 14.0, 16.0],
            t2_tau: vec![5.0, 50.0, 200.0],
            methods: Method::ALL.to_vec(),
            output_dir: PathBuf::from("results"),
            write_pulses: true,
            spin: SpinParameters::default(),
            control: ControlSettings::default(),
            optimizer: OptimizationConfig::default(),
            propagator: PropagatorConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.durations_tau.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::Config("durations must be positive".into()));
        }
        if self.durations_tau.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("durations must be strictly ascending".into()));
        }
        if self.t2_tau.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::Config("T2 values must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods requested".into()));
        }
        if self.methods.iter().any(|m| m.is_open()) && self.t2_tau.is_empty() {
            return Err(Error::Config("open-system methods need at least one T2 value".into()));
        }
        if !(self.control.a_max_mt > 0.0) || !(self.control.omega_max_multiplier > 0.0) {
            return Err(Error::Config("amplitude and frequency bounds must be positive".into()));
        }
        if !(self.control.alpha >= 0.0) {
            return Err(Error::Config("penalty weight must be ≥ 0".into()));
        }
        self.spin.validate()?;
        self.optimizer.validate()?;
        Ok(())
    }
}

/// One row of `records.csv`. Failed points carry `converged = false` and
/// empty numeric fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub method: Method,
    pub gate: Gate,
    #[serde(rename = "T_over_tau")]
    pub t_over_tau: f64,
    /// The sweep row this record belongs to; closed-system methods ignore it.
    #[serde(rename = "T2_over_tau")]
    pub t2_over_tau: Option<f64>,
    pub infidelity: Option<f64>,
    #[serde(rename = "G")]
    pub g: Option<f64>,
    pub penalty: Option<f64>,
    pub restarts: usize,
    pub converged: bool,
    pub pulse_file: Option<String>,
}

impl SweepRecord {
    fn failed(method: Method, gate: Gate, t: f64, t2: Option<f64>, restarts: usize) -> Self {
        Self {
            method,
            gate,
            t_over_tau: t,
            t2_over_tau: t2,
            infidelity: None,
            g: None,
            penalty: None,
            restarts,
            converged: false,
            pulse_file: None,
        }
    }
}

/// Shared state of one experiment: the spin system, the state set and the
/// unit of time.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub sys: SpinSystem,
    pub set: StateSet,
    pub tau: f64,
}

/// An optimized pulse with its merit under the model it was optimized for.
#[derive(Clone, Debug)]
pub struct OptimizedPulse {
    pub pulse: FourierPulse,
    pub g: f64,
    pub penalty: f64,
    pub converged: bool,
    pub file: Option<String>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let sys = build_system(&cfg.spin)?;
        let set = goerz_state_set(sys.dim(), &target_unitary(cfg.gate, sys.dim())?)?;
        let tau = sys.tau();
        Ok(Self { cfg, sys, set, tau })
    }

    fn model(&self, t2: Option<f64>) -> Result<LindbladModel> {
        match t2 {
            Some(t2) => LindbladModel::dephasing(self.sys.dim(), t2 * self.tau),
            None => Ok(LindbladModel::closed()),
        }
    }

    fn fidelity(&self, pulse: &dyn Waveform, t2: Option<f64>) -> Result<f64> {
        evaluate_fidelity(&self.sys, &self.model(t2)?, pulse, &self.set, &self.cfg.propagator)
    }

    /// The monochromatic sequence stretched to `T`, amplitude scaled down.
    pub fn monochromatic(&self, t: f64) -> Result<PulseSequence> {
        PulseSequence::with_duration(&self.sys, &gate_sequence(self.cfg.gate), t * self.tau, self.cfg.control.a_max_mt)
    }

    pub fn template(&self, t: f64) -> Result<FourierPulse> {
        let omega67 = 2.0 * std::f64::consts::PI / self.tau;
        FourierPulse::new(
            t * self.tau,
            self.cfg.control.omega_max_multiplier * omega67,
            self.cfg.control.a_max_mt,
            self.cfg.control.alpha,
        )
    }

    /// Optimizes at duration `t` under dephasing time `t2` (`None`: closed).
    pub fn optimize_pulse(&self, t: f64, t2: Option<f64>) -> Result<OptimizedPulse> {
        let problem = ControlProblem::new(&self.sys, &self.model(t2)?, self.template(t)?, &self.set, &self.cfg.propagator)?;
        let result = optimize(&problem, &self.cfg.optimizer)?;
        let pulse = problem.pulse(&result.best_u)?;
        log::info!(
            "{} T = {t}τ T2 = {t2:?}: G = {:.8} ({:.1} s)",
            self.cfg.gate,
            result.best.g,
            result.wall_time
        );
        let mut out = OptimizedPulse {
            pulse,
            g: result.best.g,
            penalty: result.best.penalty,
            converged: result.converged(),
            file: None,
        };
        if self.cfg.write_pulses {
            let stem = pulse_stem(self.cfg.gate, t, t2);
            let dir = self.cfg.output_dir.join("pulses");
            fs::create_dir_all(&dir)?;
            write_params(&dir.join(format!("{stem}.toml")), &out.pulse)?;
            write_waveform(&dir.join(format!("{stem}.waveform.dat")), &out.pulse, 4096)?;
            write_spectrum(&dir.join(format!("{stem}.spectrum.dat")), &out.pulse, 4096)?;
            write_trace(&dir.join(format!("{stem}.trace.dat")), &result)?;
            out.file = Some(format!("pulses/{stem}.toml"));
        }
        Ok(out)
    }

    /// A single protocol point; `t2` is only a label for closed-system
    /// methods. `QOCT-S-L` optimizes the closed-system pulse
    /// first; the sweep reuses it instead.
    pub fn run_method(&self, method: Method, t: f64, t2: Option<f64>) -> Result<SweepRecord> {
        if method.is_open() && t2.is_none() {
            return Err(Error::Config(format!("{method} needs a T2 value")));
        }
        match method {
            Method::MonoClosed | Method::MonoOpen => {
                let seq = self.monochromatic(t)?;
                let fidelity = self.fidelity(&seq, t2.filter(|_| method.is_open()))?;
                Ok(self.record(method, t, t2, fidelity, 0.0, 0, true, None))
            }
            Method::ClosedClosed | Method::OpenOpen => {
                let p = self.optimize_pulse(t, t2)?;
                self.evaluate_optimized(method, t, t2, &p)
            }
            Method::ClosedOpen => {
                let p = self.optimize_pulse(t, None)?;
                self.evaluate_optimized(method, t, t2, &p)
            }
        }
    }

    fn evaluate_optimized(&self, method: Method, t: f64, t2: Option<f64>, p: &OptimizedPulse) -> Result<SweepRecord> {
        let fidelity = self.fidelity(&p.pulse, t2.filter(|_| method.is_open()))?;
        Ok(self.record(method, t, t2, fidelity, p.penalty, self.cfg.optimizer.restarts, p.converged, p.file.clone()))
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        method: Method,
        t: f64,
        t2: Option<f64>,
        fidelity: f64,
        penalty: f64,
        restarts: usize,
        converged: bool,
        pulse_file: Option<String>,
    ) -> SweepRecord {
        SweepRecord {
            method,
            gate: self.cfg.gate,
            t_over_tau: t,
            t2_over_tau: t2,
            // rounding can push 1 - F̄ a few ulps below zero
            infidelity: Some((1.0 - fidelity).clamp(0.0, 1.0)),
            g: Some(fidelity + penalty),
            penalty: Some(penalty),
            restarts,
            converged,
            pulse_file,
        }
    }
}

fn pulse_stem(gate: Gate, t: f64, t2: Option<f64>) -> String {
    match t2 {
        Some(t2) => format!("{gate}_QOCT-L_T{t:.4}_T2{t2:.4}"),
        None => format!("{gate}_QOCT-S_T{t:.4}"),
    }
}

/// Runs every requested `(method, T, T₂)` point. Closed-system results are
/// computed once per `T` and repeated for every `T₂`. Records come out ordered by
/// method, then `T`, then `T₂`; failures are recorded, not propagated.
pub fn sweep(exp: &Experiment) -> Vec<SweepRecord> {
    let cfg = &exp.cfg;
    let wants = |m: Method| cfg.methods.contains(&m);
    let restarts = cfg.optimizer.restarts;

    let closed_pulses: Vec<Option<std::result::Result<OptimizedPulse, String>>> = cfg
        .durations_tau
        .par_iter()
        .map(|&t| {
            (wants(Method::ClosedClosed) || wants(Method::ClosedOpen))
                .then(|| exp.optimize_pulse(t, None).map_err(|e| e.to_string()))
        })
        .collect();
    let open_points: Vec<(f64, f64)> = if wants(Method::OpenOpen) {
        cfg.durations_tau.iter().flat_map(|&t| cfg.t2_tau.iter().map(move |&t2| (t, t2))).collect()
    } else {
        Vec::new()
    };
    let open_pulses: Vec<std::result::Result<OptimizedPulse, String>> =
        open_points.par_iter().map(|&(t, t2)| exp.optimize_pulse(t, Some(t2)).map_err(|e| e.to_string())).collect();

    let mut tasks: Vec<(Method, f64, Option<f64>)> = Vec::new();
    for &method in Method::ALL.iter().filter(|m| wants(**m)) {
        for &t in &cfg.durations_tau {
            if cfg.t2_tau.is_empty() {
                tasks.push((method, t, None));
            } else {
                tasks.extend(cfg.t2_tau.iter().map(|&t2| (method, t, Some(t2))));
            }
        }
    }

    tasks
        .par_iter()
        .map(|&(method, t, t2)| {
            let ti = cfg.durations_tau.iter().position(|&x| x == t).unwrap();
            let outcome = match method {
                Method::MonoClosed | Method::MonoOpen => exp.run_method(method, t, t2),
                Method::ClosedClosed | Method::ClosedOpen => match closed_pulses[ti].as_ref().unwrap() {
                    Ok(p) => exp.evaluate_optimized(method, t, t2, p),
                    Err(e) => Err(Error::Config(e.clone())),
                },
                Method::OpenOpen => {
                    let k = open_points.iter().position(|&(a, b)| a == t && Some(b) == t2).unwrap();
                    match &open_pulses[k] {
                        Ok(p) => exp.evaluate_optimized(method, t, t2, p),
                        Err(e) => Err(Error::Config(e.clone())),
                    }
                }
            };
            outcome.unwrap_or_else(|e| {
                log::warn!("{method} T = {t}τ T2 = {t2:?} failed: {e}");
                let r = if method.is_monochromatic() { 0 } else { restarts };
                SweepRecord::failed(method, cfg.gate, t, t2, r)
            })
        })
        .collect()
}

pub const RECORDS_FILE: &str = "records.csv";

pub fn write_records(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        w.write_record([
            "method",
            "gate",
            "T_over_tau",
            "T2_over_tau",
            "infidelity",
            "G",
            "penalty",
            "restarts",
            "converged",
            "pulse_file",
        ])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let records = r.deserialize().collect::<std::result::Result<Vec<SweepRecord>, _>>()?;
    Ok(records)
}

/// The sampled-grid minimizer `(T*, 1 - F̄*)` of one curve. Failed points are
/// skipped; ties keep the shorter duration.
pub fn sweet_spot(curve: &[SweepRecord]) -> Result<(f64, f64)> {
    curve
        .iter()
        .filter_map(|r| r.infidelity.map(|x| (r.t_over_tau, x)))
        .fold(None, |best: Option<(f64, f64)>, (t, x)| match best {
            Some((_, b)) if b <= x => best,
            _ => Some((t, x)),
        })
        .ok_or(Error::EmptyCurve)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimumRow {
    pub gate: Gate,
    pub method: Method,
    #[serde(rename = "T2_over_tau")]
    pub t2_over_tau: Option<f64>,
    /// `None` when every point of the curve failed.
    #[serde(rename = "T_star_over_tau")]
    pub t_star: Option<f64>,
    pub min_infidelity: Option<f64>,
}

/// `(gate, method, T₂)` identifying one curve.
pub type CurveKey = (Gate, Method, Option<f64>);

/// Groups records into curves by `(gate, method, T₂)`, in input order of
/// first appearance.
pub fn curves(records: &[SweepRecord]) -> Vec<(CurveKey, Vec<SweepRecord>)> {
    let mut out: Vec<(CurveKey, Vec<SweepRecord>)> = Vec::new();
    for r in records {
        let key = (r.gate, r.method, r.t2_over_tau);
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r.clone()),
            None => out.push((key, vec![r.clone()])),
        }
    }
    out
}

/// Sweet-spot infidelity per `(gate, method, T₂)` for the open-system
/// QOCT curves, sorted by gate, method and `T₂`.
pub fn min_infidelity_vs_t2(records: &[SweepRecord]) -> Vec<MinimumRow> {
    let mut rows: Vec<MinimumRow> = curves(records)
        .into_iter()
        .filter(|((_, m, _), _)| matches!(m, Method::ClosedOpen | Method::OpenOpen))
        .map(|((gate, method, t2), curve)| {
            let best = sweet_spot(&curve).ok();
            MinimumRow { gate, method, t2_over_tau: t2, t_star: best.map(|b| b.0), min_infidelity: best.map(|b| b.1) }
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.gate.name(), a.method)
            .cmp(&(b.gate.name(), b.method))
            .then(a.t2_over_tau.unwrap_or(0.0).total_cmp(&b.t2_over_tau.unwrap_or(0.0)))
    });
    rows
}

/// QOCT-S versus QOCT-L minimum infidelity per `T₂`: `(T₂, S-L, L-L)`.
pub fn qoct_gap_table(rows: &[MinimumRow]) -> Vec<(f64, Option<f64>, Option<f64>)> {
    let mut by_t2: BTreeMap<u64, (f64, Option<f64>, Option<f64>)> = BTreeMap::new();
    for row in rows {
        let Some(t2) = row.t2_over_tau else { continue };
        let entry = by_t2.entry(t2.to_bits()).or_insert((t2, None, None));
        match row.method {
            Method::ClosedOpen => entry.1 = row.min_infidelity,
            Method::OpenOpen => entry.2 = row.min_infidelity,
            _ => {}
        }
    }
    let mut out: Vec<_> = by_t2.into_values().collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: Method, t: f64, t2: Option<f64>, x: Option<f64>) -> SweepRecord {
        SweepRecord {
            infidelity: x,
            converged: x.is_some(),
            ..SweepRecord::failed(method, Gate::U1, t, t2, 0)
        }
    }

    #[test]
    fn method_labels_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
        }
        assert_eq!("qoct-l-l".parse::<Method>().unwrap(), Method::OpenOpen);
        assert!("QOCT-X".parse::<Method>().is_err());
        let labels: Vec<&str> = Method::ALL.iter().map(|m| m.label()).collect();
        assert_eq!(labels, ["M-S", "M-L", "QOCT-S-S", "QOCT-S-L", "QOCT-L-L"]);
    }

    #[test]
    fn sweet_spot_cases() {
        let down: Vec<_> = [0.5, 0.4, 0.3, 0.2].iter().enumerate().map(|(i, &x)| rec(Method::ClosedOpen, i as f64 + 1.0, Some(5.0), Some(x))).collect();
        assert_eq!(sweet_spot(&down).unwrap(), (4.0, 0.2));
        let vee: Vec<_> = [0.5, 0.2, 0.1, 0.3].iter().enumerate().map(|(i, &x)| rec(Method::ClosedOpen, i as f64 + 1.0, Some(5.0), Some(x))).collect();
        assert_eq!(sweet_spot(&vee).unwrap(), (3.0, 0.1));
        assert!(matches!(sweet_spot(&[]), Err(Error::EmptyCurve)));
        assert!(sweet_spot(&[rec(Method::ClosedOpen, 1.0, Some(5.0), None)]).is_err());
    }

    #[test]
    fn minimum_table() {
        let records = vec![
            rec(Method::ClosedOpen, 1.0, Some(5.0), Some(0.3)),
            rec(Method::ClosedOpen, 2.0, Some(5.0), Some(0.2)),
            rec(Method::OpenOpen, 1.0, Some(5.0), Some(0.1)),
            rec(Method::OpenOpen, 2.0, Some(5.0), None),
            rec(Method::ClosedClosed, 1.0, None, Some(0.01)),
        ];
        let rows = min_infidelity_vs_t2(&records);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].method, Method::ClosedOpen);
        assert_eq!(rows[0].min_infidelity, Some(0.2));
        assert_eq!(rows[1].t_star, Some(1.0));
        assert_eq!(qoct_gap_table(&rows), vec![(5.0, Some(0.2), Some(0.1))]);
    }

    #[test]
    fn config_validation() {
        let cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
        for bad in [
            ExperimentConfig { durations_tau: vec![2.0, 1.0], ..cfg.clone() },
            ExperimentConfig { durations_tau: vec![-1.0], ..cfg.clone() },
            ExperimentConfig { t2_tau: vec![0.0], ..cfg.clone() },
            ExperimentConfig { methods: vec![], ..cfg.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert!(ExperimentConfig::from_toml("nonsense = 1").is_err());
        let partial = ExperimentConfig::from_toml("gate = \"Toffoli\"\nmethods = [\"M-S\"]\n").unwrap();
        assert_eq!(partial.gate, Gate::Toffoli);
        assert_eq!(partial.methods, vec![Method::MonoClosed]);
    }
}
