use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use qudit_oct::protocol::{
    curves, min_infidelity_vs_t2, qoct_gap_table, read_records, sweep, sweet_spot, write_records, Experiment,
    ExperimentConfig, Method, SweepRecord, RECORDS_FILE,
};
use qudit_oct::pulse::min_duration;
use qudit_oct::pulse::{gate_sequence, Gate};
use qudit_oct::spin::build_system;

#[derive(Parser)]
#[command(name = "qudit-oct", version, about = "Optimal control of a spin qudit under dephasing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the spin model.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Print a default experiment config.
    Config,
    /// Monochromatic sequences only (M-S, M-L).
    Baseline(RunArgs),
    /// Optimize a single protocol point.
    Optimize {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        method: Method,
        /// Duration in units of τ.
        #[arg(long = "t")]
        t: f64,
        /// Dephasing time in units of τ.
        #[arg(long = "t2")]
        t2: Option<f64>,
    },
    /// Full protocol over the configured durations and T2 values.
    Sweep(RunArgs),
    /// Sweet spots and minimum infidelities from a records file.
    Report {
        /// `records.csv` or the directory holding it.
        path: PathBuf,
    },
}

#[derive(Subcommand)]
enum ModelAction {
    Show {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.optimizer.seed = seed;
        }
        Ok(cfg)
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Model { action: ModelAction::Show { config } } => show_model(&load_config(config.as_deref())?),
        Command::Config => {
            print!("{}", ExperimentConfig::default().to_toml()?);
            Ok(())
        }
        Command::Baseline(args) => {
            let mut cfg = args.load()?;
            cfg.methods.retain(|m| m.is_monochromatic());
            if cfg.methods.is_empty() {
                cfg.methods = vec![Method::MonoClosed, Method::MonoOpen];
            }
            run_sweep(cfg)
        }
        Command::Optimize { run, method, t, t2 } => {
            let cfg = run.load()?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            let exp = Experiment::new(cfg)?;
            let record = exp.run_method(method, t, t2)?;
            print_records(&[record]);
            Ok(())
        }
        Command::Sweep(args) => run_sweep(args.load()?),
        Command::Report { path } => {
            let file = if path.is_dir() { path.join(RECORDS_FILE) } else { path };
            let records = read_records(&file).with_context(|| format!("reading {}", file.display()))?;
            report(&records);
            Ok(())
        }
    }
}

fn show_model(cfg: &ExperimentConfig) -> Result<()> {
    let sys = build_system(&cfg.spin)?;
    let tau = sys.tau();
    println!("dimension  {}", sys.dim());
    println!("tau        {:.6e} us", tau);
    println!("\nlevel  energy (rad/us)  E/h (MHz)");
    for (n, e) in sys.energies.iter().enumerate() {
        println!("{n:>5}  {e:>15.4}  {:>10.4}", e / (2.0 * std::f64::consts::PI));
    }
    println!("\ntransition  omega (rad/us)  omega/omega67  |V| (rad/us/mT)");
    let omega67 = 2.0 * std::f64::consts::PI / tau;
    for j in 0..sys.dim() {
        for k in j + 1..sys.dim() {
            let w = sys.transition_frequency(j, k)?;
            println!("    ({j}, {k})  {w:>14.4}  {:>13.4}  {:>15.4}", w / omega67, sys.drive_element(j, k)?.norm());
        }
    }
    println!("\nminimum monochromatic duration at {} mT", cfg.control.a_max_mt);
    for gate in Gate::ALL {
        match min_duration(&sys, &gate_sequence(gate), cfg.control.a_max_mt) {
            Ok(t) => println!("  {gate:<8} {:.4} tau", t / tau),
            Err(e) => println!("  {gate:<8} unavailable: {e}"),
        }
    }
    Ok(())
}

fn run_sweep(cfg: ExperimentConfig) -> Result<()> {
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let exp = Experiment::new(cfg)?;
    let records = sweep(&exp);
    let path = out.join(RECORDS_FILE);
    write_records(&path, &records)?;
    print_records(&records);
    eprintln!("wrote {}", path.display());
    let failed = records.iter().filter(|r| r.infidelity.is_none()).count();
    if failed > 0 {
        eprintln!("{failed} of {} points failed (see converged column)", records.len());
    }
    if records.is_empty() && !exp.cfg.durations_tau.is_empty() {
        bail!("sweep produced no records");
    }
    Ok(())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"))
}

fn print_records(records: &[SweepRecord]) {
    println!("{:<9} {:<8} {:>8} {:>8} {:>11} {:>11} {:>9}", "method", "gate", "T/tau", "T2/tau", "1-F", "G", "converged");
    for r in records {
        println!(
            "{:<9} {:<8} {:>8.3} {:>8} {:>11} {:>11} {:>9}",
            r.method.label(),
            r.gate.name(),
            r.t_over_tau,
            r.t2_over_tau.map_or("-".to_string(), |x| format!("{x:.1}")),
            fmt_opt(r.infidelity),
            fmt_opt(r.g),
            r.converged
        );
    }
}

fn report(records: &[SweepRecord]) {
    println!("sweet spots");
    for ((gate, method, t2), curve) in curves(records) {
        let t2 = t2.map_or("-".to_string(), |x| format!("{x:.1}"));
        match sweet_spot(&curve) {
            Ok((t, x)) => println!("  {gate:<8} {:<9} T2 = {t2:>6}  T* = {t:>7.3} tau  1-F = {x:.4e}", method.label()),
            Err(_) => println!("  {gate:<8} {:<9} T2 = {t2:>6}  no successful points", method.label()),
        }
    }
    let rows = min_infidelity_vs_t2(records);
    if rows.is_empty() {
        return;
    }
    println!("\nminimum infidelity vs T2");
    println!("  {:>8} {:>11} {:>11} {:>11}", "T2/tau", "QOCT-S-L", "QOCT-L-L", "gap");
    for (t2, s, l) in qoct_gap_table(&rows) {
        let gap = s.zip(l).map(|(s, l)| s - l);
        println!("  {t2:>8.1} {:>11} {:>11} {:>11}", fmt_opt(s), fmt_opt(l), fmt_opt(gap));
    }
}
