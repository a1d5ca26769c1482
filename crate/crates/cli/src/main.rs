use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use iontrap::harness::{
    self, CircuitMode, ExperimentConfig, MeanEps, WatchdogMode, DEFAULT_SIGMAS, FIG1_SIGMAS, WATCHDOG_EPS_RATIO,
};
use iontrap::shor::FactoringInstance;

/// Pulse-level Monte-Carlo runs of Shor's algorithm on a simulated ion trap.
#[derive(Parser, Debug)]
#[command(name = "iontrap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Register distributions before and after the Fourier transform, one run per sigma.
    Fig1(Common),
    /// Mean fidelity and linear entropy ensembles over a sigma sweep.
    Fig2(Common),
    /// Paired off / partial / full-projection watchdog ensembles.
    Watchdog(Common),
    /// Per-run fidelities under the chosen watchdog mode.
    Run(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Number to factor.
    #[arg(long, default_value_t = 15)]
    n: u64,
    /// Base of the modular exponentiation.
    #[arg(long, default_value_t = 7)]
    y: u64,
    /// Width of the exponent register.
    #[arg(long = "q-bits", default_value_t = 8)]
    q_bits: usize,
    #[arg(long, default_value_t = 6)]
    work_qubits: usize,
    /// Noise dispersion in radians; repeat for a sweep.
    #[arg(long)]
    sigma: Vec<f64>,
    /// Systematic offset in radians.
    #[arg(long, conflicts_with = "mean_eps_ratio")]
    mean_eps: Option<f64>,
    /// Systematic offset as a multiple of sigma.
    #[arg(long)]
    mean_eps_ratio: Option<f64>,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// full, optimized or truncated:K.
    #[arg(long)]
    circuit: Option<CircuitMode>,
    /// off, partial or project.
    #[arg(long, default_value = "off")]
    watchdog: WatchdogMode,
    /// Independent-qubit count for the closed-form estimates (default: all ions).
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Write the gate list and the compiled pulse list.
    #[arg(long)]
    dump_pulses: bool,
    /// Write the final state of run 0 for each sigma.
    #[arg(long)]
    dump_state: bool,
}

impl Common {
    fn config(&self, sigmas: &[f64], circuit: CircuitMode, eps_ratio: Option<f64>) -> iontrap::Result<ExperimentConfig> {
        let instance = FactoringInstance::new(self.n, self.y, self.q_bits, self.work_qubits)?;
        let mean_eps = match (self.mean_eps, self.mean_eps_ratio.or(eps_ratio)) {
            (Some(e), _) => MeanEps::Absolute(e),
            (None, Some(r)) => MeanEps::Ratio(r),
            (None, None) => MeanEps::Absolute(0.0),
        };
        Ok(ExperimentConfig {
            l: self.l.unwrap_or(instance.n_qubits()),
            instance,
            sigmas: if self.sigma.is_empty() { sigmas.to_vec() } else { self.sigma.clone() },
            mean_eps,
            runs: self.runs,
            seed: self.seed,
            circuit: self.circuit.unwrap_or(circuit),
            watchdog: self.watchdog,
            out_dir: self.out.clone(),
            jobs: self.jobs,
            dump_pulses: self.dump_pulses,
            dump_state: self.dump_state,
        })
    }
}

fn check(ok: bool, what: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(format!("invariant violated: {what}"))
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let err = |e: iontrap::Error| e.to_string();
    match cli.command {
        Command::Fig1(c) => {
            let cfg = c.config(&FIG1_SIGMAS, CircuitMode::Full, None).map_err(err)?;
            println!("sigma\tfidelity\tpeak_mass\tpeak_contrast");
            for p in harness::run_fig1(&cfg).map_err(err)? {
                println!("{}\t{:.6}\t{:.6}\t{:.3}", p.sigma, p.fidelity, p.peak_mass, p.peak_contrast);
                let total: f64 = p.pc.iter().sum();
                check((total - 1.0).abs() < 1e-6, format!("P(c) at sigma {} sums to {total}", p.sigma))?;
                if p.sigma == 0.0 && cfg.mean_eps.at(0.0) == 0.0 {
                    check(p.fidelity >= 1.0 - 1e-8, format!("noiseless fidelity {}", p.fidelity))?;
                }
            }
        }
        Command::Fig2(c) => {
            let cfg = c.config(&DEFAULT_SIGMAS, CircuitMode::Full, None).map_err(err)?;
            println!("sigma\tmean_F\tstd\tF_est\tslin_mc\tslin_est");
            for r in harness::run_fig2(&cfg).map_err(err)? {
                let slin = r.linear_entropy().map(|s| format!("{s:.4}")).unwrap_or_else(|| "-".into());
                println!(
                    "{}\t{:.5}\t{:.5}\t{:.5}\t{slin}\t{:.4}",
                    r.sigma,
                    r.mean_fidelity(),
                    r.fidelity_std(),
                    r.fidelity_estimate(),
                    r.entropy_estimate()
                );
                if r.sigma == 0.0 && r.mean_eps == 0.0 {
                    check(r.fidelities.iter().all(|&f| f >= 1.0 - 1e-8), "noiseless fidelity below 1".into())?;
                }
            }
        }
        Command::Watchdog(c) => {
            let cfg = c
                .config(&[0.0, 0.001], CircuitMode::Truncated(3), Some(WATCHDOG_EPS_RATIO))
                .map_err(err)?;
            println!("sigma\tmode\tmean\tstd");
            for s in harness::run_watchdog_study(&cfg).map_err(err)? {
                println!("{}\t{}\t{:.6}\t{:.6}", s.sigma, s.mode, s.mean(), s.std());
                if s.sigma == 0.0 && s.mean_eps == 0.0 {
                    check((s.mean() - 1.0).abs() < 1e-8, format!("noiseless {} watchdog gave {}", s.mode, s.mean()))?;
                }
            }
        }
        Command::Run(c) => {
            let cfg = c.config(&[0.01], CircuitMode::Full, None).map_err(err)?;
            println!("sigma\tmode\tmean\tstd");
            for s in harness::run_experiment(&cfg).map_err(err)? {
                println!("{}\t{}\t{:.6}\t{:.6}", s.sigma, s.mode, s.mean(), s.std());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
