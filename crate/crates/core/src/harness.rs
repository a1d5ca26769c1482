//! Experiment driver: noise ensembles, sigma sweeps, the register
//! distributions before and after the Fourier transform, and the watchdog
//! study, each written out as CSV.
//!
//! Runs are independent and each draws from the RNG stream of its run index,
//! so results do not depend on how many worker threads are used.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::circuit::Circuit;
use crate::error::{invalid, Error, Result};
use crate::metrics::{fidelity, mean_std, pair_overlaps, EnsembleResult};
use crate::noise::NoiseModel;
use crate::pulse::{execute, PulseSequence};
use crate::shor::{
    analytic_pc, build_modexp_circuit, ideal_state_truncated, push_qft, FactoringInstance, ModexpOptions,
    Stage,
};
use crate::statevec::QuantumState;
use crate::watchdog::{run_with_full_projection, run_with_watchdog, WatchdogOutcome, WatchdogSchedule};

pub const DEFAULT_SIGMAS: [f64; 6] = [0.0, 0.001, 0.0025, 0.005, 0.01, 0.02];
pub const FIG1_SIGMAS: [f64; 3] = [0.0, 0.01, 0.05];
pub const WIPEOUT_SIGMA: f64 = 0.05;
pub const WATCHDOG_EPS_RATIO: f64 = 1.1;

pub const SWEEP_HEADER: &str = "sigma,mean_eps,runs,mean_fidelity,fidelity_std,eq2_estimate,slin_mc,eq3_estimate,n_t,n_cm,l";
pub const JOINT_HEADER: &str = "j,x,probability";
pub const DISTRIBUTION_HEADER: &str = "c,probability";
pub const WATCHDOG_REPORT_HEADER: &str = "run,checkpoint,probability,cumulative";
pub const WATCHDOG_SUMMARY_HEADER: &str = "sigma,mean_eps,mode,mean_survival,std";
pub const FIG1_SUMMARY_HEADER: &str = "sigma,fidelity,peak_mass,peak_contrast";
pub const RUNS_HEADER: &str = "sigma,mean_eps,run,fidelity,survival,terminal_overlap";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircuitMode {
    Full,
    Truncated(usize),
    /// Multipliers by 1 are left out.
    Optimized,
}

impl FromStr for CircuitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "optimized" => Ok(Self::Optimized),
            _ => {
                let k = s
                    .strip_prefix("truncated:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| invalid(format!("circuit mode must be full, optimized or truncated:K, got `{s}`")))?;
                Ok(Self::Truncated(k))
            }
        }
    }
}

impl fmt::Display for CircuitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Full => write!(f, "full"),
            Self::Truncated(k) => write!(f, "truncated:{k}"),
            Self::Optimized => write!(f, "optimized"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WatchdogMode {
    Off,
    Partial,
    Project,
}

impl WatchdogMode {
    pub const ALL: [WatchdogMode; 3] = [Self::Off, Self::Partial, Self::Project];

    pub fn name(self) -> &'static str {
        match self {
            Self::Off => "off",
            Self::Partial => "partial",
            Self::Project => "project",
        }
    }
}

impl FromStr for WatchdogMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("watchdog mode must be off, partial or project, got `{s}`")))
    }
}

impl fmt::Display for WatchdogMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Systematic offset, either fixed or proportional to sigma.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeanEps {
    Absolute(f64),
    Ratio(f64),
}

impl MeanEps {
    pub fn at(self, sigma: f64) -> f64 {
        match self {
            Self::Absolute(e) => e,
            Self::Ratio(r) => r * sigma,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub instance: FactoringInstance,
    pub sigmas: Vec<f64>,
    pub mean_eps: MeanEps,
    pub runs: usize,
    pub seed: u64,
    pub circuit: CircuitMode,
    pub watchdog: WatchdogMode,
    pub out_dir: PathBuf,
    /// Worker threads; 0 means all available cores.
    pub jobs: usize,
    /// Independent-qubit count used by the closed-form estimates.
    pub l: usize,
    pub dump_pulses: bool,
    pub dump_state: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let instance = FactoringInstance::default();
        Self {
            l: instance.n_qubits(),
            instance,
            sigmas: DEFAULT_SIGMAS.to_vec(),
            mean_eps: MeanEps::Absolute(0.0),
            runs: 20,
            seed: 1,
            circuit: CircuitMode::Full,
            watchdog: WatchdogMode::Off,
            out_dir: PathBuf::from("out"),
            jobs: 0,
            dump_pulses: false,
            dump_state: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.instance.validate()?;
        if self.runs == 0 {
            return Err(invalid("runs must be at least 1"));
        }
        if self.l == 0 {
            return Err(invalid("l must be at least 1"));
        }
        if self.sigmas.is_empty() {
            return Err(invalid("no sigma values given"));
        }
        for &s in &self.sigmas {
            NoiseModel::new(s, self.mean_eps.at(s), self.seed)?;
        }
        self.modexp_options()?;
        Ok(())
    }

    pub fn noise(&self, sigma: f64) -> Result<NoiseModel> {
        NoiseModel::new(sigma, self.mean_eps.at(sigma), self.seed)
    }

    pub fn modexp_options(&self) -> Result<ModexpOptions> {
        let full = ModexpOptions::full(&self.instance);
        Ok(match self.circuit {
            CircuitMode::Full => full,
            CircuitMode::Optimized => ModexpOptions { skip_identity: true, ..full },
            CircuitMode::Truncated(k) => {
                if k == 0 || k > self.instance.q_bits {
                    return Err(invalid(format!(
                        "truncated circuit needs 1..={} multipliers, got {k}",
                        self.instance.q_bits
                    )));
                }
                ModexpOptions::truncated(k)
            }
        })
    }

    pub fn multipliers(&self) -> Result<usize> {
        Ok(self.modexp_options()?.multipliers)
    }

    pub fn modexp_circuit(&self) -> Result<Circuit> {
        build_modexp_circuit(&self.instance, self.modexp_options()?)
    }

    /// Ideal state at the end of the modular exponentiation.
    pub fn ideal_pre_ft(&self) -> Result<QuantumState> {
        ideal_state_truncated(&self.instance, self.multipliers()?, Stage::PreFt)
    }

    fn create_out_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir).map_err(|source| Error::Io {
            path: self.out_dir.clone(),
            source,
        })
    }
}

/// Runs `f(0..runs)` on a pool of `jobs` threads, results in run order.
pub fn map_runs<T, F>(runs: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))?;
        pool.install(|| (0..runs as u64).into_par_iter().map(&f).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        (0..runs as u64).map(f).collect()
    }
}

/// One noise realization of `seq` starting from the all-ground state.
pub fn simulate_run(seq: &PulseSequence, n_qubits: usize, noise: &NoiseModel, run: u64) -> Result<QuantumState> {
    let mut state = QuantumState::new(n_qubits)?;
    let mut rng = noise.run_rng(run);
    execute(&mut state, seq, Some((noise, &mut rng)))?;
    Ok(state)
}

/// Fidelity ensemble of the configured modular exponentiation at `sigma`.
/// With `keep_states` the pairwise overlaps for the linear entropy are kept.
pub fn run_ensemble(config: &ExperimentConfig, sigma: f64, keep_states: bool) -> Result<EnsembleResult> {
    config.validate()?;
    let circuit = config.modexp_circuit()?;
    let seq = circuit.compile()?;
    let ideal = config.ideal_pre_ft()?;
    ensemble_from(config, &seq, &ideal, sigma, keep_states)
}

fn ensemble_from(
    config: &ExperimentConfig,
    seq: &PulseSequence,
    ideal: &QuantumState,
    sigma: f64,
    keep_states: bool,
) -> Result<EnsembleResult> {
    let noise = config.noise(sigma)?;
    let n = config.instance.n_qubits();
    let (fidelities, overlaps) = if keep_states && config.runs >= 2 {
        let states = map_runs(config.runs, config.jobs, |run| simulate_run(seq, n, &noise, run))?;
        let f = states.iter().map(|s| fidelity(s, ideal)).collect::<Result<Vec<_>>>()?;
        (f, Some(pair_overlaps(&states)?))
    } else {
        let f = map_runs(config.runs, config.jobs, |run| fidelity(&simulate_run(seq, n, &noise, run)?, ideal))?;
        (f, None)
    };
    Ok(EnsembleResult {
        sigma,
        mean_eps: noise.mean_eps(),
        fidelities,
        overlaps,
        counts: seq.counts(),
        l: config.l,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn write_lines<I, S>(path: &Path, header: &str, lines: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: fmt::Display,
{
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let mut out = create(path)?;
    writeln!(out, "{header}").map_err(io)?;
    for line in lines {
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

fn sigma_tag(sigma: f64) -> String {
    format!("sigma{sigma}")
}

fn dump_circuit(config: &ExperimentConfig, circuit: &Circuit, seq: &PulseSequence) -> Result<()> {
    let gates = config.out_dir.join("circuit.txt");
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| Error::Io { path: p, source }
    };
    let mut out = create(&gates)?;
    circuit.write_dump(&mut out).and_then(|_| out.flush()).map_err(io(&gates))?;
    let pulses = config.out_dir.join("pulses.csv");
    let mut out = create(&pulses)?;
    seq.write_dump(&mut out).and_then(|_| out.flush()).map_err(io(&pulses))
}

fn dump_state(path: &Path, state: &QuantumState) -> Result<()> {
    let mut out = create(path)?;
    state
        .write_dump(&mut out)
        .and_then(|_| out.flush())
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Summary of one register-1 distribution after the Fourier transform.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig1Point {
    pub sigma: f64,
    /// Fidelity of the pre-transform state.
    pub fidelity: f64,
    /// Total probability on the bins where the ideal distribution has peaks.
    pub peak_mass: f64,
    /// Mean probability of a peak bin relative to the uniform value 1/q.
    pub peak_contrast: f64,
    pub pc: Vec<f64>,
}

/// Ideal peak bins (where the analytic P(c) exceeds 1e-9).
pub fn ideal_peaks(inst: &FactoringInstance) -> Result<Vec<usize>> {
    Ok(analytic_pc(inst)?
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 1e-9)
        .map(|(c, _)| c)
        .collect())
}

/// `(peak_mass, peak_contrast)` of `pc` over `peaks`.
pub fn peak_statistics(pc: &[f64], peaks: &[usize]) -> (f64, f64) {
    let mass: f64 = peaks.iter().map(|&c| pc[c]).sum();
    let contrast = if peaks.is_empty() {
        0.0
    } else {
        mass / peaks.len() as f64 * pc.len() as f64
    };
    (mass, contrast)
}

/// A single noisy run (run index 0) per sigma through the full algorithm:
/// joint distribution of both registers before the transform and P(c) after.
pub fn run_fig1(config: &ExperimentConfig) -> Result<Vec<Fig1Point>> {
    config.validate()?;
    config.create_out_dir()?;
    let inst = &config.instance;
    let layout = inst.layout();
    let modexp = config.modexp_circuit()?;
    let mut qft = Circuit::with_layout(inst.n_qubits(), layout.clone())?;
    push_qft(&mut qft, &layout.register1)?;
    let (pre_seq, post_seq) = (modexp.compile()?, qft.compile()?);
    if config.dump_pulses {
        let mut whole = modexp.clone();
        whole.extend(&qft)?;
        dump_circuit(config, &whole, &whole.compile()?)?;
    }
    let ideal = config.ideal_pre_ft()?;
    let peaks = ideal_peaks(inst)?;
    let q = inst.q() as usize;
    let joint_qubits: Vec<usize> = layout.register1.iter().chain(&layout.register2).copied().collect();

    write_lines(
        &config.out_dir.join("fig1_pc_analytic.csv"),
        DISTRIBUTION_HEADER,
        analytic_pc(inst)?.iter().enumerate().map(|(c, p)| format!("{c},{p:.12e}")),
    )?;

    let mut points = Vec::new();
    for &sigma in &config.sigmas {
        let noise = config.noise(sigma)?;
        let mut rng = noise.run_rng(0);
        let mut state = QuantumState::new(inst.n_qubits())?;
        execute(&mut state, &pre_seq, Some((&noise, &mut rng)))?;
        let f = fidelity(&state, &ideal)?;
        let joint = state.register_distribution(&joint_qubits)?;
        write_lines(
            &config.out_dir.join(format!("fig1_joint_{}.csv", sigma_tag(sigma))),
            JOINT_HEADER,
            joint
                .iter()
                .enumerate()
                .map(|(v, p)| format!("{},{},{p:.12e}", v % q, v / q)),
        )?;
        execute(&mut state, &post_seq, Some((&noise, &mut rng)))?;
        if config.dump_state {
            dump_state(&config.out_dir.join(format!("state_{}.csv", sigma_tag(sigma))), &state)?;
        }
        let pc = state.register_distribution(&layout.register1)?;
        write_lines(
            &config.out_dir.join(format!("fig1_pc_{}.csv", sigma_tag(sigma))),
            DISTRIBUTION_HEADER,
            pc.iter().enumerate().map(|(c, p)| format!("{c},{p:.12e}")),
        )?;
        let (peak_mass, peak_contrast) = peak_statistics(&pc, &peaks);
        points.push(Fig1Point { sigma, fidelity: f, peak_mass, peak_contrast, pc });
    }
    write_lines(
        &config.out_dir.join("fig1_summary.csv"),
        FIG1_SUMMARY_HEADER,
        points
            .iter()
            .map(|p| format!("{},{:.12e},{:.12e},{:.12e}", p.sigma, p.fidelity, p.peak_mass, p.peak_contrast)),
    )?;
    Ok(points)
}

pub fn sweep_row(r: &EnsembleResult) -> String {
    let slin = r.linear_entropy().map(|s| format!("{s:.12e}")).unwrap_or_default();
    format!(
        "{},{},{},{:.12e},{:.12e},{:.12e},{},{:.12e},{},{},{}",
        r.sigma,
        r.mean_eps,
        r.runs(),
        r.mean_fidelity(),
        r.fidelity_std(),
        r.fidelity_estimate(),
        slin,
        r.entropy_estimate(),
        r.n_t(),
        r.n_cm(),
        r.l
    )
}

/// Fidelity and linear entropy ensembles over the sigma list.
pub fn run_fig2(config: &ExperimentConfig) -> Result<Vec<EnsembleResult>> {
    config.validate()?;
    config.create_out_dir()?;
    let circuit = config.modexp_circuit()?;
    let seq = circuit.compile()?;
    if config.dump_pulses {
        dump_circuit(config, &circuit, &seq)?;
    }
    let ideal = config.ideal_pre_ft()?;
    let mut results = Vec::new();
    for &sigma in &config.sigmas {
        results.push(ensemble_from(config, &seq, &ideal, sigma, true)?);
        if config.dump_state {
            let state = simulate_run(&seq, config.instance.n_qubits(), &config.noise(sigma)?, 0)?;
            dump_state(&config.out_dir.join(format!("state_{}.csv", sigma_tag(sigma))), &state)?;
        }
    }
    write_lines(&config.out_dir.join("fig2_sweep.csv"), SWEEP_HEADER, results.iter().map(sweep_row))?;
    Ok(results)
}

/// Reported figure of merit for one watchdog run.
pub fn watchdog_score(outcome: &WatchdogOutcome) -> f64 {
    outcome.fidelity()
}

/// One run under the given watchdog mode. `Off` uses an empty schedule.
pub fn watchdog_run(
    circuit: &Circuit,
    schedule: &WatchdogSchedule,
    mode: WatchdogMode,
    noise: &NoiseModel,
    run: u64,
    ideal: &QuantumState,
) -> Result<WatchdogOutcome> {
    let mut rng = noise.run_rng(run);
    match mode {
        WatchdogMode::Off => run_with_watchdog(circuit, &WatchdogSchedule::empty(), noise, &mut rng, ideal),
        WatchdogMode::Partial => run_with_watchdog(circuit, schedule, noise, &mut rng, ideal),
        WatchdogMode::Project => run_with_full_projection(circuit, schedule, noise, &mut rng),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WatchdogSummary {
    pub sigma: f64,
    pub mean_eps: f64,
    pub mode: WatchdogMode,
    /// Per-run scores in run order.
    pub scores: Vec<f64>,
    pub survivals: Vec<f64>,
    pub terminal_overlaps: Vec<f64>,
}

impl WatchdogSummary {
    pub fn mean(&self) -> f64 {
        mean_std(&self.scores).0
    }

    pub fn std(&self) -> f64 {
        mean_std(&self.scores).1
    }
}

/// Off, partial and full-projection ensembles on matched seeds.
pub fn run_watchdog_study(config: &ExperimentConfig) -> Result<Vec<WatchdogSummary>> {
    config.validate()?;
    config.create_out_dir()?;
    let circuit = config.modexp_circuit()?;
    let schedule = WatchdogSchedule::from_circuit(&circuit);
    let ideal = config.ideal_pre_ft()?;
    if config.dump_pulses {
        dump_circuit(config, &circuit, &circuit.compile()?)?;
    }
    let mut summaries = Vec::new();
    for &sigma in &config.sigmas {
        let noise = config.noise(sigma)?;
        for mode in WatchdogMode::ALL {
            let outcomes = map_runs(config.runs, config.jobs, |run| {
                watchdog_run(&circuit, &schedule, mode, &noise, run, &ideal)
            })?;
            if mode != WatchdogMode::Off {
                let rows = outcomes.iter().enumerate().flat_map(|(run, o)| {
                    o.probabilities
                        .iter()
                        .zip(o.cumulative())
                        .enumerate()
                        .map(move |(k, (p, c))| format!("{run},{k},{p:.15e},{c:.15e}"))
                });
                let name = format!("watchdog_{}_{}.csv", mode.name(), sigma_tag(sigma));
                write_lines(&config.out_dir.join(name), WATCHDOG_REPORT_HEADER, rows)?;
            }
            if config.dump_state {
                if let Some(o) = outcomes.first() {
                    let name = format!("state_{}_{}.csv", mode.name(), sigma_tag(sigma));
                    dump_state(&config.out_dir.join(name), &o.final_state)?;
                }
            }
            summaries.push(WatchdogSummary {
                sigma,
                mean_eps: noise.mean_eps(),
                mode,
                scores: outcomes.iter().map(watchdog_score).collect(),
                survivals: outcomes.iter().map(|o| o.survival).collect(),
                terminal_overlaps: outcomes.iter().map(|o| o.terminal_overlap).collect(),
            });
        }
    }
    write_lines(
        &config.out_dir.join("watchdog_summary.csv"),
        WATCHDOG_SUMMARY_HEADER,
        summaries
            .iter()
            .map(|s| format!("{},{},{},{:.15e},{:.15e}", s.sigma, s.mean_eps, s.mode, s.mean(), s.std())),
    )?;
    Ok(summaries)
}

/// Per-run results of the configured circuit under the configured watchdog
/// mode.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<WatchdogSummary>> {
    config.validate()?;
    config.create_out_dir()?;
    let circuit = config.modexp_circuit()?;
    let schedule = WatchdogSchedule::from_circuit(&circuit);
    let ideal = config.ideal_pre_ft()?;
    if config.dump_pulses {
        dump_circuit(config, &circuit, &circuit.compile()?)?;
    }
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for &sigma in &config.sigmas {
        let noise = config.noise(sigma)?;
        let outcomes = map_runs(config.runs, config.jobs, |run| {
            watchdog_run(&circuit, &schedule, config.watchdog, &noise, run, &ideal)
        })?;
        if config.dump_state {
            let name = format!("state_{}.csv", sigma_tag(sigma));
            dump_state(&config.out_dir.join(name), &outcomes[0].final_state)?;
        }
        for (run, o) in outcomes.iter().enumerate() {
            rows.push(format!(
                "{sigma},{},{run},{:.15e},{:.15e},{:.15e}",
                noise.mean_eps(),
                watchdog_score(o),
                o.survival,
                o.terminal_overlap
            ));
        }
        summaries.push(WatchdogSummary {
            sigma,
            mean_eps: noise.mean_eps(),
            mode: config.watchdog,
            scores: outcomes.iter().map(watchdog_score).collect(),
            survivals: outcomes.iter().map(|o| o.survival).collect(),
            terminal_overlaps: outcomes.iter().map(|o| o.terminal_overlap).collect(),
        });
    }
    write_lines(&config.out_dir.join("runs.csv"), RUNS_HEADER, rows)?;
    Ok(summaries)
}
