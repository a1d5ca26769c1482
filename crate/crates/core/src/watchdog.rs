//! Watchdog (quantum Zeno) stabilization.
//!
//! At scheduled points the work qubits and the CM mode are projected onto
//! |0>, the correct branch is kept, and the branch probabilities are
//! multiplied into a survival probability. The full-projection variant
//! instead replaces the whole register by the ideal state at each checkpoint.
//!
//! The watchdog fidelity is the probability of the sequence of correct
//! results, i.e. the survival probability. Without checkpoints it falls back
//! to the plain fidelity with the ideal final state.

use crate::circuit::Circuit;
use crate::error::{invalid, Error, Result};
use crate::metrics::fidelity;
use crate::noise::{NoiseModel, RunRng};
use crate::pulse::{execute, PulseSequence};
use crate::statevec::{QuantumState, Site};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WatchdogCheckpoint {
    /// Index of the gate after which the measurement happens.
    pub position: usize,
    pub qubits: Vec<usize>,
    pub include_cm: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WatchdogSchedule {
    checkpoints: Vec<WatchdogCheckpoint>,
}

impl WatchdogSchedule {
    pub fn new(checkpoints: Vec<WatchdogCheckpoint>) -> Result<Self> {
        for w in checkpoints.windows(2) {
            if w[1].position <= w[0].position {
                return Err(invalid(format!(
                    "checkpoint positions must increase strictly ({} then {})",
                    w[0].position, w[1].position
                )));
            }
        }
        Ok(Self { checkpoints })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// CM check after every multi-qubit gate, plus the work qubits listed by
    /// the circuit's own checkpoint markers.
    pub fn from_circuit(circuit: &Circuit) -> Self {
        let checkpoints = circuit
            .ops()
            .iter()
            .enumerate()
            .filter_map(|(position, op)| {
                let qubits = op.checkpoint.as_ref().map(|c| c.qubits.clone()).unwrap_or_default();
                let include_cm = op.gate.is_multi_qubit();
                (include_cm || !qubits.is_empty()).then_some(WatchdogCheckpoint {
                    position,
                    qubits,
                    include_cm,
                })
            })
            .collect();
        Self { checkpoints }
    }

    pub fn checkpoints(&self) -> &[WatchdogCheckpoint] {
        &self.checkpoints
    }

    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    pub fn validate_for(&self, circuit: &Circuit) -> Result<()> {
        for cp in &self.checkpoints {
            if cp.position >= circuit.len() {
                return Err(Error::IndexOutOfRange {
                    index: cp.position,
                    len: circuit.len(),
                });
            }
            if let Some(&q) = cp.qubits.iter().find(|&&q| q >= circuit.n_qubits()) {
                return Err(Error::IndexOutOfRange {
                    index: q,
                    len: circuit.n_qubits(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct WatchdogOutcome {
    /// Correct-branch probability at each checkpoint reached.
    pub probabilities: Vec<f64>,
    pub survival: f64,
    pub final_state: QuantumState,
    /// |<ideal|final>|^2 with the final state renormalized.
    pub terminal_overlap: f64,
    /// The run hit a checkpoint whose correct branch had zero weight.
    pub aborted: bool,
}

impl WatchdogOutcome {
    pub fn fidelity(&self) -> f64 {
        if self.probabilities.is_empty() {
            self.terminal_overlap
        } else {
            self.survival
        }
    }

    /// Running products of the checkpoint probabilities.
    pub fn cumulative(&self) -> Vec<f64> {
        self.probabilities
            .iter()
            .scan(1.0, |acc, p| {
                *acc *= p;
                Some(*acc)
            })
            .collect()
    }
}

/// Projects every site of `cp` onto 0. Returns `None` for an impossible branch.
fn measure(state: &mut QuantumState, cp: &WatchdogCheckpoint) -> Result<Option<f64>> {
    let sites = cp
        .qubits
        .iter()
        .map(|&q| Site::Ion(q))
        .chain(cp.include_cm.then_some(Site::Cm));
    let mut p = 1.0;
    for site in sites {
        match state.project(site, 0) {
            Ok(x) => p *= x,
            Err(Error::ImpossibleOutcome) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(p))
}

fn aborted(state: QuantumState, probabilities: Vec<f64>) -> WatchdogOutcome {
    let mut probabilities = probabilities;
    probabilities.push(0.0);
    WatchdogOutcome {
        probabilities,
        survival: 0.0,
        final_state: state,
        terminal_overlap: 0.0,
        aborted: true,
    }
}

fn prepare(circuit: &Circuit, schedule: &WatchdogSchedule) -> Result<(Vec<PulseSequence>, Vec<Option<usize>>)> {
    schedule.validate_for(circuit)?;
    let gates = circuit.compile_gates()?;
    let mut at = vec![None; gates.len()];
    for (i, cp) in schedule.checkpoints().iter().enumerate() {
        at[cp.position] = Some(i);
    }
    Ok((gates, at))
}

/// Partial watchdog: noisy execution with post-selection on the scheduled
/// sites. `ideal_final` is the state the circuit should end in.
pub fn run_with_watchdog(
    circuit: &Circuit,
    schedule: &WatchdogSchedule,
    noise: &NoiseModel,
    rng: &mut RunRng,
    ideal_final: &QuantumState,
) -> Result<WatchdogOutcome> {
    let (gates, at) = prepare(circuit, schedule)?;
    let mut state = QuantumState::new(circuit.n_qubits())?;
    let mut probabilities = Vec::with_capacity(schedule.len());
    for (seq, slot) in gates.iter().zip(&at) {
        execute(&mut state, seq, Some((noise, &mut *rng)))?;
        if let Some(i) = *slot {
            match measure(&mut state, &schedule.checkpoints()[i])? {
                Some(p) => probabilities.push(p),
                None => return Ok(aborted(state, probabilities)),
            }
        }
    }
    let terminal_overlap = fidelity(&state, ideal_final)?;
    Ok(WatchdogOutcome {
        survival: probabilities.iter().product(),
        probabilities,
        final_state: state,
        terminal_overlap,
        aborted: false,
    })
}

/// Perfect-watchdog control: a noiseless copy runs in lockstep, and at each
/// checkpoint the noisy state is scored against it and then replaced by it.
pub fn run_with_full_projection(
    circuit: &Circuit,
    schedule: &WatchdogSchedule,
    noise: &NoiseModel,
    rng: &mut RunRng,
) -> Result<WatchdogOutcome> {
    let (gates, at) = prepare(circuit, schedule)?;
    let mut state = QuantumState::new(circuit.n_qubits())?;
    let mut ideal = state.clone();
    let mut probabilities = Vec::with_capacity(schedule.len());
    for (seq, slot) in gates.iter().zip(&at) {
        execute(&mut state, seq, Some((noise, &mut *rng)))?;
        execute(&mut ideal, seq, None)?;
        if slot.is_some() {
            let p = fidelity(&state, &ideal)?;
            if p < 1e-30 {
                return Ok(aborted(state, probabilities));
            }
            probabilities.push(p);
            state.clone_from(&ideal);
        }
    }
    let terminal_overlap = fidelity(&state, &ideal)?;
    Ok(WatchdogOutcome {
        survival: probabilities.iter().product(),
        probabilities,
        final_state: state,
        terminal_overlap,
        aborted: false,
    })
}

/// Probability of finding a qubit in |0> after each of `k` rotations by
/// `theta`, measuring after every rotation: cos^(2k)(theta).
pub fn ideal_watchdog_estimate(k: u32, theta: f64) -> f64 {
    theta.cos().powi(2).powi(k as i32)
}

/// The same qubit never measured until the end: cos^2(k theta).
pub fn unwatched_probability(k: u32, theta: f64) -> f64 {
    (k as f64 * theta).cos().powi(2)
}

/// `l` independent qubits, each watched after every one of `n / l` rotations
/// by `eps_bar`.
pub fn independent_qubit_watchdog_estimate(n: f64, l: f64, eps_bar: f64) -> f64 {
    eps_bar.cos().powi(2).powf(n / l).powf(l)
}
