//! Laser pulse instruction set and the Cirac–Zoller style lowering of gates
//! into pulse sequences.
//!
//! Angles use the propagator convention of [`crate::statevec`]: a pulse that
//! fully transfers population ("pi-pulse" in Rabi-area language) has
//! `theta = pi/2`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::fmt;
use std::io::Write;
use std::ops::{Add, AddAssign};

use crate::error::{invalid, Error, Result};
use crate::noise::{NoiseModel, RunRng};
use crate::statevec::QuantumState;

/// Sideband phases of the controlled-Z triple. With both at zero the control
/// picks up (-i)^2 = -1 on its round trip through the CM mode, which the
/// auxiliary -1 on a ground-state target cancels.
pub const CZ_SIDEBAND_PHASES: (f64, f64) = (0.0, 0.0);

/// Carrier phases that conjugate CZ into CNOT: a -pi/2 y-rotation of the
/// target before and a +pi/2 y-rotation after.
pub const CNOT_TARGET_PHASES: (f64, f64) = (3.0 * FRAC_PI_2, FRAC_PI_2);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PulseKind {
    /// Carrier transition |g> <-> |e>.
    Resonant,
    /// Red sideband |g,1> <-> |e,0>.
    Sideband,
    /// Perfect 2pi cycle through the auxiliary level.
    Aux2Pi,
    /// Perfect conditional phase through the auxiliary level, `phi` holds the angle.
    AuxPhase,
}

impl PulseKind {
    pub fn name(self) -> &'static str {
        match self {
            PulseKind::Resonant => "resonant",
            PulseKind::Sideband => "sideband",
            PulseKind::Aux2Pi => "aux2pi",
            PulseKind::AuxPhase => "aux_phase",
        }
    }

    pub fn is_erroneous(self) -> bool {
        matches!(self, PulseKind::Resonant | PulseKind::Sideband)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pulse {
    pub kind: PulseKind,
    pub ion: usize,
    pub theta: f64,
    pub phi: f64,
}

impl Pulse {
    pub fn resonant(ion: usize, theta: f64, phi: f64) -> Self {
        Self {
            kind: PulseKind::Resonant,
            ion,
            theta,
            phi: phi.rem_euclid(TAU),
        }
    }

    pub fn sideband(ion: usize, theta: f64, phi: f64) -> Self {
        Self {
            kind: PulseKind::Sideband,
            ion,
            theta,
            phi: phi.rem_euclid(TAU),
        }
    }

    pub fn aux_2pi(ion: usize) -> Self {
        Self {
            kind: PulseKind::Aux2Pi,
            ion,
            theta: 0.0,
            phi: 0.0,
        }
    }

    pub fn aux_phase(ion: usize, angle: f64) -> Self {
        Self {
            kind: PulseKind::AuxPhase,
            ion,
            theta: 0.0,
            phi: angle.rem_euclid(TAU),
        }
    }

    pub fn erroneous(&self) -> bool {
        self.kind.is_erroneous()
    }

    /// Applies the pulse with explicit (possibly perturbed) parameters.
    /// Auxiliary pulses ignore `theta`.
    pub fn apply_with(&self, state: &mut QuantumState, theta: f64, phi: f64) -> Result<()> {
        match self.kind {
            PulseKind::Resonant => state.apply_resonant(self.ion, theta, phi),
            PulseKind::Sideband => state.apply_sideband(self.ion, theta, phi),
            PulseKind::Aux2Pi => state.apply_aux_2pi(self.ion),
            PulseKind::AuxPhase => state.apply_aux_phase(self.ion, phi),
        }
    }

    pub fn apply(&self, state: &mut QuantumState) -> Result<()> {
        self.apply_with(state, self.theta, self.phi)
    }
}

impl fmt::Display for Pulse {
    /// `kind,ion,theta,phi,erroneous`; fields without meaning for the kind are empty.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.kind.name();
        match self.kind {
            PulseKind::Resonant | PulseKind::Sideband => write!(
                f,
                "{name},{},{:.16e},{:.16e},true",
                self.ion, self.theta, self.phi
            ),
            PulseKind::Aux2Pi => write!(f, "{name},{},,,false", self.ion),
            PulseKind::AuxPhase => write!(f, "{name},{},,{:.16e},false", self.ion, self.phi),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PulseCounts {
    pub resonant: usize,
    pub sideband: usize,
    pub aux: usize,
}

impl PulseCounts {
    pub fn erroneous(&self) -> usize {
        self.resonant + self.sideband
    }

    pub fn total(&self) -> usize {
        self.resonant + self.sideband + self.aux
    }

    fn record(&mut self, kind: PulseKind) {
        match kind {
            PulseKind::Resonant => self.resonant += 1,
            PulseKind::Sideband => self.sideband += 1,
            PulseKind::Aux2Pi | PulseKind::AuxPhase => self.aux += 1,
        }
    }
}

impl Add for PulseCounts {
    type Output = PulseCounts;

    fn add(self, rhs: PulseCounts) -> PulseCounts {
        PulseCounts {
            resonant: self.resonant + rhs.resonant,
            sideband: self.sideband + rhs.sideband,
            aux: self.aux + rhs.aux,
        }
    }
}

impl AddAssign for PulseCounts {
    fn add_assign(&mut self, rhs: PulseCounts) {
        *self = *self + rhs;
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PulseSequence {
    pulses: Vec<Pulse>,
    counts: PulseCounts,
}

impl PulseSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, pulse: Pulse) {
        self.counts.record(pulse.kind);
        self.pulses.push(pulse);
    }

    pub fn append(&mut self, other: &PulseSequence) {
        self.pulses.extend_from_slice(&other.pulses);
        self.counts += other.counts;
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn counts(&self) -> PulseCounts {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// Highest ion index referenced, if any.
    pub fn max_ion(&self) -> Option<usize> {
        self.pulses.iter().map(|p| p.ion).max()
    }

    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in &self.pulses {
            writeln!(out, "{p}")?;
        }
        Ok(())
    }
}

impl FromIterator<Pulse> for PulseSequence {
    fn from_iter<I: IntoIterator<Item = Pulse>>(iter: I) -> Self {
        let mut seq = PulseSequence::new();
        for p in iter {
            seq.push(p);
        }
        seq
    }
}

fn distinct(ions: &[usize]) -> Result<()> {
    for (i, &a) in ions.iter().enumerate() {
        if ions[..i].contains(&a) {
            return Err(Error::DuplicateIndex(a));
        }
    }
    Ok(())
}

pub fn single_qubit_rotation(ion: usize, theta: f64, phi: f64) -> PulseSequence {
    [Pulse::resonant(ion, theta, phi)].into_iter().collect()
}

/// Controlled-Z: the control's excitation is parked in the CM mode while the
/// target's auxiliary transition imprints the conditional sign.
pub fn cz_gate(control: usize, target: usize) -> Result<PulseSequence> {
    distinct(&[control, target])?;
    let (phi1, phi2) = CZ_SIDEBAND_PHASES;
    Ok([
        Pulse::sideband(control, FRAC_PI_2, phi1),
        Pulse::aux_2pi(target),
        Pulse::sideband(control, FRAC_PI_2, phi2),
    ]
    .into_iter()
    .collect())
}

/// diag(1, 1, 1, e^{i angle}) on (control, target).
///
/// The auxiliary step imprints e^{-i angle} on a ground-state target; the
/// return sideband phase `angle + pi` turns the control's round-trip factor
/// -e^{i(phi2 - phi1)} into e^{i angle}.
pub fn controlled_phase_gate(control: usize, target: usize, angle: f64) -> Result<PulseSequence> {
    distinct(&[control, target])?;
    Ok([
        Pulse::sideband(control, FRAC_PI_2, 0.0),
        Pulse::aux_phase(target, -angle),
        Pulse::sideband(control, FRAC_PI_2, angle + PI),
    ]
    .into_iter()
    .collect())
}

pub fn cnot_gate(control: usize, target: usize) -> Result<PulseSequence> {
    let mut seq = single_qubit_rotation(target, FRAC_PI_4, CNOT_TARGET_PHASES.0);
    seq.append(&cz_gate(control, target)?);
    seq.append(&single_qubit_rotation(target, FRAC_PI_4, CNOT_TARGET_PHASES.1));
    Ok(seq)
}

/// diag(1, e^{i angle}) up to global phase: two full-transfer carrier pulses
/// whose phases differ by `angle / 2`.
pub fn phase_rotation(ion: usize, angle: f64) -> PulseSequence {
    [Pulse::resonant(ion, FRAC_PI_2, 0.0), Pulse::resonant(ion, FRAC_PI_2, angle / 2.0)]
        .into_iter()
        .collect()
}

/// Hadamard as a pi/2 y-rotation followed by a carrier X.
pub fn hadamard(ion: usize) -> PulseSequence {
    [Pulse::resonant(ion, FRAC_PI_4, FRAC_PI_2), Pulse::resonant(ion, FRAC_PI_2, 0.0)]
        .into_iter()
        .collect()
}

/// Toffoli from six CNOTs, two Hadamards and seven T / T-dagger phases on the
/// standard network. 48 pulses: 30 resonant, 12 sideband, 6 auxiliary.
pub fn toffoli_gate(c1: usize, c2: usize, target: usize) -> Result<PulseSequence> {
    distinct(&[c1, c2, target])?;
    let t = |ion| phase_rotation(ion, FRAC_PI_4);
    let t_dag = |ion| phase_rotation(ion, -FRAC_PI_4);
    let mut seq = hadamard(target);
    seq.append(&cnot_gate(c2, target)?);
    seq.append(&t_dag(target));
    seq.append(&cnot_gate(c1, target)?);
    seq.append(&t(target));
    seq.append(&cnot_gate(c2, target)?);
    seq.append(&t_dag(target));
    seq.append(&cnot_gate(c1, target)?);
    seq.append(&t(c2));
    seq.append(&t(target));
    seq.append(&hadamard(target));
    seq.append(&cnot_gate(c1, c2)?);
    seq.append(&t(c1));
    seq.append(&t_dag(c2));
    seq.append(&cnot_gate(c1, c2)?);
    Ok(seq)
}

/// Runs `sequence` on `state`. With a noise model every erroneous pulse has
/// its angle and phase perturbed; auxiliary pulses are always exact.
pub fn execute(
    state: &mut QuantumState,
    sequence: &PulseSequence,
    mut noise: Option<(&NoiseModel, &mut RunRng)>,
) -> Result<()> {
    if let Some(max) = sequence.max_ion() {
        if max >= state.n_qubits() {
            return Err(Error::IndexOutOfRange {
                index: max,
                len: state.n_qubits(),
            });
        }
    }
    for pulse in sequence.pulses() {
        match noise.as_mut() {
            Some((model, rng)) if pulse.erroneous() => {
                let (theta, phi) = model.perturb(pulse, rng)?;
                pulse.apply_with(state, theta, phi)?;
            }
            _ => pulse.apply(state)?,
        }
    }
    Ok(())
}

pub(crate) fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {v}")))
    }
}
