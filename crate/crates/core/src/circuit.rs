//! Gate-level circuit IR and its lowering to pulses.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::pulse::{self, PulseCounts, PulseSequence};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Rotation { qubit: usize, theta: f64, phi: f64 },
    X { qubit: usize },
    Cz { a: usize, b: usize },
    Cnot { control: usize, target: usize },
    Toffoli { c1: usize, c2: usize, target: usize },
    ControlledPhase { control: usize, target: usize, angle: f64 },
    Swap { a: usize, b: usize },
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::Rotation { .. } => "rotation",
            Gate::X { .. } => "x",
            Gate::Cz { .. } => "cz",
            Gate::Cnot { .. } => "cnot",
            Gate::Toffoli { .. } => "toffoli",
            Gate::ControlledPhase { .. } => "cphase",
            Gate::Swap { .. } => "swap",
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rotation { qubit, .. } | Gate::X { qubit } => vec![qubit],
            Gate::Cz { a, b } | Gate::Swap { a, b } => vec![a, b],
            Gate::Cnot { control, target } | Gate::ControlledPhase { control, target, .. } => {
                vec![control, target]
            }
            Gate::Toffoli { c1, c2, target } => vec![c1, c2, target],
        }
    }

    /// Gates that route through the CM mode.
    pub fn is_multi_qubit(&self) -> bool {
        self.qubits().len() > 1
    }

    pub fn compile(&self) -> Result<PulseSequence> {
        Ok(match *self {
            Gate::Rotation { qubit, theta, phi } => pulse::single_qubit_rotation(qubit, theta, phi),
            Gate::X { qubit } => pulse::single_qubit_rotation(qubit, FRAC_PI_2, 0.0),
            Gate::Cz { a, b } => pulse::cz_gate(a, b)?,
            Gate::Cnot { control, target } => pulse::cnot_gate(control, target)?,
            Gate::Toffoli { c1, c2, target } => pulse::toffoli_gate(c1, c2, target)?,
            Gate::ControlledPhase { control, target, angle } => {
                pulse::controlled_phase_gate(control, target, angle)?
            }
            Gate::Swap { a, b } => {
                let mut seq = pulse::cnot_gate(a, b)?;
                seq.append(&pulse::cnot_gate(b, a)?);
                seq.append(&pulse::cnot_gate(a, b)?);
                seq
            }
        })
    }
}

/// Qubits expected in |0> right after the gate carrying this marker.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Checkpoint {
    pub qubits: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateOp {
    pub gate: Gate,
    pub checkpoint: Option<Checkpoint>,
}

impl fmt::Display for GateOp {
    /// `kind,operands...[,angles...][,checkpoint=q1;q2]`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.gate.name())?;
        for q in self.gate.qubits() {
            write!(f, ",{q}")?;
        }
        match self.gate {
            Gate::Rotation { theta, phi, .. } => write!(f, ",{theta:.16e},{phi:.16e}")?,
            Gate::ControlledPhase { angle, .. } => write!(f, ",{angle:.16e}")?,
            _ => {}
        }
        if let Some(cp) = &self.checkpoint {
            let qs: Vec<String> = cp.qubits.iter().map(|q| q.to_string()).collect();
            write!(f, ",checkpoint={}", qs.join(";"))?;
        }
        Ok(())
    }
}

impl FromStr for GateOp {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let mut fields: Vec<&str> = line.trim().split(',').collect();
        let checkpoint = match fields.last() {
            Some(last) if last.starts_with("checkpoint=") => {
                let list = &last["checkpoint=".len()..];
                let qubits = list
                    .split(';')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|_| invalid(format!("bad checkpoint qubit `{s}`"))))
                    .collect::<Result<Vec<usize>>>()?;
                fields.pop();
                Some(Checkpoint { qubits })
            }
            _ => None,
        };
        let kind = fields[0];
        let args = &fields[1..];
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(invalid(format!("`{kind}` expects {n} fields, got {}", args.len())))
            }
        };
        let q = |i: usize| -> Result<usize> {
            args[i].parse().map_err(|_| invalid(format!("bad qubit `{}`", args[i])))
        };
        let x = |i: usize| -> Result<f64> {
            args[i].parse().map_err(|_| invalid(format!("bad angle `{}`", args[i])))
        };
        let gate = match kind {
            "rotation" => {
                arity(3)?;
                Gate::Rotation { qubit: q(0)?, theta: x(1)?, phi: x(2)? }
            }
            "x" => {
                arity(1)?;
                Gate::X { qubit: q(0)? }
            }
            "cz" => {
                arity(2)?;
                Gate::Cz { a: q(0)?, b: q(1)? }
            }
            "cnot" => {
                arity(2)?;
                Gate::Cnot { control: q(0)?, target: q(1)? }
            }
            "toffoli" => {
                arity(3)?;
                Gate::Toffoli { c1: q(0)?, c2: q(1)?, target: q(2)? }
            }
            "cphase" => {
                arity(3)?;
                Gate::ControlledPhase { control: q(0)?, target: q(1)?, angle: x(2)? }
            }
            "swap" => {
                arity(2)?;
                Gate::Swap { a: q(0)?, b: q(1)? }
            }
            other => return Err(Error::UnknownGate(other.to_string())),
        };
        Ok(GateOp { gate, checkpoint })
    }
}

/// Named register layout of the ion chain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RegisterLayout {
    pub register1: Vec<usize>,
    pub register2: Vec<usize>,
    pub work: Vec<usize>,
}

impl RegisterLayout {
    /// Consecutive blocks: register 1 first, then register 2, then work qubits.
    pub fn contiguous(r1: usize, r2: usize, work: usize) -> Self {
        Self {
            register1: (0..r1).collect(),
            register2: (r1..r1 + r2).collect(),
            work: (r1 + r2..r1 + r2 + work).collect(),
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let all = self.register1.iter().chain(&self.register2).chain(&self.work);
        let mut seen = vec![false; n_qubits];
        for &q in all {
            if q >= n_qubits {
                return Err(Error::IndexOutOfRange { index: q, len: n_qubits });
            }
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::DuplicateIndex(q));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    layout: RegisterLayout,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            layout: RegisterLayout::default(),
            ops: Vec::new(),
        }
    }

    pub fn with_layout(n_qubits: usize, layout: RegisterLayout) -> Result<Self> {
        layout.validate(n_qubits)?;
        Ok(Self {
            n_qubits,
            layout,
            ops: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        self.push_op(GateOp { gate, checkpoint: None })
    }

    pub fn push_op(&mut self, op: GateOp) -> Result<&mut Self> {
        let qubits = op.gate.qubits();
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.n_qubits {
                return Err(Error::IndexOutOfRange { index: q, len: self.n_qubits });
            }
            if qubits[..i].contains(&q) {
                return Err(Error::DuplicateIndex(q));
            }
        }
        let angles = match op.gate {
            Gate::Rotation { theta, phi, .. } => vec![theta, phi],
            Gate::ControlledPhase { angle, .. } => vec![angle],
            _ => vec![],
        };
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(invalid("gate angles must be finite"));
        }
        if let Some(cp) = &op.checkpoint {
            if let Some(&q) = cp.qubits.iter().find(|&&q| q >= self.n_qubits) {
                return Err(Error::IndexOutOfRange { index: q, len: self.n_qubits });
            }
        }
        self.ops.push(op);
        Ok(self)
    }

    /// Marks the most recently pushed gate as a checkpoint.
    pub fn mark_checkpoint(&mut self, qubits: Vec<usize>) -> Result<()> {
        if let Some(&q) = qubits.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::IndexOutOfRange { index: q, len: self.n_qubits });
        }
        let last = self
            .ops
            .last_mut()
            .ok_or_else(|| invalid("cannot mark a checkpoint on an empty circuit"))?;
        last.checkpoint = Some(Checkpoint { qubits });
        Ok(())
    }

    /// Appends every gate of `other` (same width) after this circuit's gates.
    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        for op in &other.ops {
            self.push_op(op.clone())?;
        }
        Ok(())
    }

    /// Hadamard as two carrier pulses: a pi/2 y-rotation, then X.
    pub fn push_hadamard(&mut self, qubit: usize) -> Result<()> {
        self.push(Gate::Rotation { qubit, theta: std::f64::consts::FRAC_PI_4, phi: FRAC_PI_2 })?;
        self.push(Gate::X { qubit })?;
        Ok(())
    }

    /// Pulse sequence of each gate, in order.
    pub fn compile_gates(&self) -> Result<Vec<PulseSequence>> {
        self.ops.iter().map(|op| op.gate.compile()).collect()
    }

    pub fn compile(&self) -> Result<PulseSequence> {
        let mut seq = PulseSequence::new();
        for op in &self.ops {
            seq.append(&op.gate.compile()?);
        }
        Ok(seq)
    }

    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for op in &self.ops {
            writeln!(out, "{op}")?;
        }
        Ok(())
    }

    /// Reads a dump produced by [`write_dump`](Self::write_dump).
    pub fn parse_dump(n_qubits: usize, text: &str) -> Result<Circuit> {
        let mut circuit = Circuit::new(n_qubits);
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            circuit.push_op(line.parse()?)?;
        }
        Ok(circuit)
    }
}

pub fn compile(circuit: &Circuit) -> Result<PulseSequence> {
    circuit.compile()
}

pub fn pulse_counts(seq: &PulseSequence) -> PulseCounts {
    seq.counts()
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;
    use proptest::prelude::*;

    use super::*;
    use crate::pulse::execute;
    use crate::statevec::{BasisLabel, QuantumState};

    /// Ideal gate action on a dense 2^n vector (ion bitmask index, no CM).
    fn apply_ideal(gate: &Gate, v: &mut [Complex64]) {
        let bit = |x: usize, q: usize| (x >> q) & 1;
        let n = v.len();
        match *gate {
            Gate::Rotation { qubit, theta, phi } => {
                let i = Complex64::new(0.0, 1.0);
                let (c, s) = (theta.cos(), theta.sin());
                for x in 0..n {
                    if bit(x, qubit) == 0 {
                        let y = x | 1 << qubit;
                        let (a, b) = (v[x], v[y]);
                        v[x] = a * c - i * (-i * phi).exp() * s * b;
                        v[y] = -i * (i * phi).exp() * s * a + b * c;
                    }
                }
            }
            Gate::X { qubit } => {
                for x in 0..n {
                    if bit(x, qubit) == 0 {
                        v.swap(x, x | 1 << qubit);
                    }
                }
            }
            Gate::Cz { a, b } => {
                for (x, amp) in v.iter_mut().enumerate() {
                    if bit(x, a) & bit(x, b) == 1 {
                        *amp = -*amp;
                    }
                }
            }
            Gate::ControlledPhase { control, target, angle } => {
                for (x, amp) in v.iter_mut().enumerate() {
                    if bit(x, control) & bit(x, target) == 1 {
                        *amp *= Complex64::from_polar(1.0, angle);
                    }
                }
            }
            Gate::Cnot { control, target } => {
                for x in 0..n {
                    if bit(x, control) == 1 && bit(x, target) == 0 {
                        v.swap(x, x | 1 << target);
                    }
                }
            }
            Gate::Toffoli { c1, c2, target } => {
                for x in 0..n {
                    if bit(x, c1) & bit(x, c2) == 1 && bit(x, target) == 0 {
                        v.swap(x, x | 1 << target);
                    }
                }
            }
            Gate::Swap { a, b } => {
                for x in 0..n {
                    if bit(x, a) == 1 && bit(x, b) == 0 {
                        v.swap(x, x ^ (1 << a) ^ (1 << b));
                    }
                }
            }
        }
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
        let triple = proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 3).prop_shuffle();
        (0..7u8, triple, -3.2f64..3.2, 0.0f64..6.3).prop_map(|(k, q, t, p)| match k {
            0 => Gate::Rotation { qubit: q[0], theta: t, phi: p },
            1 => Gate::X { qubit: q[0] },
            2 => Gate::Cz { a: q[0], b: q[1] },
            3 => Gate::Cnot { control: q[0], target: q[1] },
            4 => Gate::Toffoli { c1: q[0], c2: q[1], target: q[2] },
            5 => Gate::ControlledPhase { control: q[0], target: q[1], angle: t },
            _ => Gate::Swap { a: q[0], b: q[1] },
        })
    }

    #[test]
    fn empty_circuit_compiles_to_nothing() {
        let seq = Circuit::new(3).compile().unwrap();
        assert!(seq.is_empty());
        assert_eq!(pulse_counts(&seq), PulseCounts::default());
    }

    #[test]
    fn cnot_and_cz_counts() {
        let mut c = Circuit::new(2);
        c.push(Gate::Cnot { control: 0, target: 1 }).unwrap();
        let k = pulse_counts(&c.compile().unwrap());
        assert_eq!((k.resonant, k.sideband, k.aux, k.erroneous(), k.total()), (2, 2, 1, 4, 5));

        let mut c = Circuit::new(2);
        c.push(Gate::Cz { a: 0, b: 1 }).unwrap();
        let k = pulse_counts(&c.compile().unwrap());
        assert_eq!((k.resonant, k.sideband, k.aux, k.erroneous(), k.total()), (0, 2, 1, 2, 3));
    }

    #[test]
    fn push_validates_operands() {
        let mut c = Circuit::new(3);
        assert!(matches!(
            c.push(Gate::Cnot { control: 1, target: 1 }),
            Err(Error::DuplicateIndex(1))
        ));
        assert!(c.push(Gate::X { qubit: 3 }).is_err());
        assert!(c.push(Gate::Rotation { qubit: 0, theta: f64::NAN, phi: 0.0 }).is_err());
        assert!(c.mark_checkpoint(vec![0]).is_err());
    }

    #[test]
    fn layout_must_be_disjoint() {
        let bad = RegisterLayout { register1: vec![0, 1], register2: vec![1], work: vec![] };
        assert!(Circuit::with_layout(3, bad).is_err());
        let too_wide = RegisterLayout::contiguous(2, 2, 2);
        assert!(Circuit::with_layout(5, too_wide).is_err());
        assert!(Circuit::with_layout(6, RegisterLayout::contiguous(2, 2, 2)).is_ok());
    }

    #[test]
    fn dump_round_trip_and_unknown_kind() {
        let mut c = Circuit::new(4);
        c.push(Gate::Toffoli { c1: 0, c2: 1, target: 2 }).unwrap();
        c.push(Gate::ControlledPhase { control: 3, target: 0, angle: 0.25 }).unwrap();
        c.mark_checkpoint(vec![2, 3]).unwrap();
        c.push(Gate::Rotation { qubit: 1, theta: 0.5, phi: 1.5 }).unwrap();
        let mut buf = Vec::new();
        c.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with("checkpoint=2;3"));
        assert_eq!(Circuit::parse_dump(4, &text).unwrap(), c);
        assert!(matches!(
            Circuit::parse_dump(4, "fredkin,0,1,2"),
            Err(Error::UnknownGate(k)) if k == "fredkin"
        ));
    }

    #[test]
    fn hadamard_pair() {
        let mut c = Circuit::new(1);
        c.push_hadamard(0).unwrap();
        let mut s = QuantumState::basis(1, BasisLabel::new(1, 0)).unwrap();
        execute(&mut s, &c.compile().unwrap(), None).unwrap();
        let a = s.amplitude(BasisLabel::new(0, 0));
        let b = s.amplitude(BasisLabel::new(1, 0));
        // H|1> = (|0> - |1>)/sqrt2 up to global phase
        assert!((a.norm_sqr() - 0.5).abs() < 1e-12);
        assert!((a + b).norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn compiled_pulses_match_gate_matrices(gates in proptest::collection::vec(arb_gate(4), 20)) {
            let mut c = Circuit::new(4);
            for g in &gates {
                c.push(*g).unwrap();
            }
            let seq = c.compile().unwrap();
            let mut overall: Option<Complex64> = None;
            for input in 0..16usize {
                let mut s = QuantumState::basis(4, BasisLabel::new(input as u64, 0)).unwrap();
                execute(&mut s, &seq, None).unwrap();
                let mut ideal = vec![Complex64::new(0.0, 0.0); 16];
                ideal[input] = Complex64::new(1.0, 0.0);
                for g in &gates {
                    apply_ideal(g, &mut ideal);
                }
                // CM back in |0>
                let leak: f64 = (0..16).map(|x| s.amplitudes()[(x << 1) | 1].norm_sqr()).sum();
                prop_assert!(leak < 1e-20);
                // one global phase shared by every input
                let (k, _) = ideal.iter().enumerate()
                    .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap();
                let phase = s.amplitudes()[k << 1] / ideal[k];
                let phase = *overall.get_or_insert(phase);
                for (x, want) in ideal.iter().enumerate() {
                    prop_assert!((s.amplitudes()[x << 1] - want * phase).norm() < 1e-10);
                }
            }
        }

        #[test]
        fn compile_is_deterministic_and_additive(
            a in proptest::collection::vec(arb_gate(5), 0..12),
            b in proptest::collection::vec(arb_gate(5), 0..12),
        ) {
            let build = |gs: &[Gate]| {
                let mut c = Circuit::new(5);
                for g in gs {
                    c.push(*g).unwrap();
                }
                c
            };
            let (ca, cb) = (build(&a), build(&b));
            let mut both = ca.clone();
            both.extend(&cb).unwrap();
            prop_assert_eq!(ca.compile().unwrap(), ca.compile().unwrap());
            prop_assert_eq!(
                pulse_counts(&both.compile().unwrap()),
                pulse_counts(&ca.compile().unwrap()) + pulse_counts(&cb.compile().unwrap())
            );
        }
    }
}
