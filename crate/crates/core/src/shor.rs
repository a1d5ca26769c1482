//! Order-finding circuit for N = 15 and its classical surroundings.
//!
//! Register 1 (exponent, `q_bits` ions) starts in a uniform superposition,
//! register 2 (`L` ions) in |1>. Multiplier `k` multiplies register 2 by
//! `y^(2^k) mod N`, controlled on exponent bit `k`.
//!
//! Because N = 2^L - 1, every unit mod N is `±2^m`: multiplying by `2^m` is a
//! cyclic rotation of the L bits and negation is bitwise complement. A
//! controlled multiplier therefore XOR-accumulates the rotated (and possibly
//! complemented) bits of register 2 into a clean accumulator of work qubits,
//! swaps accumulator and register under control, then clears the accumulator
//! by accumulating the inverse multiple of the new register. Every multiplier
//! leaves the work qubits in |0>, which is where watchdog checkpoints go.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use rand::Rng;

use crate::circuit::{Circuit, Gate, RegisterLayout};
use crate::error::{invalid, Error, Result};
use crate::statevec::{BasisLabel, QuantumState};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactoringInstance {
    pub n: u64,
    pub y: u64,
    /// Width of register 1; q = 2^q_bits.
    pub q_bits: usize,
    /// Work qubits available to the multipliers.
    pub work_qubits: usize,
}

impl Default for FactoringInstance {
    fn default() -> Self {
        Self {
            n: 15,
            y: 7,
            q_bits: 8,
            work_qubits: 6,
        }
    }
}

impl FactoringInstance {
    pub fn new(n: u64, y: u64, q_bits: usize, work_qubits: usize) -> Result<Self> {
        let inst = Self {
            n,
            y,
            q_bits,
            work_qubits,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || self.n >= 1 << 20 {
            return Err(invalid(format!("N = {} out of supported range", self.n)));
        }
        if self.y < 2 || self.y >= self.n || gcd(self.y, self.n) != 1 {
            return Err(invalid(format!("y = {} must be in (1, N) and coprime to N = {}", self.y, self.n)));
        }
        if self.q_bits == 0 || self.q_bits > 20 {
            return Err(invalid(format!("q_bits = {} out of range", self.q_bits)));
        }
        let (q, n2) = (self.q(), self.n * self.n);
        if q < n2 || q >= 2 * n2 {
            return Err(invalid(format!("q = {q} must satisfy N^2 <= q < 2 N^2")));
        }
        Ok(())
    }

    pub fn q(&self) -> u64 {
        1 << self.q_bits
    }

    /// Bits of N, the width of register 2.
    pub fn l(&self) -> usize {
        (64 - self.n.leading_zeros()) as usize
    }

    pub fn n_qubits(&self) -> usize {
        self.q_bits + self.l() + self.work_qubits
    }

    pub fn layout(&self) -> RegisterLayout {
        RegisterLayout::contiguous(self.q_bits, self.l(), self.work_qubits)
    }

    /// Register-2 value reached from exponent `j` when only the first
    /// `multipliers` exponent bits are used.
    pub fn modexp_value(&self, j: u64, multipliers: usize) -> u64 {
        let mask = if multipliers >= 64 { u64::MAX } else { (1u64 << multipliers) - 1 };
        mod_pow(self.y, j & mask, self.n)
    }

    /// Basis label of |j>_1 |x>_2 |0>_work |0>_CM.
    pub fn label(&self, j: u64, x: u64) -> BasisLabel {
        BasisLabel::new(j | (x << self.q_bits), 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModexpOptions {
    /// Number of controlled multipliers, 1..=q_bits.
    pub multipliers: usize,
    /// Skip multipliers whose constant is 1.
    pub skip_identity: bool,
}

impl ModexpOptions {
    pub fn full(inst: &FactoringInstance) -> Self {
        Self {
            multipliers: inst.q_bits,
            skip_identity: false,
        }
    }

    pub fn truncated(multipliers: usize) -> Self {
        Self {
            multipliers,
            skip_identity: false,
        }
    }
}

/// `a ≡ (-1)^negate * 2^shift (mod 2^L - 1)`
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnitDecomposition {
    pub shift: usize,
    pub negate: bool,
}

pub fn decompose_unit(a: u64, n: u64) -> Result<UnitDecomposition> {
    let l = (64 - n.leading_zeros()) as usize;
    if n != (1 << l) - 1 {
        return Err(Error::Construction(format!(
            "multiplier construction needs N = 2^L - 1, got N = {n}"
        )));
    }
    for shift in 0..l {
        let p = (1u64 << shift) % n;
        if p == a % n {
            return Ok(UnitDecomposition { shift, negate: false });
        }
        if (n - p) % n == a % n {
            return Ok(UnitDecomposition { shift, negate: true });
        }
    }
    Err(Error::Construction(format!("{a} is not ±2^m mod {n}")))
}

/// Appends `acc ^= ctrl ∧ bits(a · x)` for `a = (-1)^negate 2^shift`.
fn accumulate_multiple(
    c: &mut Circuit,
    ctrl: usize,
    x: &[usize],
    acc: &[usize],
    unit: UnitDecomposition,
) -> Result<()> {
    let l = x.len();
    for j in 0..l {
        let src = x[(j + l - unit.shift % l) % l];
        c.push(Gate::Toffoli { c1: ctrl, c2: src, target: acc[j] })?;
        if unit.negate {
            c.push(Gate::Cnot { control: ctrl, target: acc[j] })?;
        }
    }
    Ok(())
}

fn push_controlled_multiplier(
    c: &mut Circuit,
    ctrl: usize,
    x: &[usize],
    acc: &[usize],
    a: u64,
    n: u64,
) -> Result<()> {
    let unit = decompose_unit(a, n)?;
    let l = x.len();
    accumulate_multiple(c, ctrl, x, acc, unit)?;
    // controlled swap x <-> acc
    for (&xj, &aj) in x.iter().zip(acc) {
        c.push(Gate::Cnot { control: aj, target: xj })?;
        c.push(Gate::Toffoli { c1: ctrl, c2: xj, target: aj })?;
        c.push(Gate::Cnot { control: aj, target: xj })?;
    }
    let inverse = UnitDecomposition {
        shift: (l - unit.shift % l) % l,
        negate: unit.negate,
    };
    accumulate_multiple(c, ctrl, x, acc, inverse)
}

/// Uniform superposition on register 1, |1> on register 2, then the
/// controlled multipliers. Each multiplier's last gate is a checkpoint for
/// all work qubits.
pub fn build_modexp_circuit(inst: &FactoringInstance, opts: ModexpOptions) -> Result<Circuit> {
    inst.validate()?;
    if opts.multipliers == 0 || opts.multipliers > inst.q_bits {
        return Err(invalid(format!(
            "multiplier count must be in 1..={}, got {}",
            inst.q_bits, opts.multipliers
        )));
    }
    let l = inst.l();
    if inst.work_qubits < l {
        return Err(Error::Construction(format!(
            "multipliers need {l} work qubits, only {} available",
            inst.work_qubits
        )));
    }
    let layout = inst.layout();
    let mut c = Circuit::with_layout(inst.n_qubits(), layout.clone())?;
    for &q in &layout.register1 {
        c.push(Gate::Rotation { qubit: q, theta: FRAC_PI_4, phi: FRAC_PI_2 })?;
    }
    c.push(Gate::X { qubit: layout.register2[0] })?;
    let acc = &layout.work[..l];
    let mut a = inst.y % inst.n;
    for k in 0..opts.multipliers {
        if !(opts.skip_identity && a == 1) {
            push_controlled_multiplier(&mut c, layout.register1[k], &layout.register2, acc, a, inst.n)?;
            c.mark_checkpoint(layout.work.clone())?;
        }
        a = a * a % inst.n;
    }
    Ok(c)
}

/// Appends a QFT on `qubits` (bit k of the register value on `qubits[k]`),
/// mapping |j> to sum_c e^{2 pi i j c / 2^n} |c> / sqrt(2^n).
pub fn push_qft(c: &mut Circuit, qubits: &[usize]) -> Result<()> {
    let n = qubits.len();
    for i in (0..n).rev() {
        c.push_hadamard(qubits[i])?;
        for k in (0..i).rev() {
            c.push(Gate::ControlledPhase {
                control: qubits[k],
                target: qubits[i],
                angle: PI / (1u64 << (i - k)) as f64,
            })?;
        }
    }
    for i in 0..n / 2 {
        c.push(Gate::Swap { a: qubits[i], b: qubits[n - 1 - i] })?;
    }
    Ok(())
}

pub fn build_qft_circuit(bits: usize) -> Result<Circuit> {
    if bits == 0 {
        return Err(invalid("QFT needs at least one qubit"));
    }
    let mut c = Circuit::new(bits);
    push_qft(&mut c, &(0..bits).collect::<Vec<_>>())?;
    Ok(c)
}

/// Modular exponentiation followed by the QFT on register 1.
pub fn build_factoring_circuit(inst: &FactoringInstance, opts: ModexpOptions) -> Result<Circuit> {
    let mut c = build_modexp_circuit(inst, opts)?;
    let r1 = c.layout().register1.clone();
    push_qft(&mut c, &r1)?;
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// sum_j |j>|y^j mod N> / sqrt(q)
    PreFt,
    /// Register 1 of `PreFt` Fourier transformed.
    PostFt,
}

/// Closed-form ideal state after `multipliers` multipliers (and the QFT for
/// `PostFt`). Work qubits and CM in |0>.
pub fn ideal_state_truncated(
    inst: &FactoringInstance,
    multipliers: usize,
    stage: Stage,
) -> Result<QuantumState> {
    inst.validate()?;
    let q = inst.q();
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (inst.n_qubits() + 1)];
    match stage {
        Stage::PreFt => {
            let a = 1.0 / (q as f64).sqrt();
            for j in 0..q {
                let x = inst.modexp_value(j, multipliers);
                amps[inst.label(j, x).index()] = Complex64::new(a, 0.0);
            }
        }
        Stage::PostFt => {
            for (x, c, amp) in post_ft_amplitudes(inst, multipliers) {
                amps[inst.label(c, x).index()] = amp;
            }
        }
    }
    QuantumState::from_amplitudes(inst.n_qubits(), amps)
}

pub fn ideal_state(inst: &FactoringInstance, stage: Stage) -> Result<QuantumState> {
    ideal_state_truncated(inst, inst.q_bits, stage)
}

/// (x, c, amplitude) with amplitude = (1/q) sum_{j : f(j) = x} e^{2 pi i j c / q}.
fn post_ft_amplitudes(inst: &FactoringInstance, multipliers: usize) -> Vec<(u64, u64, Complex64)> {
    let q = inst.q();
    let roots: Vec<Complex64> = (0..q)
        .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / q as f64))
        .collect();
    let mut by_value: Vec<Vec<u64>> = vec![Vec::new(); inst.n as usize];
    for j in 0..q {
        by_value[inst.modexp_value(j, multipliers) as usize].push(j);
    }
    let mut out = Vec::new();
    for (x, js) in by_value.iter().enumerate().filter(|(_, js)| !js.is_empty()) {
        for c in 0..q {
            let sum: Complex64 = js.iter().map(|&j| roots[((j * c) % q) as usize]).sum();
            out.push((x as u64, c, sum / q as f64));
        }
    }
    out
}

/// P(c) for a measurement of register 1 after the Fourier transform.
pub fn analytic_pc(inst: &FactoringInstance) -> Result<Vec<f64>> {
    inst.validate()?;
    let mut pc = vec![0.0; inst.q() as usize];
    for (_, c, amp) in post_ft_amplitudes(inst, inst.q_bits) {
        pc[c as usize] += amp.norm_sqr();
    }
    Ok(pc)
}

/// Draws `shots` register values from a distribution.
pub fn sample_measurements<R: Rng>(dist: &[f64], shots: usize, rng: &mut R) -> Vec<u64> {
    let total: f64 = dist.iter().sum();
    (0..shots)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            for (c, &p) in dist.iter().enumerate() {
                if u < p {
                    return c as u64;
                }
                u -= p;
            }
            (dist.len() - 1) as u64
        })
        .collect()
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

pub fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut b = base as u128 % m;
    let mut acc = 1u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Convergents p/d of the continued fraction of num/den.
pub fn convergents(num: u64, den: u64) -> Vec<(u64, u64)> {
    let (mut a, mut b) = (num, den);
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut out = Vec::new();
    while b != 0 {
        let t = a / b;
        (a, b) = (b, a % b);
        (h0, h1) = (h1, t * h1 + h0);
        (k0, k1) = (k1, t * k1 + k0);
        out.push((h1, k1));
    }
    out
}

/// Smallest divisor of `r` that still satisfies y^d = 1 mod N.
fn minimize_order(inst: &FactoringInstance, mut r: u64) -> u64 {
    let mut p = 2;
    while p <= r {
        while r.is_multiple_of(p) && mod_pow(inst.y, r / p, inst.n) == 1 {
            r /= p;
        }
        p += 1;
    }
    r
}

/// Recovers the order of y from measured register-1 values.
pub fn extract_order(peaks: &[u64], inst: &FactoringInstance) -> Result<u64> {
    inst.validate()?;
    let q = inst.q();
    let mut distinct: Vec<u64> = peaks.iter().map(|c| c % q).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.iter().all(|&c| c == 0) {
        return Err(Error::Inconclusive("c = 0 carries no order information".into()));
    }
    let mut candidates = Vec::new();
    if distinct.len() >= 2 {
        let spacing = distinct
            .windows(2)
            .fold(q, |g, w| gcd(g, w[1] - w[0]));
        if q.is_multiple_of(spacing) {
            candidates.push(q / spacing);
        }
    }
    let from_fractions = distinct
        .iter()
        .filter(|&&c| c != 0)
        .filter_map(|&c| {
            convergents(c, q)
                .into_iter()
                .map(|(_, d)| d)
                .rfind(|&d| d > 0 && d < inst.n)
        })
        .fold(1, lcm);
    candidates.push(from_fractions);
    for r in candidates {
        let mut m = r;
        while m > 0 && m <= inst.n {
            if mod_pow(inst.y, m, inst.n) == 1 {
                return Ok(minimize_order(inst, m));
            }
            m += r;
        }
    }
    Err(Error::Inconclusive(format!("no order candidate from peaks {distinct:?}")))
}

/// `(gcd(y^(r/2) - 1, N), gcd(y^(r/2) + 1, N))`
pub fn factors_from_order(inst: &FactoringInstance, r: u64) -> Result<(u64, u64)> {
    if r == 0 || r % 2 == 1 {
        return Err(Error::Retry { r });
    }
    let h = mod_pow(inst.y, r / 2, inst.n);
    if h == inst.n - 1 || h == 1 {
        return Err(Error::Retry { r });
    }
    let p = gcd(h + inst.n - 1, inst.n);
    let q = gcd(h + 1, inst.n);
    if p == 1 || p == inst.n || q == 1 || q == inst.n {
        return Err(Error::Retry { r });
    }
    Ok((p, q))
}
