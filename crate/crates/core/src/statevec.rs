//! Dense state vector for a chain of two-level ions sharing one center-of-mass
//! (CM) phonon mode restricted to occupations 0 and 1.
//!
//! Index layout: bit 0 is the CM occupation, bit `k + 1` is ion `k`
//! (0 = |g>, 1 = |e>). Rotations follow the pulse propagator
//!
//! ```text
//! U(theta, phi) = [ cos(theta)                 -i e^{-i phi} sin(theta) ]
//!                 [ -i e^{i phi} sin(theta)     cos(theta)              ]
//! ```
//!
//! acting on (|g>, |e>) for resonant pulses and on (|g,1>, |e,0>) for
//! red-sideband pulses. Full population transfer is `theta = pi/2`.

use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// A computational basis label: ion bitmask plus CM occupation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub qubit_bits: u64,
    pub cm: u8,
}

impl BasisLabel {
    pub fn new(qubit_bits: u64, cm: u8) -> Self {
        Self { qubit_bits, cm }
    }

    pub fn index(&self) -> usize {
        ((self.qubit_bits as usize) << 1) | (self.cm as usize & 1)
    }

    pub fn from_index(index: usize) -> Self {
        Self {
            qubit_bits: (index >> 1) as u64,
            cm: (index & 1) as u8,
        }
    }
}

/// Something that can be measured: one ion or the CM mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Site {
    Ion(usize),
    Cm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Largest register supported; 2^(n+1) amplitudes must fit comfortably in memory.
pub const MAX_QUBITS: usize = 26;

impl QuantumState {
    /// All ions in |g>, CM in |0>.
    pub fn new(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, BasisLabel::new(0, 0))
    }

    pub fn basis(n_qubits: usize, label: BasisLabel) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(invalid(format!("unsupported qubit count {n_qubits}")));
        }
        if label.qubit_bits >= (1u64 << n_qubits) || label.cm > 1 {
            return Err(invalid(format!("basis label {label:?} out of range")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << (n_qubits + 1)];
        amplitudes[label.index()] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The caller is responsible for normalization.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(invalid(format!("unsupported qubit count {n_qubits}")));
        }
        let expected = 1usize << (n_qubits + 1);
        if amplitudes.len() != expected {
            return Err(Error::DimensionMismatch {
                left: amplitudes.len(),
                right: expected,
            });
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, label: BasisLabel) -> Complex64 {
        self.amplitudes[label.index()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn ion_mask(&self, ion: usize) -> Result<usize> {
        if ion >= self.n_qubits {
            return Err(Error::IndexOutOfRange {
                index: ion,
                len: self.n_qubits,
            });
        }
        Ok(1 << (ion + 1))
    }

    fn site_mask(&self, site: Site) -> Result<usize> {
        match site {
            Site::Ion(ion) => self.ion_mask(ion),
            Site::Cm => Ok(1),
        }
    }

    /// Carrier pulse on `ion`: rotates (|g>, |e>) of that ion.
    pub fn apply_resonant(&mut self, ion: usize, theta: f64, phi: f64) -> Result<()> {
        let stride = self.ion_mask(ion)?;
        let (c, up, down) = rotation_elements(theta, phi);
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (ground, excited) = block.split_at_mut(stride);
            for (g, e) in ground.iter_mut().zip(excited.iter_mut()) {
                let (a0, a1) = (*g, *e);
                *g = a0 * c + a1 * up;
                *e = a0 * down + a1 * c;
            }
        }
        Ok(())
    }

    /// Red-sideband pulse on `ion`: rotates (|g,1>, |e,0>); |g,0> and |e,1>
    /// are untouched.
    pub fn apply_sideband(&mut self, ion: usize, theta: f64, phi: f64) -> Result<()> {
        let stride = self.ion_mask(ion)?;
        let (c, up, down) = rotation_elements(theta, phi);
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (ground, excited) = block.split_at_mut(stride);
            // |g,1> sits at odd offsets of the lower half, |e,0> at the even
            // offset one below in the upper half.
            let g1 = ground.iter_mut().skip(1).step_by(2);
            let e0 = excited.iter_mut().step_by(2);
            for (g, e) in g1.zip(e0) {
                let (a0, a1) = (*g, *e);
                *g = a0 * c + a1 * up;
                *e = a0 * down + a1 * c;
            }
        }
        Ok(())
    }

    /// Perfect 2pi cycle through the auxiliary level: |g,1> picks up -1.
    pub fn apply_aux_2pi(&mut self, ion: usize) -> Result<()> {
        let stride = self.ion_mask(ion)?;
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            for a in block[..stride].iter_mut().skip(1).step_by(2) {
                *a = -*a;
            }
        }
        Ok(())
    }

    /// Perfect auxiliary-level conditional phase: |g,1> picks up e^{i angle}.
    /// `angle = pi` coincides with [`apply_aux_2pi`](Self::apply_aux_2pi).
    pub fn apply_aux_phase(&mut self, ion: usize, angle: f64) -> Result<()> {
        let stride = self.ion_mask(ion)?;
        let phase = Complex64::from_polar(1.0, angle);
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            for a in block[..stride].iter_mut().skip(1).step_by(2) {
                *a *= phase;
            }
        }
        Ok(())
    }

    /// <self|other>
    pub fn overlap(&self, other: &QuantumState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Probability of finding `site` in `outcome`.
    pub fn probability(&self, site: Site, outcome: u8) -> Result<f64> {
        let mask = self.site_mask(site)?;
        let want = if outcome == 0 { 0 } else { mask };
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == want)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projects `site` onto `outcome`, renormalizes, and returns the
    /// probability of that outcome. The state is left untouched when the
    /// outcome is impossible.
    pub fn project(&mut self, site: Site, outcome: u8) -> Result<f64> {
        if outcome > 1 {
            return Err(invalid(format!("outcome must be 0 or 1, got {outcome}")));
        }
        let prob = self.probability(site, outcome)?;
        if prob < 1e-30 {
            return Err(Error::ImpossibleOutcome);
        }
        let mask = self.site_mask(site)?;
        let want = if outcome == 0 { 0 } else { mask };
        let scale = 1.0 / prob.sqrt();
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & mask == want {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(prob)
    }

    /// Marginal distribution of the selected ions. Bit `i` of the value
    /// indexes `qubits[i]`.
    pub fn register_distribution(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        if qubits.is_empty() {
            return Err(invalid("empty qubit selection"));
        }
        if qubits.len() > 24 {
            return Err(invalid("selection too wide"));
        }
        for (i, &q) in qubits.iter().enumerate() {
            self.ion_mask(q)?;
            if qubits[..i].contains(&q) {
                return Err(Error::DuplicateIndex(q));
            }
        }
        let mut dist = vec![0.0; 1 << qubits.len()];
        for (index, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let value = qubits
                .iter()
                .enumerate()
                .fold(0usize, |v, (bit, &q)| v | (((index >> (q + 1)) & 1) << bit));
            dist[value] += p;
        }
        Ok(dist)
    }

    /// Text dump of nonzero amplitudes as `index,re,im` lines.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut line = String::new();
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() > 1e-15 {
                line.clear();
                let _ = writeln!(line, "{},{:.16e},{:.16e}", i, a.re, a.im);
                out.write_all(line.as_bytes())?;
            }
        }
        Ok(())
    }
}

fn rotation_elements(theta: f64, phi: f64) -> (f64, Complex64, Complex64) {
    let (s, c) = theta.sin_cos();
    let minus_i = Complex64::new(0.0, -1.0);
    let up = minus_i * Complex64::from_polar(s, -phi);
    let down = minus_i * Complex64::from_polar(s, phi);
    (c, up, down)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    use proptest::prelude::*;

    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn plus_state() -> QuantumState {
        let mut amps = vec![c(0.0, 0.0); 4];
        amps[0] = c(FRAC_1_SQRT_2, 0.0);
        amps[2] = c(FRAC_1_SQRT_2, 0.0);
        QuantumState::from_amplitudes(1, amps).unwrap()
    }

    fn random_state(n: usize, seed: u64) -> QuantumState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut amps: Vec<Complex64> = (0..1 << (n + 1))
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        QuantumState::from_amplitudes(n, amps).unwrap()
    }

    #[test]
    fn resonant_full_transfer() {
        let mut s = QuantumState::new(1).unwrap();
        s.apply_resonant(0, FRAC_PI_2, 0.0).unwrap();
        assert!(close(s.amplitude(BasisLabel::new(1, 0)), c(0.0, -1.0), 1e-15));
        assert!(s.amplitude(BasisLabel::new(0, 0)).norm() < 1e-15);
    }

    #[test]
    fn resonant_2pi_area_on_excited() {
        let mut s = QuantumState::basis(1, BasisLabel::new(1, 0)).unwrap();
        s.apply_resonant(0, PI, 1.234).unwrap();
        assert!(close(s.amplitude(BasisLabel::new(1, 0)), c(-1.0, 0.0), 1e-15));
    }

    #[test]
    fn resonant_plus_to_excited() {
        // [cos, -i e^{-i phi} sin; -i e^{i phi} sin, cos] (1,1)/sqrt2 at
        // theta = pi/4, phi = pi/2: first row (1/2)(1 - 1) = 0, second
        // row (1/2)(1 + 1) = 1.
        let mut s = plus_state();
        s.apply_resonant(0, FRAC_PI_4, FRAC_PI_2).unwrap();
        assert!(s.amplitude(BasisLabel::new(0, 0)).norm() < 1e-15);
        assert!(close(s.amplitude(BasisLabel::new(1, 0)), c(1.0, 0.0), 1e-15));
    }

    #[test]
    fn sideband_leaves_uncoupled_states() {
        for label in [BasisLabel::new(0, 0), BasisLabel::new(1, 1)] {
            let mut s = QuantumState::basis(1, label).unwrap();
            s.apply_sideband(0, 0.7, 0.3).unwrap();
            assert_eq!(s.amplitude(label), c(1.0, 0.0));
        }
    }

    #[test]
    fn sideband_transfers_between_ion_and_mode() {
        let mut s = QuantumState::basis(1, BasisLabel::new(0, 1)).unwrap();
        s.apply_sideband(0, FRAC_PI_2, 0.0).unwrap();
        assert!(close(s.amplitude(BasisLabel::new(1, 0)), c(0.0, -1.0), 1e-15));

        let mut s = QuantumState::basis(1, BasisLabel::new(1, 0)).unwrap();
        s.apply_sideband(0, FRAC_PI_2, 0.0).unwrap();
        assert!(close(s.amplitude(BasisLabel::new(0, 1)), c(0.0, -1.0), 1e-15));
    }

    #[test]
    fn sideband_acts_on_every_spectator_configuration() {
        // ion 1 on sideband, ion 0 and 2 as spectators in |e>
        let mut s = QuantumState::basis(3, BasisLabel::new(0b101, 1)).unwrap();
        s.apply_sideband(1, FRAC_PI_2, 0.0).unwrap();
        assert!(close(s.amplitude(BasisLabel::new(0b111, 0)), c(0.0, -1.0), 1e-15));
    }

    #[test]
    fn aux_2pi_phases() {
        let cases = [
            (BasisLabel::new(0, 1), c(-1.0, 0.0)),
            (BasisLabel::new(1, 1), c(1.0, 0.0)),
            (BasisLabel::new(0, 0), c(1.0, 0.0)),
        ];
        for (label, want) in cases {
            let mut s = QuantumState::basis(1, label).unwrap();
            s.apply_aux_2pi(0).unwrap();
            assert_eq!(s.amplitude(label), want);
        }
    }

    #[test]
    fn aux_phase_matches_2pi_at_pi() {
        let mut a = random_state(3, 4);
        let mut b = a.clone();
        a.apply_aux_2pi(2).unwrap();
        b.apply_aux_phase(2, PI).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!(close(*x, *y, 1e-15));
        }
    }

    #[test]
    fn out_of_range_ion() {
        let mut s = QuantumState::new(2).unwrap();
        assert!(matches!(
            s.apply_resonant(2, 0.1, 0.0),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
        assert!(s.apply_sideband(5, 0.1, 0.0).is_err());
        assert!(s.apply_aux_2pi(9).is_err());
    }

    #[test]
    fn overlaps() {
        let g = QuantumState::new(1).unwrap();
        let e = QuantumState::basis(1, BasisLabel::new(1, 0)).unwrap();
        let psi = random_state(4, 1);
        assert!(close(psi.overlap(&psi).unwrap(), c(1.0, 0.0), 1e-12));
        assert_eq!(g.overlap(&e).unwrap(), c(0.0, 0.0));
        assert!(close(g.overlap(&plus_state()).unwrap(), c(FRAC_1_SQRT_2, 0.0), 1e-15));
        assert!(matches!(
            g.overlap(&psi),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection() {
        let mut g = QuantumState::new(1).unwrap();
        assert_eq!(g.project(Site::Ion(0), 0).unwrap(), 1.0);
        assert_eq!(g, QuantumState::new(1).unwrap());

        let mut p = plus_state();
        let prob = p.project(Site::Ion(0), 1).unwrap();
        assert!((prob - 0.5).abs() < 1e-15);
        assert!(close(p.amplitude(BasisLabel::new(1, 0)), c(1.0, 0.0), 1e-15));

        let mut e = QuantumState::basis(1, BasisLabel::new(1, 0)).unwrap();
        assert!(matches!(
            e.project(Site::Ion(0), 0),
            Err(Error::ImpossibleOutcome)
        ));

        let mut m = QuantumState::basis(2, BasisLabel::new(2, 1)).unwrap();
        assert!(m.project(Site::Cm, 0).is_err());
        assert_eq!(m.project(Site::Cm, 1).unwrap(), 1.0);
    }

    #[test]
    fn distribution_of_uniform_state() {
        let mut s = QuantumState::new(2).unwrap();
        for q in 0..2 {
            s.apply_resonant(q, FRAC_PI_4, FRAC_PI_2).unwrap();
        }
        let d = s.register_distribution(&[0, 1]).unwrap();
        for p in d {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn distribution_bit_order_follows_selection() {
        let s = QuantumState::basis(3, BasisLabel::new(0b001, 1)).unwrap();
        assert_eq!(s.register_distribution(&[0, 2]).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(s.register_distribution(&[2, 0]).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            s.register_distribution(&[1, 1]),
            Err(Error::DuplicateIndex(1))
        ));
        assert!(s.register_distribution(&[]).is_err());
    }

    #[test]
    fn dump_lists_nonzero_amplitudes() {
        let s = plus_state();
        let mut buf = Vec::new();
        s.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("0,7.0710678118654757e-1,"));
        assert!(lines[1].starts_with("2,"));
    }

    #[test]
    fn unitarity_over_many_random_pulses() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut s = random_state(6, 7);
        for _ in 0..1000 {
            let ion = rng.random_range(0..6);
            let theta = rng.random_range(-PI..PI);
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            match rng.random_range(0..3) {
                0 => s.apply_resonant(ion, theta, phi).unwrap(),
                1 => s.apply_sideband(ion, theta, phi).unwrap(),
                _ => s.apply_aux_2pi(ion).unwrap(),
            }
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn resonant_inverts(seed in 0u64..1000, ion in 0usize..4, theta in -3.2f64..3.2, phi in 0.0f64..6.0) {
            let start = random_state(4, seed);
            let mut s = start.clone();
            s.apply_resonant(ion, theta, phi).unwrap();
            s.apply_resonant(ion, -theta, phi).unwrap();
            for (a, b) in s.amplitudes().iter().zip(start.amplitudes()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }

        #[test]
        fn sideband_inverts(seed in 0u64..1000, ion in 0usize..4, theta in -3.2f64..3.2, phi in 0.0f64..6.0) {
            let start = random_state(4, seed);
            let mut s = start.clone();
            s.apply_sideband(ion, theta, phi).unwrap();
            s.apply_sideband(ion, -theta, phi).unwrap();
            for (a, b) in s.amplitudes().iter().zip(start.amplitudes()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }

        #[test]
        fn resonant_is_local(seed in 0u64..1000, ion in 0usize..4, theta in -3.2f64..3.2, phi in 0.0f64..6.0) {
            let start = random_state(4, seed);
            let others: Vec<usize> = (0..4).filter(|&q| q != ion).collect();
            let before = start.register_distribution(&others).unwrap();
            let mut s = start;
            s.apply_resonant(ion, theta, phi).unwrap();
            let after = s.register_distribution(&others).unwrap();
            for (a, b) in before.iter().zip(&after) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn sideband_conserves_excitation_number(seed in 0u64..1000, ion in 0usize..4, theta in -3.2f64..3.2, phi in 0.0f64..6.0) {
            // Weight per (ion bit + cm bit) sector, other ions fixed.
            let sectors = |s: &QuantumState| {
                let mut w = vec![0.0; 3 * 16];
                for (i, a) in s.amplitudes().iter().enumerate() {
                    let label = BasisLabel::from_index(i);
                    let ion_bit = ((label.qubit_bits >> ion) & 1) as usize;
                    let rest = (label.qubit_bits & !(1 << ion)) as usize;
                    w[3 * rest + ion_bit + label.cm as usize] += a.norm_sqr();
                }
                w
            };
            let start = random_state(4, seed);
            let mut s = start.clone();
            s.apply_sideband(ion, theta, phi).unwrap();
            for (a, b) in sectors(&start).iter().zip(&sectors(&s)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
