//! Fidelity and linear-entropy measurements over noise ensembles, together
//! with the independent-qubit closed-form estimates they are compared to.
//!
//! The estimates treat the computer as `l` independent qubits, each receiving
//! `n_t / l` erroneous pulses, times a separate factor for the CM mode which
//! sees all `n_cm` sideband pulses.

use crate::error::{invalid, Error, Result};
use crate::pulse::PulseCounts;
use crate::statevec::QuantumState;

/// |<actual|ideal>|^2
pub fn fidelity(actual: &QuantumState, ideal: &QuantumState) -> Result<f64> {
    Ok(actual.overlap(ideal)?.norm_sqr())
}

/// Ensemble-averaged fidelity under random over-rotations with dispersion
/// `sigma`:
/// `[ (1 + exp(-2 n_t sigma^2 / l)) / 2 ]^l * (1 + exp(-2 sigma^2 n_cm)) / 2`.
pub fn mean_fidelity_estimate(n_t: f64, n_cm: f64, l: f64, sigma: f64) -> f64 {
    mean_fidelity_systematic_estimate(n_t, n_cm, l, 0.0, sigma)
}

/// Same as [`mean_fidelity_estimate`] with every exponential multiplied by
/// `cos(2 eps_bar n)` for that factor's pulse count `n` (`n_t / l` per qubit,
/// `n_cm` for the CM).
pub fn mean_fidelity_systematic_estimate(n_t: f64, n_cm: f64, l: f64, eps_bar: f64, sigma: f64) -> f64 {
    let per_qubit = n_t / l;
    let s2 = sigma * sigma;
    let qubit = 0.5 * (1.0 + (2.0 * eps_bar * per_qubit).cos() * (-2.0 * per_qubit * s2).exp());
    let cm = 0.5 * (1.0 + (2.0 * eps_bar * n_cm).cos() * (-2.0 * s2 * n_cm).exp());
    qubit.powf(l) * cm
}

/// `S_lin = l + 1 - log2[ (1 + exp(-4 n_t sigma^2 / l))^l (1 + exp(-4 n_cm sigma^2)) ]`
pub fn linear_entropy_estimate(n_t: f64, n_cm: f64, l: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let qubit = (1.0 + (-4.0 * n_t * s2 / l).exp()).log2();
    let cm = (1.0 + (-4.0 * n_cm * s2).exp()).log2();
    (l + 1.0 - l * qubit - cm).max(0.0)
}

/// Matrix of |<psi_i|psi_j>|^2 over an ensemble.
pub fn pair_overlaps(states: &[QuantumState]) -> Result<Vec<Vec<f64>>> {
    let m = states.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let compute = |&(i, j): &(usize, usize)| -> Result<f64> {
        Ok(states[i].overlap(&states[j])?.norm_sqr())
    };
    #[cfg(feature = "parallel")]
    let values: Vec<f64> = {
        use rayon::prelude::*;
        pairs.par_iter().map(compute).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<f64> = pairs.iter().map(compute).collect::<Result<_>>()?;

    let mut out = vec![vec![0.0; m]; m];
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = states[i].norm_sqr().powi(2);
    }
    for (&(i, j), v) in pairs.iter().zip(values) {
        out[i][j] = v;
        out[j][i] = v;
    }
    Ok(out)
}

/// `-log2(Tr rho^2)` from a pair-overlap matrix, with
/// `Tr rho^2 = (1/M^2) sum_{i,j} |<psi_i|psi_j>|^2`.
pub fn linear_entropy_from_overlaps(overlaps: &[Vec<f64>]) -> Result<f64> {
    let m = overlaps.len();
    if m < 2 {
        return Err(invalid(format!("linear entropy needs at least 2 states, got {m}")));
    }
    let purity: f64 = overlaps.iter().flatten().sum::<f64>() / (m * m) as f64;
    Ok(-purity.log2())
}

/// Linear entropy of the ensemble-averaged density matrix, without forming it.
pub fn linear_entropy_mc(states: &[QuantumState]) -> Result<f64> {
    if states.len() < 2 {
        return Err(invalid(format!("linear entropy needs at least 2 states, got {}", states.len())));
    }
    if let Some(s) = states.iter().find(|s| s.dim() != states[0].dim()) {
        return Err(Error::DimensionMismatch { left: states[0].dim(), right: s.dim() });
    }
    linear_entropy_from_overlaps(&pair_overlaps(states)?)
}

/// Sample mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Outcome of one noise ensemble at fixed (sigma, mean_eps).
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    pub sigma: f64,
    pub mean_eps: f64,
    pub fidelities: Vec<f64>,
    /// |<psi_i|psi_j>|^2, present when the states were kept.
    pub overlaps: Option<Vec<Vec<f64>>>,
    pub counts: PulseCounts,
    pub l: usize,
}

impl EnsembleResult {
    pub fn runs(&self) -> usize {
        self.fidelities.len()
    }

    pub fn n_t(&self) -> usize {
        self.counts.erroneous()
    }

    pub fn n_cm(&self) -> usize {
        self.counts.sideband
    }

    pub fn mean_fidelity(&self) -> f64 {
        mean_std(&self.fidelities).0
    }

    pub fn fidelity_std(&self) -> f64 {
        mean_std(&self.fidelities).1
    }

    pub fn standard_error(&self) -> f64 {
        self.fidelity_std() / (self.runs() as f64).sqrt()
    }

    pub fn fidelity_estimate(&self) -> f64 {
        mean_fidelity_estimate(self.n_t() as f64, self.n_cm() as f64, self.l as f64, self.sigma)
    }

    pub fn systematic_estimate(&self) -> f64 {
        mean_fidelity_systematic_estimate(
            self.n_t() as f64,
            self.n_cm() as f64,
            self.l as f64,
            self.mean_eps,
            self.sigma,
        )
    }

    pub fn entropy_estimate(&self) -> f64 {
        linear_entropy_estimate(self.n_t() as f64, self.n_cm() as f64, self.l as f64, self.sigma)
    }

    pub fn linear_entropy(&self) -> Option<f64> {
        self.overlaps
            .as_ref()
            .and_then(|o| linear_entropy_from_overlaps(o).ok())
    }
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::statevec::BasisLabel;

    fn basis(bits: u64) -> QuantumState {
        QuantumState::basis(2, BasisLabel::new(bits, 0)).unwrap()
    }

    #[test]
    fn fidelity_limits() {
        assert_eq!(fidelity(&basis(1), &basis(1)).unwrap(), 1.0);
        assert_eq!(fidelity(&basis(1), &basis(2)).unwrap(), 0.0);
        assert!(fidelity(&basis(1), &QuantumState::new(3).unwrap()).is_err());
    }

    #[test]
    fn fidelity_estimate_limits_and_reference_value() {
        assert_eq!(mean_fidelity_estimate(15000.0, 10000.0, 18.0, 0.0), 1.0);
        let far = mean_fidelity_estimate(15000.0, 10000.0, 18.0, 10.0);
        assert!((far - 0.5f64.powi(19)).abs() < 1e-15);
        // mpmath, 30 digits: 0.134_823_148_050_631_65...
        let v = mean_fidelity_estimate(1.5e4, 1e4, 18.0, 0.01);
        assert!((v - 0.134_823_148_050_631_65).abs() < 1e-12, "{v}");
    }

    #[test]
    fn systematic_variant() {
        for sigma in [0.0, 0.003, 0.02] {
            assert_eq!(
                mean_fidelity_systematic_estimate(2000.0, 900.0, 18.0, 0.0, sigma),
                mean_fidelity_estimate(2000.0, 900.0, 18.0, sigma)
            );
        }
        // 2 eps n_t / l = pi/2 zeroes the qubit cosine; choose n_cm so the CM cosine is 1
        let (n_t, l) = (1800.0, 18.0);
        let eps = std::f64::consts::FRAC_PI_2 * l / (2.0 * n_t);
        let n_cm = std::f64::consts::PI / eps;
        let v = mean_fidelity_systematic_estimate(n_t, n_cm, l, eps, 0.0);
        assert!((v - 0.5f64.powi(18)).abs() < 1e-12);
        // cosines in [0, 1] can only lower the estimate
        let (n_t, n_cm, eps) = (1000.0, 400.0, 0.0005);
        assert!(
            mean_fidelity_systematic_estimate(n_t, n_cm, 18.0, eps, 0.004)
                <= mean_fidelity_estimate(n_t, n_cm, 18.0, 0.004)
        );
    }

    #[test]
    fn entropy_estimate_limits_and_monotonicity() {
        assert_eq!(linear_entropy_estimate(15000.0, 10000.0, 18.0, 0.0), 0.0);
        assert!((linear_entropy_estimate(15000.0, 10000.0, 18.0, 10.0) - 19.0).abs() < 1e-12);
        // mpmath: 1.607_544_607_152_929_3...
        let v = linear_entropy_estimate(1.5e4, 1e4, 18.0, 0.005);
        assert!((v - 1.607_544_607_152_929_3).abs() < 1e-12, "{v}");
        let mut prev = 0.0;
        for k in 0..200 {
            let s = linear_entropy_estimate(2000.0, 1000.0, 18.0, k as f64 * 0.001);
            assert!(s >= prev - 1e-12 && s <= 19.0);
            prev = s;
        }
    }

    #[test]
    fn fidelity_estimate_monotone_on_grids() {
        let grid = [0.0, 10.0, 100.0, 1000.0, 10000.0];
        for &n_t in &grid {
            for &n_cm in &grid {
                let mut prev = f64::INFINITY;
                for k in 0..50 {
                    let f = mean_fidelity_estimate(n_t, n_cm, 18.0, k as f64 * 0.002);
                    assert!(f <= prev + 1e-15);
                    prev = f;
                }
            }
        }
        for k in 1..50 {
            let s = 0.01;
            let a = mean_fidelity_estimate(100.0 * k as f64, 500.0, 18.0, s);
            let b = mean_fidelity_estimate(100.0 * (k + 1) as f64, 500.0, 18.0, s);
            assert!(b <= a);
            let a = mean_fidelity_estimate(500.0, 100.0 * k as f64, 18.0, s);
            let b = mean_fidelity_estimate(500.0, 100.0 * (k + 1) as f64, 18.0, s);
            assert!(b <= a);
        }
    }

    #[test]
    fn entropy_of_simple_ensembles() {
        let same = vec![basis(3); 5];
        assert!(linear_entropy_mc(&same).unwrap().abs() < 1e-12);
        let two = vec![basis(0), basis(1)];
        assert!((linear_entropy_mc(&two).unwrap() - 1.0).abs() < 1e-12);
        assert!(linear_entropy_mc(&two[..1]).is_err());
    }

    #[test]
    fn entropy_is_permutation_invariant() {
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0] = Complex64::new(0.6, 0.0);
        amps[2] = Complex64::new(0.0, 0.8);
        let mixed = QuantumState::from_amplitudes(2, amps).unwrap();
        let a = vec![basis(0), mixed.clone(), basis(1), basis(0)];
        let b = vec![basis(1), basis(0), basis(0), mixed];
        let (sa, sb) = (linear_entropy_mc(&a).unwrap(), linear_entropy_mc(&b).unwrap());
        assert!((sa - sb).abs() < 1e-12);
    }

    #[test]
    fn ensemble_summary() {
        let r = EnsembleResult {
            sigma: 0.0,
            mean_eps: 0.0,
            fidelities: vec![1.0; 4],
            overlaps: None,
            counts: PulseCounts { resonant: 10, sideband: 20, aux: 5 },
            l: 18,
        };
        assert_eq!((r.mean_fidelity(), r.fidelity_std()), (1.0, 0.0));
        assert_eq!((r.n_t(), r.n_cm()), (30, 20));
        assert_eq!(r.fidelity_estimate(), 1.0);
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}
