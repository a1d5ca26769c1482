//! Gaussian phase drift model: every erroneous pulse becomes a
//! `(theta + eps_theta, phi + eps_phi)` pulse with both offsets drawn
//! independently from Normal(mean_eps, sigma^2), in radians of the propagator
//! angle.
//!
//! Each noise realization ("run") draws from its own ChaCha8 stream selected
//! by the run index, so ensembles are reproducible regardless of how runs are
//! scheduled. Normal deviates come from `rand_distr::StandardNormal`
//! (ziggurat), scaled as `mean + sigma * z`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::pulse::{check_finite, Pulse};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    sigma: f64,
    mean_eps: f64,
    master_seed: u64,
}

impl NoiseModel {
    pub fn new(sigma: f64, mean_eps: f64, master_seed: u64) -> Result<Self> {
        check_finite("sigma", sigma)?;
        check_finite("mean_eps", mean_eps)?;
        if sigma < 0.0 {
            return Err(invalid(format!("sigma must be non-negative, got {sigma}")));
        }
        Ok(Self {
            sigma,
            mean_eps,
            master_seed,
        })
    }

    /// No perturbation at all; still consumes draws like any other model.
    pub fn noiseless(master_seed: u64) -> Self {
        Self {
            sigma: 0.0,
            mean_eps: 0.0,
            master_seed,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mean_eps(&self) -> f64 {
        self.mean_eps
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn run_rng(&self, run_index: u64) -> RunRng {
        derive_run_rng(self, run_index)
    }

    /// One offset: `mean_eps + sigma * z`.
    pub fn draw(&self, rng: &mut RunRng) -> f64 {
        rng.draws += 1;
        let z: f64 = rng.inner.sample(StandardNormal);
        self.mean_eps + self.sigma * z
    }

    /// Perturbed `(theta, phi)` for an erroneous pulse. Exactly two draws.
    pub fn perturb(&self, pulse: &Pulse, rng: &mut RunRng) -> Result<(f64, f64)> {
        if !pulse.erroneous() {
            return Err(invalid(format!(
                "{} pulses are modeled as perfect and cannot be perturbed",
                pulse.kind.name()
            )));
        }
        let d_theta = self.draw(rng);
        let d_phi = self.draw(rng);
        Ok((pulse.theta + d_theta, pulse.phi + d_phi))
    }
}

/// Per-run random stream.
#[derive(Clone, Debug)]
pub struct RunRng {
    inner: ChaCha8Rng,
    draws: u64,
}

impl RunRng {
    /// Number of Gaussian offsets drawn so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }
}

/// Stream `run_index` of the ChaCha8 generator keyed by the master seed.
pub fn derive_run_rng(model: &NoiseModel, run_index: u64) -> RunRng {
    let mut inner = ChaCha8Rng::seed_from_u64(model.master_seed);
    inner.set_stream(run_index);
    RunRng { inner, draws: 0 }
}
