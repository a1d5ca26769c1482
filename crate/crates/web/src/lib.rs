//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a flat `Float64Array`; the layouts are documented on
//! the plain Rust functions, which are also what the native tests call.

use iontrap::harness::{ideal_peaks, peak_statistics, CircuitMode, ExperimentConfig};
use iontrap::metrics::{fidelity, linear_entropy_estimate, mean_fidelity_estimate, mean_fidelity_systematic_estimate};
use iontrap::noise::NoiseModel;
use iontrap::pulse::execute;
use iontrap::shor::push_qft;
use iontrap::statevec::QuantumState;
use iontrap::watchdog::{ideal_watchdog_estimate, unwatched_probability};
use wasm_bindgen::prelude::*;

/// `points` rows of `[sigma, mean fidelity, systematic fidelity, linear entropy]` for sigma from 0 to
/// `sigma_max`, with the systematic offset `eps_ratio * sigma`.
pub fn estimate_table(
    n_t: f64,
    n_cm: f64,
    l: f64,
    eps_ratio: f64,
    sigma_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    if points < 2 || sigma_max.is_nan() || sigma_max <= 0.0 || l.is_nan() || l < 1.0 || n_t < 0.0 || n_cm < 0.0 {
        return Err("need points >= 2, sigma_max > 0, l >= 1 and non-negative pulse counts".into());
    }
    let mut out = Vec::with_capacity(4 * points);
    for i in 0..points {
        let sigma = sigma_max * i as f64 / (points - 1) as f64;
        out.extend([
            sigma,
            mean_fidelity_estimate(n_t, n_cm, l, sigma),
            mean_fidelity_systematic_estimate(n_t, n_cm, l, eps_ratio * sigma, sigma),
            linear_entropy_estimate(n_t, n_cm, l, sigma),
        ]);
    }
    Ok(out)
}

/// One noisy run of the factoring circuit. Returns
/// `[fidelity, peak_mass, peak_contrast, n_t, n_cm, P(0), ..., P(q-1)]`,
/// where the fidelity is taken before the Fourier transform.
pub fn run_distribution(sigma: f64, mean_eps: f64, seed: u64, circuit: &str) -> Result<Vec<f64>, String> {
    let circuit: CircuitMode = circuit.parse().map_err(|e: iontrap::Error| e.to_string())?;
    let cfg = ExperimentConfig { circuit, ..ExperimentConfig::default() };
    let go = || -> iontrap::Result<Vec<f64>> {
        let noise = NoiseModel::new(sigma, mean_eps, seed)?;
        let modexp = cfg.modexp_circuit()?;
        let layout = cfg.instance.layout();
        let mut qft = iontrap::circuit::Circuit::with_layout(cfg.instance.n_qubits(), layout.clone())?;
        push_qft(&mut qft, &layout.register1)?;
        let pre = modexp.compile()?;
        let mut rng = noise.run_rng(0);
        let mut state = QuantumState::new(cfg.instance.n_qubits())?;
        execute(&mut state, &pre, Some((&noise, &mut rng)))?;
        let f = fidelity(&state, &cfg.ideal_pre_ft()?)?;
        execute(&mut state, &qft.compile()?, Some((&noise, &mut rng)))?;
        let pc = state.register_distribution(&layout.register1)?;
        let (mass, contrast) = peak_statistics(&pc, &ideal_peaks(&cfg.instance)?);
        let counts = pre.counts();
        let mut out = vec![f, mass, contrast, counts.erroneous() as f64, counts.sideband as f64];
        out.extend(pc);
        Ok(out)
    };
    go().map_err(|e| e.to_string())
}

/// Rows of `[k, watched, unwatched]` for k = 0..=k_max rotations by `theta`.
pub fn zeno_table(theta: f64, k_max: u32) -> Vec<f64> {
    (0..=k_max)
        .flat_map(|k| [k as f64, ideal_watchdog_estimate(k, theta), unwatched_probability(k, theta)])
        .collect()
}

#[wasm_bindgen]
pub fn estimate_curves(
    n_t: f64,
    n_cm: f64,
    l: f64,
    eps_ratio: f64,
    sigma_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    estimate_table(n_t, n_cm, l, eps_ratio, sigma_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn noisy_distribution(sigma: f64, mean_eps: f64, seed: u64, circuit: &str) -> Result<Vec<f64>, JsError> {
    run_distribution(sigma, mean_eps, seed, circuit).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn zeno_curves(theta: f64, k_max: u32) -> Vec<f64> {
    zeno_table(theta, k_max)
}
