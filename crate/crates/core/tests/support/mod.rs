#![allow(dead_code)]

use ladderkit::mbvd::{admittance_sweep, mbvd_from_spec, MbvdParams, ResonatorSpec};
use ladderkit::sweep::{FrequencyGrid, FrequencySweep};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Resonator drawn from the ranges used by the fitting tests.
pub fn random_spec(rng: &mut ChaCha8Rng) -> ResonatorSpec {
    let fs = log_uniform(rng, 1e9, 40e9);
    let k2 = rng.random_range(0.05..0.45);
    let q = rng.random_range(30.0..300.0);
    let c0 = rng.random_range(20e-15..500e-15);
    ResonatorSpec::new(fs, k2, q, c0)
}

/// 2001-point admittance sweep over `[0.5·fs, 1.5·fp]`.
pub fn fit_sweep(spec: &ResonatorSpec, p: &MbvdParams) -> FrequencySweep {
    let grid = FrequencyGrid::linear(0.5 * spec.fs, 1.5 * spec.fp(), 2001).unwrap();
    admittance_sweep(p, grid.frequencies()).unwrap()
}

pub fn synthetic(spec: &ResonatorSpec) -> (MbvdParams, FrequencySweep) {
    let p = mbvd_from_spec(spec).unwrap();
    let s = fit_sweep(spec, &p);
    (p, s)
}

/// Multiplies every admittance sample by `1 + n`, `n` complex Gaussian with
/// standard deviation `sigma` per component.
pub fn with_noise(sweep: &FrequencySweep, sigma: f64, rng: &mut ChaCha8Rng) -> FrequencySweep {
    let normal = Normal::new(0.0, sigma).unwrap();
    let y: Vec<Complex64> = sweep
        .trace("Y")
        .unwrap()
        .iter()
        .map(|v| v * Complex64::new(1.0 + normal.sample(rng), normal.sample(rng)))
        .collect();
    FrequencySweep::new(sweep.frequencies().to_vec())
        .unwrap()
        .with_trace("Y", y)
        .unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

pub fn max_element_error(fit: &MbvdParams, truth: &MbvdParams) -> f64 {
    [
        rel(fit.c0, truth.c0),
        rel(fit.rm, truth.rm),
        rel(fit.lm, truth.lm),
        rel(fit.cm, truth.cm),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}
