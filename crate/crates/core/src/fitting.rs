//! Least-squares extraction of MBVD element values from measured one-port
//! admittance.
//!
//! The fit minimizes `Σ wᵢ·|Y_model(fᵢ) − Y_meas(fᵢ)|²` with a bounded-free
//! simplex search over the logarithms of the element values, so every fitted
//! element stays strictly positive. The search is restarted from its own
//! result until a restart no longer lowers the objective by more than the
//! relative tolerance.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mbvd::{admittance, extract_fs_fp_from_trace, MbvdError, MbvdParams};
use crate::metrics::{resonator_report, ResonatorReport};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::sweep::{FrequencySweep, SweepError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error(transparent)]
    Resonator(#[from] MbvdError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),
    #[error("objective is not finite at the initial point")]
    BadInitialPoint,
    #[error("invalid fit options: {0}")]
    InvalidOptions(String),
}

/// Fitted log-parameters stay within this many e-folds of their seeds.
const LOG_SPAN: f64 = 60.0;

/// Admittance floor of the magnitude-normalized weights, S.
pub const WEIGHT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    Uniform,
    /// `wᵢ = 1/max(|Yᵢ|, 1 µS)`.
    #[default]
    MagnitudeNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Cap on simplex restarts.
    pub max_iterations: usize,
    /// A restart that lowers the objective by less than this fraction ends
    /// the fit as converged.
    pub tolerance: f64,
    pub weighting: Weighting,
    /// Also fit the routing parasitics `rs` and `ls`.
    pub fit_parasitics: bool,
    /// Optional `(f_min, f_max)` window in Hz; the full sweep by default.
    pub window: Option<(f64, f64)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 40,
            tolerance: 1e-9,
            weighting: Weighting::default(),
            fit_parasitics: false,
            window: None,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<(), FitError> {
        if self.max_iterations < 1 {
            return Err(FitError::InvalidOptions("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(FitError::InvalidOptions("tolerance must be > 0".into()));
        }
        if let Some((lo, hi)) = self.window {
            if !(lo < hi) {
                return Err(FitError::InvalidOptions(format!("empty window [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: MbvdParams,
    /// RMS complex admittance error, S.
    pub residual: f64,
    pub converged: bool,
    /// Simplex restarts performed.
    pub iterations: usize,
    /// Best weighted objective after every accepted simplex step.
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Starting point for [`fit_mbvd`] read directly off the trace.
///
/// `fs` and `fp` come from the admittance extrema. `c0` is the median of
/// `Im(Y)/ω` over the lowest tenth of the sweep, with the motional branch's
/// lossless contribution `cm/(1 − f²/fs²)` divided out. `rm = 1/max Re(Y)`;
/// routing parasitics start at zero.
pub fn initial_guess(sweep: &FrequencySweep) -> Result<MbvdParams, FitError> {
    let freqs = sweep.frequencies();
    let y = sweep.require("Y")?;
    let (fs, fp) = extract_fs_fp_from_trace(freqs, y)?;
    let ratio = fp * fp / (fs * fs) - 1.0;

    let decile = (freqs.len() / 10).max(1);
    let mut samples: Vec<f64> = freqs[..decile]
        .iter()
        .zip(&y[..decile])
        .filter(|(f, _)| **f < fs)
        .map(|(f, v)| {
            let x = f / fs;
            v.im / (2.0 * PI * f) / (1.0 + ratio / (1.0 - x * x))
        })
        .filter(|c| c.is_finite())
        .collect();
    if samples.is_empty() {
        return Err(FitError::DegenerateTrace("no samples below resonance".into()));
    }
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    let c0 = if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        0.5 * (samples[mid - 1] + samples[mid])
    };
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(FitError::DegenerateTrace(format!("c0 estimate {c0} F")));
    }

    let g_max = y.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    if !(g_max > 0.0 && g_max.is_finite()) {
        return Err(FitError::DegenerateTrace("no positive conductance".into()));
    }
    let cm = c0 * ratio;
    let ws = 2.0 * PI * fs;
    let lm = 1.0 / (ws * ws * cm);
    MbvdParams::new(c0, 1.0 / g_max, lm, cm).map_err(|e| FitError::DegenerateTrace(e.to_string()))
}

struct Objective<'a> {
    freqs: &'a [f64],
    y: &'a [Complex64],
    weights: Vec<f64>,
    template: MbvdParams,
    fit_parasitics: bool,
}

impl Objective<'_> {
    fn params(&self, x: &[f64]) -> MbvdParams {
        let mut p = MbvdParams {
            c0: x[0].exp(),
            rm: x[1].exp(),
            lm: x[2].exp(),
            cm: x[3].exp(),
            ..self.template
        };
        if self.fit_parasitics {
            p.rs = x[4].exp();
            p.ls = x[5].exp();
        }
        p
    }

    fn weighted(&self, p: &MbvdParams) -> f64 {
        let mut acc = 0.0;
        for ((&f, &meas), &w) in self.freqs.iter().zip(self.y).zip(&self.weights) {
            match admittance(p, f) {
                Ok(model) => acc += w * (model - meas).norm_sqr(),
                Err(_) => return f64::INFINITY,
            }
        }
        acc
    }
}

/// RMS complex admittance error of `p` against the `"Y"` trace, S.
pub fn rms_residual(p: &MbvdParams, sweep: &FrequencySweep) -> Result<f64, FitError> {
    let y = sweep.require("Y")?;
    let mut acc = 0.0;
    for (&f, &meas) in sweep.frequencies().iter().zip(y) {
        acc += (admittance(p, f)? - meas).norm_sqr();
    }
    Ok((acc / y.len().max(1) as f64).sqrt())
}

/// Fits MBVD element values to the `"Y"` trace of `sweep`, starting at `init`.
pub fn fit_mbvd(sweep: &FrequencySweep, init: &MbvdParams, opts: &FitOptions) -> Result<FitResult, FitError> {
    opts.validate()?;
    init.validate()?;
    let windowed;
    let sweep = match opts.window {
        Some((lo, hi)) => {
            windowed = sweep.window(lo, hi);
            &windowed
        }
        None => sweep,
    };
    let y = sweep.require("Y")?;
    if y.is_empty() {
        return Err(FitError::DegenerateTrace("empty sweep".into()));
    }
    let weights = y
        .iter()
        .map(|v| match opts.weighting {
            Weighting::Uniform => 1.0,
            Weighting::MagnitudeNormalized => 1.0 / v.norm().max(WEIGHT_FLOOR),
        })
        .collect();
    let obj = Objective {
        freqs: sweep.frequencies(),
        y,
        weights,
        template: *init,
        fit_parasitics: opts.fit_parasitics,
    };

    let ws = 1.0 / (init.lm * init.cm).sqrt();
    // Zero-valued elements have no logarithm; start them small instead.
    let rm0 = if init.rm > 0.0 { init.rm } else { 1e-4 * ws * init.lm };
    let mut x: Vec<f64> = [init.c0, rm0, init.lm, init.cm].iter().map(|v| v.ln()).collect();
    let mut step = vec![0.1; 4];
    if opts.fit_parasitics {
        let rs0 = if init.rs > 0.0 { init.rs } else { 1e-3 * rm0 };
        let ls0 = if init.ls > 0.0 { init.ls } else { 1e-3 * init.lm };
        x.extend([rs0.ln(), ls0.ln()]);
        step.extend([1.0, 1.0]);
    }
    let mut best = obj.weighted(&obj.params(&x));
    if !best.is_finite() {
        return Err(FitError::BadInitialPoint);
    }

    let dims = x.len();
    // A parameter the data does not support (e.g. rs on a clean core) would
    // otherwise drift until exp() underflows to zero.
    let bounds: Vec<(f64, f64)> = x.iter().map(|v| (v - LOG_SPAN, v + LOG_SPAN)).collect();
    let mut history = vec![best];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut nm = NelderMeadOptions::new(step.clone(), vec![1e-13; dims]);
        nm.max_evals = 400 * dims * dims;
        nm.bounds = Some(bounds.clone());
        let r = nelder_mead(|v| obj.weighted(&obj.params(v)), &x, &nm);
        history.extend(r.history.iter().copied().filter(|v| v.is_finite()));
        let decrease = if best > 0.0 { (best - r.f) / best } else { 0.0 };
        if r.f < best {
            best = r.f;
            x = r.x;
        }
        if decrease < opts.tolerance {
            converged = true;
            break;
        }
        // Later restarts only need to re-open a modest neighbourhood.
        step = vec![0.01; dims];
    }

    let params = obj.params(&x);
    let residual = rms_residual(&params, sweep)?;
    Ok(FitResult {
        params,
        residual,
        converged,
        iterations,
        history,
    })
}

/// Published summary of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub resonator: ResonatorReport,
    pub c0_f: f64,
    pub rm_ohm: f64,
    pub lm_h: f64,
    pub cm_f: f64,
    pub rs_ohm: f64,
    pub ls_h: f64,
    pub residual_s: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub fn fit_report(result: &FitResult) -> FitReport {
    let p = &result.params;
    FitReport {
        resonator: resonator_report(p),
        c0_f: p.c0,
        rm_ohm: p.rm,
        lm_h: p.lm,
        cm_f: p.cm,
        rs_ohm: p.rs,
        ls_h: p.ls,
        residual_s: result.residual,
        converged: result.converged,
        iterations: result.iterations,
    }
}
