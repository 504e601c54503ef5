//! Modified Butterworth-Van Dyke (MBVD) resonator model.
//!
//! The core is a static capacitance `c0` in parallel with a motional
//! `rm`–`lm`–`cm` branch. Routing parasitics `rs` and `ls` sit in series with
//! the whole core:
//!
//! ```text
//!        rs     ls          ┌──── c0 ─────────────┐
//!   o──/\/\/──mmmm──────────┤                     ├────o
//!                           └── rm ── lm ── cm ───┘
//! ```
//!
//! Coupling is expressed as `k² = π²/8 · (fp²/fs² − 1)`, stored as a fraction.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sweep::FrequencySweep;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MbvdError {
    #[error("invalid resonator spec: {0}")]
    InvalidSpec(String),
    #[error("invalid MBVD parameters: {0}")]
    InvalidParams(String),
    #[error("invalid frequency {0} Hz: must be positive and finite")]
    InvalidFrequency(f64),
    #[error("antiresonance {fp} Hz below resonance {fs} Hz")]
    InvalidOrdering { fs: f64, fp: f64 },
    #[error("need at least 5 points, got {0}")]
    InsufficientData(usize),
    #[error("no resonance/antiresonance pair found in trace")]
    NoResonance,
    #[error("trace: {0}")]
    Trace(String),
}

/// `8/π²`: ratio `cm/c0` per unit of coupling.
pub const COUPLING_FACTOR: f64 = 8.0 / (PI * PI);

/// Electrical element values of one resonator, in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbvdParams {
    /// Static capacitance, F.
    pub c0: f64,
    /// Motional resistance, Ω.
    pub rm: f64,
    /// Motional inductance, H.
    pub lm: f64,
    /// Motional capacitance, F.
    pub cm: f64,
    /// Series routing resistance, Ω.
    pub rs: f64,
    /// Series routing inductance, H.
    pub ls: f64,
}

impl MbvdParams {
    /// Core BVD element values without routing parasitics.
    pub fn new(c0: f64, rm: f64, lm: f64, cm: f64) -> Result<Self, MbvdError> {
        Self::with_parasitics(c0, rm, lm, cm, 0.0, 0.0)
    }

    pub fn with_parasitics(
        c0: f64,
        rm: f64,
        lm: f64,
        cm: f64,
        rs: f64,
        ls: f64,
    ) -> Result<Self, MbvdError> {
        let p = Self {
            c0,
            rm,
            lm,
            cm,
            rs,
            ls,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MbvdError> {
        let positive = [("c0", self.c0), ("lm", self.lm), ("cm", self.cm)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MbvdError::InvalidParams(format!("{name} = {v} must be > 0")));
            }
        }
        let non_negative = [("rm", self.rm), ("rs", self.rs), ("ls", self.ls)];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(MbvdError::InvalidParams(format!("{name} = {v} must be >= 0")));
            }
        }
        let fs = 1.0 / (2.0 * PI * (self.lm * self.cm).sqrt());
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(MbvdError::InvalidParams(format!(
                "derived fs = {fs} is not finite and positive"
            )));
        }
        Ok(())
    }
}

/// Designer-facing resonator description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSpec {
    /// Series resonance, Hz.
    pub fs: f64,
    /// Electromechanical coupling as a fraction (0.42, not 42).
    pub k2: f64,
    pub q: f64,
    /// Static capacitance, F.
    pub c0: f64,
    pub rs: f64,
    pub ls: f64,
}

impl ResonatorSpec {
    pub fn new(fs: f64, k2: f64, q: f64, c0: f64) -> Self {
        Self {
            fs,
            k2,
            q,
            c0,
            rs: 0.0,
            ls: 0.0,
        }
    }

    pub fn with_parasitics(mut self, rs: f64, ls: f64) -> Self {
        self.rs = rs;
        self.ls = ls;
        self
    }

    pub fn validate(&self) -> Result<(), MbvdError> {
        let fail = |msg: String| Err(MbvdError::InvalidSpec(msg));
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return fail(format!("fs = {} must be > 0", self.fs));
        }
        if !(self.k2 > 0.0 && self.k2 < 1.0) {
            return fail(format!("k2 = {} must lie in (0, 1)", self.k2));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return fail(format!("q = {} must be > 0", self.q));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return fail(format!("c0 = {} must be > 0", self.c0));
        }
        if !(self.rs >= 0.0 && self.rs.is_finite()) {
            return fail(format!("rs = {} must be >= 0", self.rs));
        }
        if !(self.ls >= 0.0 && self.ls.is_finite()) {
            return fail(format!("ls = {} must be >= 0", self.ls));
        }
        Ok(())
    }

    /// Antiresonance implied by `fs` and `k2`.
    pub fn fp(&self) -> f64 {
        self.fs * (1.0 + COUPLING_FACTOR * self.k2).sqrt()
    }
}

/// Element values realizing `spec`.
///
/// `cm = c0·8k²/π²`, `lm = 1/((2πfs)²·cm)`, `rm = 2πfs·lm/q`.
pub fn mbvd_from_spec(spec: &ResonatorSpec) -> Result<MbvdParams, MbvdError> {
    spec.validate()?;
    let w = 2.0 * PI * spec.fs;
    let cm = spec.c0 * COUPLING_FACTOR * spec.k2;
    let lm = 1.0 / (w * w * cm);
    let rm = w * lm / spec.q;
    MbvdParams::with_parasitics(spec.c0, rm, lm, cm, spec.rs, spec.ls)
        .map_err(|e| MbvdError::InvalidSpec(e.to_string()))
}

fn check_frequency(f: f64) -> Result<f64, MbvdError> {
    if f > 0.0 && f.is_finite() {
        Ok(2.0 * PI * f)
    } else {
        Err(MbvdError::InvalidFrequency(f))
    }
}

/// `1/z`, mapping an exact zero to a real infinity instead of NaN.
fn recip(z: Complex64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        Complex64::new(f64::INFINITY, 0.0)
    } else {
        z.inv()
    }
}

fn motional_impedance(p: &MbvdParams, w: f64) -> Complex64 {
    Complex64::new(p.rm, w * p.lm - 1.0 / (w * p.cm))
}

fn core_admittance(p: &MbvdParams, w: f64) -> Complex64 {
    Complex64::new(0.0, w * p.c0) + recip(motional_impedance(p, w))
}

fn has_parasitics(p: &MbvdParams) -> bool {
    p.rs != 0.0 || p.ls != 0.0
}

/// Terminal admittance in siemens at `f` Hz.
///
/// A lossless resonator evaluated exactly on its series pole returns an
/// infinite admittance.
pub fn admittance(p: &MbvdParams, f: f64) -> Result<Complex64, MbvdError> {
    let w = check_frequency(f)?;
    let y_core = core_admittance(p, w);
    if !has_parasitics(p) {
        return Ok(y_core);
    }
    let z = Complex64::new(p.rs, w * p.ls) + core_impedance(p, w);
    Ok(recip(z))
}

fn core_impedance(p: &MbvdParams, w: f64) -> Complex64 {
    let zm = motional_impedance(p, w);
    if zm == Complex64::new(0.0, 0.0) {
        return zm;
    }
    recip(Complex64::new(0.0, w * p.c0) + zm.inv())
}

/// Terminal impedance in ohms at `f` Hz. Stays finite on the series pole.
pub fn impedance(p: &MbvdParams, f: f64) -> Result<Complex64, MbvdError> {
    let w = check_frequency(f)?;
    Ok(Complex64::new(p.rs, w * p.ls) + core_impedance(p, w))
}

/// Lossless analytic `(fs, fp)` in Hz.
///
/// `fs = 1/(2π√(lm·cm))`, `fp = fs·√(1 + cm/c0)`. Losses and the routing
/// parasitics `rs`, `ls` are not taken into account; use
/// [`extract_fs_fp_from_trace`] for the extrema of an actual response.
pub fn resonance_frequencies(p: &MbvdParams) -> (f64, f64) {
    let fs = 1.0 / (2.0 * PI * (p.lm * p.cm).sqrt());
    let fp = fs * (1.0 + p.cm / p.c0).sqrt();
    (fs, fp)
}

/// `k² = π²/8 · (fp²/fs² − 1)` as a fraction.
pub fn k2_from_frequencies(fs: f64, fp: f64) -> Result<f64, MbvdError> {
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(MbvdError::InvalidFrequency(fs));
    }
    if !fp.is_finite() {
        return Err(MbvdError::InvalidFrequency(fp));
    }
    if fp < fs {
        return Err(MbvdError::InvalidOrdering { fs, fp });
    }
    let ratio = fp / fs;
    Ok(PI * PI / 8.0 * (ratio * ratio - 1.0))
}

/// Quality factor of the motional branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    Finite(f64),
    /// `rm = 0`: lossless motional branch.
    Infinite,
}

impl Quality {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Quality::Finite(q) => Some(q),
            Quality::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Quality::Infinite)
    }
}

/// `Q = 2π·fs·lm/rm`.
pub fn q_from_params(p: &MbvdParams) -> Quality {
    if p.rm == 0.0 {
        return Quality::Infinite;
    }
    let (fs, _) = resonance_frequencies(p);
    Quality::Finite(2.0 * PI * fs * p.lm / p.rm)
}

/// Vertex abscissa of the parabola through three points, clamped to the
/// bracket. Falls back to the middle point on degenerate input.
fn parabolic_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    if y.iter().any(|v| !v.is_finite()) {
        return x[1];
    }
    let (d0, d2) = (x[1] - x[0], x[1] - x[2]);
    let num = d0 * d0 * (y[1] - y[2]) - d2 * d2 * (y[1] - y[0]);
    let den = d0 * (y[1] - y[2]) - d2 * (y[1] - y[0]);
    if den == 0.0 || !den.is_finite() {
        return x[1];
    }
    let v = x[1] - 0.5 * num / den;
    if v.is_finite() {
        v.clamp(x[0], x[2])
    } else {
        x[1]
    }
}

/// Series and parallel resonances from a sampled admittance trace.
///
/// `fs` is the location of the largest `|Y|`; `fp` is the location of the
/// smallest `|Y|` above `fs`. Both are refined by a three-point parabola on
/// `ln|Y|`. Frequencies must be strictly increasing.
pub fn extract_fs_fp_from_trace(freqs: &[f64], y: &[Complex64]) -> Result<(f64, f64), MbvdError> {
    if freqs.len() != y.len() {
        return Err(MbvdError::Trace(format!(
            "{} frequencies but {} samples",
            freqs.len(),
            y.len()
        )));
    }
    let n = freqs.len();
    if n < 5 {
        return Err(MbvdError::InsufficientData(n));
    }
    if freqs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(MbvdError::Trace("frequencies not strictly increasing".into()));
    }
    let mag: Vec<f64> = y
        .iter()
        .map(|v| if v.re.is_nan() || v.im.is_nan() { 0.0 } else { v.norm() })
        .collect();

    let mut i_max = 0;
    for i in 1..n {
        if mag[i] > mag[i_max] {
            i_max = i;
        }
    }
    if i_max == 0 || i_max + 1 >= n {
        return Err(MbvdError::NoResonance);
    }
    let mut i_min = i_max + 1;
    for i in i_max + 2..n {
        if mag[i] < mag[i_min] {
            i_min = i;
        }
    }
    if i_min + 1 >= n {
        return Err(MbvdError::NoResonance);
    }

    let refine = |i: usize| {
        let xs = [freqs[i - 1], freqs[i], freqs[i + 1]];
        let ys = [mag[i - 1].ln(), mag[i].ln(), mag[i + 1].ln()];
        parabolic_vertex(xs, ys)
    };
    let mut fs = refine(i_max);
    let mut fp = refine(i_min);
    if fp <= fs {
        fs = freqs[i_max];
        fp = freqs[i_min];
    }
    Ok((fs, fp))
}

/// [`extract_fs_fp_from_trace`] on the `"Y"` trace of a sweep.
pub fn extract_fs_fp(sweep: &FrequencySweep) -> Result<(f64, f64), MbvdError> {
    let y = sweep
        .trace("Y")
        .ok_or_else(|| MbvdError::Trace("sweep has no 'Y' trace".into()))?;
    extract_fs_fp_from_trace(sweep.frequencies(), y)
}

/// Samples the admittance of `p` at each frequency into a `"Y"` trace.
pub fn admittance_sweep(p: &MbvdParams, freqs: Vec<f64>) -> Result<FrequencySweep, MbvdError> {
    let y = freqs
        .iter()
        .map(|&f| admittance(p, f))
        .collect::<Result<Vec<_>, _>>()?;
    FrequencySweep::new(freqs)
        .and_then(|s| s.with_trace("Y", y))
        .map_err(|e| MbvdError::Trace(e.to_string()))
}
