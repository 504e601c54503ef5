//! Filter and resonator figures of merit extracted from swept traces.
//!
//! Conventions:
//! * insertion loss is taken at the passband peak, `IL = −20·log10(max|S21|)`;
//! * the passband is the contiguous run of samples around the peak that stay
//!   within `level_db` (3 dB by default) of it, with edges interpolated
//!   linearly in dB;
//! * `fc` is the midpoint of the band edges and `FBW = (f_hi − f_lo)/fc`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mbvd::{k2_from_frequencies, q_from_params, resonance_frequencies, MbvdParams};
use crate::sweep::{FrequencySweep, SweepError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no passband: {0}")]
    NoPassband(String),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("dB trace has {got} samples for {expected} frequencies")]
    LengthMismatch { got: usize, expected: usize },
}

/// Magnitudes below this are treated as this value when converting to dB.
const MAG_FLOOR: f64 = 1e-15;

pub fn to_db(mag: f64) -> f64 {
    20.0 * mag.max(MAG_FLOOR).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsOptions {
    /// Edge level below the peak, dB.
    pub level_db: f64,
    /// Rejection is reported at `fc·(1 ± rejection_offset)`.
    pub rejection_offset: f64,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self {
            level_db: 3.0,
            rejection_offset: 0.5,
        }
    }
}

/// Band edges at a given level below the peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandEdges {
    pub f_lo: f64,
    pub f_hi: f64,
    /// The trace never dropped below the level on the low side; `f_lo` is
    /// the first grid frequency.
    pub lo_clipped: bool,
    pub hi_clipped: bool,
    pub peak_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterMetrics {
    pub fc: f64,
    pub il_db: f64,
    pub fbw_3db: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    /// Worst in-band return loss; `None` when the sweep has no S11 trace.
    pub rl_in_band_db: Option<f64>,
    /// Attenuation relative to the peak at `fc·(1 − offset)`, clipped to the grid.
    pub rejection_lo_db: f64,
    /// Attenuation relative to the peak at `fc·(1 + offset)`, clipped to the grid.
    pub rejection_hi_db: f64,
    pub edges: BandEdges,
}

impl FilterMetrics {
    /// Worse of the two rejection figures.
    pub fn rejection_db(&self) -> f64 {
        self.rejection_lo_db.min(self.rejection_hi_db)
    }

    pub fn report(&self) -> MetricsReport {
        MetricsReport {
            fc_hz: self.fc,
            il_db: self.il_db,
            fbw_3db: self.fbw_3db,
            f_lo_hz: self.f_lo,
            f_hi_hz: self.f_hi,
            rl_db: self.rl_in_band_db,
            rejection_db: self.rejection_db(),
        }
    }
}

/// Flat serialized form of [`FilterMetrics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fc_hz: f64,
    pub il_db: f64,
    pub fbw_3db: f64,
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
    pub rl_db: Option<f64>,
    pub rejection_db: f64,
}

fn crossing(f0: f64, f1: f64, d0: f64, d1: f64, level: f64) -> f64 {
    if d1 == d0 {
        return f0;
    }
    f0 + (level - d0) / (d1 - d0) * (f1 - f0)
}

/// Locates the edges `level_db` below the peak of a dB trace.
///
/// The peak is the first occurrence of the maximum; it must not sit on
/// either end of the grid.
pub fn band_edges(freqs: &[f64], trace_db: &[f64], level_db: f64) -> Result<BandEdges, MetricsError> {
    if freqs.len() != trace_db.len() {
        return Err(MetricsError::LengthMismatch {
            got: trace_db.len(),
            expected: freqs.len(),
        });
    }
    let n = freqs.len();
    let mut peak = None::<usize>;
    for (i, &v) in trace_db.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if peak.is_none_or(|p| v > trace_db[p]) {
            peak = Some(i);
        }
    }
    let peak = match peak {
        Some(p) if p > 0 && p + 1 < n => p,
        Some(_) => return Err(MetricsError::NoPassband("peak on grid boundary".into())),
        None => return Err(MetricsError::NoPassband("empty trace".into())),
    };
    let level = trace_db[peak] - level_db;

    let mut lo = peak;
    while lo > 0 && trace_db[lo - 1] >= level {
        lo -= 1;
    }
    let (f_lo, lo_clipped) = if lo == 0 {
        (freqs[0], true)
    } else {
        (
            crossing(freqs[lo - 1], freqs[lo], trace_db[lo - 1], trace_db[lo], level),
            false,
        )
    };

    let mut hi = peak;
    while hi + 1 < n && trace_db[hi + 1] >= level {
        hi += 1;
    }
    let (f_hi, hi_clipped) = if hi + 1 == n {
        (freqs[n - 1], true)
    } else {
        (
            crossing(freqs[hi], freqs[hi + 1], trace_db[hi], trace_db[hi + 1], level),
            false,
        )
    };

    Ok(BandEdges {
        f_lo,
        f_hi,
        lo_clipped,
        hi_clipped,
        peak_index: peak,
    })
}

/// Linear-in-dB interpolation of a trace at `f`, clamped to the grid.
fn interp_db(freqs: &[f64], db: &[f64], f: f64) -> f64 {
    let n = freqs.len();
    if f <= freqs[0] {
        return db[0];
    }
    if f >= freqs[n - 1] {
        return db[n - 1];
    }
    let i = freqs.partition_point(|&x| x <= f);
    let (f0, f1) = (freqs[i - 1], freqs[i]);
    let t = (f - f0) / (f1 - f0);
    db[i - 1] + t * (db[i] - db[i - 1])
}

/// Figures of merit of a two-port sweep carrying `"S21"` and optionally `"S11"`.
pub fn filter_metrics(sweep: &FrequencySweep, opts: &MetricsOptions) -> Result<FilterMetrics, MetricsError> {
    let s21 = sweep.require("S21")?;
    let freqs = sweep.frequencies();
    let mags: Vec<f64> = s21.iter().map(|v| v.norm()).collect();
    let max_mag = mags.iter().copied().filter(|m| !m.is_nan()).fold(0.0, f64::max);
    if max_mag == 0.0 {
        return Err(MetricsError::NoPassband("|S21| is zero everywhere".into()));
    }
    if !max_mag.is_finite() {
        return Err(MetricsError::NoPassband("|S21| is not finite".into()));
    }
    let db: Vec<f64> = mags.iter().map(|&m| to_db(m)).collect();
    let edges = band_edges(freqs, &db, opts.level_db)?;
    let il_db = -20.0 * max_mag.log10();
    let fc = 0.5 * (edges.f_lo + edges.f_hi);
    let fbw_3db = (edges.f_hi - edges.f_lo) / fc;
    if !(fbw_3db > 0.0) {
        return Err(MetricsError::NoPassband("zero-width band".into()));
    }

    let rl_in_band_db = sweep.trace("S11").map(|s11| {
        let worst = freqs
            .iter()
            .zip(s11)
            .filter(|(f, _)| **f >= edges.f_lo && **f <= edges.f_hi)
            .map(|(_, s)| s.norm())
            .fold(0.0, f64::max);
        -to_db(worst)
    });

    let peak_db = -il_db;
    let attenuation = |f: f64| peak_db - interp_db(freqs, &db, f);
    Ok(FilterMetrics {
        fc,
        il_db,
        fbw_3db,
        f_lo: edges.f_lo,
        f_hi: edges.f_hi,
        rl_in_band_db,
        rejection_lo_db: attenuation(fc * (1.0 - opts.rejection_offset)),
        rejection_hi_db: attenuation(fc * (1.0 + opts.rejection_offset)),
        edges,
    })
}

/// Headline figures of one resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorReport {
    pub fs_hz: f64,
    pub fp_hz: f64,
    /// Coupling as a fraction.
    pub k2: f64,
    /// `None` when the motional branch is lossless.
    pub q: Option<f64>,
    pub q_infinite: bool,
}

pub fn resonator_report(p: &MbvdParams) -> ResonatorReport {
    let (fs, fp) = resonance_frequencies(p);
    // fp > fs holds for every valid parameter set.
    let k2 = k2_from_frequencies(fs, fp).unwrap_or(f64::NAN);
    let q = q_from_params(p);
    ResonatorReport {
        fs_hz: fs,
        fp_hz: fp,
        k2,
        q: q.value(),
        q_infinite: q.is_infinite(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbvd::{mbvd_from_spec, ResonatorSpec};
    use num_complex::Complex64;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn sweep_from_mag(freqs: Vec<f64>, mag: impl Fn(f64) -> f64) -> FrequencySweep {
        let s21 = freqs.iter().map(|&f| Complex64::new(mag(f), 0.0)).collect();
        FrequencySweep::new(freqs).unwrap().with_trace("S21", s21).unwrap()
    }

    #[test]
    fn brick_wall() {
        // 1 MHz grid, integer-MHz indices so 20 and 24 GHz are exact samples.
        let freqs: Vec<f64> = (10_000..=34_000).map(|i| i as f64 * 1e6).collect();
        let s = sweep_from_mag(freqs, |f| if (20e9..=24e9).contains(&f) { 0.9 } else { 1e-6 });
        let m = filter_metrics(&s, &MetricsOptions::default()).unwrap();
        assert!((m.il_db - 0.9151498112135024).abs() < 1e-12);
        assert!((m.fc - 22e9).abs() < 1e3);
        assert!((m.fbw_3db - 4.0 / 22.0).abs() < 1e-5);
        assert!((m.f_lo - 20e9).abs() <= 1e6 && (m.f_hi - 24e9).abs() <= 1e6);
        assert!(m.rl_in_band_db.is_none());
        // 11 and 33 GHz lie in the stopband.
        assert!((m.rejection_db() - (120.0 - 0.9151498112135024)).abs() < 1e-9);
    }

    #[test]
    fn delta_passband() {
        let freqs = grid(1e9, 2e9, 101);
        let step = 1e7;
        let s = sweep_from_mag(freqs, |f| if (f - 1.5e9).abs() < 1.0 { 1.0 } else { 0.0 });
        let m = filter_metrics(&s, &MetricsOptions::default()).unwrap();
        assert_eq!(m.il_db, 0.0);
        assert!(m.fbw_3db > 0.0 && m.fbw_3db <= 2.0 * step / m.fc);
    }

    #[test]
    fn measured_scale_trace() {
        // Parabola in dB: peak −1.62 dB at 22.1 GHz, −3 dB relative at ±9.9%.
        let (fc, il, fbw) = (22.1e9, 1.62, 0.198);
        let half = 0.5 * fbw * fc;
        let s = sweep_from_mag(grid(14e9, 30e9, 16001), |f| {
            let x = (f - fc) / half;
            10f64.powf((-il - 3.0 * x * x) / 20.0)
        });
        let m = filter_metrics(&s, &MetricsOptions::default()).unwrap();
        assert!((m.il_db - il).abs() < 1e-6);
        assert!((m.fbw_3db - fbw).abs() < 1e-5);
        assert!((m.fc - fc).abs() < 1e5);
    }

    #[test]
    fn no_passband_cases() {
        let freqs = grid(1e9, 2e9, 11);
        let zero = sweep_from_mag(freqs.clone(), |_| 0.0);
        assert!(matches!(
            filter_metrics(&zero, &MetricsOptions::default()),
            Err(MetricsError::NoPassband(_))
        ));
        let rising = sweep_from_mag(freqs.clone(), |f| f / 2e9);
        assert!(matches!(
            filter_metrics(&rising, &MetricsOptions::default()),
            Err(MetricsError::NoPassband(_))
        ));
        let db: Vec<f64> = (0..11).map(|i| i as f64).collect();
        assert!(matches!(band_edges(&freqs, &db, 3.0), Err(MetricsError::NoPassband(_))));
    }

    #[test]
    fn triangle_edges_symmetric() {
        let freqs = grid(20e9, 24e9, 401);
        let db: Vec<f64> = freqs.iter().map(|f| -10.0 * ((f - 22e9) / 1e9).abs()).collect();
        let e = band_edges(&freqs, &db, 3.0).unwrap();
        assert!(((e.f_lo + e.f_hi) / 2.0 - 22e9).abs() < 1e-9 * 22e9);
        assert!((e.f_hi - 22.3e9).abs() < 1.0);
        assert!(!e.lo_clipped && !e.hi_clipped);
    }

    #[test]
    fn edges_clipped_when_no_crossing() {
        let freqs = grid(20e9, 24e9, 41);
        let db: Vec<f64> = freqs.iter().map(|f| if *f < 23e9 { -0.1 * (23.0 - f / 1e9) } else { -50.0 * (f / 1e9 - 23.0) }).collect();
        let e = band_edges(&freqs, &db, 3.0).unwrap();
        assert!(e.lo_clipped);
        assert_eq!(e.f_lo, 20e9);
        assert!(!e.hi_clipped);
    }

    #[test]
    fn return_loss_in_band() {
        let freqs = grid(20e9, 24e9, 401);
        let s21 = freqs
            .iter()
            .map(|f| Complex64::new((-((f - 22e9) / 1e9).powi(2)).exp(), 0.0))
            .collect();
        let s11 = vec![Complex64::new(0.1, 0.0); 401];
        let s = FrequencySweep::new(freqs)
            .unwrap()
            .with_trace("S21", s21)
            .unwrap()
            .with_trace("S11", s11)
            .unwrap();
        let m = filter_metrics(&s, &MetricsOptions::default()).unwrap();
        assert!((m.rl_in_band_db.unwrap() - 20.0).abs() < 1e-9);
        assert_eq!(m.report().rl_db, m.rl_in_band_db);
    }

    #[test]
    fn resonator_report_of_20ghz_example() {
        let p = mbvd_from_spec(&ResonatorSpec::new(20e9, 0.42, 50.0, 50e-15)).unwrap();
        let r = resonator_report(&p);
        assert!((r.fs_hz / 20e9 - 1.0).abs() < 1e-12);
        assert!((r.fp_hz / 23.15546740653926e9 - 1.0).abs() < 1e-12);
        assert!((r.k2 - 0.42).abs() < 1e-12);
        assert!((r.q.unwrap() - 50.0).abs() < 1e-9);
        assert!(!r.q_infinite);

        let lossless = MbvdParams { rm: 0.0, ..p };
        let r = resonator_report(&lossless);
        assert!(r.q_infinite);
        assert_eq!(r.q, None);
    }

    #[test]
    fn report_json_keys() {
        let freqs: Vec<f64> = (10_000..=34_000).step_by(10).map(|i| i as f64 * 1e6).collect();
        let s = sweep_from_mag(freqs, |f| if (20e9..=24e9).contains(&f) { 0.9 } else { 1e-6 });
        let m = filter_metrics(&s, &MetricsOptions::default()).unwrap();
        let v = serde_json::to_value(m.report()).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        for k in ["fc_hz", "il_db", "fbw_3db", "f_lo_hz", "f_hi_hz", "rl_db", "rejection_db"] {
            assert!(keys.iter().any(|x| x == k), "missing {k}");
        }
        assert_eq!(keys.len(), 7);
    }
}
