//! Frequency grids and swept complex traces.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("frequencies must be strictly increasing (index {index})")]
    NotIncreasing { index: usize },
    #[error("trace '{name}' has {got} points, expected {expected}")]
    LengthMismatch {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("missing trace '{0}'")]
    MissingTrace(String),
}

/// Linearly spaced grid with both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub f_start: f64,
    pub f_stop: f64,
    pub n_points: usize,
}

impl FrequencyGrid {
    pub fn linear(f_start: f64, f_stop: f64, n_points: usize) -> Result<Self, SweepError> {
        let grid = Self {
            f_start,
            f_stop,
            n_points,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Default simulation grid around a target: 2001 points over `[0.6, 1.4]·f`.
    pub fn around(f_center: f64) -> Result<Self, SweepError> {
        Self::linear(0.6 * f_center, 1.4 * f_center, 2001)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if !(self.f_start.is_finite() && self.f_stop.is_finite()) {
            return Err(SweepError::InvalidGrid("non-finite bound".into()));
        }
        if !(0.0 < self.f_start && self.f_start < self.f_stop) {
            return Err(SweepError::InvalidGrid(format!(
                "need 0 < f_start < f_stop, got [{}, {}]",
                self.f_start, self.f_stop
            )));
        }
        if self.n_points < 2 {
            return Err(SweepError::InvalidGrid(format!(
                "n_points must be >= 2, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.f_stop - self.f_start) / (self.n_points - 1) as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let last = self.n_points - 1;
        let step = self.step();
        (0..self.n_points)
            .map(|i| {
                if i == last {
                    self.f_stop
                } else {
                    self.f_start + step * i as f64
                }
            })
            .collect()
    }
}

/// Ordered frequencies (Hz) with named complex traces of equal length.
///
/// Conventional trace names are `"S11"`, `"S21"`, `"S12"`, `"S22"` for
/// scattering parameters and `"Y"` for one-port admittance in siemens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySweep {
    frequencies: Vec<f64>,
    traces: BTreeMap<String, Vec<Complex64>>,
}

impl FrequencySweep {
    pub fn new(frequencies: Vec<f64>) -> Result<Self, SweepError> {
        if let Some(index) = frequencies
            .windows(2)
            .position(|w| !(w[0] < w[1]) || !w[1].is_finite())
        {
            return Err(SweepError::NotIncreasing { index: index + 1 });
        }
        if frequencies.first().is_some_and(|f| !f.is_finite()) {
            return Err(SweepError::NotIncreasing { index: 0 });
        }
        Ok(Self {
            frequencies,
            traces: BTreeMap::new(),
        })
    }

    /// Builds a sweep from points in arbitrary order by sorting on frequency.
    /// Duplicate frequencies are rejected.
    pub fn from_unsorted(
        mut points: Vec<(f64, Vec<(String, Complex64)>)>,
    ) -> Result<Self, SweepError> {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let freqs = points.iter().map(|p| p.0).collect();
        let mut sweep = Self::new(freqs)?;
        let mut traces: BTreeMap<String, Vec<Complex64>> = BTreeMap::new();
        for (_, values) in points {
            for (name, v) in values {
                traces.entry(name).or_default().push(v);
            }
        }
        for (name, values) in traces {
            sweep.insert_trace(name, values)?;
        }
        Ok(sweep)
    }

    pub fn with_trace(
        mut self,
        name: impl Into<String>,
        values: Vec<Complex64>,
    ) -> Result<Self, SweepError> {
        self.insert_trace(name, values)?;
        Ok(self)
    }

    pub fn insert_trace(
        &mut self,
        name: impl Into<String>,
        values: Vec<Complex64>,
    ) -> Result<(), SweepError> {
        let name = name.into();
        if values.len() != self.frequencies.len() {
            return Err(SweepError::LengthMismatch {
                name,
                got: values.len(),
                expected: self.frequencies.len(),
            });
        }
        self.traces.insert(name, values);
        Ok(())
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn trace(&self, name: &str) -> Option<&[Complex64]> {
        self.traces.get(name).map(Vec::as_slice)
    }

    pub fn require(&self, name: &str) -> Result<&[Complex64], SweepError> {
        self.trace(name)
            .ok_or_else(|| SweepError::MissingTrace(name.to_string()))
    }

    pub fn trace_names(&self) -> impl Iterator<Item = &str> {
        self.traces.keys().map(String::as_str)
    }

    /// Restricts the sweep to `[f_min, f_max]` (inclusive).
    pub fn window(&self, f_min: f64, f_max: f64) -> FrequencySweep {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.frequencies[i] >= f_min && self.frequencies[i] <= f_max)
            .collect();
        FrequencySweep {
            frequencies: keep.iter().map(|&i| self.frequencies[i]).collect(),
            traces: self
                .traces
                .iter()
                .map(|(k, v)| (k.clone(), keep.iter().map(|&i| v[i]).collect()))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoints() {
        let g = FrequencyGrid::linear(1e9, 2e9, 11).unwrap();
        let f = g.frequencies();
        assert_eq!(f.len(), 11);
        assert_eq!(f[0], 1e9);
        assert_eq!(f[10], 2e9);
        assert!((f[5] - 1.5e9).abs() < 1e-3);
    }

    #[test]
    fn grid_validation() {
        assert!(FrequencyGrid::linear(0.0, 1e9, 10).is_err());
        assert!(FrequencyGrid::linear(2e9, 1e9, 10).is_err());
        assert!(FrequencyGrid::linear(1e9, 2e9, 1).is_err());
        let g = FrequencyGrid::around(22e9).unwrap();
        assert_eq!(g.n_points, 2001);
        assert!((g.f_start - 13.2e9).abs() < 1.0);
    }

    #[test]
    fn sweep_rejects_disorder_and_bad_lengths() {
        assert_eq!(
            FrequencySweep::new(vec![1.0, 2.0, 2.0]),
            Err(SweepError::NotIncreasing { index: 2 })
        );
        let s = FrequencySweep::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            s.with_trace("Y", vec![Complex64::default()]),
            Err(SweepError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn unsorted_points_are_sorted() {
        let pts = vec![
            (3.0, vec![("Y".to_string(), Complex64::new(3.0, 0.0))]),
            (1.0, vec![("Y".to_string(), Complex64::new(1.0, 0.0))]),
            (2.0, vec![("Y".to_string(), Complex64::new(2.0, 0.0))]),
        ];
        let s = FrequencySweep::from_unsorted(pts).unwrap();
        assert_eq!(s.frequencies(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.trace("Y").unwrap()[2].re, 3.0);
    }

    #[test]
    fn window_is_inclusive() {
        let s = FrequencySweep::new(vec![1.0, 2.0, 3.0, 4.0])
            .unwrap()
            .with_trace("Y", vec![Complex64::default(); 4])
            .unwrap();
        let w = s.window(2.0, 3.0);
        assert_eq!(w.frequencies(), &[2.0, 3.0]);
        assert_eq!(w.trace("Y").unwrap().len(), 2);
    }
}
