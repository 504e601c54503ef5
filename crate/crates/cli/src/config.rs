//! JSON design configuration.

use std::path::Path;

use ladderkit::ladder::{C0Range, LadderDesign, TopologyVariant};
use ladderkit::metrics::MetricsOptions;
use ladderkit::sweep::FrequencyGrid;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub f_start_hz: f64,
    pub f_stop_hz: f64,
    pub n_points: usize,
}

/// Design inputs. Every key carries its unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub fs_series_hz: f64,
    pub k2: f64,
    pub q: f64,
    pub order: usize,
    #[serde(default = "default_z0")]
    pub z0_ohm: f64,
    #[serde(default)]
    pub c0_series_f: Option<f64>,
    #[serde(default)]
    pub c0_shunt_f: Option<f64>,
    #[serde(default)]
    pub c0_series_range_f: Option<[f64; 2]>,
    #[serde(default)]
    pub c0_shunt_range_f: Option<[f64; 2]>,
    #[serde(default)]
    pub rs_ohm: f64,
    #[serde(default)]
    pub ls_h: f64,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub topology: TopologyVariant,
    #[serde(default = "default_rejection_offset")]
    pub rejection_offset: f64,
}

fn default_z0() -> f64 {
    50.0
}

fn default_rejection_offset() -> f64 {
    MetricsOptions::default().rejection_offset
}

/// A validated configuration ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub design: LadderDesign,
    pub z0: f64,
    pub series: C0Range,
    pub shunt: C0Range,
    pub grid: FrequencyGrid,
    pub metrics: MetricsOptions,
}

impl Design {
    /// True when both capacitances are fixed and no search is needed.
    pub fn is_fixed(&self) -> bool {
        self.series.min == self.series.max && self.shunt.min == self.shunt.max
    }
}

fn field(name: &str, value: impl std::fmt::Display, rule: &str) -> CliError {
    CliError::Input(format!("{name} = {value}: {rule}"))
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(name, v, "must be positive and finite"))
    }
}

fn non_negative(name: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(name, v, "must be >= 0 and finite"))
    }
}

fn c0_range(name: &str, fixed: Option<f64>, range: Option<[f64; 2]>) -> Result<C0Range, CliError> {
    match (fixed, range) {
        (Some(c), None) => {
            positive(&format!("c0_{name}_f"), c)?;
            Ok(C0Range::fixed(c))
        }
        (None, Some([lo, hi])) => {
            let key = format!("c0_{name}_range_f");
            positive(&key, lo)?;
            positive(&key, hi)?;
            if lo > hi {
                return Err(field(&key, format!("[{lo}, {hi}]"), "min must not exceed max"));
            }
            Ok(C0Range::new(lo, hi))
        }
        (Some(_), Some(_)) => Err(CliError::Input(format!(
            "c0_{name}_f and c0_{name}_range_f are mutually exclusive"
        ))),
        (None, None) => Err(CliError::Input(format!(
            "one of c0_{name}_f or c0_{name}_range_f is required"
        ))),
    }
}

impl DesignConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// Checks every field and applies command-line overrides.
    pub fn resolve(&self, z0: Option<f64>, grid_points: Option<usize>) -> Result<Design, CliError> {
        positive("fs_series_hz", self.fs_series_hz)?;
        if !(self.k2 > 0.0 && self.k2 < 1.0) {
            return Err(field("k2", self.k2, "must lie in (0, 1)"));
        }
        positive("q", self.q)?;
        if self.order < 2 {
            return Err(field("order", self.order, "must be at least 2"));
        }
        let z0 = z0.unwrap_or(self.z0_ohm);
        positive("z0_ohm", z0)?;
        non_negative("rs_ohm", self.rs_ohm)?;
        non_negative("ls_h", self.ls_h)?;
        if !(self.rejection_offset > 0.0 && self.rejection_offset < 1.0) {
            return Err(field("rejection_offset", self.rejection_offset, "must lie in (0, 1)"));
        }
        let series = c0_range("series", self.c0_series_f, self.c0_series_range_f)?;
        let shunt = c0_range("shunt", self.c0_shunt_f, self.c0_shunt_range_f)?;

        let mut grid = match self.grid {
            Some(g) => FrequencyGrid {
                f_start: g.f_start_hz,
                f_stop: g.f_stop_hz,
                n_points: g.n_points,
            },
            None => FrequencyGrid::around(self.fs_series_hz).map_err(|e| CliError::Input(format!("grid: {e}")))?,
        };
        if let Some(n) = grid_points {
            grid.n_points = n;
        }
        grid.validate().map_err(|e| CliError::Input(format!("grid: {e}")))?;

        let mut design = LadderDesign::new(self.fs_series_hz, self.k2, self.q, self.order);
        design.rs = self.rs_ohm;
        design.ls = self.ls_h;
        design.variant = self.topology;
        Ok(Design {
            design,
            z0,
            series,
            shunt,
            grid,
            metrics: MetricsOptions {
                rejection_offset: self.rejection_offset,
                ..MetricsOptions::default()
            },
        })
    }
}
