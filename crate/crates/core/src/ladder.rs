//! Ladder filter synthesis, swept simulation and static-capacitance
//! optimization.
//!
//! A ladder alternates series and shunt resonators. Synthesis places the
//! shunt resonators so that their antiresonance coincides with the series
//! resonance of the series resonators, which centers the passband near the
//! series `fs`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mbvd::{self, mbvd_from_spec, MbvdError, MbvdParams, ResonatorSpec, COUPLING_FACTOR};
use crate::metrics::{filter_metrics, FilterMetrics, MetricsOptions};
use crate::network::{abcd_series, abcd_shunt, abcd_to_s_reciprocal, Abcd, NetworkError, SParams2};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::sweep::{FrequencyGrid, FrequencySweep, SweepError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LadderError {
    #[error("invalid ladder order {0}: need at least 2")]
    InvalidOrder(usize),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error(transparent)]
    Resonator(#[from] MbvdError),
    #[error("singular network at {freq_hz} Hz: {source}")]
    Singular { freq_hz: f64, source: NetworkError },
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("invalid reference impedance {0} ohm")]
    InvalidReference(f64),
    #[error("invalid c0 range: {0}")]
    InvalidRange(String),
    #[error("no passband found anywhere in the c0 search range")]
    NoPassband,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Series,
    Shunt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub orientation: Orientation,
    pub resonator: MbvdParams,
}

/// Which orientation the ladder starts with at port 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyVariant {
    #[default]
    SeriesFirst,
    ShuntFirst,
}

impl TopologyVariant {
    pub fn orientation_at(self, index: usize) -> Orientation {
        let first = match self {
            TopologyVariant::SeriesFirst => Orientation::Series,
            TopologyVariant::ShuntFirst => Orientation::Shunt,
        };
        match (first, index % 2) {
            (o, 0) => o,
            (Orientation::Series, _) => Orientation::Shunt,
            (Orientation::Shunt, _) => Orientation::Series,
        }
    }
}

/// Ordered stages from port 1 to port 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderTopology {
    stages: Vec<Stage>,
}

impl LadderTopology {
    pub fn new(stages: Vec<Stage>) -> Result<Self, LadderError> {
        if stages.is_empty() {
            return Err(LadderError::InvalidTopology("no stages".into()));
        }
        if stages.len() >= 2 {
            let has = |o| stages.iter().any(|s| s.orientation == o);
            if !has(Orientation::Series) || !has(Orientation::Shunt) {
                return Err(LadderError::InvalidTopology(
                    "order >= 2 needs both series and shunt stages".into(),
                ));
            }
        }
        for s in &stages {
            s.resonator.validate()?;
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn order(&self) -> usize {
        self.stages.len()
    }

    pub fn orientations(&self) -> Vec<Orientation> {
        self.stages.iter().map(|s| s.orientation).collect()
    }

    /// Cascaded ABCD matrix at `f` Hz.
    pub fn abcd_at(&self, f: f64) -> Result<Abcd, LadderError> {
        let singular = |source| LadderError::Singular { freq_hz: f, source };
        let mut acc = Abcd::identity();
        for stage in &self.stages {
            let m = match stage.orientation {
                Orientation::Series => abcd_series(mbvd::impedance(&stage.resonator, f)?),
                Orientation::Shunt => abcd_shunt(mbvd::admittance(&stage.resonator, f)?),
            }
            .map_err(singular)?;
            acc = acc.then(&m);
        }
        Ok(acc)
    }

    /// S-parameters at a single frequency.
    pub fn s_params_at(&self, f: f64, z0: f64) -> Result<SParams2, LadderError> {
        let m = self.abcd_at(f)?;
        abcd_to_s_reciprocal(&m, z0).map_err(|source| match source {
            NetworkError::InvalidReference(z) => LadderError::InvalidReference(z),
            source => LadderError::Singular { freq_hz: f, source },
        })
    }
}

/// Synthesis inputs other than the static capacitances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderDesign {
    /// Series resonance of the series resonators, Hz.
    pub fs_series: f64,
    pub k2: f64,
    pub q: f64,
    pub order: usize,
    pub rs: f64,
    pub ls: f64,
    pub variant: TopologyVariant,
}

impl LadderDesign {
    pub fn new(fs_series: f64, k2: f64, q: f64, order: usize) -> Self {
        Self {
            fs_series,
            k2,
            q,
            order,
            rs: 0.0,
            ls: 0.0,
            variant: TopologyVariant::SeriesFirst,
        }
    }

    /// Series resonance assigned to shunt resonators so that their
    /// antiresonance lands on `fs_series`.
    pub fn fs_shunt(&self) -> f64 {
        self.fs_series / (1.0 + COUPLING_FACTOR * self.k2).sqrt()
    }
}

/// Builds the ladder for `design` with one static capacitance shared by all
/// series stages and one shared by all shunt stages.
pub fn synthesize(design: &LadderDesign, c0_series: f64, c0_shunt: f64) -> Result<LadderTopology, LadderError> {
    if design.order < 2 {
        return Err(LadderError::InvalidOrder(design.order));
    }
    let series = ResonatorSpec::new(design.fs_series, design.k2, design.q, c0_series)
        .with_parasitics(design.rs, design.ls);
    let shunt = ResonatorSpec {
        fs: design.fs_shunt(),
        c0: c0_shunt,
        ..series
    };
    let series = mbvd_from_spec(&series)?;
    let shunt = mbvd_from_spec(&shunt)?;
    let stages = (0..design.order)
        .map(|i| {
            let orientation = design.variant.orientation_at(i);
            let resonator = match orientation {
                Orientation::Series => series,
                Orientation::Shunt => shunt,
            };
            Stage {
                orientation,
                resonator,
            }
        })
        .collect();
    LadderTopology::new(stages)
}

/// Evaluates the ladder at arbitrary increasing frequencies.
///
/// The sweep carries `"S11"`, `"S21"`, `"S12"` and `"S22"`.
pub fn sweep_at(t: &LadderTopology, freqs: Vec<f64>, z0: f64) -> Result<FrequencySweep, LadderError> {
    if !(z0 > 0.0 && z0.is_finite()) {
        return Err(LadderError::InvalidReference(z0));
    }
    let n = freqs.len();
    let mut traces: [Vec<Complex64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    for &f in &freqs {
        let s = t.s_params_at(f, z0)?;
        for (trace, v) in traces.iter_mut().zip([s.s11, s.s21, s.s12, s.s22]) {
            trace.push(v);
        }
    }
    let [s11, s21, s12, s22] = traces;
    let mut sweep = FrequencySweep::new(freqs)?;
    sweep.insert_trace("S11", s11)?;
    sweep.insert_trace("S21", s21)?;
    sweep.insert_trace("S12", s12)?;
    sweep.insert_trace("S22", s22)?;
    Ok(sweep)
}

pub fn sweep(t: &LadderTopology, grid: &FrequencyGrid, z0: f64) -> Result<FrequencySweep, LadderError> {
    grid.validate()?;
    sweep_at(t, grid.frequencies(), z0)
}

/// Inclusive search interval for one static capacitance, F.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C0Range {
    pub min: f64,
    pub max: f64,
}

impl C0Range {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn fixed(c0: f64) -> Self {
        Self { min: c0, max: c0 }
    }

    fn validate(&self, name: &str) -> Result<(), LadderError> {
        if !(self.min > 0.0 && self.max.is_finite() && self.min <= self.max) {
            return Err(LadderError::InvalidRange(format!(
                "{name}: need 0 < min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    fn log_span(&self) -> f64 {
        (self.max / self.min).ln()
    }

    /// `n` log-spaced points including both ends (a single point when fixed).
    fn log_points(&self, n: usize) -> Vec<f64> {
        if self.min == self.max || n < 2 {
            return vec![self.min];
        }
        let (a, span) = (self.min.ln(), self.log_span());
        (0..n)
            .map(|i| match i {
                0 => self.min,
                i if i == n - 1 => self.max,
                i => (a + span * i as f64 / (n - 1) as f64).exp(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    /// Points per axis of the logarithmic coarse scan.
    pub coarse_points: usize,
    /// Simplex refinement stops once its extent along each axis falls below
    /// this fraction of the axis' (logarithmic) range.
    pub x_tol_fraction: f64,
    pub max_evals: usize,
    pub metrics: MetricsOptions,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            coarse_points: 16,
            x_tol_fraction: 1e-3,
            max_evals: 2_000,
            metrics: MetricsOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C0Optimum {
    pub c0_series: f64,
    pub c0_shunt: f64,
    pub metrics: FilterMetrics,
    /// Best insertion loss of the coarse scan, dB.
    pub coarse_il_db: f64,
    pub evaluations: usize,
}

/// Insertion loss of the synthesized ladder, or `+∞` when it has no passband.
pub fn insertion_loss_objective(
    design: &LadderDesign,
    c0_series: f64,
    c0_shunt: f64,
    grid: &FrequencyGrid,
    z0: f64,
    metrics: &MetricsOptions,
) -> f64 {
    evaluate(design, c0_series, c0_shunt, grid, z0, metrics)
        .map(|m| m.il_db)
        .unwrap_or(f64::INFINITY)
}

fn evaluate(
    design: &LadderDesign,
    c0_series: f64,
    c0_shunt: f64,
    grid: &FrequencyGrid,
    z0: f64,
    metrics: &MetricsOptions,
) -> Option<FilterMetrics> {
    let t = synthesize(design, c0_series, c0_shunt).ok()?;
    let s = sweep(&t, grid, z0).ok()?;
    filter_metrics(&s, metrics).ok()
}

/// Chooses `(c0_series, c0_shunt)` minimizing insertion loss.
///
/// A logarithmic coarse scan picks the incumbent (ties broken by smaller
/// `c0_series`, then smaller `c0_shunt`); a bounded simplex search in
/// log-capacitance then refines it. The result is deterministic.
pub fn optimize_c0(
    design: &LadderDesign,
    series: C0Range,
    shunt: C0Range,
    grid: &FrequencyGrid,
    z0: f64,
    opts: &OptimizeOptions,
) -> Result<C0Optimum, LadderError> {
    series.validate("series")?;
    shunt.validate("shunt")?;
    grid.validate()?;
    if design.order < 2 {
        return Err(LadderError::InvalidOrder(design.order));
    }
    if !(z0 > 0.0 && z0.is_finite()) {
        return Err(LadderError::InvalidReference(z0));
    }
    // Surface spec errors (e.g. k2 out of range) instead of reporting them
    // as a missing passband.
    synthesize(design, series.min, shunt.min)?;

    let objective = |cs: f64, cp: f64| insertion_loss_objective(design, cs, cp, grid, z0, &opts.metrics);
    let mut evaluations = 0;

    let mut best: Option<(f64, f64, f64)> = None;
    for &cs in &series.log_points(opts.coarse_points) {
        for &cp in &shunt.log_points(opts.coarse_points) {
            let il = objective(cs, cp);
            evaluations += 1;
            let better = match best {
                None => true,
                Some((b_il, b_cs, b_cp)) => il
                    .total_cmp(&b_il)
                    .then(cs.total_cmp(&b_cs))
                    .then(cp.total_cmp(&b_cp))
                    .is_lt(),
            };
            if better {
                best = Some((il, cs, cp));
            }
        }
    }
    let (coarse_il, mut c0_series, mut c0_shunt) = best.ok_or(LadderError::NoPassband)?;
    if !coarse_il.is_finite() {
        return Err(LadderError::NoPassband);
    }

    let free: Vec<(usize, C0Range)> = [series, shunt]
        .into_iter()
        .enumerate()
        .filter(|(_, r)| r.min < r.max)
        .collect();
    if !free.is_empty() {
        let incumbent = [c0_series, c0_shunt];
        let x0: Vec<f64> = free.iter().map(|(i, _)| incumbent[*i].ln()).collect();
        let cells = opts.coarse_points.max(2) as f64 - 1.0;
        let mut nm = NelderMeadOptions::new(
            free.iter().map(|(_, r)| r.log_span() / cells).collect(),
            free.iter().map(|(_, r)| r.log_span() * opts.x_tol_fraction).collect(),
        );
        nm.max_evals = opts.max_evals;
        nm.bounds = Some(free.iter().map(|(_, r)| (r.min.ln(), r.max.ln())).collect());
        let to_c0 = |x: &[f64]| {
            let mut c = incumbent;
            for ((i, r), v) in free.iter().zip(x) {
                // exp(ln(max)) may round past the bound.
                c[*i] = v.exp().clamp(r.min, r.max);
            }
            (c[0], c[1])
        };
        let result = nelder_mead(
            |x| {
                let (cs, cp) = to_c0(x);
                objective(cs, cp)
            },
            &x0,
            &nm,
        );
        evaluations += result.evals;
        if result.f < coarse_il {
            (c0_series, c0_shunt) = to_c0(&result.x);
        }
    }

    let metrics = evaluate(design, c0_series, c0_shunt, grid, z0, &opts.metrics).ok_or(LadderError::NoPassband)?;
    Ok(C0Optimum {
        c0_series,
        c0_shunt,
        metrics,
        coarse_il_db: coarse_il,
        evaluations,
    })
}
