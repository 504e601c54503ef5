use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ladderkit::fitting::{fit_mbvd, fit_report, initial_guess, FitError, FitOptions};
use ladderkit::ladder::{optimize_c0, sweep, synthesize, LadderError, OptimizeOptions, Orientation};
use ladderkit::mbvd::MbvdError;
use ladderkit::metrics::{filter_metrics, to_db, MetricsError, MetricsOptions};
use ladderkit::sweep::{FrequencyGrid, FrequencySweep};
use ladderkit::touchstone::{
    document_from_sweep, read_touchstone, sweep_from_document, write_touchstone, DataFormat, DocumentMeta, FreqUnit,
    Parameter, TouchstoneError,
};
use serde::Serialize;

use crate::config::{Design, DesignConfig};
use crate::CliError;

impl From<LadderError> for CliError {
    fn from(e: LadderError) -> Self {
        match e {
            LadderError::NoPassband | LadderError::Singular { .. } => CliError::NoResult(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::NoPassband(_) => CliError::NoResult(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::Resonator(MbvdError::NoResonance)
            | FitError::DegenerateTrace(_)
            | FitError::BadInitialPoint => CliError::NoResult(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<TouchstoneError> for CliError {
    fn from(e: TouchstoneError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn with_extension(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Writes to `path`, or to stdout when there is none.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn two_port_document(s: &FrequencySweep, z0: f64) -> Result<String, CliError> {
    let meta = DocumentMeta {
        n_ports: 2,
        freq_unit: FreqUnit::GHz,
        parameter: Parameter::S,
        format: DataFormat::RI,
        r_ref: z0,
        comments: vec![format!(" ladderkit {}", env!("CARGO_PKG_VERSION"))],
    };
    Ok(write_touchstone(&document_from_sweep(s, meta)?)?)
}

/// Run metadata kept apart from the data files.
#[derive(Serialize)]
struct RunRecord<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: String,
    fs_series_hz: f64,
    fs_shunt_hz: f64,
    k2: f64,
    q: f64,
    topology: Vec<Orientation>,
    z0_ohm: f64,
    grid: FrequencyGrid,
    c0_series_f: f64,
    c0_shunt_f: f64,
    optimized: bool,
    optimizer_evaluations: usize,
    outputs: Vec<String>,
}

struct Prepared {
    design: Design,
    c0_series: f64,
    c0_shunt: f64,
    evaluations: usize,
}

fn prepare(config: &Path, z0: Option<f64>, grid_points: Option<usize>, optimize: bool) -> Result<Prepared, CliError> {
    let design = DesignConfig::load(config)?.resolve(z0, grid_points)?;
    if design.is_fixed() {
        return Ok(Prepared {
            c0_series: design.series.min,
            c0_shunt: design.shunt.min,
            evaluations: 0,
            design,
        });
    }
    if !optimize {
        return Err(CliError::Input(
            "simulate needs fixed c0_series_f and c0_shunt_f; use synth to search ranges".into(),
        ));
    }
    let opts = OptimizeOptions {
        metrics: design.metrics,
        ..OptimizeOptions::default()
    };
    let best = optimize_c0(&design.design, design.series, design.shunt, &design.grid, design.z0, &opts)?;
    Ok(Prepared {
        c0_series: best.c0_series,
        c0_shunt: best.c0_shunt,
        evaluations: best.evaluations,
        design,
    })
}

fn run_design(command: &str, config: &Path, stem: &Path, z0: Option<f64>, grid_points: Option<usize>) -> Result<(), CliError> {
    let synth = command == "synth";
    let p = prepare(config, z0, grid_points, synth)?;
    let d = &p.design;
    let topology = synthesize(&d.design, p.c0_series, p.c0_shunt)?;
    let s = sweep(&topology, &d.grid, d.z0)?;

    let mut outputs = Vec::new();
    let mut files = Vec::new();
    if synth {
        let metrics = filter_metrics(&s, &d.metrics)?;
        files.push((with_extension(stem, "metrics.json"), to_json(&metrics.report())));
    }
    files.insert(0, (with_extension(stem, "s2p"), two_port_document(&s, d.z0)?));
    for (path, _) in &files {
        outputs.push(path.display().to_string());
    }
    let run = RunRecord {
        tool: "ladderkit",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: config.display().to_string(),
        fs_series_hz: d.design.fs_series,
        fs_shunt_hz: d.design.fs_shunt(),
        k2: d.design.k2,
        q: d.design.q,
        topology: topology.orientations(),
        z0_ohm: d.z0,
        grid: d.grid,
        c0_series_f: p.c0_series,
        c0_shunt_f: p.c0_shunt,
        optimized: !d.is_fixed(),
        optimizer_evaluations: p.evaluations,
        outputs,
    };
    files.push((with_extension(stem, "run.json"), to_json(&run)));
    if files.iter().any(|(path, _)| path == config) {
        return Err(CliError::Input(format!(
            "output stem {} would overwrite the configuration",
            stem.display()
        )));
    }
    for (path, text) in &files {
        write_file(path, text)?;
    }
    for (path, _) in &files {
        println!("{}", path.display());
    }
    Ok(())
}

pub fn synth(config: &Path, stem: &Path, z0: Option<f64>, grid_points: Option<usize>) -> Result<(), CliError> {
    run_design("synth", config, stem, z0, grid_points)
}

pub fn simulate(config: &Path, stem: &Path, z0: Option<f64>, grid_points: Option<usize>) -> Result<(), CliError> {
    run_design("simulate", config, stem, z0, grid_points)
}

fn read_ports(input: &Path, n_ports: usize, command: &str) -> Result<FrequencySweep, CliError> {
    let doc = read_touchstone(input)?;
    if doc.n_ports != n_ports {
        let want = if n_ports == 1 { ".s1p" } else { ".s2p" };
        return Err(CliError::Input(format!(
            "{command} needs a {n_ports}-port {want} file, got {}",
            input.display()
        )));
    }
    Ok(sweep_from_document(&doc)?)
}

pub fn fit(input: &Path, output: Option<&Path>, opts: &FitOptions) -> Result<(), CliError> {
    opts.validate()?;
    let s = read_ports(input, 1, "fit")?;
    let init = initial_guess(&s)?;
    let result = fit_mbvd(&s, &init, opts)?;
    emit(output, &to_json(&fit_report(&result)))
}

pub fn metrics(input: &Path, output: Option<&Path>, rejection_offset: f64) -> Result<(), CliError> {
    if !(rejection_offset > 0.0 && rejection_offset < 1.0) {
        return Err(CliError::Input(format!(
            "rejection-offset = {rejection_offset}: must lie in (0, 1)"
        )));
    }
    let s = read_ports(input, 2, "metrics")?;
    let opts = MetricsOptions {
        rejection_offset,
        ..MetricsOptions::default()
    };
    let m = filter_metrics(&s, &opts)?;
    emit(output, &to_json(&m.report()))
}

pub fn export_csv(input: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let s = read_ports(input, 2, "export")?;
    let (s21, s11) = (s.trace("S21").unwrap_or_default(), s.trace("S11").unwrap_or_default());
    let mut out = String::from("freq_hz,s21_db,s21_deg,s11_db,s11_deg\n");
    for ((f, a), b) in s.frequencies().iter().zip(s21).zip(s11) {
        let _ = writeln!(
            out,
            "{f},{},{},{},{}",
            to_db(a.norm()),
            a.arg().to_degrees(),
            to_db(b.norm()),
            b.arg().to_degrees()
        );
    }
    emit(output, &out)
}
