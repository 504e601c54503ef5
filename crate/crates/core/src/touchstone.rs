//! Touchstone v1.x reader and writer for one- and two-port data.
//!
//! Documents are held in a canonical form: frequencies in Hz and values as
//! real/imaginary pairs. The unit and format of the source file are kept as
//! metadata and used again when writing.
//!
//! Following v1.1, Y and Z data in a file are normalized to the reference
//! resistance `R`; the normalization is undone when a document is bridged to
//! a [`FrequencySweep`].

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{one_port_admittance, one_port_s11, NetworkError};
use crate::sweep::{FrequencySweep, SweepError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TouchstoneError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: frequency not strictly increasing")]
    Order { line: usize },
    #[error("line {line}: expected {expected} values, found {got}")]
    Arity {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid document: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("{0}")]
    Io(String),
}

impl TouchstoneError {
    /// Source line the error refers to, when there is one.
    pub fn line(&self) -> Option<usize> {
        match *self {
            TouchstoneError::Parse { line, .. }
            | TouchstoneError::Order { line }
            | TouchstoneError::Arity { line, .. } => Some(line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FreqUnit {
    Hz,
    KHz,
    MHz,
    #[default]
    GHz,
}

impl FreqUnit {
    pub fn scale(self) -> f64 {
        match self {
            FreqUnit::Hz => 1.0,
            FreqUnit::KHz => 1e3,
            FreqUnit::MHz => 1e6,
            FreqUnit::GHz => 1e9,
        }
    }
}

impl fmt::Display for FreqUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FreqUnit::Hz => "Hz",
            FreqUnit::KHz => "kHz",
            FreqUnit::MHz => "MHz",
            FreqUnit::GHz => "GHz",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parameter {
    #[default]
    S,
    Y,
    Z,
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parameter::S => "S",
            Parameter::Y => "Y",
            Parameter::Z => "Z",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFormat {
    /// Real, imaginary.
    RI,
    /// Magnitude, angle in degrees.
    #[default]
    MA,
    /// `20·log10` magnitude, angle in degrees.
    DB,
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::RI => "RI",
            DataFormat::MA => "MA",
            DataFormat::DB => "DB",
        })
    }
}

impl DataFormat {
    fn decode(self, a: f64, b: f64) -> Complex64 {
        match self {
            DataFormat::RI => Complex64::new(a, b),
            DataFormat::MA => Complex64::from_polar(a, b * PI / 180.0),
            DataFormat::DB => Complex64::from_polar(10f64.powf(a / 20.0), b * PI / 180.0),
        }
    }

    fn encode(self, v: Complex64) -> (f64, f64) {
        match self {
            DataFormat::RI => (v.re, v.im),
            DataFormat::MA => (v.norm(), v.arg().to_degrees()),
            DataFormat::DB => (20.0 * v.norm().log10(), v.arg().to_degrees()),
        }
    }
}

/// One frequency point. Two-port values are in file column order
/// `[S11, S21, S12, S22]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchstoneRow {
    pub freq_hz: f64,
    pub values: Vec<Complex64>,
}

/// File-level metadata carried alongside the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub n_ports: usize,
    pub freq_unit: FreqUnit,
    pub parameter: Parameter,
    pub format: DataFormat,
    pub r_ref: f64,
    /// Comment text without the leading `!`.
    pub comments: Vec<String>,
}

impl DocumentMeta {
    pub fn new(n_ports: usize) -> Self {
        Self {
            n_ports,
            freq_unit: FreqUnit::GHz,
            parameter: Parameter::S,
            format: DataFormat::MA,
            r_ref: 50.0,
            comments: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchstoneDocument {
    pub n_ports: usize,
    pub freq_unit: FreqUnit,
    pub parameter: Parameter,
    pub format: DataFormat,
    pub r_ref: f64,
    pub rows: Vec<TouchstoneRow>,
    pub comments: Vec<String>,
}

impl TouchstoneDocument {
    pub fn new(meta: DocumentMeta, rows: Vec<TouchstoneRow>) -> Result<Self, TouchstoneError> {
        let doc = Self {
            n_ports: meta.n_ports,
            freq_unit: meta.freq_unit,
            parameter: meta.parameter,
            format: meta.format,
            r_ref: meta.r_ref,
            rows,
            comments: meta.comments,
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn meta(&self) -> DocumentMeta {
        DocumentMeta {
            n_ports: self.n_ports,
            freq_unit: self.freq_unit,
            parameter: self.parameter,
            format: self.format,
            r_ref: self.r_ref,
            comments: self.comments.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), TouchstoneError> {
        let arity = values_per_row(self.n_ports)?;
        if !(self.r_ref > 0.0 && self.r_ref.is_finite()) {
            return Err(TouchstoneError::Invalid(format!("reference resistance {}", self.r_ref)));
        }
        if self.comments.iter().any(|c| c.contains(['\n', '\r'])) {
            return Err(TouchstoneError::Invalid("comment spans several lines".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.values.len() != arity {
                return Err(TouchstoneError::Invalid(format!(
                    "row {i}: {} values for a {}-port document",
                    row.values.len(),
                    self.n_ports
                )));
            }
            if !(row.freq_hz >= 0.0 && row.freq_hz.is_finite()) {
                return Err(TouchstoneError::Invalid(format!("row {i}: frequency {}", row.freq_hz)));
            }
        }
        if let Some(i) = self.rows.windows(2).position(|w| !(w[0].freq_hz < w[1].freq_hz)) {
            return Err(TouchstoneError::Invalid(format!(
                "row {}: frequency not strictly increasing",
                i + 1
            )));
        }
        Ok(())
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.freq_hz).collect()
    }
}

fn values_per_row(n_ports: usize) -> Result<usize, TouchstoneError> {
    match n_ports {
        1 => Ok(1),
        2 => Ok(4),
        n => Err(TouchstoneError::Unsupported(format!("{n}-port data"))),
    }
}

/// Port count implied by a `.s1p` / `.s2p` extension.
pub fn ports_from_path(path: &Path) -> Result<usize, TouchstoneError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("s1p") => Ok(1),
        Some("s2p") => Ok(2),
        _ => Err(TouchstoneError::Unsupported(format!(
            "file extension of {} (expected .s1p or .s2p)",
            path.display()
        ))),
    }
}

struct OptionLine {
    unit: FreqUnit,
    parameter: Parameter,
    format: DataFormat,
    r_ref: f64,
}

fn parse_option_line(body: &str, line: usize) -> Result<OptionLine, TouchstoneError> {
    let err = |msg: String| TouchstoneError::Parse { line, msg };
    let mut opt = OptionLine {
        unit: FreqUnit::GHz,
        parameter: Parameter::S,
        format: DataFormat::MA,
        r_ref: 50.0,
    };
    let mut tokens = body.split_whitespace();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => opt.unit = FreqUnit::Hz,
            "KHZ" => opt.unit = FreqUnit::KHz,
            "MHZ" => opt.unit = FreqUnit::MHz,
            "GHZ" => opt.unit = FreqUnit::GHz,
            "S" => opt.parameter = Parameter::S,
            "Y" => opt.parameter = Parameter::Y,
            "Z" => opt.parameter = Parameter::Z,
            "G" | "H" => return Err(err(format!("unsupported parameter type '{tok}'"))),
            "RI" => opt.format = DataFormat::RI,
            "MA" => opt.format = DataFormat::MA,
            "DB" => opt.format = DataFormat::DB,
            "R" => {
                let v = tokens
                    .next()
                    .ok_or_else(|| err("missing value after 'R'".into()))?;
                opt.r_ref = f64::from_str(v).map_err(|_| err(format!("bad reference resistance '{v}'")))?;
                if !(opt.r_ref > 0.0 && opt.r_ref.is_finite()) {
                    return Err(err(format!("reference resistance must be positive, got {v}")));
                }
            }
            _ => return Err(err(format!("unknown option '{tok}'"))),
        }
    }
    Ok(opt)
}

/// Parses Touchstone text holding `n_ports` ports.
///
/// The option line is mandatory. Full-line `!` comments are preserved in
/// order; trailing comments on data lines are dropped. Only the first option
/// line is honoured.
pub fn parse_touchstone(text: &str, n_ports: usize) -> Result<TouchstoneDocument, TouchstoneError> {
    let arity = values_per_row(n_ports)?;
    let tokens_per_row = 1 + 2 * arity;
    let mut comments = Vec::new();
    let mut option: Option<OptionLine> = None;
    let mut rows: Vec<TouchstoneRow> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if let Some(c) = raw.trim_start().strip_prefix('!') {
            comments.push(c.trim_end_matches('\r').to_string());
            continue;
        }
        let content = raw.split('!').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            return Err(TouchstoneError::Unsupported(format!(
                "line {line}: Touchstone v2 keyword {content}; only v1.x files are accepted"
            )));
        }
        if let Some(body) = content.strip_prefix('#') {
            if option.is_none() {
                option = Some(parse_option_line(body, line)?);
            }
            continue;
        }
        let Some(opt) = option.as_ref() else {
            return Err(TouchstoneError::Parse {
                line,
                msg: "data before option line".into(),
            });
        };
        let nums = content
            .split_whitespace()
            .map(|t| {
                f64::from_str(t).map_err(|_| TouchstoneError::Parse {
                    line,
                    msg: format!("invalid number '{t}'"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if nums.len() != tokens_per_row {
            return Err(TouchstoneError::Arity {
                line,
                expected: tokens_per_row,
                got: nums.len(),
            });
        }
        let freq_hz = nums[0] * opt.unit.scale();
        if !(freq_hz >= 0.0 && freq_hz.is_finite()) {
            return Err(TouchstoneError::Parse {
                line,
                msg: format!("invalid frequency '{}'", nums[0]),
            });
        }
        if rows.last().is_some_and(|r| !(r.freq_hz < freq_hz)) {
            return Err(TouchstoneError::Order { line });
        }
        let values = nums[1..]
            .chunks_exact(2)
            .map(|p| opt.format.decode(p[0], p[1]))
            .collect();
        rows.push(TouchstoneRow { freq_hz, values });
    }

    let opt = option.ok_or_else(|| TouchstoneError::Parse {
        line: text.lines().count().max(1),
        msg: "missing option line".into(),
    })?;
    Ok(TouchstoneDocument {
        n_ports,
        freq_unit: opt.unit,
        parameter: opt.parameter,
        format: opt.format,
        r_ref: opt.r_ref,
        rows,
        comments,
    })
}

/// Reads a file, taking the port count from its extension.
pub fn read_touchstone(path: &Path) -> Result<TouchstoneDocument, TouchstoneError> {
    let n_ports = ports_from_path(path)?;
    let text = std::fs::read_to_string(path).map_err(|e| TouchstoneError::Io(format!("{}: {e}", path.display())))?;
    parse_touchstone(&text, n_ports)
}

fn num(v: f64) -> String {
    format!("{v:.11e}")
}

/// Serializes a document: comments, the option line, then one row per
/// frequency with twelve significant digits.
pub fn write_touchstone(doc: &TouchstoneDocument) -> Result<String, TouchstoneError> {
    doc.validate()?;
    let mut out = String::new();
    for c in &doc.comments {
        let _ = writeln!(out, "!{c}");
    }
    let _ = writeln!(out, "# {} {} {} R {}", doc.freq_unit, doc.parameter, doc.format, doc.r_ref);
    let scale = doc.freq_unit.scale();
    for row in &doc.rows {
        out.push_str(&num(row.freq_hz / scale));
        for v in &row.values {
            let (a, b) = doc.format.encode(*v);
            let _ = write!(out, " {} {}", num(a), num(b));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_touchstone_file(doc: &TouchstoneDocument, path: &Path) -> Result<(), TouchstoneError> {
    let text = write_touchstone(doc)?;
    std::fs::write(path, text).map_err(|e| TouchstoneError::Io(format!("{}: {e}", path.display())))
}

const TWO_PORT_TRACES: [&str; 4] = ["S11", "S21", "S12", "S22"];

/// Bridges a document to a sweep.
///
/// * 1-port S: `"S11"` plus the admittance `"Y"` through the one-port relation;
/// * 1-port Y: `"Y"` in siemens;
/// * 2-port S: `"S11"`, `"S21"`, `"S12"`, `"S22"`.
///
/// Z data, and Y data on two ports, are not supported.
pub fn sweep_from_document(doc: &TouchstoneDocument) -> Result<FrequencySweep, TouchstoneError> {
    doc.validate()?;
    let mut sweep = FrequencySweep::new(doc.frequencies())?;
    let column = |k: usize| doc.rows.iter().map(|r| r.values[k]).collect::<Vec<_>>();
    match (doc.n_ports, doc.parameter) {
        (1, Parameter::S) => {
            let s11 = column(0);
            let y = s11
                .iter()
                .map(|&s| one_port_admittance(s, doc.r_ref))
                .collect::<Result<Vec<_>, _>>()?;
            sweep.insert_trace("S11", s11)?;
            sweep.insert_trace("Y", y)?;
        }
        (1, Parameter::Y) => {
            let y = column(0).into_iter().map(|v| v / doc.r_ref).collect();
            sweep.insert_trace("Y", y)?;
        }
        (2, Parameter::S) => {
            for (k, name) in TWO_PORT_TRACES.iter().enumerate() {
                sweep.insert_trace(*name, column(k))?;
            }
        }
        (n, p) => {
            return Err(TouchstoneError::Unsupported(format!(
                "{p}-parameter {n}-port data (use S or 1-port Y)"
            )))
        }
    }
    Ok(sweep)
}

/// Builds a document from a sweep; inverse of [`sweep_from_document`].
///
/// A 1-port S document is taken from `"S11"` when present, otherwise derived
/// from `"Y"`.
pub fn document_from_sweep(sweep: &FrequencySweep, meta: DocumentMeta) -> Result<TouchstoneDocument, TouchstoneError> {
    let columns: Vec<Vec<Complex64>> = match (meta.n_ports, meta.parameter) {
        (1, Parameter::S) => match sweep.trace("S11") {
            Some(s11) => vec![s11.to_vec()],
            None => vec![sweep
                .require("Y")?
                .iter()
                .map(|&y| one_port_s11(y, meta.r_ref))
                .collect::<Result<_, _>>()?],
        },
        (1, Parameter::Y) => vec![sweep.require("Y")?.iter().map(|y| y * meta.r_ref).collect()],
        (2, Parameter::S) => TWO_PORT_TRACES
            .iter()
            .map(|name| sweep.require(name).map(<[_]>::to_vec))
            .collect::<Result<_, _>>()?,
        (n, p) => {
            return Err(TouchstoneError::Unsupported(format!(
                "{p}-parameter {n}-port data (use S or 1-port Y)"
            )))
        }
    };
    let rows = sweep
        .frequencies()
        .iter()
        .enumerate()
        .map(|(i, &freq_hz)| TouchstoneRow {
            freq_hz,
            values: columns.iter().map(|c| c[i]).collect(),
        })
        .collect();
    TouchstoneDocument::new(meta, rows)
}
