//! Report rows and their CSV / JSON encodings.

use std::io::{self, Write};

use serde_json::{Map, Number, Value};

use crate::channels::{make_pure_channel, XParams, XState};
use crate::error::Result;
use crate::fidelity::{
    average_fidelity, ClosedForms, FidelityEstimate, Method, OutcomeKind, Selection,
};
use crate::pipelines::{Channel, Route, Teleportation};
use crate::thresholds::{compute_thresholds, plain_threshold, Verdict};

/// Fixed column order of every report.
pub const COLUMNS: [&str; 23] = [
    "valid",
    "r11",
    "r22",
    "r33",
    "r44",
    "r14",
    "r23",
    "c14",
    "f_x",
    "f_x_use",
    "f_x_use_0",
    "f_x_use_1",
    "p_qext",
    "c_x_th",
    "c_x_use_th",
    "c_x_use_0_th",
    "q_plain",
    "q_use",
    "q_filtered",
    "method",
    "n_samples",
    "std_err",
    "seed",
];

/// How a row's fidelities are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    Closed,
    Quadrature,
    MonteCarlo { samples: usize, seed: u64 },
}

impl Evaluation {
    pub fn method(&self) -> Method {
        match self {
            Evaluation::Closed => Method::ClosedForm,
            Evaluation::Quadrature => Method::Quadrature,
            Evaluation::MonteCarlo { .. } => Method::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportRow {
    pub valid: bool,
    pub params: Option<XParams>,
    pub c14: Option<f64>,
    pub f_x: Option<f64>,
    pub f_x_use: Option<f64>,
    pub f_x_use_0: Option<f64>,
    pub f_x_use_1: Option<f64>,
    pub p_qext: Option<f64>,
    pub c_x_th: Option<f64>,
    pub c_x_use_th: Option<f64>,
    pub c_x_use_0_th: Option<f64>,
    pub q_plain: Option<Verdict>,
    pub q_use: Option<Verdict>,
    pub q_filtered: Option<Verdict>,
    pub method: Option<Method>,
    pub n_samples: Option<usize>,
    pub std_err: Option<f64>,
    pub seed: Option<u64>,
}

impl ReportRow {
    /// Placeholder for a sweep point that does not describe a valid channel.
    pub fn invalid(params: Option<XParams>) -> Self {
        Self {
            valid: false,
            params,
            ..Self::default()
        }
    }

    pub fn evaluate(channel: Channel, eval: Evaluation) -> Result<Self> {
        let x = channel.as_x_state();
        let closed = ClosedForms::evaluate(&x);
        let thresholds = compute_thresholds(&x).ok();
        let mut row = ReportRow {
            valid: true,
            params: Some(x.params()),
            c14: Some(closed.c14),
            p_qext: closed.p_qext,
            c_x_th: Some(plain_threshold(&x)),
            c_x_use_th: thresholds.map(|t| t.c_x_use_th),
            c_x_use_0_th: thresholds.map(|t| t.c_x_use_0_th),
            q_plain: Some(Verdict::classify(closed.c14, plain_threshold(&x))),
            q_use: thresholds.map(|t| t.quantum_use_total),
            q_filtered: thresholds.map(|t| t.quantum_use_filtered),
            method: Some(eval.method()),
            ..Self::default()
        };
        match eval {
            Evaluation::Closed => {
                row.f_x = Some(closed.f_x);
                row.f_x_use = closed.f_x_use;
                row.f_x_use_0 = closed.f_x_use_0;
                row.f_x_use_1 = closed.f_x_use_1;
                row.n_samples = Some(0);
                row.std_err = Some(0.0);
            }
            Evaluation::Quadrature | Evaluation::MonteCarlo { .. } => {
                let averaging = match eval {
                    Evaluation::MonteCarlo { samples, seed } => {
                        row.seed = Some(seed);
                        crate::fidelity::Averaging::MonteCarlo { samples, seed }
                    }
                    _ => crate::fidelity::Averaging::quadrature(),
                };
                let plain = Teleportation::plain(channel, Route::Simulated);
                let mut estimates: Vec<FidelityEstimate> = Vec::new();
                let f_x = average_fidelity(&plain, &averaging, Selection::all())?;
                row.f_x = Some(f_x.value);
                estimates.push(f_x);
                if let Ok(with_use) = Teleportation::with_extraction(channel, Route::Simulated) {
                    let total = average_fidelity(&with_use, &averaging, Selection::all())?;
                    row.f_x_use = Some(total.value);
                    estimates.push(total);
                    let sel = Selection::kind(OutcomeKind::Extracted);
                    let success = average_fidelity(&with_use, &averaging, sel)?;
                    row.f_x_use_0 = Some(success.value);
                    estimates.push(success);
                    // A failure outcome that never occurs has no fidelity.
                    if closed.f_x_use_1.is_some() {
                        let sel = Selection::kind(OutcomeKind::Rejected);
                        if let Ok(failure) = average_fidelity(&with_use, &averaging, sel) {
                            row.f_x_use_1 = Some(failure.value);
                            estimates.push(failure);
                        }
                    }
                }
                row.n_samples = Some(f_x.n_samples);
                row.std_err = Some(estimates.iter().map(|e| e.std_error).fold(0.0, f64::max));
            }
        }
        Ok(row)
    }

    fn cells(&self) -> Vec<Cell> {
        let p = self.params;
        let param = |f: fn(&XParams) -> f64| p.as_ref().map(f).into();
        vec![
            Cell::Bool(self.valid),
            param(|p| p.r11),
            param(|p| p.r22),
            param(|p| p.r33),
            param(|p| p.r44),
            param(|p| p.r14),
            param(|p| p.r23),
            self.c14.into(),
            self.f_x.into(),
            self.f_x_use.into(),
            self.f_x_use_0.into(),
            self.f_x_use_1.into(),
            self.p_qext.into(),
            self.c_x_th.into(),
            self.c_x_use_th.into(),
            self.c_x_use_0_th.into(),
            self.q_plain.into(),
            self.q_use.into(),
            self.q_filtered.into(),
            self.method
                .map(|m| Cell::Text(m.label().to_string()))
                .unwrap_or(Cell::Empty),
            self.n_samples.map(|n| Cell::Int(n as u64)).unwrap_or(Cell::Empty),
            self.std_err.into(),
            self.seed.map(Cell::Int).unwrap_or(Cell::Empty),
        ]
    }
}

/// Builds the report row for a pure channel given `alpha`; invalid values
/// yield an invalid row.
pub fn pure_row(alpha: f64, eval: Evaluation) -> Result<ReportRow> {
    match make_pure_channel(alpha) {
        Ok(ch) => ReportRow::evaluate(Channel::Pure(ch), eval),
        Err(_) => Ok(ReportRow::invalid(None)),
    }
}

/// Builds the report row for an X-state; invalid parameters yield an
/// invalid row that still echoes them.
pub fn x_row(params: XParams, strict: bool, eval: Evaluation) -> Result<ReportRow> {
    match XState::new(params, strict) {
        Ok(x) => ReportRow::evaluate(Channel::X(x), eval),
        Err(_) => Ok(ReportRow::invalid(Some(params))),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Empty,
    Bool(bool),
    Int(u64),
    Num(f64),
    Text(String),
    Verdict(Verdict),
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map(Cell::Num).unwrap_or(Cell::Empty)
    }
}

impl From<Option<Verdict>> for Cell {
    fn from(v: Option<Verdict>) -> Self {
        v.map(Cell::Verdict).unwrap_or(Cell::Empty)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Bool(b) => b.to_string(),
            Cell::Int(n) => n.to_string(),
            Cell::Num(x) => format_number(*x),
            Cell::Text(s) => s.clone(),
            Cell::Verdict(v) => v.label().to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Empty => Value::Null,
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Int(n) => Value::Number((*n).into()),
            Cell::Num(x) => format_number(*x)
                .parse::<f64>()
                .ok()
                .and_then(Number::from_f64)
                .map(Value::Number)
                .unwrap_or(Value::Null),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Verdict(Verdict::Quantum) => Value::Bool(true),
            Cell::Verdict(Verdict::Classical) => Value::Bool(false),
            Cell::Verdict(Verdict::Boundary) => Value::String("boundary".into()),
        }
    }
}

/// Nine significant digits; scientific notation with a lowercase `e`
/// outside `[1e-4, 1e6)`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if (-4..6).contains(&exp) {
        format!("{:.*}", (8 - exp).max(0) as usize, x)
    } else {
        sci
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

pub fn write_rows<W: Write>(out: &mut W, rows: &[ReportRow], format: Format) -> io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "{}", COLUMNS.join(","))?;
            for row in rows {
                let line: Vec<String> = row.cells().iter().map(Cell::text).collect();
                writeln!(out, "{}", line.join(","))?;
            }
        }
        Format::Json => {
            let array: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = COLUMNS
                        .iter()
                        .zip(row.cells())
                        .map(|(k, c)| (k.to_string(), c.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            let text = serde_json::to_string_pretty(&Value::Array(array)).map_err(io::Error::other)?;
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}
