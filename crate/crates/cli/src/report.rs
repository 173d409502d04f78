//! Machine-readable run output: CSV traces and JSON reports.

use std::io::{self, Write};

use nalgebra::DMatrix;
use serde::Serialize;
use stiefel::{CriticalityReport, DescentTrace};

/// `{:.16e}`: 17 significant digits.
pub fn float17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON formatter writing every float with 17 significant digits.
struct Precise;

impl serde_json::ser::Formatter for Precise {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(float17(value).as_bytes())
    }
}

/// Pretty JSON with full-precision floats.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PreciseIndent::default());
    value
        .serialize(&mut ser)
        .expect("report types serialize infallibly");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON output is UTF-8")
}

/// [`Precise`] combined with two-space indentation.
#[derive(Default)]
struct PreciseIndent {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.pretty.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for PreciseIndent {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        Precise.write_f64(writer, value)
    }

    forward! {
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CriticalitySummary {
    pub verdict: bool,
    pub tol: f64,
    pub symmetry_residual: f64,
    pub span_residual: f64,
    pub membership_residual: f64,
    pub embedded_gradient_norm: f64,
    pub wen_residual: f64,
}

impl From<&CriticalityReport> for CriticalitySummary {
    fn from(r: &CriticalityReport) -> Self {
        Self {
            verdict: r.verdict,
            tol: r.tol,
            symmetry_residual: r.symmetry_residual,
            span_residual: r.span_residual,
            membership_residual: r.membership_residual,
            embedded_gradient_norm: r.embedded_norm,
            wen_residual: r.wen_residual,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NearestCritical {
    /// Signed frame, e.g. `[-e2|e1]`.
    pub label: String,
    /// Unsigned frame, e.g. `[e2|e1]`.
    pub pattern: String,
    pub cost: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunReport {
    pub problem: String,
    pub n: usize,
    pub p: usize,
    pub termination: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_cost: f64,
    pub final_grad_norm: f64,
    pub final_point: Vec<Vec<f64>>,
    pub criticality: CriticalitySummary,
    pub nearest_critical: Option<NearestCritical>,
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub const TRACE_HEADER: [&str; 5] = ["k", "cost", "grad_norm", "membership_residual", "lambda"];

/// Writes the trace as CSV; `lambda` is empty when no step was taken.
pub fn write_trace<W: Write>(writer: W, trace: &DescentTrace) -> csv::Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        csv.write_record([
            r.k.to_string(),
            float17(r.cost),
            float17(r.grad_norm),
            float17(r.membership_residual),
            r.lambda.map(float17).unwrap_or_default(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
