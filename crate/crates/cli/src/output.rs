//! Output rows and their CSV / JSON encodings.

use std::io::Write;

use serde::Serialize;
use spikegap::{Flag, GapEstimate, Method};

use crate::CliError;

/// Version of the JSON document layout.
pub const SCHEMA_VERSION: u32 = 1;

/// CSV column order.
pub const CSV_COLUMNS: [&str; 11] =
    ["n", "alpha", "beta", "s", "method", "quantity", "value", "log_value", "precision_bits", "flags", "error"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub s: Option<f64>,
    pub method: String,
    pub quantity: String,
    pub value: Option<f64>,
    pub log_value: Option<f64>,
    pub precision_bits: Option<usize>,
    pub flags: String,
    pub error: Option<String>,
}

impl Row {
    pub fn new(method: Method, quantity: &str) -> Self {
        Self {
            n: None,
            alpha: None,
            beta: None,
            s: None,
            method: method.as_str().to_string(),
            quantity: quantity.to_string(),
            value: None,
            log_value: None,
            precision_bits: None,
            flags: String::new(),
            error: None,
        }
    }

    pub fn at(mut self, n: Option<usize>, alpha: Option<f64>, beta: Option<f64>, s: Option<f64>) -> Self {
        self.n = n;
        self.alpha = alpha;
        self.beta = beta;
        self.s = s;
        self
    }

    /// Sets the value and its natural log (when positive).
    pub fn value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self.log_value = (v > 0.0).then(|| v.ln());
        self
    }

    /// Sets only the log value, for quantities too small to store directly.
    pub fn log_value(mut self, lv: f64) -> Self {
        self.log_value = Some(lv);
        let v = lv.exp();
        self.value = (v > 0.0 && v.is_finite()).then_some(v);
        self
    }

    pub fn bits(mut self, bits: usize) -> Self {
        self.precision_bits = Some(bits);
        self
    }

    pub fn flag(mut self, flag: &str) -> Self {
        if !self.flags.is_empty() {
            self.flags.push(';');
        }
        self.flags.push_str(flag);
        self
    }

    pub fn flags(self, flags: &[Flag]) -> Self {
        flags.iter().fold(self, |row, f| row.flag(f.as_str()))
    }

    pub fn failed(mut self, err: impl ToString) -> Self {
        self.error = Some(err.to_string());
        self
    }

    /// Short label naming the instance, for diagnostics.
    pub fn describe(&self) -> String {
        let mut parts = vec![self.quantity.clone()];
        let fields = [("n", self.n.map(|v| v.to_string())), ("alpha", self.alpha.map(|v| v.to_string())),
            ("beta", self.beta.map(|v| v.to_string())), ("s", self.s.map(|v| v.to_string()))];
        parts.extend(fields.into_iter().filter_map(|(k, v)| v.map(|v| format!("{k}={v}"))));
        parts.join(" ")
    }

    pub fn is_failure(&self) -> bool {
        self.error.is_some()
    }

    /// Row for an exact or bound gap estimate.
    pub fn from_estimate(est: &GapEstimate, quantity: &str) -> Self {
        let (alpha, beta) = est.params.map_or((None, None), |p| (Some(p.alpha), p.beta()));
        let row = Row::new(est.method, quantity).at(Some(est.n), alpha, beta, Some(est.s)).bits(est.precision_bits);
        let row = if est.value > 0.0 || est.value.is_infinite() { row.value(est.value) } else { row.log_value(est.log_value) };
        row.flags(&est.flags)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Serialize)]
struct Document<'a> {
    schema_version: u32,
    command: &'a str,
    rows: &'a [Row],
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<&'a serde_json::Value>,
}

/// Writes `rows` (and the summary, JSON only) in `format`.
pub fn write(
    out: &mut dyn Write,
    format: Format,
    command: &str,
    rows: &[Row],
    summary: Option<&serde_json::Value>,
) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(CSV_COLUMNS)?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let doc = Document { schema_version: SCHEMA_VERSION, command, rows, summary };
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(())
}
