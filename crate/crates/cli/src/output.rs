use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use umpbt::CurveTable;

use crate::args::Format;
use crate::CliError;

/// One JSON object per invocation.
#[derive(Debug, Serialize)]
pub struct Envelope {
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub warnings: Vec<String>,
}

impl Envelope {
    pub fn new(command: &str, inputs: &impl Serialize) -> Result<Self, CliError> {
        Ok(Self {
            command: command.to_string(),
            inputs: to_value(inputs)?,
            results: Value::Object(Map::new()),
            warnings: Vec::new(),
        })
    }

    /// Adds `key` to the results object.
    pub fn put(&mut self, key: &str, value: &impl Serialize) -> Result<(), CliError> {
        let v = to_value(value)?;
        if let Value::Object(map) = &mut self.results {
            map.insert(key.to_string(), v);
        }
        Ok(())
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    /// Non-finite numbers serialize as null; say so.
    pub fn note_non_finite(&mut self, key: &str, x: f64) {
        if !x.is_finite() {
            self.warn(format!("{key} is {x} and is reported as null"));
        }
    }
}

fn to_value(v: &impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::validation(format!("serialization failed: {e}")))
}

/// Rounds to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value, digits: usize) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(|x| round_sig(x, digits)).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|i| round_value(i, digits)),
        Value::Object(map) => map.values_mut().for_each(|i| round_value(i, digits)),
        _ => {}
    }
}

pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..15).contains(&e) {
        let decimals = (digits as i32 - 1 - e).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{:.*e}", digits - 1, x)
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| flatten(&join(k), x, out)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, x)| flatten(&join(&i.to_string()), x, out)),
        Value::Number(n) => out.push((prefix.to_string(), n.as_f64().map(|x| fmt_sig(x, 6)).unwrap_or_else(|| n.to_string()))),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

pub fn emit(env: &Envelope, format: Format) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    let io = |e: std::io::Error| CliError::validation(format!("cannot write output: {e}"));
    match format {
        Format::Json | Format::Csv => {
            // inputs are echoed verbatim so a re-run reproduces the results
            let mut v = to_value(env)?;
            if let Some(results) = v.get_mut("results") {
                round_value(results, 10);
            }
            writeln!(stdout, "{}", serde_json::to_string_pretty(&v).map_err(|e| CliError::validation(e.to_string()))?).map_err(io)?;
        }
        Format::Text => {
            let mut lines = Vec::new();
            flatten("", &env.results, &mut lines);
            writeln!(stdout, "{}", env.command).map_err(io)?;
            for (k, v) in lines {
                writeln!(stdout, "  {k}: {v}").map_err(io)?;
            }
            for w in &env.warnings {
                writeln!(stdout, "  warning: {w}").map_err(io)?;
            }
        }
    }
    Ok(())
}

/// Writes `header` and `rows` as CSV, numbers at 10 significant digits.
pub fn write_csv<W: Write>(w: W, header: &[&str], rows: &[Vec<Option<f64>>]) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::validation(format!("cannot write CSV: {e}"));
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header).map_err(err)?;
    for row in rows {
        wr.write_record(row.iter().map(|x| x.map(|x| fmt_sig(x, 10)).unwrap_or_default())).map_err(err)?;
    }
    wr.flush().map_err(|e| CliError::validation(format!("cannot write CSV: {e}")))
}

pub fn curve_rows(table: &CurveTable) -> Vec<Vec<Option<f64>>> {
    table.rows().into_iter().map(|r| vec![Some(r.theta_t), Some(r.value), r.stderr]).collect()
}

pub const CURVE_HEADER: [&str; 3] = ["theta_t", "value", "stderr"];
