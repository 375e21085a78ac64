//! Model and trace CSV files.
//!
//! Model: `motionType,motionDirection,mean,variance,dependenceCoefficient`,
//! one row per node in chain order; the first row's coefficient is present but
//! unused. Traces: `trace_id,<label1>,...,<labeln>`, one row per maneuver.

use std::fs;
use std::path::Path;

use crate::error::GbnError;

use super::{Direction, Gbn, GbnNode, MotionType, Trace};

pub const MODEL_HEADER: &str = "motionType,motionDirection,mean,variance,dependenceCoefficient";

/// `%.17g`-style text: 17 significant digits, trailing zeros trimmed.
/// Parsing the result gives back the same bits.
pub fn format_number(x: f64) -> String {
    format_significant(x, 17)
}

/// `%.<digits>g`-style text with trailing zeros trimmed.
pub fn format_significant(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.*e}", digits - 1);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp >= -5 && exp < digits as i32 {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_fraction(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_fraction(mantissa.to_string()))
    }
}

fn trim_fraction(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn csv_err(path: &str, row: usize, message: impl Into<String>) -> GbnError {
    GbnError::Csv {
        path: path.to_string(),
        row,
        message: message.into(),
    }
}

/// Non-empty lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_number(path: &str, row: usize, field: &str, what: &str) -> Result<f64, GbnError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| csv_err(path, row, format!("{what}: `{}` is not a number", field.trim())))?;
    if !v.is_finite() {
        return Err(csv_err(path, row, format!("{what} must be finite")));
    }
    Ok(v)
}

/// `source` names the input in error messages.
pub fn model_from_csv(text: &str, source: &str) -> Result<Gbn, GbnError> {
    let mut rows = lines(text);
    let (hrow, header) = rows.next().ok_or_else(|| csv_err(source, 1, "empty model file"))?;
    let compact: String = header.chars().filter(|c| !c.is_whitespace()).collect();
    if compact != MODEL_HEADER {
        return Err(csv_err(source, hrow, format!("expected header `{MODEL_HEADER}`")));
    }
    let (mut drives, mut turns) = (0, 0);
    let mut nodes = Vec::new();
    for (row, line) in rows {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(csv_err(source, row, format!("expected 5 columns, found {}", fields.len())));
        }
        let motion: MotionType = fields[0].parse().map_err(|e: String| csv_err(source, row, e))?;
        let direction: Direction = fields[1].parse().map_err(|e: String| csv_err(source, row, e))?;
        let mean = parse_number(source, row, fields[2], "mean")?;
        let variance = parse_number(source, row, fields[3], "variance")?;
        let coefficient = parse_number(source, row, fields[4], "dependenceCoefficient")?;
        if variance <= 0.0 {
            return Err(csv_err(source, row, format!("variance must be > 0, got {variance}")));
        }
        let label = match motion {
            MotionType::Drive => {
                drives += 1;
                format!("l{drives}")
            }
            MotionType::Turn => {
                turns += 1;
                format!("alpha{turns}")
            }
        };
        let i = nodes.len();
        let node = GbnNode::new(&label, motion, direction, mean, variance);
        nodes.push(if i == 0 { node } else { node.with_parent(i - 1, coefficient) });
    }
    if nodes.is_empty() {
        return Err(csv_err(source, hrow, "model has no rows"));
    }
    Gbn::new(nodes)
}

/// Serialise a chain. Non-chain networks cannot be written in this format.
pub fn model_to_csv(g: &Gbn) -> Result<String, GbnError> {
    if !g.is_chain() {
        return Err(GbnError::NotChain);
    }
    let mut out = String::from(MODEL_HEADER);
    out.push('\n');
    for (i, node) in g.nodes().iter().enumerate() {
        let coef = if i == 0 { 0.0 } else { node.coefficient(i - 1) };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            node.motion.as_str(),
            node.direction.as_str(),
            format_number(node.mean),
            format_number(node.variance),
            format_number(coef)
        ));
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, GbnError> {
    fs::read_to_string(path).map_err(|e| GbnError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write(path: &Path, text: &str) -> Result<(), GbnError> {
    fs::write(path, text).map_err(|e| GbnError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Gbn, GbnError> {
    let path = path.as_ref();
    model_from_csv(&read(path)?, &path.display().to_string())
}

pub fn save_model(g: &Gbn, path: impl AsRef<Path>) -> Result<(), GbnError> {
    write(path.as_ref(), &model_to_csv(g)?)
}

/// Returns the column labels and the traces.
pub fn traces_from_csv(text: &str, source: &str) -> Result<(Vec<String>, Vec<Trace>), GbnError> {
    let mut rows = lines(text);
    let (hrow, header) = rows.next().ok_or_else(|| csv_err(source, 1, "empty trace file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"trace_id") || cols.len() < 2 {
        return Err(csv_err(source, hrow, "expected header `trace_id,<label1>,...`"));
    }
    let labels: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();
    let mut traces = Vec::new();
    for (row, line) in rows {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(csv_err(
                source,
                row,
                format!("expected {} columns, found {}", cols.len(), fields.len()),
            ));
        }
        let values = fields[1..]
            .iter()
            .zip(&labels)
            .map(|(f, l)| parse_number(source, row, f, l))
            .collect::<Result<Vec<_>, _>>()?;
        traces.push(Trace(values));
    }
    Ok((labels, traces))
}

pub fn traces_to_csv(labels: &[String], traces: &[Trace]) -> String {
    let mut out = String::from("trace_id");
    for l in labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (i, t) in traces.iter().enumerate() {
        out.push_str(&(i + 1).to_string());
        for v in t.values() {
            out.push(',');
            out.push_str(&format_number(*v));
        }
        out.push('\n');
    }
    out
}

pub fn load_traces(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Trace>), GbnError> {
    let path = path.as_ref();
    traces_from_csv(&read(path)?, &path.display().to_string())
}

pub fn save_traces(labels: &[String], traces: &[Trace], path: impl AsRef<Path>) -> Result<(), GbnError> {
    write(path.as_ref(), &traces_to_csv(labels, traces))
}
