//! Byte-stable CSV and JSON emission.
//!
//! Numbers are rounded to 12 significant digits and written in plain decimal
//! when `1e-5 <= |x| < 1e12`, in `d.ddde±x` form otherwise. Lines end in `\n`.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::OutputFormat;
use crate::error::{Error, Result};
use crate::runner::ExperimentResult;

pub const SCHEMA_VERSION: u32 = 1;

/// Fixed 12-significant-digit rendering with trailing zeros trimmed.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m.replace('.', "")),
        None => (false, mantissa.replace('.', "")),
    };
    let sign = if neg { "-" } else { "" };
    if !(-5..12).contains(&exp) {
        let frac = digits[1..].trim_end_matches('0');
        return if frac.is_empty() {
            format!("{sign}{}e{exp}", &digits[..1])
        } else {
            format!("{sign}{}.{frac}e{exp}", &digits[..1])
        };
    }
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    let body = body.trim_end_matches('0').trim_end_matches('.');
    format!("{sign}{body}")
}

/// Value as it appears in the CSV, read back, so JSON and CSV agree.
fn rounded(x: f64) -> Value {
    if x.is_finite() {
        json!(format_number(x).parse::<f64>().expect("formatted number parses"))
    } else {
        Value::Null
    }
}

pub fn to_csv(result: &ExperimentResult) -> String {
    let mut out = result.columns.join(",");
    out.push('\n');
    for row in &result.rows {
        let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn to_json(result: &ExperimentResult) -> String {
    let rows: Vec<Value> = result.rows.iter().map(|r| Value::Array(r.iter().map(|&x| rounded(x)).collect())).collect();
    let summary: serde_json::Map<String, Value> =
        result.summary.iter().map(|(k, v)| (k.clone(), round_value(v))).collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": result.kind.as_str(),
        "columns": result.columns,
        "rows": rows,
        "summary": summary,
        "config": result.config,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("result serializes");
    text.push('\n');
    text
}

fn round_value(v: &Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => rounded(n.as_f64().expect("f64")),
        Value::Array(a) => Value::Array(a.iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.iter().map(|(k, v)| (k.clone(), round_value(v))).collect()),
        other => other.clone(),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Writes the result in `format`. With `Both`, `path`'s extension is replaced
/// by `.csv` and `.json`. Returns the files written.
pub fn emit_plot_data(result: &ExperimentResult, path: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let files = match format {
        OutputFormat::Csv => vec![(path.to_path_buf(), to_csv(result))],
        OutputFormat::Json => vec![(path.to_path_buf(), to_json(result))],
        OutputFormat::Both => vec![
            (path.with_extension("csv"), to_csv(result)),
            (path.with_extension("json"), to_json(result)),
        ],
    };
    for (p, text) in &files {
        write(p, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, ExperimentKind};

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(800.0), "800");
        assert_eq!(format_number(-0.5), "-0.5");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(2.0 / 3.0), "0.666666666667");
        assert_eq!(format_number(46.554934823091), "46.5549348231");
        assert_eq!(format_number(1.25e-5), "0.0000125");
        assert_eq!(format_number(1.25e-6), "1.25e-6");
        assert_eq!(format_number(-3e-9), "-3e-9");
        assert_eq!(format_number(1.3e6), "1300000");
        assert_eq!(format_number(1e12), "1e12");
        assert_eq!(format_number(0.1 + 0.2), "0.3");
        assert_eq!(format_number(999999999999.6), "1e12");
        assert_eq!(format_number(f64::NAN), "nan");
    }

    #[test]
    fn twelve_digits_survive() {
        for x in [std::f64::consts::PI, -1234.56789012345, 7.0e-3, 0.999999999999] {
            let back: f64 = format_number(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 5e-12, "{x}");
        }
    }

    #[test]
    fn empty_result_is_header_only() {
        let r = ExperimentResult::empty(
            ExperimentConfig::new(ExperimentKind::EchoScan),
            &["t2_ns", "p0_constant", "p0_balanced", "pos"],
        );
        assert_eq!(to_csv(&r), "t2_ns,p0_constant,p0_balanced,pos\n");
    }

    #[test]
    fn json_carries_schema_and_config() {
        let mut r = ExperimentResult::empty(ExperimentConfig::new(ExperimentKind::Rabi), &["duration_ns", "p0"]);
        r.rows.push(vec![10.0, 0.123456789012345]);
        let v: Value = serde_json::from_str(&to_json(&r)).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["kind"], "rabi");
        assert_eq!(v["config"]["kind"], "rabi");
        assert_eq!(v["rows"][0][1], 0.123456789012);
    }

    #[test]
    fn both_formats_write_two_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = ExperimentResult::empty(ExperimentConfig::new(ExperimentKind::Rabi), &["duration_ns", "p0"]);
        let files = emit_plot_data(&r, &dir.path().join("out.dat"), OutputFormat::Both).unwrap();
        assert_eq!(files, vec![dir.path().join("out.csv"), dir.path().join("out.json")]);
        assert!(files.iter().all(|f| f.exists()));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let r = ExperimentResult::empty(ExperimentConfig::new(ExperimentKind::Rabi), &["duration_ns", "p0"]);
        let err = emit_plot_data(&r, Path::new("/nonexistent-dir/x.csv"), OutputFormat::Csv).unwrap_err();
        assert_eq!(err.code(), "E_IO");
        assert_eq!(err.exit_code(), 3);
    }
}
