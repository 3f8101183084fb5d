//! CSV and JSON writers for sweep rows.
//!
//! CSV: fixed header, `.` decimal point, 17 significant digits, LF line
//! endings, empty field for a missing value. JSON: an array of row objects
//! with the same field names, `null` for a missing value.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::config::OutputFormat;
use super::run::SweepRow;

pub const CSV_HEADER: [&str; 23] = [
    "mode",
    "theta",
    "theta_over_pi",
    "delta",
    "delta_over_pi",
    "p",
    "protocol",
    "qber",
    "qber_se",
    "q_x",
    "q_x_se",
    "q_y",
    "q_y_se",
    "q_z",
    "q_z_se",
    "c_param",
    "c_param_se",
    "rate_raw",
    "rate_clamped",
    "analytic_qber",
    "analytic_c_param",
    "analytic_rate_raw",
    "status",
];

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
}

/// `%.17g`-style formatting: 17 significant digits, trailing zeros trimmed.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..17).contains(&exp) {
        let fixed = format!("{x:.*}", (16 - exp) as usize);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_real).unwrap_or_default()
}

fn csv_record(r: &SweepRow) -> Vec<String> {
    vec![
        r.mode.clone(),
        format_real(r.theta),
        format_real(r.theta_over_pi),
        format_real(r.delta),
        format_real(r.delta_over_pi),
        format_real(r.p),
        r.protocol.to_string(),
        opt(r.qber),
        opt(r.qber_se),
        opt(r.q_x),
        opt(r.q_x_se),
        opt(r.q_y),
        opt(r.q_y_se),
        opt(r.q_z),
        opt(r.q_z_se),
        opt(r.c_param),
        opt(r.c_param_se),
        opt(r.rate_raw),
        opt(r.rate_clamped),
        opt(r.analytic_qber),
        opt(r.analytic_c_param),
        opt(r.analytic_rate_raw),
        r.status.clone(),
    ]
}

fn write_csv<W: io::Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(csv_record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

/// Writes `rows` to `path`, creating parent directories as needed.
pub fn emit(rows: &[SweepRow], format: OutputFormat, path: &Path) -> Result<(), EmitError> {
    let io_err = |source| EmitError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let bytes = match format {
        OutputFormat::Csv => to_csv_string(rows).into_bytes(),
        OutputFormat::Json => {
            let mut v = serde_json::to_vec_pretty(rows)
                .map_err(|source| EmitError::Json { path: path.to_path_buf(), source })?;
            v.push(b'\n');
            v
        }
    };
    fs::write(path, bytes).map_err(io_err)
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>, EmitError> {
    let csv_err = |source| EmitError::Csv { path: path.to_path_buf(), source };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    rdr.deserialize().collect::<Result<Vec<SweepRow>, _>>().map_err(csv_err)
}

pub fn read_json(path: &Path) -> Result<Vec<SweepRow>, EmitError> {
    let text = fs::read_to_string(path).map_err(|source| EmitError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| EmitError::Json { path: path.to_path_buf(), source })
}
