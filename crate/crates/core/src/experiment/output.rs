use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::ExperimentResult;
use crate::bounds::{helstrom_error, sql_error, SignalIntensity};
use crate::error::{Error, Result};

pub const RESULTS_HEADER: &str =
    "alpha_sq,alpha_sq_rescaled,beta_sq,p_err,p_err_stderr,p_sql,p_helstrom,improvement_db,trials,seed";
pub const BOUNDS_HEADER: &str = "alpha_sq,p_sql,p_helstrom";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

impl OutputFormat {
    /// JSON for `.json` paths, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

/// Scientific notation with 12 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.11e}")
}

fn round12(x: f64) -> f64 {
    format_number(x).parse().unwrap_or(x)
}

#[derive(Serialize)]
struct Record {
    alpha_sq: f64,
    alpha_sq_rescaled: f64,
    beta_sq: f64,
    p_err: f64,
    p_err_stderr: f64,
    p_sql: f64,
    p_helstrom: f64,
    improvement_db: Option<f64>,
    trials: u64,
    seed: u64,
}

impl From<&ExperimentResult> for Record {
    fn from(r: &ExperimentResult) -> Self {
        Self {
            alpha_sq: round12(r.alpha_sq),
            alpha_sq_rescaled: round12(r.alpha_sq_rescaled),
            beta_sq: round12(r.beta_sq),
            p_err: round12(r.p_err),
            p_err_stderr: round12(r.p_err_stderr),
            p_sql: round12(r.p_sql),
            p_helstrom: round12(r.p_helstrom),
            improvement_db: r.improvement_db.map(round12),
            trials: r.trials,
            seed: r.seed,
        }
    }
}

fn with_output(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let wrap = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if path == Path::new("-") {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        return body(&mut lock).and_then(|_| lock.flush()).map_err(wrap);
    }
    let file = File::create(path).map_err(wrap)?;
    let mut out = BufWriter::new(file);
    body(&mut out).and_then(|_| out.flush()).map_err(wrap)
}

pub fn write_results<W: Write + ?Sized>(results: &[ExperimentResult], format: OutputFormat, out: &mut W) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(out, "{RESULTS_HEADER}")?;
            for r in results {
                let db = r.improvement_db.map(format_number).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    format_number(r.alpha_sq),
                    format_number(r.alpha_sq_rescaled),
                    format_number(r.beta_sq),
                    format_number(r.p_err),
                    format_number(r.p_err_stderr),
                    format_number(r.p_sql),
                    format_number(r.p_helstrom),
                    db,
                    r.trials,
                    r.seed
                )?;
            }
            Ok(())
        }
        OutputFormat::Json => {
            let records: Vec<Record> = results.iter().map(Record::from).collect();
            serde_json::to_writer_pretty(&mut *out, &records)?;
            writeln!(out)
        }
    }
}

/// Writes results to `path` (`-` for stdout).
pub fn emit_results(results: &[ExperimentResult], format: OutputFormat, path: &Path) -> Result<()> {
    with_output(path, |out| write_results(results, format, out))
}

/// Writes `alpha_sq,p_sql,p_helstrom` rows for each intensity.
pub fn emit_bounds(grid: &[f64], path: &Path) -> Result<()> {
    let rows = grid
        .iter()
        .map(|&x| {
            let s = SignalIntensity::new(x)?;
            Ok((x, sql_error(s), helstrom_error(s)))
        })
        .collect::<Result<Vec<_>>>()?;
    with_output(path, |out| {
        writeln!(out, "{BOUNDS_HEADER}")?;
        for (x, sql, hel) in rows {
            writeln!(out, "{},{},{}", format_number(x), format_number(sql), format_number(hel))?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon_statistics::ReceiverParams;

    fn sample() -> Vec<ExperimentResult> {
        let params = ReceiverParams::default();
        vec![
            ExperimentResult::from_counts(1.5, 1.48, &params, 4321, 1_000_000, 7).unwrap(),
            ExperimentResult::from_counts(0.0, 0.0, &params, 5, 10, 8).unwrap(),
        ]
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_results(&sample(), OutputFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], RESULTS_HEADER);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 10);
        assert_eq!(fields[0], "1.50000000000e0");
        assert_eq!(fields[3], "4.32100000000e-3");
        assert_eq!(fields[8], "1000000");
        assert_eq!(fields[9], "7");
        // p_err = 0.5 at alpha_sq = 0 is worse than nothing, improvement 0 dB
        let zero: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(zero[7], "0.00000000000e0");
    }

    #[test]
    fn json_layout() {
        let mut buf = Vec::new();
        write_results(&sample(), OutputFormat::Json, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let rows = v.as_array().unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0]["p_err"], 0.004321);
        assert_eq!(rows[1]["seed"], 8);
        assert!(rows[0].get("p_helstrom").is_some());
    }

    #[test]
    fn format_helpers() {
        assert_eq!(format_number(0.1), "1.00000000000e-1");
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!("JSON".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
        assert!("xml".parse::<OutputFormat>().is_err());
        assert_eq!(OutputFormat::from_path(Path::new("a/b.json")), OutputFormat::Json);
        assert_eq!(OutputFormat::from_path(Path::new("a/b.csv")), OutputFormat::Csv);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = emit_bounds(&[1.0], Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
        assert!(emit_bounds(&[-1.0], Path::new("-")).is_err());
    }
}
