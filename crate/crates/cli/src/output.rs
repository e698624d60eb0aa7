use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use qesdirac::{DiracSystem, RadialFunction, SpinorSolution};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const PROFILE_COLUMNS: [&str; 12] = ["r", "f", "g", "U", "V", "W", "F", "G", "Y", "Z", "res1", "res2"];

/// Logarithmic derivatives written to a profile.
pub struct LogColumns {
    pub f: RadialFunction,
    pub g: RadialFunction,
    pub y: RadialFunction,
    pub z: RadialFunction,
}

impl LogColumns {
    pub fn new(f: RadialFunction, g: RadialFunction) -> Self {
        let y = f.zip_with(&g, |a, b| 0.5 * (a + b)).expect("same grid");
        let z = f.zip_with(&g, |a, b| 0.5 * (a - b)).expect("same grid");
        LogColumns { f, g, y, z }
    }

    pub fn from_logs(l: &qesdirac::LogDerivatives) -> Self {
        LogColumns {
            f: l.f.clone(),
            g: l.g.clone(),
            y: l.y.clone(),
            z: l.z.clone(),
        }
    }
}

/// Appends `suffix` to the file name of `prefix`.
pub fn path_with(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

pub fn write_table(path: &Path, header: &[&str], columns: &[&[f64]]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    let rows = columns.first().map_or(0, |c| c.len());
    let mut record = Vec::with_capacity(columns.len());
    for i in 0..rows {
        record.clear();
        record.extend(columns.iter().map(|c| format!("{:e}", c[i])));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_profile(path: &Path, system: &DiracSystem, sol: &SpinorSolution, logs: &LogColumns) -> CliResult<()> {
    let (res1, res2) = system.residual_rows(sol)?;
    let columns: [&[f64]; 12] = [
        system.grid().nodes(),
        sol.f.values(),
        sol.g.values(),
        system.u.values(),
        system.v.values(),
        system.w.values(),
        logs.f.values(),
        logs.g.values(),
        logs.y.values(),
        logs.z.values(),
        res1.values(),
        res2.values(),
    ];
    write_table(path, &PROFILE_COLUMNS, &columns)
}

/// Numeric columns of a CSV file keyed by header name.
pub fn read_table(path: &Path) -> CliResult<BTreeMap<String, Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        for (k, field) in record.iter().enumerate() {
            let x: f64 = field.trim().parse().map_err(|_| {
                CliError::input(format!(
                    "{}: row {} column '{}': '{field}' is not a number",
                    path.display(),
                    line + 2,
                    header[k]
                ))
            })?;
            columns[k].push(x);
        }
    }
    Ok(header.into_iter().zip(columns).collect())
}

pub fn column<'a>(table: &'a BTreeMap<String, Vec<f64>>, name: &str, path: &Path) -> CliResult<&'a [f64]> {
    table
        .get(name)
        .map(Vec::as_slice)
        .ok_or_else(|| CliError::input(format!("{}: missing column '{name}'", path.display())))
}

pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut file = File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes_keep_directory() {
        assert_eq!(path_with(Path::new("out/run"), ".csv"), PathBuf::from("out/run.csv"));
        assert_eq!(
            path_with(Path::new("run"), "_state1.csv"),
            PathBuf::from("run_state1.csv")
        );
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let a = [1e-6, 0.1 + 0.2, -5.210953054937474e-1];
        let b = [f64::NAN, 1.0 / 3.0, 7.0];
        write_table(&p, &["a", "b"], &[&a, &b]).unwrap();
        let t = read_table(&p).unwrap();
        assert_eq!(t["a"], a.to_vec());
        assert_eq!(t["b"][1], 1.0 / 3.0);
        assert!(t["b"][0].is_nan());
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("a,b\n1e-6,NaN\n"));
    }
}
