//! Artifacts produced by a command and their serialization.

use crate::complex::format_complex;
use crate::error::CliError;
use isl_core::monodromy::LoopConfig;
use isl_core::C64;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Convention lines carried by every table.
pub fn convention_metadata() -> Vec<String> {
    let cfg = LoopConfig::default();
    vec![
        "e-ordering: e1 = wp(1/2), e2 = wp(tau/2), e3 = wp((1+tau)/2), t = (e3-e1)/(e2-e1)".into(),
        "p-representative: trajectories continue p along the path; wp(p) columns are representative independent; \
         canonical form reduces p to the cell, shifts B by 2 eta(w) A and picks Im p > 0 (or Im p = 0, Re p >= 0)"
            .into(),
        format!(
            "loop constants: basepoint 0.11+0.13tau, radius {}, segments {}, clearance {}, detour radius {}",
            cfg.radius, cfg.segments, cfg.clearance, cfg.detour_radius
        ),
    ]
}

/// A rectangular table of strings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_json(&self) -> Value {
        json!({ "columns": self.header, "rows": self.rows })
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Real and imaginary parts as two cells.
pub fn parts(z: C64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

pub fn cx(z: C64) -> Value {
    Value::String(format_complex(z))
}

/// Outcome of one residual check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            pass: value < threshold,
        }
    }
}

/// Everything one command produces.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub command: String,
    pub report: Map<String, Value>,
    pub table: Option<Table>,
    pub checks: Vec<Check>,
    /// Format used when none is requested.
    pub default_format: Format,
}

impl Artifact {
    pub fn new(command: &str, default_format: Format) -> Self {
        Artifact {
            command: command.into(),
            report: Map::new(),
            table: None,
            checks: Vec::new(),
            default_format,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report values serialize");
        self.report.insert(key.into(), v);
    }

    pub fn failed_checks(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.clone())
            .collect()
    }

    fn full_report(&self) -> Value {
        let mut m = self.report.clone();
        m.insert("command".into(), json!(self.command));
        m.insert("isl_version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("conventions".into(), json!(convention_metadata()));
        if !self.checks.is_empty() {
            m.insert("checks".into(), json!(self.checks));
        }
        Value::Object(m)
    }

    /// Write the artifact; returns the files written.
    pub fn write(
        &self,
        format: Option<Format>,
        out: Option<&Path>,
    ) -> Result<Vec<PathBuf>, CliError> {
        let format = format.unwrap_or(self.default_format);
        let mut written = Vec::new();
        match format {
            Format::Json => {
                let mut doc = self.full_report();
                if let (Some(t), Value::Object(m)) = (&self.table, &mut doc) {
                    m.insert("table".into(), t.to_json());
                }
                let text = serde_json::to_string_pretty(&doc)? + "\n";
                emit(out, text.as_bytes(), &mut written)?;
            }
            Format::Csv => {
                let table = match &self.table {
                    Some(t) => t.clone(),
                    None => flatten(&self.full_report()),
                };
                let mut buf = Vec::new();
                self.write_csv(&table, &mut buf)?;
                emit(out, &buf, &mut written)?;
                if self.table.is_some() {
                    let text = serde_json::to_string_pretty(&self.full_report())? + "\n";
                    match out {
                        Some(path) => {
                            let rp = report_path(path);
                            emit(Some(&rp), text.as_bytes(), &mut written)?;
                        }
                        None => io::stderr().write_all(text.as_bytes())?,
                    }
                }
            }
        }
        Ok(written)
    }

    fn write_csv(&self, table: &Table, sink: &mut Vec<u8>) -> Result<(), CliError> {
        writeln!(sink, "# isl {} {}", env!("CARGO_PKG_VERSION"), self.command)?;
        for line in convention_metadata() {
            writeln!(sink, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `traj.csv` -> `traj.report.json`.
pub fn report_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "isl".into());
    out.with_file_name(format!("{stem}.report.json"))
}

fn emit(out: Option<&Path>, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let f = File::create(path)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            let mut w = BufWriter::new(f);
            w.write_all(bytes)?;
            w.flush()?;
            written.push(path.to_path_buf());
        }
        None => {
            let mut so = io::stdout().lock();
            so.write_all(bytes)?;
            so.flush()?;
        }
    }
    Ok(())
}

/// A nested JSON document as `key,value` rows with dotted keys.
fn flatten(doc: &Value) -> Table {
    fn walk(prefix: &str, v: &Value, t: &mut Table) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, x, t);
                }
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), x, t);
                }
            }
            Value::String(s) => t.push(vec![prefix.into(), s.clone()]),
            other => t.push(vec![prefix.into(), other.to_string()]),
        }
    }
    let mut t = Table::new(["key", "value"]);
    walk("", doc, &mut t);
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flattening_uses_dotted_keys() {
        let t = flatten(&json!({"a": {"b": 1, "c": ["x", true]}}));
        assert_eq!(t.rows[0], vec!["a.b".to_string(), "1".into()]);
        assert_eq!(t.rows[1], vec!["a.c.0".to_string(), "x".into()]);
        assert_eq!(t.rows[2], vec!["a.c.1".to_string(), "true".into()]);
    }

    #[test]
    fn report_file_sits_next_to_the_table() {
        assert_eq!(
            report_path(Path::new("/tmp/run/traj.csv")),
            PathBuf::from("/tmp/run/traj.report.json")
        );
    }

    #[test]
    fn csv_carries_metadata_and_header() {
        let mut a = Artifact::new("flow", Format::Csv);
        let mut t = Table::new(["x", "y"]);
        t.push(vec![num(1.0), num(-0.5)]);
        a.table = Some(t.clone());
        let mut buf = Vec::new();
        a.write_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# isl"));
        assert!(lines.iter().any(|l| l.starts_with("# e-ordering")));
        assert_eq!(lines[lines.len() - 2], "x,y");
        assert_eq!(lines[lines.len() - 1], "1,-0.5");
    }
}
