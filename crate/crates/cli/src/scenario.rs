//! Scenario files: one TOML document describing a single invocation.
//!
//! ```toml
//! kind = "hitchin"
//! path = "1.0i:1.5i"
//!
//! [parameters]
//! r = "0.25"
//! s = "0.25"
//! check = ["pvi"]
//!
//! [output]
//! file = "traj.csv"
//! format = "csv"
//! tol = 1e-12
//! ```
//!
//! Parameters use the long flag names of the matching subcommand, with `_`
//! or `-` as separator, and are validated by the same parser.

use crate::error::CliError;
use crate::output::Format;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use toml::{Table, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Eval,
    Flow,
    Hitchin,
    Monodromy,
    Convert,
    Collapse,
    Verify,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Eval => "eval",
            Kind::Flow => "flow",
            Kind::Hitchin => "hitchin",
            Kind::Monodromy => "monodromy",
            Kind::Convert => "convert",
            Kind::Collapse => "collapse",
            Kind::Verify => "verify",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub file: Option<PathBuf>,
    pub format: Option<Format>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PathSpec {
    Text(String),
    Vertices(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: Kind,
    #[serde(default)]
    pub parameters: Table,
    pub path: Option<PathSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Scenario {
    pub fn load(file: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(file)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", file.display())))?;
        let mut sc: Scenario = toml::from_str(&text)?;
        // Relative paths are taken relative to the scenario file.
        if let Some(dir) = file.parent() {
            if let Some(f) = &sc.output.file {
                if f.is_relative() {
                    sc.output.file = Some(dir.join(f));
                }
            }
            if let Some(Value::String(input)) = sc.parameters.get("input") {
                let p = Path::new(input);
                if p.is_relative() {
                    let joined = dir.join(p).to_string_lossy().into_owned();
                    sc.parameters.insert("input".into(), Value::String(joined));
                }
            }
        }
        Ok(sc)
    }

    /// Equivalent command line, starting with the program name.
    pub fn to_args(&self) -> Result<Vec<String>, CliError> {
        let mut args = vec!["isl".to_string()];
        if let Some(tol) = self.output.tol {
            args.push("--tol".into());
            args.push(tol.to_string());
        }
        if let Some(f) = &self.output.file {
            args.push("--out".into());
            args.push(f.to_string_lossy().into_owned());
        }
        if let Some(fmt) = self.output.format {
            args.push("--format".into());
            args.push(match fmt {
                Format::Csv => "csv".into(),
                Format::Json => "json".into(),
            });
        }
        args.push(self.kind.name().into());
        if let Some(path) = &self.path {
            args.push("--tau-path".into());
            args.push(match path {
                PathSpec::Text(t) => t.clone(),
                PathSpec::Vertices(v) => v.join(":"),
            });
        }
        for (key, value) in &self.parameters {
            let flag = format!("--{}", key.replace('_', "-"));
            match value {
                Value::Boolean(true) => args.push(flag),
                Value::Boolean(false) => {}
                Value::Array(items) => {
                    for item in items {
                        args.push(flag.clone());
                        args.push(scalar(key, item)?);
                    }
                }
                other => {
                    args.push(flag);
                    args.push(scalar(key, other)?);
                }
            }
        }
        Ok(args)
    }
}

fn scalar(key: &str, v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(x) => Ok(x.to_string()),
        _ => Err(CliError::Invalid(format!(
            "parameter {key}: expected a string, number or list of those"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_becomes_a_command_line() {
        let sc: Scenario = toml::from_str(
            r#"
kind = "hitchin"
path = ["1.0i", "1.5i"]
[parameters]
r = "0.25"
s = 0.25
samples = 50
check = ["pvi", "f"]
[output]
format = "json"
tol = 1e-11
"#,
        )
        .unwrap();
        let args = sc.to_args().unwrap();
        assert_eq!(
            args,
            [
                "isl",
                "--tol",
                "0.00000000001",
                "--format",
                "json",
                "hitchin",
                "--tau-path",
                "1.0i:1.5i",
                "--check",
                "pvi",
                "--check",
                "f",
                "--r",
                "0.25",
                "--s",
                "0.25",
                "--samples",
                "50"
            ]
        );
    }

    #[test]
    fn unknown_sections_are_rejected() {
        assert!(toml::from_str::<Scenario>("kind = \"eval\"\n[extra]\nx = 1\n").is_err());
        assert!(toml::from_str::<Scenario>("kind = \"teleport\"\n").is_err());
    }
}
