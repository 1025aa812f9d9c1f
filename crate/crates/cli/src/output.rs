use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use conformal2d::{CheckReport, Vec2};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const SCHEMA: &str = "conformal2d/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

/// Everything that may differ between two runs of the same configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` wins when set.
    pub generated_unix: u64,
}

impl Metadata {
    pub fn now() -> Self {
        let generated_unix = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or_else(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs())
            });
        Metadata { generated_unix }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub seed: Option<u64>,
    pub pass: bool,
    pub checks: Vec<CheckReport>,
    pub details: BTreeMap<String, Value>,
    pub environment: Environment,
    pub metadata: Metadata,
}

impl Report {
    pub fn new(
        command: &str,
        seed: Option<u64>,
        mut checks: Vec<CheckReport>,
        details: BTreeMap<String, Value>,
    ) -> Self {
        // JSON has no infinity; the largest double stands in for it.
        for c in &mut checks {
            if !c.max_error.is_finite() {
                c.max_error = f64::MAX;
            }
            for w in &mut c.witnesses {
                if !w.error.is_finite() {
                    w.error = f64::MAX;
                }
            }
        }
        Report {
            schema: SCHEMA.into(),
            command: command.into(),
            seed,
            pass: checks.iter().all(|c| c.pass),
            checks,
            details,
            environment: Environment::current(),
            metadata: Metadata::now(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let r: Report = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if r.schema != SCHEMA {
            return Err(CliError::Config(format!(
                "{}: unsupported schema {:?}",
                path.display(),
                r.schema
            )));
        }
        Ok(r)
    }

    /// Writes the report to `path`, or to stdout when absent, and a summary
    /// line per check to stderr.
    pub fn emit(&self, path: Option<&Path>) -> Result<(), CliError> {
        for c in &self.checks {
            eprintln!(
                "{} {} max_error={:e} tol={:e} points={}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.max_error,
                c.tolerance,
                c.points_tested
            );
        }
        match path {
            Some(p) => std::fs::write(p, self.to_json()).map_err(|e| io_error(p, e)),
            None => {
                print!("{}", self.to_json());
                Ok(())
            }
        }
    }
}

pub fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn scalar_check(name: &str, tol: f64, error: f64) -> CheckReport {
    CheckReport::from_errors(name, tol, &[(Vec2::ZERO, error)])
}

/// Passes iff `value >= bound`; the recorded error is the shortfall.
pub fn at_least(name: &str, value: f64, bound: f64) -> CheckReport {
    let shortfall = if value.is_nan() {
        f64::INFINITY
    } else {
        (bound - value).max(0.0)
    };
    scalar_check(name, 0.0, shortfall)
}

/// Whitespace-separated columns with a `#` header, readable by gnuplot.
pub fn dat_string(columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = format!("# {}\n", columns.join(" "));
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

pub struct OutputDir {
    dir: Option<PathBuf>,
    dat: bool,
}

impl OutputDir {
    pub fn new(dir: Option<PathBuf>, dat: bool) -> Result<Self, CliError> {
        if dat && dir.is_none() {
            return Err(CliError::Config("--dat needs --csv-dir".into()));
        }
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).map_err(|e| io_error(d, e))?;
        }
        Ok(OutputDir { dir, dat })
    }

    /// Writes `stem.csv`, plus `stem.dat` when requested. Returns the CSV path.
    pub fn write(
        &self,
        stem: &str,
        csv: &str,
        dat: impl FnOnce() -> String,
    ) -> Result<Option<PathBuf>, CliError> {
        let Some(d) = &self.dir else { return Ok(None) };
        let path = d.join(format!("{stem}.csv"));
        std::fs::write(&path, csv).map_err(|e| io_error(&path, e))?;
        if self.dat {
            let p = d.join(format!("{stem}.dat"));
            std::fs::write(&p, dat()).map_err(|e| io_error(&p, e))?;
        }
        Ok(Some(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_errors_survive_json() {
        let c = CheckReport::from_errors("x", 1.0, &[(Vec2::ZERO, f64::NAN)]);
        let r = Report::new("verify", Some(1), vec![c], BTreeMap::new());
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.checks[0].max_error, f64::MAX);
        assert!(!back.pass);
    }

    #[test]
    fn shortfall_checks() {
        assert!(at_least("g", 0.75, 0.5).pass);
        assert!(!at_least("g", 0.25, 0.5).pass);
        assert!(!at_least("g", f64::NAN, 0.5).pass);
    }

    #[test]
    fn dat_layout() {
        let s = dat_string(&["r", "v"], vec![vec![0.0, 1.0], vec![0.5, 2.0]]);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# r v");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2].split_whitespace().count(), 2);
    }
}
