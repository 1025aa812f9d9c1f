use std::path::{Path, PathBuf};

use clap::ValueEnum;
use conformal2d::{FieldSpec, MobiusMap};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Covariance,
    BCovariance,
    Counterexample,
    Trace,
    Liouville,
    Bubble,
    Mass,
    CrossRepresentation,
    Envelope,
    Monotone,
    Radial,
    All,
}

impl Suite {
    pub const EACH: [Suite; 11] = [
        Suite::Covariance,
        Suite::BCovariance,
        Suite::Counterexample,
        Suite::Trace,
        Suite::Liouville,
        Suite::Bubble,
        Suite::Mass,
        Suite::CrossRepresentation,
        Suite::Envelope,
        Suite::Monotone,
        Suite::Radial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Covariance => "covariance",
            Suite::BCovariance => "b-covariance",
            Suite::Counterexample => "counterexample",
            Suite::Trace => "trace",
            Suite::Liouville => "liouville",
            Suite::Bubble => "bubble",
            Suite::Mass => "mass",
            Suite::CrossRepresentation => "cross-representation",
            Suite::Envelope => "envelope",
            Suite::Monotone => "monotone",
            Suite::Radial => "radial",
            Suite::All => "all",
        }
    }
}

/// Size of the seeded Möbius sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSettings {
    pub maps: usize,
    pub points: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            maps: 20,
            points: 50,
            r_min: 0.1,
            r_max: 2.0,
        }
    }
}

fn default_suites() -> Vec<Suite> {
    vec![Suite::All]
}

fn default_seed() -> u64 {
    7
}

/// The `verify` configuration. Command-line flags override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "default_suites")]
    pub suites: Vec<Suite>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Overrides the tolerance of the sampled checks.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub sweep: SweepSettings,
    /// Extra fields for the Möbius covariance suite.
    #[serde(default)]
    pub fields: Vec<FieldSpec>,
    /// Maps applied to `fields`; seeded random maps when empty.
    #[serde(default)]
    pub maps: Vec<MobiusMap>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            suites: default_suites(),
            seed: default_seed(),
            tol: None,
            sweep: SweepSettings::default(),
            fields: Vec::new(),
            maps: Vec::new(),
            out: None,
        }
    }
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Requested suites in canonical order, with `all` expanded.
    pub fn expanded_suites(&self) -> Vec<Suite> {
        let mut out: Vec<Suite> = if self.suites.contains(&Suite::All) {
            Suite::EACH.to_vec()
        } else {
            self.suites.clone()
        };
        out.sort();
        out.dedup();
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.suites.is_empty() {
            return bad("no suites selected".into());
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("tolerance must be positive and finite, got {t}"));
            }
        }
        let s = &self.sweep;
        if s.maps == 0 || s.points == 0 {
            return bad("sweep needs at least one map and one point".into());
        }
        if !(s.r_min >= 0.0 && s.r_min < s.r_max && s.r_max.is_finite()) {
            return bad(format!(
                "sweep radii must satisfy 0 <= r_min < r_max, got [{}, {}]",
                s.r_min, s.r_max
            ));
        }
        for f in &self.fields {
            f.build()
                .map_err(|e| CliError::Config(format!("field {f:?}: {e}")))?;
        }
        Ok(())
    }
}
