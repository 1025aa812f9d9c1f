use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

/// Most witnesses kept per report, largest errors first.
pub const MAX_WITNESSES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec2,
    pub error: f64,
}

/// Outcome of a sampled check: `pass` iff `max_error <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub points_tested: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
}

impl CheckReport {
    /// Builds a report from per-point errors. NaN errors count as infinite.
    pub fn from_errors(name: impl Into<String>, tolerance: f64, errors: &[(Vec2, f64)]) -> Self {
        let mut sorted: Vec<Witness> = errors
            .iter()
            .map(|&(point, e)| Witness {
                point,
                error: if e.is_nan() { f64::INFINITY } else { e },
            })
            .collect();
        let max_error = sorted.iter().map(|w| w.error).fold(0.0, f64::max);
        sorted.sort_by(|a, b| b.error.total_cmp(&a.error));
        sorted.truncate(MAX_WITNESSES);
        CheckReport {
            name: name.into(),
            points_tested: errors.len(),
            max_error,
            tolerance,
            pass: max_error <= tolerance,
            witnesses: sorted,
        }
    }

    /// Combines reports of the same check over disjoint samples.
    pub fn merge(name: impl Into<String>, tolerance: f64, parts: &[CheckReport]) -> Self {
        let mut witnesses: Vec<Witness> = parts
            .iter()
            .flat_map(|p| p.witnesses.iter().copied())
            .collect();
        witnesses.sort_by(|a, b| b.error.total_cmp(&a.error));
        witnesses.truncate(MAX_WITNESSES);
        let max_error = parts.iter().map(|p| p.max_error).fold(0.0, f64::max);
        CheckReport {
            name: name.into(),
            points_tested: parts.iter().map(|p| p.points_tested).sum(),
            max_error,
            tolerance,
            pass: max_error <= tolerance,
            witnesses,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_within_tolerance() {
        let pts = [(Vec2::new(0.0, 0.0), 1e-9), (Vec2::new(1.0, 0.0), 3e-9)];
        let r = CheckReport::from_errors("t", 2e-9, &pts);
        assert!(!r.pass);
        assert_eq!(r.max_error, 3e-9);
        assert_eq!(r.witnesses[0].point, Vec2::new(1.0, 0.0));
        let r = CheckReport::from_errors("t", 3e-9, &pts);
        assert!(r.pass);
    }

    #[test]
    fn nan_fails() {
        let r = CheckReport::from_errors("t", 1.0, &[(Vec2::ZERO, f64::NAN)]);
        assert!(!r.pass);
    }

    #[test]
    fn merge_takes_max() {
        let a = CheckReport::from_errors("a", 1.0, &[(Vec2::ZERO, 0.5)]);
        let b = CheckReport::from_errors("b", 1.0, &[(Vec2::ZERO, 0.25), (Vec2::ZERO, 2.0)]);
        let m = CheckReport::merge("m", 1.0, &[a, b]);
        assert_eq!((m.points_tested, m.max_error, m.pass), (3, 2.0, false));
    }
}
