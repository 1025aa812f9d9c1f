//! Radial profiles `v(r)`: circle minima, ε-lower envelopes, the radial
//! eigenvalues of `A^u`, the `v + 4 ln r` monotonicity check and a shooting
//! solver for `f(λ(A^u)) = 1`.

mod diagnostics;
mod envelope;
mod solver;

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::geometry::Vec2;
use crate::report::CheckReport;

pub use diagnostics::{supersolution_diagnostics, DiagnosticRow};
pub use envelope::{inf_envelope, EnvelopeResult};
pub use solver::{
    boundary_solve, diagonal_seed, ode_solve, RadialSolution, SolutionRow, StepControl,
    RESIDUAL_REJECT,
};

/// A function `v` sampled on a strictly increasing grid of radii `r ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    r: Vec<f64>,
    v: Vec<f64>,
    dv: Option<Vec<f64>>,
    ddv: Option<Vec<f64>>,
}

fn check_column(name: &str, col: &[f64], n: usize) -> Result<()> {
    if col.len() != n {
        return Err(Error::InvalidParameter(format!(
            "column {name} has {} entries, expected {n}",
            col.len()
        )));
    }
    if col.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("profile column"));
    }
    Ok(())
}

impl RadialProfile {
    pub fn new(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() < 2 {
            return Err(Error::InvalidParameter(
                "a profile needs at least two radii".into(),
            ));
        }
        check_column("r", &r, r.len())?;
        check_column("v", &v, r.len())?;
        if r[0] < 0.0 {
            return Err(Error::InvalidParameter(format!("negative radius {}", r[0])));
        }
        if let Some(w) = r.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "radii not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(RadialProfile {
            r,
            v,
            dv: None,
            ddv: None,
        })
    }

    pub fn with_derivatives(mut self, dv: Vec<f64>, ddv: Vec<f64>) -> Result<Self> {
        check_column("dv", &dv, self.r.len())?;
        check_column("ddv", &ddv, self.r.len())?;
        self.dv = Some(dv);
        self.ddv = Some(ddv);
        Ok(self)
    }

    /// Samples `f` on `n` equispaced radii in `[r0, r1]`.
    pub fn sample(r0: f64, r1: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let r = linspace(r0, r1, n)?;
        let v = r.iter().map(|&t| f(t)).collect();
        Self::new(r, v)
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn dv(&self) -> Option<&[f64]> {
        self.dv.as_deref()
    }

    pub fn ddv(&self) -> Option<&[f64]> {
        self.ddv.as_deref()
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Largest difference quotient `|Δv / Δr|`.
    pub fn lipschitz(&self) -> f64 {
        self.r
            .windows(2)
            .zip(self.v.windows(2))
            .map(|(r, v)| ((v[1] - v[0]) / (r[1] - r[0])).abs())
            .fold(0.0, f64::max)
    }

    /// `max v − min v`.
    pub fn oscillation(&self) -> f64 {
        let max = self.v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.v.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let full = self.dv.is_some() && self.ddv.is_some();
        let header: &[&str] = if full {
            &["r", "v", "dv", "ddv"]
        } else {
            &["r", "v"]
        };
        w.write_record(header).expect("in-memory write");
        for i in 0..self.len() {
            let mut row = vec![fmt17(self.r[i]), fmt17(self.v[i])];
            if let (Some(dv), Some(ddv)) = (&self.dv, &self.ddv) {
                row.push(fmt17(dv[i]));
                row.push(fmt17(ddv[i]));
            }
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect();
        let col = |name: &str| header.iter().position(|h| h == name);
        let (ir, iv) = match (col("r"), col("v")) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Parse("profile CSV needs columns r and v".into())),
        };
        let derivs = col("dv").zip(col("ddv"));
        let (mut r, mut v, mut dv, mut ddv) = (vec![], vec![], vec![], vec![]);
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let get = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Parse(format!("row {}: missing column", line + 2)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", line + 2)))
            };
            r.push(get(ir)?);
            v.push(get(iv)?);
            if let Some((a, b)) = derivs {
                dv.push(get(a)?);
                ddv.push(get(b)?);
            }
        }
        let p = Self::new(r, v)?;
        if derivs.is_some() {
            p.with_derivatives(dv, ddv)
        } else {
            Ok(p)
        }
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn linspace(r0: f64, r1: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(r1 > r0) {
        return Err(Error::InvalidParameter(format!("grid {r0}:{r1}:{n}")));
    }
    let h = (r1 - r0) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { r1 } else { r0 + h * i as f64 })
        .collect())
}

/// `v(r) = min_θ u(center + r(cos θ, sin θ))`: the best of `m` equispaced
/// angles, refined by golden-section search between its neighbours.
pub fn minimize_on_circles(
    u: &dyn ScalarField,
    center: Vec2,
    radii: &[f64],
    m: usize,
) -> Result<RadialProfile> {
    if m < 3 {
        return Err(Error::InvalidParameter(
            "need at least 3 angles per circle".into(),
        ));
    }
    let dtheta = 2.0 * PI / m as f64;
    let mut v = Vec::with_capacity(radii.len());
    for &r in radii {
        if r == 0.0 {
            v.push(u.value(center)?);
            continue;
        }
        let at = |t: f64| u.value(center + Vec2::polar(r, t));
        let mut best = (0.0, f64::INFINITY);
        for k in 0..m {
            let t = k as f64 * dtheta;
            let val = at(t)?;
            if val < best.1 {
                best = (t, val);
            }
        }
        let refined = golden_min(&at, best.0 - dtheta, best.0 + dtheta)?;
        v.push(best.1.min(refined));
    }
    RadialProfile::new(radii.to_vec(), v)
}

fn golden_min(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..80 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(fc.min(fd))
}

/// Radial and angular eigenvalues of `A^u` for `u(x) = v(|x|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialLambda {
    /// `e^{−v}(−v″ + ¼v′²)`
    pub lambda1: f64,
    /// `e^{−v}(−v′/r − ¼v′²)`
    pub lambda2: f64,
}

/// At `r = 0` the angular term uses `v′/r → v″(0)`.
pub fn radial_lambda(v: f64, v1: f64, v2: f64, r: f64) -> Result<RadialLambda> {
    if r < 0.0 {
        return Err(Error::InvalidParameter(format!("negative radius {r}")));
    }
    if v.abs() > crate::conformal_ops::EXP_GUARD {
        return Err(Error::Overflow(v));
    }
    let s = (-v).exp();
    let lambda1 = s * (-v2 + 0.25 * v1 * v1);
    let lambda2 = if r == 0.0 {
        s * -v2
    } else {
        s * (-v1 / r - 0.25 * v1 * v1)
    };
    Ok(RadialLambda { lambda1, lambda2 })
}

/// Violations of monotonicity below this are attributed to rounding.
pub const MONOTONE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCheck {
    pub report: CheckReport,
    /// Smallest grid radius beyond which `v + 4 ln r` never decreases.
    pub empirical_k0: f64,
}

/// Checks that `v(r) + 4 ln r` is nondecreasing on the grid points `r > k0`.
pub fn check_monotone_4log(p: &RadialProfile, k0: f64) -> MonotoneCheck {
    let idx: Vec<usize> = (0..p.len())
        .filter(|&i| p.r[i] > k0 && p.r[i] > 0.0)
        .collect();
    let w: Vec<f64> = idx.iter().map(|&i| p.v[i] + 4.0 * p.r[i].ln()).collect();
    let mut errors = Vec::with_capacity(idx.len().saturating_sub(1));
    let mut empirical_k0 = idx.first().map_or(k0, |&i| p.r[i]);
    for j in 1..idx.len() {
        let drop = (w[j - 1] - w[j]).max(0.0);
        if drop > MONOTONE_SLACK {
            empirical_k0 = p.r[idx[j]];
        }
        errors.push((Vec2::new(p.r[idx[j]], 0.0), drop));
    }
    MonotoneCheck {
        report: CheckReport::from_errors("monotone_v_plus_4log", MONOTONE_SLACK, &errors),
        empirical_k0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Bubble, ConstantField};
    use crate::geometry::Vec2;

    struct Linear;
    impl ScalarField for Linear {
        fn jet(&self, x: Vec2) -> Result<crate::fields::Jet2> {
            Ok(crate::fields::Jet2::new(
                x.x1,
                Vec2::new(1.0, 0.0),
                crate::geometry::Sym2::ZERO,
            ))
        }
        fn describe(&self) -> String {
            "x1".into()
        }
    }

    #[test]
    fn profile_validation() {
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_ok());
        assert!(RadialProfile::new(vec![1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(RadialProfile::new(vec![-1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(linspace(1.0, 0.0, 5).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p = RadialProfile::sample(0.0, 3.0, 41, |r| (1.0 + r).ln() / 3.0).unwrap();
        let back = RadialProfile::from_csv_str(&p.to_csv_string()).unwrap();
        assert_eq!(back, p);
        let full = p
            .clone()
            .with_derivatives(vec![0.1; 41], vec![-0.2; 41])
            .unwrap();
        let text = full.to_csv_string();
        assert!(text.starts_with("r,v,dv,ddv\n"));
        assert_eq!(RadialProfile::from_csv_str(&text).unwrap(), full);
        assert!(RadialProfile::from_csv_str("r,w\n0,1\n1,2\n").is_err());
        assert!(RadialProfile::from_csv_str("r,v\n0,1\n1,x\n").is_err());
    }

    #[test]
    fn circle_minimum_of_linear_function() {
        let radii = linspace(0.0, 2.0, 9).unwrap();
        let p = minimize_on_circles(&Linear, Vec2::ZERO, &radii, 7).unwrap();
        for (r, v) in p.r().iter().zip(p.v()) {
            assert!((v + r).abs() < 1e-12, "{r}: {v}");
        }
    }

    #[test]
    fn circle_minimum_of_offset_bubble() {
        let c = Vec2::new(0.3, -0.4);
        let u = Bubble::new(1.2, 5.0, c).unwrap();
        let radii = linspace(0.0, 3.0, 31).unwrap();
        let p = minimize_on_circles(&u, Vec2::ZERO, &radii, 64).unwrap();
        for (r, v) in p.r().iter().zip(p.v()) {
            let far = r + c.norm();
            let want = 2.0 * (8.0 * 1.2 / (8.0 * far * far + 5.0)).ln();
            assert!((v - want).abs() < 1e-12, "{r}: {v} vs {want}");
        }
    }

    #[test]
    fn radial_lambda_examples() {
        let l = radial_lambda(-4.0 * 2f64.ln(), -2.0, 1.0, 2.0).unwrap();
        assert!(l.lambda1.abs() < 1e-15 && l.lambda2.abs() < 1e-15);
        let l = radial_lambda(8f64.ln(), 0.0, -4.0, 0.0).unwrap();
        assert!((l.lambda1 - 0.5).abs() < 1e-15 && (l.lambda2 - 0.5).abs() < 1e-15);
        assert!(radial_lambda(0.0, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn monotone_examples() {
        let flat = RadialProfile::sample(0.5, 10.0, 200, |r| -4.0 * r.ln()).unwrap();
        let c = check_monotone_4log(&flat, 0.0);
        assert!(c.report.pass);
        assert!(c.report.max_error < 1e-14);
        let steep = RadialProfile::sample(0.5, 10.0, 200, |r| -5.0 * r.ln()).unwrap();
        let c = check_monotone_4log(&steep, 0.0);
        assert!(!c.report.pass);
        assert_eq!(c.empirical_k0, 10.0);
    }

    #[test]
    fn constant_circles() {
        let p = minimize_on_circles(
            &ConstantField { c: 1.5 },
            Vec2::new(1.0, 1.0),
            &[0.0, 1.0],
            8,
        )
        .unwrap();
        assert_eq!(p.v(), &[1.5, 1.5]);
    }
}
