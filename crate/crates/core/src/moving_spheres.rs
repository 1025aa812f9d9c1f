//! The moving-spheres transform
//! `u_{x,λ}(y) = u(x + λ²(y − x)/|y − x|²) − 4 ln(|y − x|/λ)`, the critical
//! radius `λ̄(x)`, and least-squares detection of the bubble family.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{pullback, Field, ScalarField};
use crate::geometry::Vec2;
use crate::mobius::MobiusMap;

/// `u_{x,λ}`: the pullback of `u` through inversion in the circle
/// `|y − x| = λ`, whose `ln|det J|` is exactly `−4 ln(|y − x|/λ)`.
pub fn ms_transform(u: &Field, x: Vec2, lam: f64) -> Result<Field> {
    Ok(pullback(u.clone(), MobiusMap::sphere_inversion(x, lam)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovingSphereConfig {
    /// Upper end of the search; `λ̄` is reported unbounded if the
    /// comparison still holds there.
    pub lam_max: f64,
    /// Relative bisection tolerance on `λ̄`.
    pub rtol: f64,
    /// Samples count as satisfying `u_{x,λ} ≤ u` up to `slack · (1 + |u|)`.
    pub slack: f64,
    pub angles: usize,
    /// Log-spaced radii per comparison in `[λ, R_out]`, `R_out = max(100, 10λ)`.
    pub radii: usize,
}

impl Default for MovingSphereConfig {
    fn default() -> Self {
        MovingSphereConfig {
            lam_max: 10.0,
            rtol: 1e-3,
            slack: 1e-9,
            angles: 64,
            radii: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovingSphereReport {
    pub x: Vec2,
    /// `None` when the comparison holds up to `lam_max`.
    pub lambda_bar: Option<f64>,
    pub unbounded: bool,
    /// `min (u − u_{x,λ})` over the samples at the largest admissible `λ`.
    pub min_slack: f64,
    /// `max |u_{x,λ̄} − u|` over the same samples; absent when unbounded.
    pub equality_residual: Option<f64>,
}

fn log_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Minimum of `u − u_{x,λ}` and of the same quantity plus the slack allowance,
/// over samples on `λ ≤ |y − x| ≤ R_out`.
fn comparison(u: &Field, x: Vec2, lam: f64, cfg: &MovingSphereConfig) -> Result<(f64, f64)> {
    let t = ms_transform(u, x, lam)?;
    let r_out = (10.0 * lam).max(100.0);
    let mut raw = f64::INFINITY;
    let mut allowed = f64::INFINITY;
    for r in log_radii(lam, r_out, cfg.radii) {
        for k in 0..cfg.angles {
            let y = x + Vec2::polar(r, 2.0 * PI * k as f64 / cfg.angles as f64);
            let uy = u.value(y)?;
            let d = uy - t.value(y)?;
            raw = raw.min(d);
            allowed = allowed.min(d + cfg.slack * (1.0 + uy.abs()));
        }
    }
    Ok((raw, allowed))
}

/// `max |u_{x,λ} − u|` on `r_in ≤ |y − x| ≤ r_out` (log radii × angles).
pub fn equality_residual(
    u: &Field,
    x: Vec2,
    lam: f64,
    r_in: f64,
    r_out: f64,
    radii: usize,
    angles: usize,
) -> Result<f64> {
    let t = ms_transform(u, x, lam)?;
    let mut worst = 0.0f64;
    for r in log_radii(r_in, r_out, radii) {
        for k in 0..angles {
            let y = x + Vec2::polar(r, 2.0 * PI * k as f64 / angles as f64);
            worst = worst.max((t.value(y)? - u.value(y)?).abs());
        }
    }
    Ok(worst)
}

/// `λ̄(x) = sup{μ : u_{x,λ} ≤ u on |y − x| ≥ λ for all 0 < λ < μ}` by
/// bisection on the sampled comparison.
pub fn critical_lambda(u: &Field, x: Vec2, cfg: &MovingSphereConfig) -> Result<MovingSphereReport> {
    if !(cfg.lam_max > 0.0) || !(cfg.rtol > 0.0) || cfg.angles < 4 || cfg.radii < 2 {
        return Err(Error::InvalidParameter(
            "moving-sphere configuration".into(),
        ));
    }
    let holds = |lam: f64| -> Result<(bool, f64)> {
        let (raw, allowed) = comparison(u, x, lam, cfg)?;
        Ok((allowed >= 0.0, raw))
    };
    let (ok_max, slack_max) = holds(cfg.lam_max)?;
    if ok_max {
        return Ok(MovingSphereReport {
            x,
            lambda_bar: None,
            unbounded: true,
            min_slack: slack_max,
            equality_residual: None,
        });
    }
    let mut hi = cfg.lam_max;
    let mut lo = 0.5 * hi;
    let mut slack_lo;
    loop {
        let (ok, s) = holds(lo)?;
        if ok {
            slack_lo = s;
            break;
        }
        hi = lo;
        lo *= 0.5;
        if lo < cfg.lam_max * 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "comparison fails for every radius down to {lo:e} at ({}, {})",
                x.x1, x.x2
            )));
        }
    }
    while hi - lo > cfg.rtol * lo {
        let mid = 0.5 * (lo + hi);
        let (ok, s) = holds(mid)?;
        if ok {
            lo = mid;
            slack_lo = s;
        } else {
            hi = mid;
        }
    }
    let r_out = (10.0 * lo).max(100.0);
    let residual = equality_residual(u, x, lo, lo, r_out, cfg.radii, cfg.angles)?;
    Ok(MovingSphereReport {
        x,
        lambda_bar: Some(lo),
        unbounded: false,
        min_slack: slack_lo,
        equality_residual: Some(residual),
    })
}

/// Fits above this sup-norm residual are reported as not a bubble.
pub const BUBBLE_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleFit {
    pub a: f64,
    pub b: f64,
    pub center: Vec2,
    /// Sup-norm misfit over the validation set.
    pub residual: f64,
    pub is_bubble: bool,
    pub iterations: usize,
}

fn model(theta: &Vector4<f64>, y: Vec2) -> (f64, Vector4<f64>) {
    let (a, b) = (theta[0].exp(), theta[1].exp());
    let d = y - Vec2::new(theta[2], theta[3]);
    let q = 8.0 * d.norm_sq() + b;
    let value = 2.0 * (8.0 * a).ln() - 2.0 * q.ln();
    let grad = Vector4::new(2.0, -2.0 * b / q, 32.0 * d.x1 / q, 32.0 * d.x2 / q);
    (value, grad)
}

fn sup_misfit(theta: &Vector4<f64>, pts: &[Vec2], vals: &[f64]) -> f64 {
    pts.iter()
        .zip(vals)
        .map(|(&y, &v)| (model(theta, y).0 - v).abs())
        .fold(0.0, f64::max)
}

/// Levenberg–Marquardt fit of `2 ln(8a / (8|y − c|² + b))` over
/// `(ln a, ln b, c)`, started from the largest sample.
pub fn bubble_fit_values(
    pts: &[Vec2],
    vals: &[f64],
    validation: &[Vec2],
    validation_vals: &[f64],
) -> Result<BubbleFit> {
    if pts.len() < 4 || pts.len() != vals.len() || validation.len() != validation_vals.len() {
        return Err(Error::InvalidParameter(
            "bubble fit needs at least 4 matched samples".into(),
        ));
    }
    if vals.iter().chain(validation_vals).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("bubble fit samples"));
    }
    let imax = (0..vals.len())
        .max_by(|&i, &j| vals[i].total_cmp(&vals[j]))
        .expect("nonempty");
    let b0: f64 = 8.0;
    let a0 = b0 * (0.5 * vals[imax]).exp() / 8.0;
    let mut theta = Vector4::new(a0.ln(), b0.ln(), pts[imax].x1, pts[imax].x2);
    let (vpts, vvals) = if validation.is_empty() {
        (pts, vals)
    } else {
        (validation, validation_vals)
    };
    let initial = sup_misfit(&theta, vpts, vvals);

    let cost = |t: &Vector4<f64>| -> f64 {
        pts.iter()
            .zip(vals)
            .map(|(&y, &v)| (model(t, y).0 - v).powi(2))
            .sum()
    };
    let mut c = cost(&theta);
    let mut mu = 1e-3;
    let mut iterations = 0;
    for _ in 0..500 {
        iterations += 1;
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (&y, &v) in pts.iter().zip(vals) {
            let (m, g) = model(&theta, y);
            jtj += g * g.transpose();
            jtr += g * (m - v);
        }
        let mut improved = false;
        while mu < 1e12 {
            let mut damped = jtj;
            for k in 0..4 {
                damped[(k, k)] += mu * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                mu *= 10.0;
                continue;
            };
            let trial = theta + step;
            let ct = cost(&trial);
            if ct.is_finite() && ct < c {
                let rel = (c - ct) / c.max(f64::MIN_POSITIVE);
                theta = trial;
                c = ct;
                mu = (mu * 0.3).max(1e-15);
                improved = rel > 1e-15 && step.norm() > 1e-15 * (1.0 + theta.norm());
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let residual = sup_misfit(&theta, vpts, vvals);
    if !residual.is_finite() || residual > 1e3 * initial.max(f64::MIN_POSITIVE) {
        return Err(Error::FitDiverged { residual });
    }
    Ok(BubbleFit {
        a: theta[0].exp(),
        b: theta[1].exp(),
        center: Vec2::new(theta[2], theta[3]),
        residual,
        is_bubble: residual <= BUBBLE_THRESHOLD,
        iterations,
    })
}

/// Samples `u` on `samples` and `validation` and fits a bubble.
pub fn bubble_fit(u: &dyn ScalarField, samples: &[Vec2], validation: &[Vec2]) -> Result<BubbleFit> {
    let vals = samples
        .iter()
        .map(|&p| u.value(p))
        .collect::<Result<Vec<_>>>()?;
    let vvals = validation
        .iter()
        .map(|&p| u.value(p))
        .collect::<Result<Vec<_>>>()?;
    bubble_fit_values(samples, &vals, validation, &vvals)
}
