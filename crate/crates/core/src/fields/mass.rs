use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// `∫ e^u` split into a quadrature over a disc and a far-field tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassEstimate {
    pub interior: f64,
    /// Tail `∫_{|x|>R} e^u` assuming `e^u ~ C|x|^{-4}` beyond `R`.
    pub tail: f64,
    pub total: f64,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Integrates `e^u` over the disc `|x − center| ≤ radius` in polar
/// coordinates (Gauss–Legendre on geometric radial panels, trapezoid in angle)
/// and adds the `|x|^{-4}` tail extrapolated from the boundary circle.
pub fn conformal_mass(
    u: &dyn ScalarField,
    center: Vec2,
    radius: f64,
    n_theta: usize,
) -> Result<MassEstimate> {
    if !(radius > 0.0) || n_theta < 8 {
        return Err(Error::InvalidParameter(
            "mass quadrature needs radius > 0 and n_theta >= 8".into(),
        ));
    }
    const PANELS: i32 = 24;
    let nodes = gauss_legendre(16);
    let mut edges = vec![0.0];
    edges.extend((0..=PANELS).rev().map(|k| radius * 0.5f64.powi(k)));
    let circle_mean = |r: f64| -> Result<f64> {
        let mut s = 0.0;
        for k in 0..n_theta {
            let theta = 2.0 * PI * k as f64 / n_theta as f64;
            s += u.value(center + Vec2::polar(r, theta))?.exp();
        }
        Ok(s / n_theta as f64)
    };
    let mut interior = 0.0;
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for &(x, wt) in &nodes {
            let r = mid + half * x;
            interior += half * wt * 2.0 * PI * r * circle_mean(r)?;
        }
    }
    let tail = PI * radius * radius * circle_mean(radius)?;
    Ok(MassEstimate {
        interior,
        tail,
        total: interior + tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ChenLiBubble;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let nodes = gauss_legendre(8);
        let s: f64 = nodes.iter().map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let total: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn chen_li_mass_closed_form() {
        // 2π ∫_0^R 64a² r / (8a² + r²)² dr = 8π R² / (8a² + R²)
        let a = 0.5;
        let u = ChenLiBubble::new(a, Vec2::new(0.2, -0.1)).unwrap();
        let r = 20.0;
        let m = conformal_mass(&u, Vec2::new(0.2, -0.1), r, 32).unwrap();
        let want = 8.0 * PI * r * r / (8.0 * a * a + r * r);
        assert!((m.interior - want).abs() < 1e-10 * want);
    }
}
