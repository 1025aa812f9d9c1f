use serde::{Deserialize, Serialize};

use super::{radial_lambda, RadialProfile};
use crate::conformal_ops::ConeIndex;
use crate::error::{Error, Result};

/// The quantities `g = 1/v′ + r/4` and `k = r^{−1/s} g` (with `s = 2 − p`)
/// at one radius, with their derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub r: f64,
    /// `v′ < −4/r`, `λ₂ < 0` and `λ` in the closed cone (up to `1e-9` relative).
    pub in_e: bool,
    pub g: f64,
    pub dg: f64,
    pub k: f64,
    pub dk: f64,
}

/// Evaluates `g, g′, k, k′` from a profile carrying `v′` and `v″`.
pub fn supersolution_diagnostics(p: &RadialProfile, cone: ConeIndex) -> Result<Vec<DiagnosticRow>> {
    let s = cone.boundary_slope();
    if !(s > 0.0) {
        return Err(Error::InvalidParameter("diagnostics need p < 2".into()));
    }
    let (dv, ddv) = match (p.dv(), p.ddv()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InvalidParameter(
                "profile lacks derivative columns".into(),
            ))
        }
    };
    let mut out = Vec::new();
    for i in 0..p.len() {
        let (r, v, w, w1) = (p.r()[i], p.v()[i], dv[i], ddv[i]);
        if r <= 0.0 || w == 0.0 {
            continue;
        }
        let l = radial_lambda(v, w, w1, r)?;
        let slack = l.lambda2 + s * l.lambda1;
        let scale = l.lambda1.abs() + l.lambda2.abs();
        let in_e = w < -4.0 / r && l.lambda2 < 0.0 && slack >= -1e-9 * scale;
        let g = 1.0 / w + 0.25 * r;
        let dg = -w1 / (w * w) + 0.25;
        let rk = r.powf(-1.0 / s);
        out.push(DiagnosticRow {
            r,
            in_e,
            g,
            dg,
            k: rk * g,
            dk: rk * (dg - g / (s * r)),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{boundary_solve, StepControl};

    #[test]
    fn boundary_solution_has_constant_k() {
        // On λ₂ = (p−2)λ₁ one finds g′ = g/(s r), so k′ vanishes.
        let p = ConeIndex::new(1.4).unwrap();
        let sol = boundary_solve(p, 1.0, 0.5, -7.0, 2.0, &StepControl::default(), None).unwrap();
        let rows = supersolution_diagnostics(&sol.profile().unwrap(), p).unwrap();
        assert!(rows.iter().any(|x| x.in_e));
        for x in rows.iter().filter(|x| x.in_e) {
            assert!(x.g > 0.0 && x.dg > 0.0);
            assert!(x.dk.abs() < 1e-9 * (1.0 + x.k.abs()));
        }
    }

    #[test]
    fn needs_derivatives() {
        let p = RadialProfile::sample(0.0, 1.0, 4, |r| r).unwrap();
        assert!(supersolution_diagnostics(&p, ConeIndex::new(1.5).unwrap()).is_err());
        assert!(supersolution_diagnostics(&p, ConeIndex::gamma2()).is_err());
    }
}
