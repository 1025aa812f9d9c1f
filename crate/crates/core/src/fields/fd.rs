//! Central finite differences of the value channel; an oracle independent of
//! the closed-form jets.

use super::{Jet2, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{Sym2, Vec2};

/// `h = 1e-4 (1 + |x|)`.
pub fn default_fd_step(x: Vec2) -> f64 {
    1e-4 * (1.0 + x.norm())
}

fn sample(u: &dyn ScalarField, x: Vec2, d: Vec2) -> Result<f64> {
    u.value(x + d).map_err(|e| match e {
        Error::Domain { reason, .. } => {
            Error::domain(x, format!("stencil leaves domain: {reason}"))
        }
        other => other,
    })
}

/// Second-order central differences with step `h`.
pub fn fd_jet(u: &dyn ScalarField, x: Vec2, h: f64) -> Result<Jet2> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step {h}"
        )));
    }
    let e1 = Vec2::new(h, 0.0);
    let e2 = Vec2::new(0.0, h);
    let f0 = sample(u, x, Vec2::ZERO)?;
    let fp1 = sample(u, x, e1)?;
    let fm1 = sample(u, x, -e1)?;
    let fp2 = sample(u, x, e2)?;
    let fm2 = sample(u, x, -e2)?;
    let fpp = sample(u, x, e1 + e2)?;
    let fpm = sample(u, x, e1 - e2)?;
    let fmp = sample(u, x, e2 - e1)?;
    let fmm = sample(u, x, -e1 - e2)?;
    let h2 = h * h;
    Ok(Jet2::new(
        f0,
        Vec2::new((fp1 - fm1) / (2.0 * h), (fp2 - fm2) / (2.0 * h)),
        Sym2::new(
            (fp1 - 2.0 * f0 + fm1) / h2,
            (fpp - fpm - fmp + fmm) / (4.0 * h2),
            (fp2 - 2.0 * f0 + fm2) / h2,
        ),
    ))
}

/// Richardson extrapolation `(4 D(h/2) − D(h)) / 3` of [`fd_jet`].
pub fn fd_jet_richardson(u: &dyn ScalarField, x: Vec2, h: f64) -> Result<Jet2> {
    let coarse = fd_jet(u, x, h)?;
    let fine = fd_jet(u, x, 0.5 * h)?;
    let mix = |c: f64, f: f64| (4.0 * f - c) / 3.0;
    Ok(Jet2::new(
        fine.value,
        Vec2::new(
            mix(coarse.gradient.x1, fine.gradient.x1),
            mix(coarse.gradient.x2, fine.gradient.x2),
        ),
        Sym2::new(
            mix(coarse.hessian.a11, fine.hessian.a11),
            mix(coarse.hessian.a12, fine.hessian.a12),
            mix(coarse.hessian.a22, fine.hessian.a22),
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Bubble, ConstantField, QuadraticField};

    #[test]
    fn exact_for_quadratics() {
        let u = QuadraticField { a: 1.7 };
        let j = fd_jet(&u, Vec2::new(0.4, -0.3), 1e-3).unwrap();
        assert!(j.hessian.max_abs_diff(&Sym2::diag(3.4, 0.0)) < 1e-8);
        assert!((j.gradient.x1 - 2.0 * 1.7 * 0.4).abs() < 1e-10);
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let j = fd_jet(&ConstantField { c: 2.0 }, Vec2::new(3.0, 1.0), 1e-4).unwrap();
        assert!(j.gradient.norm() < 1e-12);
        assert!(j.hessian.max_abs() < 1e-12);
    }

    #[test]
    fn second_order_convergence_on_bubble() {
        let u = Bubble::new(1.0, 8.0, Vec2::ZERO).unwrap();
        let x = Vec2::new(0.3, 0.2);
        let exact = u.jet(x).unwrap();
        let err = |h: f64| fd_jet(&u, x, h).unwrap().max_abs_diff(&exact);
        let order = (err(1e-2) / err(5e-3)).log2();
        assert!((1.8..=2.2).contains(&order), "order {order}");
    }

    #[test]
    fn richardson_improves() {
        let u = Bubble::new(1.0, 8.0, Vec2::ZERO).unwrap();
        let x = Vec2::new(0.3, 0.2);
        let exact = u.jet(x).unwrap();
        let plain = fd_jet(&u, x, 1e-2).unwrap().max_abs_diff(&exact);
        let rich = fd_jet_richardson(&u, x, 1e-2).unwrap().max_abs_diff(&exact);
        assert!(rich < 0.05 * plain);
    }

    #[test]
    fn stencil_outside_domain() {
        let u = crate::fields::LiouvilleField::new(crate::holomorphic::HolomorphicMap::square());
        let err = fd_jet(&u, Vec2::new(1e-4, 0.0), 1e-4).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }
}
