//! `u_ψ = u∘ψ + ln|det J_ψ|` with jets assembled by the chain rule.

use std::sync::Arc;

use num_complex::Complex64;

use super::{Field, Jet2, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{Sym2, Vec2};
use crate::holomorphic::{to_complex, to_vec2, HoloJet, HolomorphicMap, SINGULAR_GUARD};
use crate::mobius::MobiusMap;

/// Pulls the jet of `u` at `h(w)` back to `w` through the holomorphic `h`,
/// adding the jet of `ln|h′|²`. With `conjugating` the result is further
/// composed with `z ↦ z̄`, giving the jet of `u(h(z̄)) + ln|h′(z̄)|²` at `z = w̄`.
pub fn pull_jet(u: &Jet2, h: &HoloJet, conjugating: bool) -> Jet2 {
    let g = u.gradient;
    let hs = u.hessian;
    let (p1, q1) = (h.d1.re, h.d1.im);
    let (p2, q2) = (h.d2.re, h.d2.im);

    // J = [[p1, −q1], [q1, p1]]
    let jt_g = Vec2::new(p1 * g.x1 + q1 * g.x2, -q1 * g.x1 + p1 * g.x2);
    let jhj = hs.congruence(&crate::geometry::Mat2::new(p1, -q1, q1, p1));
    // Hessians of Re h and Im h
    let hess_re = Sym2::new(p2, -q2, -p2);
    let hess_im = Sym2::new(q2, p2, -q2);
    let comp_hess = jhj + hess_re * g.x1 + hess_im * g.x2;

    // ln|h′|² = 2 Re log h′
    let l1 = h.d2 / h.d1;
    let l2 = h.d3 / h.d1 - l1 * l1;
    let log_grad = Vec2::new(2.0 * l1.re, -2.0 * l1.im);
    let log_hess = Sym2::new(2.0 * l2.re, -2.0 * l2.im, -2.0 * l2.re);

    let value = u.value + h.d1.norm_sqr().ln();
    let gradient = jt_g + log_grad;
    let hessian = comp_hess + log_hess;
    if conjugating {
        Jet2::new(
            value,
            Vec2::new(gradient.x1, -gradient.x2),
            Sym2::new(hessian.a11, -hessian.a12, hessian.a22),
        )
    } else {
        Jet2::new(value, gradient, hessian)
    }
}

/// A conformal map usable in a pullback: a general holomorphic map or a
/// (possibly anti-holomorphic) Möbius map.
#[derive(Debug, Clone)]
pub enum ConformalMap {
    Holomorphic(HolomorphicMap),
    Mobius(MobiusMap),
}

impl From<HolomorphicMap> for ConformalMap {
    fn from(m: HolomorphicMap) -> Self {
        ConformalMap::Holomorphic(m)
    }
}

impl From<MobiusMap> for ConformalMap {
    fn from(m: MobiusMap) -> Self {
        ConformalMap::Mobius(m)
    }
}

impl ConformalMap {
    /// Jet of the holomorphic part and the conjugation flag at `x`.
    pub fn local(&self, x: Vec2) -> Result<(HoloJet, bool)> {
        match self {
            ConformalMap::Holomorphic(h) => {
                let z = to_complex(x);
                if h.clearance(z) < SINGULAR_GUARD {
                    return Err(Error::domain(
                        x,
                        "too close to a pole or critical point of the map",
                    ));
                }
                let jet = h.jet(z).map_err(|e| Error::domain(x, e.to_string()))?;
                Ok((jet, false))
            }
            ConformalMap::Mobius(m) => {
                let jet = m
                    .outer_jet(x)
                    .map_err(|e| Error::domain(x, e.to_string()))?;
                Ok((jet, m.is_conjugating()))
            }
        }
    }

    pub fn apply(&self, x: Vec2) -> Result<Vec2> {
        Ok(to_vec2(self.local(x)?.0.f))
    }

    pub fn is_conjugating(&self) -> bool {
        matches!(self, ConformalMap::Mobius(m) if m.is_conjugating())
    }

    pub fn singular_points(&self) -> Vec<Complex64> {
        match self {
            ConformalMap::Holomorphic(h) => h.singular_points(),
            ConformalMap::Mobius(m) => m.pole().map(to_complex).into_iter().collect(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ConformalMap::Holomorphic(h) => h.describe(),
            ConformalMap::Mobius(m) => crate::holomorphic::Holomorphic::describe(m),
        }
    }
}

/// The field `u∘ψ + ln|J_ψ|`.
#[derive(Clone)]
pub struct Pullback {
    u: Field,
    map: ConformalMap,
}

impl Pullback {
    pub fn new(u: Field, map: impl Into<ConformalMap>) -> Self {
        Pullback { u, map: map.into() }
    }

    pub fn map(&self) -> &ConformalMap {
        &self.map
    }
}

impl ScalarField for Pullback {
    fn jet(&self, x: Vec2) -> Result<Jet2> {
        let (h, conj) = self.map.local(x)?;
        if h.d1.norm() == 0.0 {
            return Err(Error::domain(x, "map is not locally univalent"));
        }
        let image = to_vec2(h.f);
        let inner = self.u.jet(image).map_err(|e| match e {
            Error::Domain { reason, .. } => {
                Error::domain(x, format!("image point excluded: {reason}"))
            }
            other => other,
        })?;
        Ok(pull_jet(&inner, &h, conj))
    }

    fn value(&self, x: Vec2) -> Result<f64> {
        let (h, _) = self.map.local(x)?;
        if h.d1.norm() == 0.0 {
            return Err(Error::domain(x, "map is not locally univalent"));
        }
        let inner = self.u.value(to_vec2(h.f)).map_err(|e| match e {
            Error::Domain { reason, .. } => {
                Error::domain(x, format!("image point excluded: {reason}"))
            }
            other => other,
        })?;
        Ok(inner + h.d1.norm_sqr().ln())
    }

    fn clearance(&self, x: Vec2) -> f64 {
        let z = to_complex(x);
        let own = self
            .map
            .singular_points()
            .iter()
            .map(|s| (z - s).norm())
            .fold(f64::INFINITY, f64::min);
        let inherited = match self.map.local(x) {
            Ok((h, _)) => self.u.clearance(to_vec2(h.f)) / h.d1.norm(),
            Err(_) => 0.0,
        };
        own.min(inherited)
    }

    fn describe(&self) -> String {
        format!("pullback({}, {})", self.u.describe(), self.map.describe())
    }
}

pub fn pullback(u: Field, map: impl Into<ConformalMap>) -> Field {
    Arc::new(Pullback::new(u, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{fd_jet, Bubble, ConstantField, LiouvilleField, QuadraticField};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(f: impl ScalarField + 'static) -> Field {
        Arc::new(f)
    }

    #[test]
    fn identity_pullback_is_identity() {
        let u = field(Bubble::new(1.3, 2.0, Vec2::new(0.2, 0.1)).unwrap());
        let v = pullback(u.clone(), HolomorphicMap::identity());
        let w = pullback(u.clone(), MobiusMap::identity());
        for p in [Vec2::new(0.0, 0.0), Vec2::new(1.0, -2.0)] {
            let a = u.jet(p).unwrap();
            assert!(v.jet(p).unwrap().max_abs_diff(&a) < 1e-15);
            assert!(w.jet(p).unwrap().max_abs_diff(&a) < 1e-15);
        }
    }

    #[test]
    fn constant_under_dilation() {
        let lambda = 2.5;
        let u = pullback(
            field(ConstantField { c: 0.3 }),
            MobiusMap::dilation(lambda).unwrap(),
        );
        let j = u.jet(Vec2::new(0.7, -1.1)).unwrap();
        assert!((j.value - (0.3 + 2.0 * lambda.ln())).abs() < 1e-14);
        assert!(j.gradient.norm() < 1e-15);
        assert!(j.hessian.max_abs() < 1e-15);
    }

    #[test]
    fn quadratic_under_i_z_squared() {
        let a = 0.8;
        let u = pullback(field(QuadraticField { a }), HolomorphicMap::i_square());
        for &(x, y) in &[(0.3, 1.0), (-0.5, 0.25), (1.2, -0.7)] {
            let want = 4.0 * a * x * x * y * y + 4f64.ln() + (x * x + y * y).ln();
            let got = u.value(Vec2::new(x, y)).unwrap();
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
        assert!(matches!(u.jet(Vec2::ZERO), Err(Error::Domain { .. })));
    }

    #[test]
    fn jets_match_finite_differences_for_mobius_and_holomorphic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base = field(Bubble::new(0.9, 3.0, Vec2::new(0.3, -0.2)).unwrap());
        let maps: Vec<ConformalMap> = vec![
            MobiusMap::inversion().into(),
            MobiusMap::random(&mut rng).into(),
            MobiusMap::random(&mut rng).into(),
            HolomorphicMap::exp().into(),
            HolomorphicMap::square().into(),
        ];
        for m in maps {
            let u = pullback(base.clone(), m.clone());
            let mut tested = 0;
            while tested < 10 {
                let p = Vec2::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
                if u.clearance(p) < 0.2 {
                    continue;
                }
                let exact = u.jet(p).unwrap();
                let fd = fd_jet(u.as_ref(), p, 1e-4).unwrap();
                let scale = 1.0 + exact.hessian.max_abs() + exact.gradient.norm();
                assert!(
                    fd.max_abs_diff(&exact) < 1e-5 * scale,
                    "{} at {p:?}",
                    m.describe()
                );
                tested += 1;
            }
        }
    }

    #[test]
    fn cocycle_holomorphic() {
        let u = field(LiouvilleField::new(HolomorphicMap::identity()));
        let psi1 = HolomorphicMap::exp();
        let psi2 = HolomorphicMap::square();
        let lhs = pullback(pullback(u.clone(), psi1.clone()), psi2.clone());
        let rhs = pullback(u, HolomorphicMap::compose(psi1, psi2));
        for &(x, y) in &[(0.3, 0.4), (-0.6, 0.2), (0.5, -0.5)] {
            let p = Vec2::new(x, y);
            assert!(lhs.jet(p).unwrap().max_abs_diff(&rhs.jet(p).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn cocycle_mobius() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = field(Bubble::new(1.0, 8.0, Vec2::ZERO).unwrap());
        for _ in 0..10 {
            let m1 = MobiusMap::random(&mut rng);
            let m2 = MobiusMap::random(&mut rng);
            let lhs = pullback(pullback(u.clone(), m1), m2);
            let rhs = pullback(u.clone(), m1.compose(&m2));
            let mut n = 0;
            while n < 10 {
                let p = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                if lhs.clearance(p) < 0.1 || rhs.clearance(p) < 0.1 {
                    continue;
                }
                let (a, b) = (lhs.jet(p).unwrap(), rhs.jet(p).unwrap());
                let scale = 1.0 + a.hessian.max_abs();
                assert!(a.max_abs_diff(&b) < 1e-10 * scale, "{a:?} vs {b:?}");
                n += 1;
            }
        }
    }
}
