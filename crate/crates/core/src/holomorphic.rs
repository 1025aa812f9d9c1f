//! Holomorphic maps carried with their first three complex derivatives.
//!
//! Pulling a conformal factor back through `ψ` needs `ψ′` for the Jacobian,
//! `ψ″` for the Hessian of `u∘ψ`, and `ψ‴` for the Hessian of `ln|ψ′|²`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mobius::MobiusMap;

/// Guard radius around poles and critical points of a holomorphic map.
pub const SINGULAR_GUARD: f64 = 1e-6;

pub fn to_complex(p: Vec2) -> Complex64 {
    Complex64::new(p.x1, p.x2)
}

pub fn to_vec2(z: Complex64) -> Vec2 {
    Vec2::new(z.re, z.im)
}

/// Value and first three derivatives of a holomorphic function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoloJet {
    pub f: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub d3: Complex64,
}

impl HoloJet {
    pub fn new(f: Complex64, d1: Complex64, d2: Complex64, d3: Complex64) -> Self {
        HoloJet { f, d1, d2, d3 }
    }

    /// Jet of the identity map at `z`.
    pub fn identity(z: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        HoloJet::new(z, Complex64::new(1.0, 0.0), zero, zero)
    }

    /// Jet of `outer ∘ inner`, where `outer` was evaluated at `inner.f`.
    pub fn compose(outer: &HoloJet, inner: &HoloJet) -> HoloJet {
        let h1 = inner.d1;
        let h2 = inner.d2;
        let h3 = inner.d3;
        HoloJet {
            f: outer.f,
            d1: outer.d1 * h1,
            d2: outer.d2 * h1 * h1 + outer.d1 * h2,
            d3: outer.d3 * h1 * h1 * h1 + 3.0 * outer.d2 * h1 * h2 + outer.d1 * h3,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.f.is_finite() && self.d1.is_finite() && self.d2.is_finite() && self.d3.is_finite()
    }
}

/// A holomorphic function of one complex variable with a known singular set.
pub trait Holomorphic: Send + Sync {
    /// Value and derivatives at `z`; errors at poles.
    fn jet(&self, z: Complex64) -> Result<HoloJet>;

    /// Poles and zeros of the derivative, when known.
    fn singular_points(&self) -> Vec<Complex64> {
        Vec::new()
    }

    fn describe(&self) -> String;
}

/// Shared handle to a holomorphic map.
#[derive(Clone)]
pub struct HolomorphicMap(Arc<dyn Holomorphic>);

impl fmt::Debug for HolomorphicMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HolomorphicMap({})", self.0.describe())
    }
}

impl HolomorphicMap {
    pub fn new(inner: impl Holomorphic + 'static) -> Self {
        HolomorphicMap(Arc::new(inner))
    }

    pub fn identity() -> Self {
        Self::polynomial(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
    }

    /// `Σ coeffs[k] z^k`.
    pub fn polynomial(coeffs: Vec<Complex64>) -> Self {
        Self::new(Polynomial::new(coeffs))
    }

    /// `z²`.
    pub fn square() -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self::polynomial(vec![zero, zero, Complex64::new(1.0, 0.0)])
    }

    /// `i z²`.
    pub fn i_square() -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self::polynomial(vec![zero, zero, Complex64::new(0.0, 1.0)])
    }

    pub fn exp() -> Self {
        Self::new(Exp)
    }

    /// A Möbius map viewed as a holomorphic function; anti-holomorphic maps are rejected.
    pub fn mobius(m: MobiusMap) -> Result<Self> {
        if m.is_conjugating() {
            return Err(Error::ConjugatingUnsupported);
        }
        Ok(Self::new(m))
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: HolomorphicMap, inner: HolomorphicMap) -> Self {
        Self::new(Composition { outer, inner })
    }

    pub fn jet(&self, z: Complex64) -> Result<HoloJet> {
        self.0.jet(z)
    }

    pub fn singular_points(&self) -> Vec<Complex64> {
        self.0.singular_points()
    }

    pub fn describe(&self) -> String {
        self.0.describe()
    }

    pub fn apply(&self, p: Vec2) -> Result<Vec2> {
        Ok(to_vec2(self.jet(to_complex(p))?.f))
    }

    /// Distance from `z` to the nearest declared singular point.
    pub fn clearance(&self, z: Complex64) -> f64 {
        self.singular_points()
            .iter()
            .map(|s| (z - s).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Polynomial with complex coefficients, lowest degree first.
#[derive(Debug, Clone)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
    critical: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            coeffs.pop();
        }
        let deriv: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * k as f64)
            .collect();
        let critical = polynomial_roots(&deriv);
        Polynomial { coeffs, critical }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
}

impl Holomorphic for Polynomial {
    fn jet(&self, z: Complex64) -> Result<HoloJet> {
        // Horner for the value and the first three derivatives at once
        let zero = Complex64::new(0.0, 0.0);
        let (mut p0, mut p1, mut p2, mut p3) = (zero, zero, zero, zero);
        for c in self.coeffs.iter().rev() {
            p3 = p3 * z + p2;
            p2 = p2 * z + p1;
            p1 = p1 * z + p0;
            p0 = p0 * z + c;
        }
        Ok(HoloJet::new(p0, p1, 2.0 * p2, 6.0 * p3))
    }

    fn singular_points(&self) -> Vec<Complex64> {
        self.critical.clone()
    }

    fn describe(&self) -> String {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| format!("({}{:+}i)z^{}", c.re, c.im, k))
            .collect();
        terms.join(" + ")
    }
}

/// Roots of a polynomial (lowest degree first) by Durand–Kerner iteration.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.len() > 1 && c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let monic: Vec<Complex64> = c.iter().map(|x| x / lead).collect();
    let eval = |z: Complex64| {
        monic
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, k| acc * z + k)
    };
    let radius = 1.0 + monic[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * radius {
            break;
        }
    }
    roots
}

#[derive(Debug, Clone, Copy)]
pub struct Exp;

impl Holomorphic for Exp {
    fn jet(&self, z: Complex64) -> Result<HoloJet> {
        let e = z.exp();
        Ok(HoloJet::new(e, e, e, e))
    }

    fn describe(&self) -> String {
        "exp(z)".into()
    }
}

struct Composition {
    outer: HolomorphicMap,
    inner: HolomorphicMap,
}

impl Holomorphic for Composition {
    fn jet(&self, z: Complex64) -> Result<HoloJet> {
        let inner = self.inner.jet(z)?;
        let outer = self.outer.jet(inner.f)?;
        Ok(HoloJet::compose(&outer, &inner))
    }

    // Only the singular points of the inner map are tracked; preimages of the
    // outer map's singular set are not enumerated.
    fn singular_points(&self) -> Vec<Complex64> {
        self.inner.singular_points()
    }

    fn describe(&self) -> String {
        format!("({}) ∘ ({})", self.outer.describe(), self.inner.describe())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn polynomial_jet_matches_hand_derivatives() {
        // p(z) = 1 + 2z + 3z² + 4z³
        let p = Polynomial::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let z = c(0.5, -0.25);
        let j = p.jet(z).unwrap();
        let f = 1.0 + 2.0 * z + 3.0 * z * z + 4.0 * z * z * z;
        let d1 = 2.0 + 6.0 * z + 12.0 * z * z;
        let d2 = 6.0 + 24.0 * z;
        assert!((j.f - f).norm() < 1e-14);
        assert!((j.d1 - d1).norm() < 1e-14);
        assert!((j.d2 - d2).norm() < 1e-14);
        assert!((j.d3 - c(24.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn critical_points_of_square() {
        let s = HolomorphicMap::square();
        let pts = s.singular_points();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].norm() < 1e-14);
    }

    #[test]
    fn cubic_roots() {
        // (z-1)(z+2)(z-i) expanded
        let r = [c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 1.0)];
        let coeffs = vec![
            -(r[0] * r[1] * r[2]),
            r[0] * r[1] + r[0] * r[2] + r[1] * r[2],
            -(r[0] + r[1] + r[2]),
            c(1.0, 0.0),
        ];
        let mut found = polynomial_roots(&coeffs);
        for want in r {
            let (i, d) = found
                .iter()
                .enumerate()
                .map(|(i, z)| (i, (z - want).norm()))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            assert!(d < 1e-12, "root {want} missing");
            found.remove(i);
        }
    }

    #[test]
    fn composition_chain_rule() {
        // exp(z²): derivatives by hand
        let m = HolomorphicMap::compose(HolomorphicMap::exp(), HolomorphicMap::square());
        let z = c(0.3, 0.7);
        let j = m.jet(z).unwrap();
        let e = (z * z).exp();
        assert!((j.f - e).norm() < 1e-14);
        assert!((j.d1 - 2.0 * z * e).norm() < 1e-13);
        assert!((j.d2 - (2.0 + 4.0 * z * z) * e).norm() < 1e-13);
        assert!((j.d3 - (12.0 * z + 8.0 * z * z * z) * e).norm() < 1e-12);
    }
}
