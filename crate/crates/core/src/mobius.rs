//! The Möbius group of the plane in complex coefficients.
//!
//! A map is `z ↦ (a w + b)/(c w + d)` with `w = z` (holomorphic) or
//! `w = z̄` (anti-holomorphic, "conjugating"). Coefficients are normalized to
//! `ad − bc = 1` at construction.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mat2, Orthogonal2, Vec2};
use crate::holomorphic::{to_complex, to_vec2, HoloJet, Holomorphic};

/// `|c w + d|` below this (normalized coefficients) is treated as the pole.
pub const POLE_GUARD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MobiusSpec", into = "MobiusSpec")]
pub struct MobiusMap {
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
    conjugating: bool,
}

/// Real differential of a Möbius map at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian {
    pub j: Mat2,
    pub det: f64,
    /// `|det J|`.
    pub conf: f64,
    /// `conf^{-1/2} J`.
    pub o: Orthogonal2,
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl MobiusMap {
    pub fn new(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
        conjugating: bool,
    ) -> Result<Self> {
        let det = a * d - b * c;
        if !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite()) {
            return Err(Error::NonFinite("Möbius coefficients"));
        }
        if det.norm() == 0.0 || !det.is_finite() {
            return Err(Error::Degenerate);
        }
        // Already-normalized input (e.g. read back from JSON) is kept bit-exact.
        let s = if (det - 1.0).norm() <= 4.0 * f64::EPSILON {
            cx(1.0, 0.0)
        } else {
            det.sqrt()
        };
        Ok(MobiusMap {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
            conjugating,
        })
    }

    pub fn identity() -> Self {
        MobiusMap {
            a: cx(1.0, 0.0),
            b: cx(0.0, 0.0),
            c: cx(0.0, 0.0),
            d: cx(1.0, 0.0),
            conjugating: false,
        }
    }

    pub fn translation(t: Vec2) -> Self {
        MobiusMap {
            b: to_complex(t),
            ..Self::identity()
        }
    }

    /// `x ↦ λx`, `λ ≠ 0` real.
    pub fn dilation(lambda: f64) -> Result<Self> {
        Self::new(
            cx(lambda, 0.0),
            cx(0.0, 0.0),
            cx(0.0, 0.0),
            cx(1.0, 0.0),
            false,
        )
    }

    pub fn rotation(theta: f64) -> Self {
        let h = Complex64::from_polar(1.0, 0.5 * theta);
        MobiusMap {
            a: h,
            d: h.conj(),
            ..Self::identity()
        }
    }

    /// Complex conjugation `(x1, x2) ↦ (x1, −x2)`.
    pub fn reflection() -> Self {
        MobiusMap {
            conjugating: true,
            ..Self::identity()
        }
    }

    /// `x ↦ x/|x|²`, i.e. `z ↦ 1/z̄`.
    pub fn inversion() -> Self {
        MobiusMap {
            a: cx(0.0, 0.0),
            b: cx(0.0, 1.0),
            c: cx(0.0, 1.0),
            d: cx(0.0, 0.0),
            conjugating: true,
        }
    }

    /// Inversion in the circle `|y − x| = λ`: `y ↦ x + λ²(y − x)/|y − x|²`.
    pub fn sphere_inversion(center: Vec2, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sphere radius {lambda} must be positive"
            )));
        }
        let x = to_complex(center);
        // x + λ²/(w − x̄) with w = z̄
        Self::new(
            x,
            cx(lambda * lambda - x.norm_sqr(), 0.0),
            cx(1.0, 0.0),
            -x.conj(),
            true,
        )
    }

    /// Random map with coefficients uniform in the unit square, rejecting
    /// nearly degenerate draws.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut draw = || cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (a, b, c, d) = (draw(), draw(), draw(), draw());
            if (a * d - b * c).norm() < 0.1 {
                continue;
            }
            let conjugating = rng.gen_bool(0.5);
            return Self::new(a, b, c, d, conjugating).expect("checked non-degenerate");
        }
    }

    pub fn coefficients(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_conjugating(&self) -> bool {
        self.conjugating
    }

    /// The pole in the `z` plane, if any.
    pub fn pole(&self) -> Option<Vec2> {
        if self.c.norm() == 0.0 {
            return None;
        }
        let w = -self.d / self.c;
        Some(to_vec2(if self.conjugating { w.conj() } else { w }))
    }

    fn pre(&self, p: Vec2) -> Complex64 {
        let z = to_complex(p);
        if self.conjugating {
            z.conj()
        } else {
            z
        }
    }

    fn outer(&self, w: Complex64) -> Result<HoloJet> {
        let den = self.c * w + self.d;
        if den.norm() < POLE_GUARD {
            return Err(Error::Pole(to_vec2(if self.conjugating {
                w.conj()
            } else {
                w
            })));
        }
        let inv = den.inv();
        let inv2 = inv * inv;
        Ok(HoloJet::new(
            (self.a * w + self.b) * inv,
            inv2,
            -2.0 * self.c * inv2 * inv,
            6.0 * self.c * self.c * inv2 * inv2,
        ))
    }

    /// Jet of the holomorphic part `h` at `w`, where the map is `h(z)` or `h(z̄)`.
    pub fn outer_jet(&self, p: Vec2) -> Result<HoloJet> {
        self.outer(self.pre(p))
    }

    pub fn apply(&self, p: Vec2) -> Result<Vec2> {
        Ok(to_vec2(self.outer_jet(p)?.f))
    }

    pub fn jacobian(&self, p: Vec2) -> Result<Jacobian> {
        let h1 = self.outer_jet(p)?.d1;
        let mut j = Mat2::new(h1.re, -h1.im, h1.im, h1.re);
        if self.conjugating {
            j = j.mul(&Mat2::new(1.0, 0.0, 0.0, -1.0));
        }
        let det = j.det();
        let conf = det.abs();
        let o = Orthogonal2::new(j.scale(conf.sqrt().recip()))?;
        Ok(Jacobian { j, det, conf, o })
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        let (a2, b2, c2, d2) = if self.conjugating {
            (
                other.a.conj(),
                other.b.conj(),
                other.c.conj(),
                other.d.conj(),
            )
        } else {
            (other.a, other.b, other.c, other.d)
        };
        let a = self.a * a2 + self.b * c2;
        let b = self.a * b2 + self.b * d2;
        let c = self.c * a2 + self.d * c2;
        let d = self.c * b2 + self.d * d2;
        MobiusMap::new(a, b, c, d, self.conjugating != other.conjugating)
            .expect("product of unimodular matrices is unimodular")
    }

    pub fn inverse(&self) -> MobiusMap {
        // inverse of w ↦ (aw+b)/(cw+d) is ζ ↦ (dζ − b)/(−cζ + a); for the
        // conjugating case w = z̄ so z = conj(...) and the coefficients conjugate.
        let (a, b, c, d) = (self.d, -self.b, -self.c, self.a);
        let (a, b, c, d) = if self.conjugating {
            (a.conj(), b.conj(), c.conj(), d.conj())
        } else {
            (a, b, c, d)
        };
        MobiusMap::new(a, b, c, d, self.conjugating).expect("unimodular")
    }
}

impl Holomorphic for MobiusMap {
    fn jet(&self, z: Complex64) -> Result<HoloJet> {
        if self.conjugating {
            return Err(Error::ConjugatingUnsupported);
        }
        self.outer(z)
    }

    fn singular_points(&self) -> Vec<Complex64> {
        self.pole().map(to_complex).into_iter().collect()
    }

    fn describe(&self) -> String {
        format!(
            "mobius(a={}, b={}, c={}, d={}, conjugating={})",
            self.a, self.b, self.c, self.d, self.conjugating
        )
    }
}

/// JSON form: complex numbers as `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MobiusSpec {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
    pub d: [f64; 2],
    #[serde(default)]
    pub conjugating: bool,
}

impl TryFrom<MobiusSpec> for MobiusMap {
    type Error = Error;

    fn try_from(s: MobiusSpec) -> Result<Self> {
        let z = |p: [f64; 2]| cx(p[0], p[1]);
        MobiusMap::new(z(s.a), z(s.b), z(s.c), z(s.d), s.conjugating)
    }
}

impl From<MobiusMap> for MobiusSpec {
    fn from(m: MobiusMap) -> Self {
        let p = |z: Complex64| [z.re, z.im];
        MobiusSpec {
            a: p(m.a),
            b: p(m.b),
            c: p(m.c),
            d: p(m.d),
            conjugating: m.conjugating,
        }
    }
}
