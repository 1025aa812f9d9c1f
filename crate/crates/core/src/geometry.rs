//! Small exact linear algebra in the plane.
//!
//! Everything here is a `Copy` value type. The only decomposition needed is
//! the closed-form eigenvalue pair of a 2×2 symmetric matrix.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orthogonality defect accepted by [`Orthogonal2::new`].
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

/// A point or vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x1: f64,
    pub x2: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Vec2 { x1, x2 }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Vec2::new(r * theta.cos(), r * theta.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    /// Outer product `self ⊗ self`.
    pub fn outer(self) -> Sym2 {
        Sym2::new(self.x1 * self.x1, self.x1 * self.x2, self.x2 * self.x2)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x1, -self.x2)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x1 * s, self.x2 * s)
    }
}

/// A 2×2 real symmetric matrix, stored by its three distinct entries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 {
        a11: 0.0,
        a12: 0.0,
        a22: 0.0,
    };
    pub const IDENTITY: Sym2 = Sym2 {
        a11: 1.0,
        a12: 0.0,
        a22: 1.0,
    };

    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    pub const fn diag(a11: f64, a22: f64) -> Self {
        Sym2 { a11, a12: 0.0, a22 }
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.a11 * v.x1 + self.a12 * v.x2,
            self.a12 * v.x1 + self.a22 * v.x2,
        )
    }

    /// Entrywise max-norm distance.
    pub fn max_abs_diff(&self, other: &Sym2) -> f64 {
        (self.a11 - other.a11)
            .abs()
            .max((self.a12 - other.a12).abs())
            .max((self.a22 - other.a22).abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_diff(&Sym2::ZERO)
    }

    /// `Mᵀ S M` for an arbitrary real 2×2 `M`.
    pub fn congruence(&self, m: &Mat2) -> Sym2 {
        let sm = Mat2::from(*self).mul(m);
        let r = m.transpose().mul(&sm);
        // symmetrize the off-diagonal to cancel roundoff asymmetry
        Sym2::new(r.m11, 0.5 * (r.m12 + r.m21), r.m22)
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.a11 + o.a11, self.a12 + o.a12, self.a22 + o.a22)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.a11 - o.a11, self.a12 - o.a12, self.a22 - o.a22)
    }
}

impl Mul<f64> for Sym2 {
    type Output = Sym2;
    fn mul(self, s: f64) -> Sym2 {
        Sym2::new(self.a11 * s, self.a12 * s, self.a22 * s)
    }
}

/// A general real 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2 { m11, m12, m21, m22 }
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m11, self.m21, self.m12, self.m22)
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * o.m11 + self.m12 * o.m21,
            self.m11 * o.m12 + self.m12 * o.m22,
            self.m21 * o.m11 + self.m22 * o.m21,
            self.m21 * o.m12 + self.m22 * o.m22,
        )
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.m11 * v.x1 + self.m12 * v.x2,
            self.m21 * v.x1 + self.m22 * v.x2,
        )
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        (self.m11 - o.m11)
            .abs()
            .max((self.m12 - o.m12).abs())
            .max((self.m21 - o.m21).abs())
            .max((self.m22 - o.m22).abs())
    }

    /// `max |MᵀM − I|` entrywise.
    pub fn orthogonality_defect(&self) -> f64 {
        self.transpose().mul(self).max_abs_diff(&Mat2::IDENTITY)
    }
}

impl From<Sym2> for Mat2 {
    fn from(s: Sym2) -> Mat2 {
        Mat2::new(s.a11, s.a12, s.a12, s.a22)
    }
}

/// A real orthogonal 2×2 matrix (rotation or reflection).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orthogonal2(Mat2);

impl Orthogonal2 {
    pub const IDENTITY: Orthogonal2 = Orthogonal2(Mat2::IDENTITY);

    /// Rejects matrices whose defect `|OᵀO − I|` exceeds [`ORTHOGONALITY_TOL`].
    pub fn new(m: Mat2) -> Result<Self> {
        if !(m.m11.is_finite() && m.m12.is_finite() && m.m21.is_finite() && m.m22.is_finite()) {
            return Err(Error::NonFinite("orthogonal matrix entries"));
        }
        let defect = m.orthogonality_defect();
        if defect > ORTHOGONALITY_TOL {
            return Err(Error::NotOrthogonal { defect });
        }
        Ok(Orthogonal2(m))
    }

    pub fn rotation(theta: f64) -> Self {
        Orthogonal2(Mat2::rotation(theta))
    }

    pub fn matrix(&self) -> Mat2 {
        self.0
    }

    pub fn det(&self) -> f64 {
        self.0.det()
    }
}

/// Eigenvalues of a symmetric 2×2 matrix, `lambda1 ≥ lambda2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl EigenPair {
    /// Builds a pair from two unordered values.
    pub fn sorted(a: f64, b: f64) -> Self {
        if a >= b {
            EigenPair {
                lambda1: a,
                lambda2: b,
            }
        } else {
            EigenPair {
                lambda1: b,
                lambda2: a,
            }
        }
    }

    pub fn trace(&self) -> f64 {
        self.lambda1 + self.lambda2
    }

    pub fn det(&self) -> f64 {
        self.lambda1 * self.lambda2
    }

    pub fn max_abs_diff(&self, o: &EigenPair) -> f64 {
        (self.lambda1 - o.lambda1)
            .abs()
            .max((self.lambda2 - o.lambda2).abs())
    }
}

/// Closed-form eigenvalues `mean ± sqrt(((a11−a22)/2)² + a12²)`.
pub fn eig2(m: &Sym2) -> Result<EigenPair> {
    if !m.is_finite() {
        return Err(Error::NonFinite("symmetric matrix entries"));
    }
    let mean = 0.5 * (m.a11 + m.a22);
    let radius = (0.5 * (m.a11 - m.a22)).hypot(m.a12);
    Ok(EigenPair {
        lambda1: mean + radius,
        lambda2: mean - radius,
    })
}

/// Orthogonal conjugation `OᵀMO`.
pub fn conj_orth(m: &Sym2, o: &Orthogonal2) -> Sym2 {
    m.congruence(&o.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn eig2_examples() {
        let e = eig2(&Sym2::diag(3.0, 1.0)).unwrap();
        assert_eq!((e.lambda1, e.lambda2), (3.0, 1.0));
        let e = eig2(&Sym2::new(0.0, 1.0, 0.0)).unwrap();
        assert_eq!((e.lambda1, e.lambda2), (1.0, -1.0));
        let e = eig2(&Sym2::new(2.0, 1.0, 2.0)).unwrap();
        assert_eq!((e.lambda1, e.lambda2), (3.0, 1.0));
    }

    #[test]
    fn eig2_rejects_nan() {
        assert!(matches!(
            eig2(&Sym2::new(f64::NAN, 0.0, 1.0)),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn conj_orth_examples() {
        let m = Sym2::diag(5.0, -2.0);
        let r = conj_orth(&m, &Orthogonal2::rotation(FRAC_PI_2));
        assert!(r.max_abs_diff(&Sym2::diag(-2.0, 5.0)) < 1e-15);

        let m = Sym2::new(1.5, -0.25, 7.0);
        assert_eq!(conj_orth(&m, &Orthogonal2::IDENTITY), m);

        // direct product: R(45°)ᵀ diag(1,-1) R(45°) with c = s = 1/√2
        let (s, c) = FRAC_PI_4.sin_cos();
        let rt = Mat2::new(c, s, -s, c);
        let d = Mat2::new(1.0, 0.0, 0.0, -1.0);
        let r = Mat2::new(c, -s, s, c);
        let oracle = rt.mul(&d).mul(&r);
        let got = conj_orth(&Sym2::diag(1.0, -1.0), &Orthogonal2::rotation(FRAC_PI_4));
        assert!(Mat2::from(got).max_abs_diff(&oracle) < 1e-15);
        assert!(got.max_abs_diff(&Sym2::new(0.0, -1.0, 0.0)) < 1e-15);
    }

    #[test]
    fn non_orthogonal_rejected() {
        let err = Orthogonal2::new(Mat2::new(1.0, 0.0, 0.0, 1.0 + 1e-6)).unwrap_err();
        assert!(matches!(err, Error::NotOrthogonal { .. }));
        assert!(Orthogonal2::new(Mat2::new(1.0, 0.0, 0.0, 1.0 + 1e-12)).is_ok());
        assert!(Orthogonal2::new(Mat2::new(0.0, 1.0, 1.0, 0.0)).is_ok());
    }

    fn sym() -> impl Strategy<Value = Sym2> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b, c)| Sym2::new(a, b, c))
    }

    proptest! {
        #[test]
        fn eigenvalues_invariant_under_conjugation(m in sym(), theta in 0.0..6.3f64, reflect in any::<bool>()) {
            let mut o = Mat2::rotation(theta);
            if reflect {
                o = o.mul(&Mat2::new(1.0, 0.0, 0.0, -1.0));
            }
            let o = Orthogonal2::new(o).unwrap();
            let e0 = eig2(&m).unwrap();
            let e1 = eig2(&conj_orth(&m, &o)).unwrap();
            prop_assert!(e0.max_abs_diff(&e1) <= 1e-12 * (1.0 + m.max_abs()));
        }

        #[test]
        fn trace_and_det_reconstructed(m in sym()) {
            let e = eig2(&m).unwrap();
            prop_assert!(e.lambda1 >= e.lambda2);
            prop_assert!((e.trace() - m.trace()).abs() <= 1e-12 * (1.0 + m.max_abs()));
            prop_assert!((e.det() - m.det()).abs() <= 1e-12 * (1.0 + m.max_abs()).powi(2));
        }
    }
}
