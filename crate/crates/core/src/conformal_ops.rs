//! The Möbius-covariant operators at a point: the real symmetric matrix
//! `A^u = e^{-u}(−∇²u + ½ du⊗du − ¼|∇u|² I)`, its Hermitian form `B^u` in
//! `dz, dz̄` coordinates, cone membership, and symmetric curvature functions.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Jet2, ScalarField};
use crate::geometry::{eig2, EigenPair, Sym2, Vec2};

/// Largest `|u|` accepted before `e^{-u}` is considered an overflow.
pub const EXP_GUARD: f64 = 700.0;

fn check_jet(j: &Jet2) -> Result<()> {
    if !j.is_finite() {
        return Err(Error::NonFinite("jet"));
    }
    if j.value.abs() > EXP_GUARD {
        return Err(Error::Overflow(j.value));
    }
    Ok(())
}

/// `A^u` from the jet `(u, g, H)`.
pub fn a_from_jet(j: &Jet2) -> Result<Sym2> {
    check_jet(j)?;
    let g = j.gradient;
    let inner = j.hessian * -1.0 + g.outer() * 0.5 - Sym2::IDENTITY * (0.25 * g.norm_sq());
    Ok(inner * (-j.value).exp())
}

/// Hermitian 2×2 matrix `[[B_zz̄, B_zz], [conj B_zz, B_zz̄]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Herm2 {
    pub bzzbar: f64,
    pub bzz: Complex64,
}

impl Herm2 {
    /// Eigenvalues `B_zz̄ ± |B_zz|`.
    pub fn eigenvalues(&self) -> EigenPair {
        let r = self.bzz.norm();
        EigenPair {
            lambda1: self.bzzbar + r,
            lambda2: self.bzzbar - r,
        }
    }

    /// Full matrix, row-major.
    pub fn to_matrix(&self) -> [[Complex64; 2]; 2] {
        let d = Complex64::new(self.bzzbar, 0.0);
        [[d, self.bzz], [self.bzz.conj(), d]]
    }

    pub fn max_abs_diff(&self, o: &Herm2) -> f64 {
        (self.bzzbar - o.bzzbar)
            .abs()
            .max((self.bzz - o.bzz).norm())
    }
}

/// `B^u` via Wirtinger derivatives:
/// `u_z = ½(u₁ − i u₂)`, `u_zz = ¼(u₁₁ − u₂₂ − 2i u₁₂)`, `u_zz̄ = ¼Δu`.
pub fn b_from_jet(j: &Jet2) -> Result<Herm2> {
    check_jet(j)?;
    let g = j.gradient;
    let h = j.hessian;
    let uz = Complex64::new(0.5 * g.x1, -0.5 * g.x2);
    let uzz = Complex64::new(0.25 * (h.a11 - h.a22), -0.5 * h.a12);
    let uzzbar = 0.25 * h.trace();
    let scale = (-j.value).exp();
    Ok(Herm2 {
        bzzbar: -uzzbar * scale,
        bzz: (-uzz + 0.5 * uz * uz) * scale,
    })
}

/// `λ(A^u)` at `x`, descending.
pub fn lambda_a(u: &dyn ScalarField, x: Vec2) -> Result<EigenPair> {
    eig2(&a_from_jet(&u.jet(x)?)?)
}

/// Cone index `p ∈ (1, 2]` of `Γ_p = {λ₂ > (p−2)λ₁, λ₁ > (p−2)λ₂}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ConeIndex(f64);

impl ConeIndex {
    pub fn new(p: f64) -> Result<Self> {
        if p > 1.0 && p <= 2.0 {
            Ok(ConeIndex(p))
        } else {
            Err(Error::InvalidParameter(format!(
                "cone index p = {p} must lie in (1, 2]"
            )))
        }
    }

    /// The positive quadrant `Γ₂`.
    pub fn gamma2() -> Self {
        ConeIndex(2.0)
    }

    pub fn p(&self) -> f64 {
        self.0
    }

    /// Slope `s = 2 − p` with `(1, −s) ∈ ∂Γ_p`.
    pub fn boundary_slope(&self) -> f64 {
        2.0 - self.0
    }

    /// Smallest `λ_a` keeping `(λ_a, λ_b)` inside the closed cone, or `None`
    /// if no such value exists (only for `Γ₂` with `λ_b ≤ 0`).
    pub fn lower_bound(&self, other: f64) -> Option<f64> {
        let s = self.boundary_slope();
        if s == 0.0 {
            return (other > 0.0).then_some(0.0);
        }
        Some((-other / s).max(-s * other))
    }
}

impl TryFrom<f64> for ConeIndex {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        ConeIndex::new(p)
    }
}

impl From<ConeIndex> for f64 {
    fn from(c: ConeIndex) -> f64 {
        c.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeMembership {
    pub inside: bool,
    /// `min(λ₂ − (p−2)λ₁, λ₁ − (p−2)λ₂)`; positive exactly when inside.
    pub margin: f64,
}

pub fn in_cone(e: &EigenPair, p: ConeIndex) -> ConeMembership {
    let k = p.p() - 2.0;
    let margin = (e.lambda2 - k * e.lambda1).min(e.lambda1 - k * e.lambda2);
    ConeMembership {
        inside: margin > 0.0,
        margin,
    }
}

type ValueFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// A symmetric function `f(λ₁, λ₂)` with its gradient and admissible cone.
#[derive(Clone)]
pub struct SymmetricFunction {
    name: String,
    value: ValueFn,
    grad: GradFn,
    cone: ConeIndex,
}

impl fmt::Debug for SymmetricFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricFunction")
            .field("name", &self.name)
            .field("cone", &self.cone)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FValue {
    pub value: f64,
    pub grad: Vec2,
    pub elliptic: bool,
}

/// Number of cone samples used to validate user-supplied functions.
pub const VALIDATION_SAMPLES: usize = 100;

impl SymmetricFunction {
    fn builtin(name: impl Into<String>, value: ValueFn, grad: GradFn, cone: ConeIndex) -> Self {
        SymmetricFunction {
            name: name.into(),
            value,
            grad,
            cone,
        }
    }

    /// `σ₁ = λ₁ + λ₂`, elliptic on every `Γ_p`.
    pub fn sigma1(cone: ConeIndex) -> Self {
        Self::builtin(
            "sigma1",
            Arc::new(|a, b| a + b),
            Arc::new(|_, _| (1.0, 1.0)),
            cone,
        )
    }

    /// `σ₂ = λ₁λ₂` on `Γ₂`.
    pub fn sigma2() -> Self {
        Self::builtin(
            "sigma2",
            Arc::new(|a, b| a * b),
            Arc::new(|a, b| (b, a)),
            ConeIndex::gamma2(),
        )
    }

    /// `t σ₁ + (1 − t) σ₂^{1/2}` on `Γ₂`, `t ∈ [0, 1]`.
    pub fn weighted(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "weight t = {t} must lie in [0, 1]"
            )));
        }
        Ok(Self::builtin(
            format!("weighted:{t}"),
            Arc::new(move |a, b| t * (a + b) + (1.0 - t) * (a * b).max(0.0).sqrt()),
            Arc::new(move |a, b| {
                let g = (a * b).max(0.0).sqrt();
                if g == 0.0 {
                    return (f64::INFINITY, f64::INFINITY);
                }
                (t + (1.0 - t) * 0.5 * b / g, t + (1.0 - t) * 0.5 * a / g)
            }),
            ConeIndex::gamma2(),
        ))
    }

    /// `(λ₁ + sλ₂)(λ₂ + sλ₁)` with `s = 2 − p`: elliptic on `Γ_p` and
    /// vanishing on its boundary. Reduces to `σ₂` for `p = 2`.
    pub fn cone_product(cone: ConeIndex) -> Self {
        let s = cone.boundary_slope();
        Self::builtin(
            format!("cone_product:{}", cone.p()),
            Arc::new(move |a, b| (a + s * b) * (b + s * a)),
            Arc::new(move |a, b| ((b + s * a) + s * (a + s * b), (a + s * b) + s * (b + s * a))),
            cone,
        )
    }

    /// A user-supplied function, checked for symmetry and ellipticity on
    /// [`VALIDATION_SAMPLES`] seeded points of the cone.
    pub fn custom(
        name: impl Into<String>,
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        grad: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
        cone: ConeIndex,
    ) -> Result<Self> {
        let f = Self::builtin(name, Arc::new(value), Arc::new(grad), cone);
        f.validate(VALIDATION_SAMPLES, 0x5eed)?;
        Ok(f)
    }

    /// Resolves `"sigma1"`, `"sigma2"`, `"weighted:{t}"` and `"cone_product"`.
    pub fn from_name(name: &str, cone: ConeIndex) -> Result<Self> {
        match name {
            "sigma1" => Ok(Self::sigma1(cone)),
            "sigma2" => Ok(Self::sigma2()),
            "cone_product" => Ok(Self::cone_product(cone)),
            _ => match name.strip_prefix("weighted:") {
                Some(t) => Self::weighted(
                    t.parse()
                        .map_err(|_| Error::Parse(format!("bad weight in '{name}'")))?,
                ),
                None => Err(Error::InvalidParameter(format!(
                    "unknown symmetric function '{name}'"
                ))),
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cone(&self) -> ConeIndex {
        self.cone
    }

    /// Raw evaluation without the cone check.
    pub fn value(&self, l1: f64, l2: f64) -> f64 {
        (self.value)(l1, l2)
    }

    pub fn gradient(&self, l1: f64, l2: f64) -> (f64, f64) {
        (self.grad)(l1, l2)
    }

    /// Samples the cone and checks `f(λ₁,λ₂) = f(λ₂,λ₁)` and `∂f/∂λᵢ > 0`.
    pub fn validate(&self, samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for e in sample_cone(&mut rng, self.cone, samples) {
            let (a, b) = (e.lambda1, e.lambda2);
            let (fab, fba) = (self.value(a, b), self.value(b, a));
            if (fab - fba).abs() > 1e-10 * (1.0 + fab.abs()) {
                return Err(Error::InvalidParameter(format!(
                    "{} is not symmetric at ({a}, {b})",
                    self.name
                )));
            }
            let (g1, g2) = self.gradient(a, b);
            if !(g1 > 0.0 && g2 > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{} is not elliptic at ({a}, {b})",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Uniform rejection samples from `Γ_p ∩ [−5, 5]²` with margin at least 1e-3.
pub fn sample_cone<R: Rng + ?Sized>(rng: &mut R, cone: ConeIndex, n: usize) -> Vec<EigenPair> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let e = EigenPair::sorted(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        if in_cone(&e, cone).margin > 1e-3 {
            out.push(e);
        }
    }
    out
}

pub fn f_eval(f: &SymmetricFunction, e: &EigenPair) -> Result<FValue> {
    if !in_cone(e, f.cone()).inside {
        return Err(Error::Cone(e.lambda1, e.lambda2));
    }
    let value = f.value(e.lambda1, e.lambda2);
    let (g1, g2) = f.gradient(e.lambda1, e.lambda2);
    Ok(FValue {
        value,
        grad: Vec2::new(g1, g2),
        elliptic: g1 > 0.0 && g2 > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Bubble, LiouvilleField, QuadraticField};
    use crate::geometry::{conj_orth, Mat2, Orthogonal2};
    use crate::holomorphic::HolomorphicMap;
    use proptest::prelude::*;

    #[test]
    fn constant_jet_gives_zero() {
        let j = Jet2::constant(3.0);
        assert_eq!(a_from_jet(&j).unwrap(), Sym2::ZERO);
        let b = b_from_jet(&j).unwrap();
        assert_eq!(b.bzzbar, 0.0);
        assert_eq!(b.bzz, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn overflow_guard() {
        let j = Jet2::constant(-701.0);
        assert!(matches!(a_from_jet(&j), Err(Error::Overflow(_))));
        assert!(matches!(b_from_jet(&j), Err(Error::Overflow(_))));
    }

    #[test]
    fn quadratic_field_matrix() {
        // u = a x1²: e^{-a x1²}(−diag(2a,0) + ½ diag(4a²x1², 0) − a²x1² I)
        let a = 0.7;
        let u = QuadraticField { a };
        for x1 in [0.0, 0.5, -1.3] {
            let m = a_from_jet(&u.jet(Vec2::new(x1, 0.4)).unwrap()).unwrap();
            let s = (-a * x1 * x1).exp();
            let want = Sym2::diag(-2.0 * a + a * a * x1 * x1, -a * a * x1 * x1) * s;
            assert!(m.max_abs_diff(&want) < 1e-14);
        }
        let e = lambda_a(&u, Vec2::new(0.0, 2.0)).unwrap();
        assert!((e.lambda1 - 0.0).abs() < 1e-15 && (e.lambda2 + 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn bubble_matrix_is_scalar() {
        let u = Bubble::new(1.5, 2.5, Vec2::new(0.3, 0.0)).unwrap();
        let kappa = 2.5 / (2.0 * 1.5 * 1.5);
        for &(x, y) in &[(0.0, 0.0), (1.0, 2.0), (-3.0, 0.5)] {
            let m = a_from_jet(&u.jet(Vec2::new(x, y)).unwrap()).unwrap();
            assert!(m.max_abs_diff(&(Sym2::IDENTITY * kappa)) < 1e-12);
        }
    }

    #[test]
    fn liouville_identity_at_origin() {
        let u = LiouvilleField::new(HolomorphicMap::identity());
        let e = lambda_a(&u, Vec2::ZERO).unwrap();
        assert!((e.lambda1 - 0.5).abs() < 1e-15 && (e.lambda2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn b_vanishes_off_diagonal_at_radial_center() {
        let u = Bubble::new(1.0, 3.0, Vec2::new(1.0, -1.0)).unwrap();
        let b = b_from_jet(&u.jet(Vec2::new(1.0, -1.0)).unwrap()).unwrap();
        assert!(b.bzz.norm() < 1e-15);
    }

    #[test]
    fn cone_examples() {
        let p2 = ConeIndex::gamma2();
        assert!(in_cone(&EigenPair::sorted(1.0, 1.0), p2).inside);
        assert!(!in_cone(&EigenPair::sorted(1.0, -1.0), p2).inside);
        let m = in_cone(&EigenPair::sorted(1.0, -0.5), ConeIndex::new(1.4).unwrap());
        assert!(m.inside);
        assert!((m.margin - 0.1).abs() < 1e-12);
        assert!(ConeIndex::new(1.0).is_err());
        assert!(ConeIndex::new(2.1).is_err());
    }

    #[test]
    fn boundary_slope_lies_on_cone_boundary() {
        for p in [1.1, 1.5, 1.9, 2.0] {
            let c = ConeIndex::new(p).unwrap();
            let s = c.boundary_slope();
            let m = in_cone(&EigenPair::sorted(1.0, -s), c);
            assert!(m.margin.abs() < 1e-15, "p = {p}");
            assert!(!m.inside);
            assert!(in_cone(&EigenPair::sorted(1.0, -s + 1e-9), c).inside);
        }
    }

    #[test]
    fn f_eval_examples() {
        let s1 = SymmetricFunction::sigma1(ConeIndex::new(1.5).unwrap());
        let v = f_eval(&s1, &EigenPair::sorted(3.0, 1.0)).unwrap();
        assert_eq!(
            (v.value, v.grad, v.elliptic),
            (4.0, Vec2::new(1.0, 1.0), true)
        );
        let s2 = SymmetricFunction::sigma2();
        let v = f_eval(&s2, &EigenPair::sorted(3.0, 1.0)).unwrap();
        assert_eq!(
            (v.value, v.grad, v.elliptic),
            (3.0, Vec2::new(1.0, 3.0), true)
        );
        assert!(matches!(
            f_eval(&s2, &EigenPair::sorted(1.0, -1.0)),
            Err(Error::Cone(..))
        ));
    }

    #[test]
    fn builtin_functions_validate() {
        let c = ConeIndex::new(1.3).unwrap();
        SymmetricFunction::sigma1(c).validate(100, 1).unwrap();
        SymmetricFunction::sigma2().validate(100, 2).unwrap();
        SymmetricFunction::weighted(0.3)
            .unwrap()
            .validate(100, 3)
            .unwrap();
        SymmetricFunction::cone_product(c).validate(100, 4).unwrap();
    }

    #[test]
    fn custom_function_checks() {
        let c = ConeIndex::gamma2();
        assert!(
            SymmetricFunction::custom("asym", |a, b| 2.0 * a + b, |_, _| (2.0, 1.0), c).is_err()
        );
        assert!(
            SymmetricFunction::custom("decreasing", |a, b| -(a + b), |_, _| (-1.0, -1.0), c)
                .is_err()
        );
        let ok =
            SymmetricFunction::custom("sum_sq", |a, b| a * a + b * b, |a, b| (2.0 * a, 2.0 * b), c)
                .unwrap();
        assert_eq!(ok.value(1.0, 2.0), 5.0);
    }

    #[test]
    fn names_resolve() {
        let c = ConeIndex::new(1.5).unwrap();
        assert_eq!(
            SymmetricFunction::from_name("sigma1", c).unwrap().name(),
            "sigma1"
        );
        assert_eq!(
            SymmetricFunction::from_name("sigma2", c).unwrap().cone(),
            ConeIndex::gamma2()
        );
        let w = SymmetricFunction::from_name("weighted:0.25", c).unwrap();
        assert!((w.value(4.0, 1.0) - (0.25 * 5.0 + 0.75 * 2.0)).abs() < 1e-15);
        assert!(SymmetricFunction::from_name("weighted:x", c).is_err());
        assert!(SymmetricFunction::from_name("sigma3", c).is_err());
    }

    fn jet() -> impl Strategy<Value = Jet2> {
        (
            -3.0..3.0f64,
            -3.0..3.0f64,
            -3.0..3.0f64,
            -5.0..5.0f64,
            -5.0..5.0f64,
            -5.0..5.0f64,
        )
            .prop_map(|(v, g1, g2, h11, h12, h22)| {
                Jet2::new(v, Vec2::new(g1, g2), Sym2::new(h11, h12, h22))
            })
    }

    proptest! {
        #[test]
        fn scaling_reduction(j in jet()) {
            let s = j.value;
            let shifted = Jet2::new(0.0, j.gradient * (-0.5 * s).exp(), j.hessian * (-s).exp());
            let a = a_from_jet(&j).unwrap();
            let b = a_from_jet(&shifted).unwrap();
            prop_assert!(a.max_abs_diff(&b) <= 1e-14 * (1.0 + a.max_abs()));
        }

        #[test]
        fn orthogonal_equivariance(j in jet(), theta in 0.0..6.3f64, reflect in any::<bool>()) {
            let mut m = Mat2::rotation(theta);
            if reflect {
                m = m.mul(&Mat2::new(1.0, 0.0, 0.0, -1.0));
            }
            let o = Orthogonal2::new(m).unwrap();
            let g = m.transpose().apply(j.gradient);
            let rotated = Jet2::new(j.value, g, conj_orth(&j.hessian, &o));
            let lhs = a_from_jet(&rotated).unwrap();
            let rhs = conj_orth(&a_from_jet(&j).unwrap(), &o);
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * (1.0 + rhs.max_abs()));
        }

        #[test]
        fn trace_identity(j in jet()) {
            let a = a_from_jet(&j).unwrap();
            let want = -(-j.value).exp() * j.laplacian();
            prop_assert!((a.trace() - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }

        #[test]
        fn real_and_complex_forms_agree(j in jet()) {
            let ea = eig2(&a_from_jet(&j).unwrap()).unwrap();
            let eb = b_from_jet(&j).unwrap().eigenvalues();
            let scale = 1.0 + ea.lambda1.abs().max(ea.lambda2.abs());
            prop_assert!((ea.lambda1 - 2.0 * eb.lambda1).abs() <= 1e-10 * scale);
            prop_assert!((ea.lambda2 - 2.0 * eb.lambda2).abs() <= 1e-10 * scale);
        }

        #[test]
        fn cone_inclusions(a in -5.0..5.0f64, b in -5.0..5.0f64, p in 1.0001..2.0f64, q in 1.0001..2.0f64) {
            let e = EigenPair::sorted(a, b);
            let (lo, hi) = if p < q { (p, q) } else { (q, p) };
            // Γ_hi ⊂ Γ_lo
            if in_cone(&e, ConeIndex::new(hi).unwrap()).inside {
                prop_assert!(in_cone(&e, ConeIndex::new(lo).unwrap()).inside);
            }
            if in_cone(&e, ConeIndex::gamma2()).inside {
                prop_assert!(in_cone(&e, ConeIndex::new(lo).unwrap()).inside);
            }
            if in_cone(&e, ConeIndex::new(lo).unwrap()).inside {
                prop_assert!(e.trace() > 0.0);
            }
        }
    }
}
