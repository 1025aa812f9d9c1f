use super::pullback::pull_jet;
use super::spline::CubicSpline;
use super::{Jet2, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{Sym2, Vec2};
use crate::holomorphic::{to_complex, HolomorphicMap, SINGULAR_GUARD};
use crate::radial::RadialProfile;

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {v} must be positive and finite"
        )))
    }
}

/// `u = 2 ln(8a / (8|x − x0|² + b))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bubble {
    a: f64,
    b: f64,
    center: Vec2,
}

impl Bubble {
    pub fn new(a: f64, b: f64, center: Vec2) -> Result<Self> {
        Ok(Bubble {
            a: positive("a", a)?,
            b: positive("b", b)?,
            center,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    /// Radial profile `v(r)` about the bubble's own center.
    pub fn radial_value(&self, r: f64) -> f64 {
        2.0 * (8.0 * self.a / (8.0 * r * r + self.b)).ln()
    }

    pub fn radial_derivative(&self, r: f64) -> f64 {
        -32.0 * r / (8.0 * r * r + self.b)
    }

    pub fn radial_second_derivative(&self, r: f64) -> f64 {
        let den = 8.0 * r * r + self.b;
        -32.0 / den + 512.0 * r * r / (den * den)
    }
}

impl ScalarField for Bubble {
    fn jet(&self, x: Vec2) -> Result<Jet2> {
        let d = x - self.center;
        let den = 8.0 * d.norm_sq() + self.b;
        let value = 2.0 * (8.0 * self.a / den).ln();
        let gradient = d * (-32.0 / den);
        let hessian = Sym2::IDENTITY * (-32.0 / den) + d.outer() * (512.0 / (den * den));
        Ok(Jet2::new(value, gradient, hessian))
    }

    fn describe(&self) -> String {
        format!(
            "bubble(a={}, b={}, x0=({}, {}))",
            self.a, self.b, self.center.x1, self.center.x2
        )
    }
}

/// `u = 2 ln(8a / (8a² + |x − x0|²))`, the finite-mass solution of `−Δu = e^u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChenLiBubble {
    a: f64,
    inner: Bubble,
}

impl ChenLiBubble {
    pub fn new(a: f64, center: Vec2) -> Result<Self> {
        let a = positive("a", a)?;
        // 8a/(8a² + r²) = 8(8a)/(8r² + 64a²)
        let inner = Bubble::new(8.0 * a, 64.0 * a * a, center)?;
        Ok(ChenLiBubble { a, inner })
    }

    pub fn as_bubble(&self) -> Bubble {
        self.inner
    }
}

impl ScalarField for ChenLiBubble {
    fn jet(&self, x: Vec2) -> Result<Jet2> {
        self.inner.jet(x)
    }

    fn describe(&self) -> String {
        let c = self.inner.center;
        format!("chen_li(a={}, x0=({}, {}))", self.a, c.x1, c.x2)
    }
}

/// `u = ln(8|f′|² / (1 + |f|²)²)` for a locally univalent `f`.
#[derive(Debug, Clone)]
pub struct LiouvilleField {
    f: HolomorphicMap,
}

impl LiouvilleField {
    pub fn new(f: HolomorphicMap) -> Self {
        LiouvilleField { f }
    }

    pub fn map(&self) -> &HolomorphicMap {
        &self.f
    }
}

/// Jet of `ln 8 − 2 ln(1 + |y|²)`, the pulled-back round metric.
fn spherical_jet(y: Vec2) -> Jet2 {
    let s = 1.0 + y.norm_sq();
    Jet2::new(
        8f64.ln() - 2.0 * s.ln(),
        y * (-4.0 / s),
        Sym2::IDENTITY * (-4.0 / s) + y.outer() * (8.0 / (s * s)),
    )
}

impl ScalarField for LiouvilleField {
    fn jet(&self, x: Vec2) -> Result<Jet2> {
        let z = to_complex(x);
        if self.f.clearance(z) < SINGULAR_GUARD {
            return Err(Error::domain(
                x,
                "too close to a pole or critical point of f",
            ));
        }
        let h = self.f.jet(z).map_err(|e| Error::domain(x, e.to_string()))?;
        if h.d1.norm() == 0.0 {
            return Err(Error::domain(x, "f' vanishes"));
        }
        let image = Vec2::new(h.f.re, h.f.im);
        Ok(pull_jet(&spherical_jet(image), &h, false))
    }

    fn clearance(&self, x: Vec2) -> f64 {
        self.f.clearance(to_complex(x))
    }

    fn describe(&self) -> String {
        format!("liouville(f = {})", self.f.describe())
    }
}

/// `u = ln(8 e^{2x1} (1 + e^{2x1})^{-2})`, the Liouville field of `f = e^z`
/// written out in closed form.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpExample;

impl ScalarField for ExpExample {
    fn jet(&self, x: Vec2) -> Result<Jet2> {
        let t = 2.0 * x.x1;
        // ln(1 + e^t) and the logistic function, both overflow-safe
        let softplus = if t > 0.0 {
            t + (-t).exp().ln_1p()
        } else {
            t.exp().ln_1p()
        };
        let sigma = if t > 0.0 {
            1.0 / (1.0 + (-t).exp())
        } else {
            let e = t.exp();
            e / (1.0 + e)
        };
        let value = 8f64.ln() + t - 2.0 * softplus;
        let gradient = Vec2::new(2.0 - 4.0 * sigma, 0.0);
        let hessian = Sym2::diag(-8.0 * sigma * (1.0 - sigma), 0.0);
        Ok(Jet2::new(value, gradient, hessian))
    }

    fn describe(&self) -> String {
        "exp_example".into()
    }
}

/// `u = a x1²`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticField {
    pub a: f64,
}

impl ScalarField for QuadraticField {
    fn jet(&self, x: Vec2) -> Result<Jet2> {
        let a = self.a;
        Ok(Jet2::new(
            a * x.x1 * x.x1,
            Vec2::new(2.0 * a * x.x1, 0.0),
            Sym2::diag(2.0 * a, 0.0),
        ))
    }

    fn describe(&self) -> String {
        format!("quadratic(a={})", self.a)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantField {
    pub c: f64,
}

impl ScalarField for ConstantField {
    fn jet(&self, _x: Vec2) -> Result<Jet2> {
        Ok(Jet2::constant(self.c))
    }

    fn describe(&self) -> String {
        format!("constant(c={})", self.c)
    }
}

/// Radially symmetric field interpolated from a sampled profile.
///
/// Profiles starting at `r = 0` are mirrored to `[−r_max, r_max]` before
/// fitting, which makes the spline even and forces `v′(0) = 0`.
#[derive(Debug, Clone)]
pub struct RadialField {
    spline: CubicSpline,
    center: Vec2,
    r_min: f64,
    r_max: f64,
}

/// Below this radius the jet uses the `r → 0` limit `∇²u = v″(0) I`.
const AXIS_RADIUS: f64 = 1e-9;

impl RadialField {
    pub fn new(profile: &RadialProfile, center: Vec2) -> Result<Self> {
        let (r, v) = (profile.r(), profile.v());
        let (r_min, r_max) = (r[0], r[r.len() - 1]);
        let spline = if r_min == 0.0 {
            let mut xs: Vec<f64> = r[1..].iter().rev().map(|t| -t).collect();
            let mut ys: Vec<f64> = v[1..].iter().rev().copied().collect();
            xs.extend_from_slice(r);
            ys.extend_from_slice(v);
            CubicSpline::natural(xs, ys)?
        } else {
            CubicSpline::natural(r.to_vec(), v.to_vec())?
        };
        Ok(RadialField {
            spline,
            center,
            r_min,
            r_max,
        })
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    /// `(v, v′, v″)` of the interpolant at radius `r`.
    pub fn radial_jet(&self, r: f64) -> Option<(f64, f64, f64)> {
        self.spline.eval(r)
    }
}

impl ScalarField for RadialField {
    fn jet(&self, x: Vec2) -> Result<Jet2> {
        let d = x - self.center;
        let r = d.norm();
        if r < self.r_min || r > self.r_max {
            return Err(Error::domain(
                x,
                format!("radius {r} outside profile range"),
            ));
        }
        let (v, v1, v2) = self
            .spline
            .eval(r)
            .ok_or_else(|| Error::domain(x, "outside spline range"))?;
        if r < AXIS_RADIUS {
            return Ok(Jet2::new(v, Vec2::ZERO, Sym2::IDENTITY * v2));
        }
        let e = d * (1.0 / r);
        let radial = e.outer();
        let tangential = Sym2::IDENTITY - radial;
        Ok(Jet2::new(v, e * v1, radial * v2 + tangential * (v1 / r)))
    }

    fn value(&self, x: Vec2) -> Result<f64> {
        let r = (x - self.center).norm();
        if r < self.r_min || r > self.r_max {
            return Err(Error::domain(
                x,
                format!("radius {r} outside profile range"),
            ));
        }
        self.spline
            .eval(r)
            .map(|s| s.0)
            .ok_or_else(|| Error::domain(x, "outside spline range"))
    }

    fn clearance(&self, x: Vec2) -> f64 {
        let r = (x - self.center).norm();
        let outer = self.r_max - r;
        if self.r_min > 0.0 {
            outer.min(r - self.r_min)
        } else {
            outer
        }
    }

    fn describe(&self) -> String {
        format!("radial(r in [{}, {}])", self.r_min, self.r_max)
    }
}
