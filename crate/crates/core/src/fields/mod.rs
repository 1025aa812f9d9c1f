//! Conformal-factor fields `u` with exact second-order jets.

mod families;
mod fd;
mod mass;
mod pullback;
mod spec;
mod spline;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{Sym2, Vec2};

pub use families::{
    Bubble, ChenLiBubble, ConstantField, ExpExample, LiouvilleField, QuadraticField, RadialField,
};
pub use fd::{default_fd_step, fd_jet, fd_jet_richardson};
pub use mass::{conformal_mass, MassEstimate};
pub use pullback::{pull_jet, pullback, ConformalMap, Pullback};
pub use spec::{FieldSpec, HoloSpec, MapSpec};
pub use spline::CubicSpline;

/// Value, gradient and Hessian of a scalar field at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: Vec2,
    pub hessian: Sym2,
}

impl Jet2 {
    pub fn new(value: f64, gradient: Vec2, hessian: Sym2) -> Self {
        Jet2 {
            value,
            gradient,
            hessian,
        }
    }

    pub fn constant(c: f64) -> Self {
        Jet2::new(c, Vec2::ZERO, Sym2::ZERO)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.gradient.is_finite() && self.hessian.is_finite()
    }

    pub fn laplacian(&self) -> f64 {
        self.hessian.trace()
    }

    /// Largest entrywise difference across all three channels.
    pub fn max_abs_diff(&self, o: &Jet2) -> f64 {
        (self.value - o.value)
            .abs()
            .max((self.gradient.x1 - o.gradient.x1).abs())
            .max((self.gradient.x2 - o.gradient.x2).abs())
            .max(self.hessian.max_abs_diff(&o.hessian))
    }

    /// Jet of `self + other`.
    pub fn add(&self, o: &Jet2) -> Jet2 {
        Jet2::new(
            self.value + o.value,
            self.gradient + o.gradient,
            self.hessian + o.hessian,
        )
    }
}

/// A scalar field evaluatable with exact jets on its domain.
pub trait ScalarField: Send + Sync {
    fn jet(&self, x: Vec2) -> Result<Jet2>;

    fn value(&self, x: Vec2) -> Result<f64> {
        Ok(self.jet(x)?.value)
    }

    /// Approximate distance from `x` to the excluded set (infinite when empty).
    fn clearance(&self, _x: Vec2) -> f64 {
        f64::INFINITY
    }

    fn describe(&self) -> String;
}

pub type Field = Arc<dyn ScalarField>;

pub fn eval_jet(u: &dyn ScalarField, x: Vec2) -> Result<Jet2> {
    u.jet(x)
}
