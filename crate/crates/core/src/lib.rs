//! Numerical calculus of the Möbius-covariant operator
//!
//! ```text
//! A^u = e^{-u} ( -∇²u + ½ du⊗du - ¼ |∇u|² I )
//! ```
//!
//! for conformal factors `e^u |dx|²` in the plane, together with the
//! machinery built on it: Möbius maps with exact Jacobians, fields with exact
//! second-order jets, covariance checks, ε-lower envelopes of radial profiles,
//! the moving-spheres transform and a radial shooting solver for
//! `f(λ(A^u)) = 1`.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal_ops;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod holomorphic;
pub mod invariance;
pub mod mobius;
pub mod moving_spheres;
pub mod radial;
pub mod report;

pub use conformal_ops::{
    a_from_jet, b_from_jet, f_eval, in_cone, lambda_a, ConeIndex, ConeMembership, FValue, Herm2,
    SymmetricFunction,
};
pub use error::{Error, Result};
pub use fields::{eval_jet, fd_jet, pullback, Field, FieldSpec, Jet2, ScalarField};
pub use geometry::{conj_orth, eig2, EigenPair, Mat2, Orthogonal2, Sym2, Vec2};
pub use holomorphic::HolomorphicMap;
pub use mobius::MobiusMap;
pub use radial::RadialProfile;
pub use report::CheckReport;
