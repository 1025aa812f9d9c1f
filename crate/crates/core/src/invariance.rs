//! Sampled checks of the covariance laws of `A^u` and `B^u`, the conformal
//! trace law, and the `iz²` example showing that `A^u` itself is covariant
//! only under Möbius maps.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal_ops::{a_from_jet, b_from_jet, Herm2};
use crate::error::{Error, Result};
use crate::fields::{
    pullback, Bubble, ChenLiBubble, ConformalMap, Field, LiouvilleField, QuadraticField,
    ScalarField,
};
use crate::geometry::{conj_orth, eig2, Mat2, Orthogonal2, Sym2, Vec2};
use crate::holomorphic::{polynomial_roots, to_vec2, HolomorphicMap};
use crate::mobius::MobiusMap;
use crate::report::CheckReport;

/// Sample points keep at least this distance from poles and excluded points.
pub const POLE_MARGIN: f64 = 0.1;

/// Sample points whose image lies farther out than this are redrawn, so that
/// absolute tolerances stay meaningful.
pub const IMAGE_RADIUS: f64 = 100.0;

/// Real differential of a conformal map at a point.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    pub image: Vec2,
    pub j: Mat2,
    /// `|det J|`
    pub conf: f64,
    pub o: Orthogonal2,
}

pub fn local_frame(map: &ConformalMap, x: Vec2) -> Result<LocalFrame> {
    let (h, conj) = map.local(x)?;
    let mut j = Mat2::new(h.d1.re, -h.d1.im, h.d1.im, h.d1.re);
    if conj {
        j = j.mul(&Mat2::new(1.0, 0.0, 0.0, -1.0));
    }
    let conf = j.det().abs();
    if conf == 0.0 {
        return Err(Error::domain(x, "map is not locally univalent"));
    }
    Ok(LocalFrame {
        image: to_vec2(h.f),
        j,
        conf,
        o: Orthogonal2::new(j.scale(conf.sqrt().recip()))?,
    })
}

/// `n` seeded points, uniform in the annulus `r_min ≤ |x| ≤ r_max`, that
/// satisfy `accept`.
pub fn sample_annulus(
    rng: &mut impl Rng,
    n: usize,
    r_min: f64,
    r_max: f64,
    accept: impl Fn(Vec2) -> bool,
) -> Result<Vec<Vec2>> {
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 1000 * n.max(1) {
            return Err(Error::InvalidParameter(format!(
                "only {} of {n} admissible sample points found",
                out.len()
            )));
        }
        let r = (rng.gen_range(r_min * r_min..=r_max * r_max)).sqrt();
        let p = Vec2::polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
        if accept(p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Largest entry of `A` or `e^u A` at a usable sample. The checks compare
/// matrices entrywise in absolute terms, so rounding must stay far below the
/// tolerance.
pub const ENTRY_BOUND: f64 = 1e4;

/// Whether `x` is a usable covariance sample for `u` pulled back by `map`:
/// clear of singular sets, with bounded image and moderate `A` on both sides.
pub fn admissible(u: &Field, map: &ConformalMap, x: Vec2) -> bool {
    let pulled = pullback(u.clone(), map.clone());
    if pulled.clearance(x) < POLE_MARGIN {
        return false;
    }
    let Ok(frame) = local_frame(map, x) else {
        return false;
    };
    if frame.image.norm() > IMAGE_RADIUS || u.clearance(frame.image) < POLE_MARGIN {
        return false;
    }
    let ok = |f: &dyn ScalarField, p: Vec2| {
        f.jet(p)
            .and_then(|j| Ok((a_from_jet(&j)?, j.value)))
            .is_ok_and(|(a, v)| a.max_abs() <= ENTRY_BOUND && a.max_abs() * v.exp() <= ENTRY_BOUND)
    };
    ok(pulled.as_ref(), x) && ok(u.as_ref(), frame.image)
}

/// The three covariance reports for one field and map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    /// `‖A^{u_ψ}(x) − Oᵀ A^u(ψ(x)) O‖∞`
    pub covariance: CheckReport,
    /// `‖e^{u_ψ} A^{u_ψ} − e^{u∘ψ} Jᵀ (A^u∘ψ) J‖∞`
    pub tensor: CheckReport,
    /// `max |λᵢ(A^{u_ψ})(x) − λᵢ(A^u)(ψ(x))|`
    pub eigenvalues: CheckReport,
}

impl CovarianceReport {
    pub fn pass(&self) -> bool {
        self.covariance.pass && self.tensor.pass && self.eigenvalues.pass
    }
}

fn covariance_errors(u: &Field, map: &ConformalMap, x: Vec2) -> Result<[f64; 3]> {
    let pulled = pullback(u.clone(), map.clone());
    let jv = pulled.jet(x)?;
    let av = a_from_jet(&jv)?;
    let frame = local_frame(map, x)?;
    let ju = u.jet(frame.image)?;
    let au = a_from_jet(&ju)?;
    let cov = av.max_abs_diff(&conj_orth(&au, &frame.o));
    let tensor = (av * jv.value.exp()).max_abs_diff(&(au.congruence(&frame.j) * ju.value.exp()));
    let (ev, eu) = (eig2(&av)?, eig2(&au)?);
    Ok([cov, tensor, ev.max_abs_diff(&eu)])
}

fn covariance_report(
    u: &Field,
    map: &ConformalMap,
    pts: &[Vec2],
    tol: f64,
    tag: &str,
) -> Result<CovarianceReport> {
    let mut errs: [Vec<(Vec2, f64)>; 3] = Default::default();
    for &x in pts {
        let e = covariance_errors(u, map, x)?;
        for k in 0..3 {
            errs[k].push((x, e[k]));
        }
    }
    Ok(CovarianceReport {
        covariance: CheckReport::from_errors(format!("a_covariance{tag}"), tol, &errs[0]),
        tensor: CheckReport::from_errors(format!("tensor_identity{tag}"), tol, &errs[1]),
        eigenvalues: CheckReport::from_errors(format!("eigenvalue_invariance{tag}"), tol, &errs[2]),
    })
}

/// `A^{u_ψ}(x) = Oᵀ (A^u∘ψ)(x) O` for a Möbius `ψ`, with the tensor form
/// and eigenvalue invariance checked on the same points.
pub fn check_a_covariance(
    u: &Field,
    m: &MobiusMap,
    pts: &[Vec2],
    tol: f64,
) -> Result<CovarianceReport> {
    covariance_report(u, &ConformalMap::Mobius(*m), pts, tol, "")
}

/// The same comparison for a general holomorphic map, where it is expected
/// to fail unless the map is Möbius.
pub fn a_covariance_defect(
    u: &Field,
    psi: &HolomorphicMap,
    pts: &[Vec2],
    tol: f64,
) -> Result<CheckReport> {
    Ok(covariance_report(
        u,
        &ConformalMap::Holomorphic(psi.clone()),
        pts,
        tol,
        "_holomorphic",
    )?
    .covariance)
}

/// `−e^{−u_ψ}Δu_ψ = (−e^{−u}Δu)∘ψ` for any locally univalent holomorphic `ψ`.
pub fn check_trace_conformal(
    u: &Field,
    psi: &HolomorphicMap,
    pts: &[Vec2],
    tol: f64,
) -> Result<CheckReport> {
    let map = ConformalMap::Holomorphic(psi.clone());
    let pulled = pullback(u.clone(), map.clone());
    let mut errs = Vec::with_capacity(pts.len());
    for &x in pts {
        let lhs = a_from_jet(&pulled.jet(x)?)?.trace();
        let rhs = a_from_jet(&u.jet(psi.apply(x)?)?)?.trace();
        errs.push((x, (lhs - rhs).abs()));
    }
    Ok(CheckReport::from_errors("trace_conformal", tol, &errs))
}

/// Conjugates by `U = diag(1, ω)` with `|ω| = 1`: returns `U B U*`.
fn conj_unitary_diag(b: &Herm2, omega: Complex64) -> Herm2 {
    Herm2 {
        bzzbar: b.bzzbar,
        bzz: b.bzz * omega.conj(),
    }
}

/// `B^{u_ψ}(z) = U (B^u∘ψ) U*` with `U = diag(1, conj(ψ′)/ψ′)` for a
/// holomorphic Möbius `ψ`.
pub fn check_b_covariance(u: &Field, m: &MobiusMap, pts: &[Vec2], tol: f64) -> Result<CheckReport> {
    if m.is_conjugating() {
        return Err(Error::ConjugatingUnsupported);
    }
    let map = ConformalMap::Mobius(*m);
    let pulled = pullback(u.clone(), map.clone());
    let mut errs = Vec::with_capacity(pts.len());
    for &x in pts {
        let h = m.outer_jet(x)?;
        let omega = h.d1.conj() / h.d1;
        let lhs = b_from_jet(&pulled.jet(x)?)?;
        let rhs = conj_unitary_diag(&b_from_jet(&u.jet(to_vec2(h.f))?)?, omega);
        errs.push((x, lhs.max_abs_diff(&rhs)));
    }
    Ok(CheckReport::from_errors("b_covariance", tol, &errs))
}

/// `A^{u_ψ}(0, y)` against `(A^u∘ψ)(0, y)` for `u = a x₁²` and `ψ(z) = iz²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub a: f64,
    pub y: f64,
    pub lhs: Sym2,
    pub rhs: Sym2,
    pub trace_match: bool,
    /// Largest difference between the sorted eigenvalues of the two sides.
    pub eigen_gap: f64,
    /// `‖lhs − Oᵀ rhs O‖∞` with `O` from the Jacobian of `ψ` at `(0, y)`.
    pub covariance_error: f64,
}

pub fn counterexample_iz2(a: f64, y: f64) -> Result<Counterexample> {
    if y == 0.0 || !y.is_finite() || !a.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "counterexample needs finite a and y != 0, got y = {y}"
        )));
    }
    let u: Field = Arc::new(QuadraticField { a });
    let map = ConformalMap::Holomorphic(HolomorphicMap::i_square());
    let x = Vec2::new(0.0, y);
    let lhs = a_from_jet(&pullback(u.clone(), map.clone()).jet(x)?)?;
    let frame = local_frame(&map, x)?;
    let rhs = a_from_jet(&u.jet(frame.image)?)?;
    let (el, er) = (eig2(&lhs)?, eig2(&rhs)?);
    let scale = 1.0 + lhs.max_abs().max(rhs.max_abs());
    Ok(Counterexample {
        a,
        y,
        lhs,
        rhs,
        trace_match: (lhs.trace() - rhs.trace()).abs() <= 1e-12 * scale,
        eigen_gap: el.max_abs_diff(&er),
        covariance_error: lhs.max_abs_diff(&conj_orth(&rhs, &frame.o)),
    })
}

/// `max |−Δu − e^u|` over `pts`.
pub fn check_liouville_equation(u: &Field, pts: &[Vec2], tol: f64) -> Result<CheckReport> {
    let mut errs = Vec::with_capacity(pts.len());
    for &x in pts {
        let j = u.jet(x)?;
        errs.push((x, (-j.laplacian() - j.value.exp()).abs()));
    }
    Ok(CheckReport::from_errors("liouville_equation", tol, &errs))
}

/// A cubic with seeded coefficients whose critical points lie outside the
/// square `[−half, half]²` by at least [`POLE_MARGIN`].
pub fn seeded_cubic(seed: u64, half: f64) -> HolomorphicMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let coeffs: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        if coeffs[3].norm() < 0.1 {
            continue;
        }
        let deriv = [coeffs[1], 2.0 * coeffs[2], 3.0 * coeffs[3]];
        let clear = polynomial_roots(&deriv)
            .iter()
            .all(|z| z.re.abs().max(z.im.abs()) > half + POLE_MARGIN);
        if clear {
            return HolomorphicMap::polynomial(coeffs);
        }
    }
}

/// The ten fields of the covariance sweep.
pub fn sweep_fields() -> Vec<Field> {
    let bubble = |a, b, x, y| -> Field {
        Arc::new(Bubble::new(a, b, Vec2::new(x, y)).expect("valid bubble"))
    };
    let cayley = MobiusMap::new(
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        false,
    )
    .expect("(z - i)/(z + i)");
    vec![
        bubble(1.0, 8.0, 0.0, 0.0),
        bubble(0.5, 3.0, 0.3, -0.2),
        bubble(2.0, 1.0, -1.0, 0.5),
        Arc::new(ChenLiBubble::new(1.0, Vec2::ZERO).expect("valid")),
        Arc::new(ChenLiBubble::new(0.3, Vec2::new(0.5, 0.5)).expect("valid")),
        Arc::new(LiouvilleField::new(HolomorphicMap::identity())),
        Arc::new(LiouvilleField::new(HolomorphicMap::polynomial(vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(1.0, 0.5),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.3, 0.0),
        ]))),
        Arc::new(LiouvilleField::new(seeded_cubic(11, 1.0))),
        pullback(bubble(1.0, 8.0, 0.0, 0.0), cayley),
        pullback(Arc::new(QuadraticField { a: 0.5 }), HolomorphicMap::exp()),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub seed: u64,
    pub maps: usize,
    pub points: usize,
    pub tol: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            seed: 7,
            maps: 20,
            points: 50,
            tol: 1e-8,
            r_min: 0.1,
            r_max: 2.0,
        }
    }
}

/// Seeded Möbius covariance sweep over [`sweep_fields`]. Each (map, field)
/// pair draws points from its own seed, so the aggregate does not depend on
/// thread scheduling.
pub fn covariance_sweep(cfg: &SweepConfig) -> Result<CovarianceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let maps: Vec<MobiusMap> = (0..cfg.maps).map(|_| MobiusMap::random(&mut rng)).collect();
    let fields = sweep_fields();
    let jobs: Vec<(usize, usize)> = (0..maps.len())
        .flat_map(|i| (0..fields.len()).map(move |k| (i, k)))
        .collect();
    let parts: Vec<CovarianceReport> = jobs
        .par_iter()
        .map(|&(i, k)| {
            let map = ConformalMap::Mobius(maps[i]);
            let u = &fields[k];
            let seed = cfg.seed ^ ((i as u64) << 32) ^ (k as u64).wrapping_mul(0x9e37_79b9);
            let mut local = ChaCha8Rng::seed_from_u64(seed);
            let pts = sample_annulus(&mut local, cfg.points, cfg.r_min, cfg.r_max, |x| {
                admissible(u, &map, x)
            })?;
            covariance_report(u, &map, &pts, cfg.tol, "")
        })
        .collect::<Result<_>>()?;
    let pick =
        |f: fn(&CovarianceReport) -> &CheckReport| parts.iter().map(f).cloned().collect::<Vec<_>>();
    Ok(CovarianceReport {
        covariance: CheckReport::merge("a_covariance", cfg.tol, &pick(|p| &p.covariance)),
        tensor: CheckReport::merge("tensor_identity", cfg.tol, &pick(|p| &p.tensor)),
        eigenvalues: CheckReport::merge(
            "eigenvalue_invariance",
            cfg.tol,
            &pick(|p| &p.eigenvalues),
        ),
    })
}
