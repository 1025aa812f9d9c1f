//! Shooting from the origin for radial solutions of `f(λ(A^u)) = 1`.
//!
//! For `u(x) = v(|x|)` the eigenvalues of `A^u` are
//! `λ₁ = e^{−v}(−v″ + ¼v′²)` and `λ₂ = e^{−v}(−v′/r − ¼v′²)`. Given
//! `(r, v, v′)` the angular value `λ₂` is known, ellipticity makes
//! `λ₁ ↦ f(λ₁, λ₂)` strictly increasing, and the root `λ₁` fixes
//! `v″ = ¼v′² − λ₁e^v`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fmt17, radial_lambda, RadialProfile};
use crate::conformal_ops::{ConeIndex, SymmetricFunction, EXP_GUARD};
use crate::error::{Error, Result};

/// Steps whose `|f(λ) − 1|` exceeds this are rejected.
pub const RESIDUAL_REJECT: f64 = 1e-11;

/// Below this radius the fourth-order Taylor start is used.
pub const SERIES_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-8,
            atol: 1e-10,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: 0.05,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionRow {
    pub r: f64,
    pub v: f64,
    pub dv: f64,
    pub ddv: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub rows: Vec<SolutionRow>,
    /// Diagonal value `f(μ, μ) = 1` at the origin, for shooting solves.
    pub mu: Option<f64>,
    /// Last accepted radius before the eigenvalues left the cone.
    pub cone_exit: Option<f64>,
    /// Largest residual over every accepted step, recorded or not.
    pub max_residual: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl RadialSolution {
    pub fn profile(&self) -> Result<RadialProfile> {
        let col = |f: fn(&SolutionRow) -> f64| self.rows.iter().map(f).collect::<Vec<_>>();
        RadialProfile::new(col(|x| x.r), col(|x| x.v))?
            .with_derivatives(col(|x| x.dv), col(|x| x.ddv))
    }

    pub fn r_end(&self) -> f64 {
        self.rows.last().map_or(0.0, |x| x.r)
    }

    /// CSV with header `r,v,dv,lambda1,lambda2,residual`.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["r", "v", "dv", "lambda1", "lambda2", "residual"])
            .expect("in-memory write");
        for x in &self.rows {
            w.write_record([x.r, x.v, x.dv, x.lambda1, x.lambda2, x.residual].map(fmt17))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Eval {
    ddv: f64,
    lambda1: f64,
    lambda2: f64,
    residual: f64,
}

enum Fail {
    Cone,
    Residual,
    Hard(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Hard(e)
    }
}

/// Solves `f(μ, μ) = 1` for `μ > 0` by bisection.
pub fn diagonal_seed(f: &SymmetricFunction) -> Result<f64> {
    let g = |m: f64| f.value(m, m) - 1.0;
    if !(g(0.0) < 0.0) {
        return Err(Error::Seed(1.0));
    }
    let mut hi = 1.0;
    while !(g(hi) >= 0.0) {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Seed(1.0));
        }
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = if g(lo).abs() < g(hi).abs() { lo } else { hi };
    if g(mu).abs() > RESIDUAL_REJECT || mu <= 0.0 {
        return Err(Error::Seed(1.0));
    }
    Ok(mu)
}

/// Root `λ₁ > L(λ₂)` of `f(·, λ₂) = 1`, where `L` is the cone boundary.
fn solve_lambda1(
    f: &SymmetricFunction,
    cone: ConeIndex,
    l2: f64,
    r: f64,
) -> std::result::Result<(f64, f64), Fail> {
    let lo0 = cone.lower_bound(l2).ok_or(Fail::Cone)?;
    let g = |l1: f64| f.value(l1, l2) - 1.0;
    if !(g(lo0) < 0.0) {
        return Err(Fail::Cone);
    }
    let mut lo = lo0;
    let mut hi = lo0.max(l2) + 2.0 * l2.abs().max(1.0);
    let mut expansions = 0;
    while !(g(hi) >= 0.0) {
        hi = lo0 + 2.0 * (hi - lo0);
        expansions += 1;
        if expansions > 200 || !hi.is_finite() {
            return Err(Fail::Hard(Error::StepFailure {
                r,
                reason: format!("no bracket for lambda1 at lambda2 = {l2}"),
            }));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // lo stays strictly inside the cone; prefer hi when it is closer.
    let l1 = if g(hi).abs() <= g(lo).abs() { hi } else { lo };
    if l1 <= lo0 {
        return Err(Fail::Cone);
    }
    Ok((l1, g(l1).abs()))
}

fn check_v(v: f64) -> std::result::Result<(), Fail> {
    if !v.is_finite() {
        return Err(Fail::Hard(Error::NonFinite("solution value")));
    }
    if v.abs() > EXP_GUARD {
        return Err(Fail::Hard(Error::Overflow(v)));
    }
    Ok(())
}

/// Radial solution of `f(λ(A^u)) = 1` with `v(0) = v0`, `v′(0) = 0`,
/// integrated to `r_max` or until `λ` leaves the cone.
///
/// The cone used is the narrower of `p` and the cone of `f`. When `output`
/// is given, steps land exactly on those radii and only they are recorded;
/// otherwise every accepted step is.
pub fn ode_solve(
    f: &SymmetricFunction,
    p: ConeIndex,
    v0: f64,
    r_max: f64,
    ctl: &StepControl,
    output: Option<&[f64]>,
) -> Result<RadialSolution> {
    if !(r_max > 0.0) || !v0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "shooting from v0 = {v0} to r = {r_max}"
        )));
    }
    if v0.abs() > EXP_GUARD {
        return Err(Error::Overflow(v0));
    }
    let cone = if p.p() >= f.cone().p() { p } else { f.cone() };
    let mu = diagonal_seed(f)?;

    let mut rhs = |r: f64, v: f64, w: f64| -> std::result::Result<Eval, Fail> {
        check_v(v)?;
        let ev = v.exp();
        let l2 = (-v).exp() * (-w / r - 0.25 * w * w);
        let (l1, residual) = solve_lambda1(f, cone, l2, r)?;
        if residual > RESIDUAL_REJECT {
            return Err(Fail::Residual);
        }
        Ok(Eval {
            ddv: 0.25 * w * w - l1 * ev,
            lambda1: l1,
            lambda2: l2,
            residual,
        })
    };

    // v = v0 + c2 r² + (c2²/4) r⁴: the r⁴ coefficient is forced by
    // λ₁ + λ₂ = 2μ + O(r⁴), which holds for every symmetric f.
    let c2 = -0.5 * mu * v0.exp();
    let c4 = 0.25 * c2 * c2;
    let series = |r: f64| {
        (
            v0 + c2 * r * r + c4 * r.powi(4),
            2.0 * c2 * r + 4.0 * c4 * r.powi(3),
        )
    };
    let origin = SolutionRow {
        r: 0.0,
        v: v0,
        dv: 0.0,
        ddv: 2.0 * c2,
        lambda1: mu,
        lambda2: mu,
        residual: (f.value(mu, mu) - 1.0).abs(),
    };
    let r_s = SERIES_RADIUS.min(r_max);
    let at_series = |rhs: &mut dyn FnMut(f64, f64, f64) -> std::result::Result<Eval, Fail>,
                     r: f64|
     -> Result<SolutionRow> {
        let (v, w) = series(r);
        match rhs(r, v, w) {
            Ok(e) => Ok(row(r, v, w, &e)),
            Err(Fail::Hard(e)) => Err(e),
            Err(_) => Err(Error::StepFailure {
                r,
                reason: "series start left the cone".into(),
            }),
        }
    };

    let mut rows = Vec::new();
    let out_rest: Option<Vec<f64>> = match output {
        Some(grid) => {
            check_grid(grid)?;
            for &r in grid.iter().filter(|&&r| r <= r_s) {
                rows.push(if r == 0.0 {
                    origin
                } else {
                    at_series(&mut rhs, r)?
                });
            }
            Some(
                grid.iter()
                    .copied()
                    .filter(|&r| r > r_s && r <= r_max)
                    .collect(),
            )
        }
        None => {
            rows.push(origin);
            None
        }
    };
    let start = at_series(&mut rhs, r_s)?;
    if output.is_none() {
        rows.push(start);
    }
    let mut max_residual = origin.residual.max(start.residual);
    let t = integrate(&mut rhs, start, r_max, out_rest.as_deref(), ctl)?;
    rows.extend(t.rows);
    max_residual = max_residual.max(t.max_residual);
    Ok(RadialSolution {
        rows,
        mu: Some(mu),
        cone_exit: t.cone_exit,
        max_residual,
        accepted: t.accepted,
        rejected: t.rejected,
    })
}

/// Smooth solution of the cone-boundary equation `λ₂ = (p − 2)λ₁` from
/// `(r0, v0, dv0)` to `r1`, i.e. `v″ = ¼v′² − (v′/r + ¼v′²)/(2 − p)`.
/// The recorded residual is `|λ₂ + (2 − p)λ₁|`.
pub fn boundary_solve(
    p: ConeIndex,
    r0: f64,
    v0: f64,
    dv0: f64,
    r1: f64,
    ctl: &StepControl,
    output: Option<&[f64]>,
) -> Result<RadialSolution> {
    let s = p.boundary_slope();
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(
            "boundary equation needs p < 2".into(),
        ));
    }
    if !(r0 > 0.0 && r1 > r0) {
        return Err(Error::InvalidParameter(format!("interval [{r0}, {r1}]")));
    }
    let mut rhs = |r: f64, v: f64, w: f64| -> std::result::Result<Eval, Fail> {
        check_v(v)?;
        let ddv = 0.25 * w * w - (w / r + 0.25 * w * w) / s;
        let l = radial_lambda(v, w, ddv, r)?;
        Ok(Eval {
            ddv,
            lambda1: l.lambda1,
            lambda2: l.lambda2,
            residual: (l.lambda2 + s * l.lambda1).abs(),
        })
    };
    let start = match rhs(r0, v0, dv0) {
        Ok(e) => row(r0, v0, dv0, &e),
        Err(Fail::Hard(e)) => return Err(e),
        Err(_) => unreachable!("boundary equation has no cone constraint"),
    };
    let out_rest = match output {
        Some(grid) => {
            check_grid(grid)?;
            Some(
                grid.iter()
                    .copied()
                    .filter(|&r| r > r0 && r <= r1)
                    .collect::<Vec<_>>(),
            )
        }
        None => None,
    };
    let t = integrate(&mut rhs, start, r1, out_rest.as_deref(), ctl)?;
    let mut rows = vec![start];
    rows.extend(t.rows);
    Ok(RadialSolution {
        rows,
        mu: None,
        cone_exit: t.cone_exit,
        max_residual: t.max_residual.max(start.residual),
        accepted: t.accepted,
        rejected: t.rejected,
    })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.first().is_some_and(|&r| r < 0.0) {
        return Err(Error::InvalidParameter(
            "output radii must be increasing and nonnegative".into(),
        ));
    }
    Ok(())
}

fn row(r: f64, v: f64, dv: f64, e: &Eval) -> SolutionRow {
    SolutionRow {
        r,
        v,
        dv,
        ddv: e.ddv,
        lambda1: e.lambda1,
        lambda2: e.lambda2,
        residual: e.residual,
    }
}

struct Trajectory {
    rows: Vec<SolutionRow>,
    cone_exit: Option<f64>,
    max_residual: f64,
    accepted: usize,
    rejected: usize,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type Rhs<'a> = dyn FnMut(f64, f64, f64) -> std::result::Result<Eval, Fail> + 'a;

fn integrate(
    rhs: &mut Rhs<'_>,
    start: SolutionRow,
    r_end: f64,
    output: Option<&[f64]>,
    ctl: &StepControl,
) -> Result<Trajectory> {
    let mut traj = Trajectory {
        rows: Vec::new(),
        cone_exit: None,
        max_residual: 0.0,
        accepted: 0,
        rejected: 0,
    };
    let (mut r, mut y) = (start.r, [start.v, start.dv]);
    let mut k1 = [start.dv, start.ddv];
    let mut h = ctl.h_init;
    let mut next_out = 0;
    while r < r_end {
        if traj.accepted + traj.rejected >= ctl.max_steps {
            return Err(Error::StepFailure {
                r,
                reason: "step budget exhausted".into(),
            });
        }
        let target = output
            .and_then(|o| o.get(next_out).copied())
            .unwrap_or(r_end)
            .min(r_end);
        let h_prop = h.min(ctl.h_max);
        let clamped = h_prop >= target - r;
        let h_try = if clamped { target - r } else { h_prop };

        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        let mut last = None;
        let mut fail = None;
        let mut y5 = y;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                ys[0] += h_try * A[s][j] * kj[0];
                ys[1] += h_try * A[s][j] * kj[1];
            }
            match rhs(r + C[s] * h_try, ys[0], ys[1]) {
                Ok(e) => {
                    k[s] = [ys[1], e.ddv];
                    if s == 6 {
                        y5 = ys;
                        last = Some(e);
                    }
                }
                Err(f) => {
                    fail = Some(f);
                    break;
                }
            }
        }
        if let Some(f) = fail {
            traj.rejected += 1;
            h = 0.25 * h_try;
            if h < ctl.h_min * (1.0 + r) {
                match f {
                    Fail::Cone => {
                        traj.cone_exit = Some(r);
                        break;
                    }
                    Fail::Residual => {
                        return Err(Error::StepFailure {
                            r,
                            reason: format!("residual above {RESIDUAL_REJECT:e} at minimum step"),
                        })
                    }
                    Fail::Hard(e) => return Err(e),
                }
            }
            continue;
        }
        let e_last = last.expect("seven stages evaluated");

        let mut err = 0.0;
        for c in 0..2 {
            let delta: f64 = (0..7).map(|s| E[s] * k[s][c]).sum::<f64>() * h_try;
            let sc = ctl.atol + ctl.rtol * y[c].abs().max(y5[c].abs());
            err += (delta / sc).powi(2);
        }
        let err = (0.5 * err).sqrt();
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            r = if clamped { target } else { r + h_try };
            y = y5;
            k1 = k[6];
            traj.accepted += 1;
            traj.max_residual = traj.max_residual.max(e_last.residual);
            let hit_output = output.is_some()
                && clamped
                && output
                    .and_then(|o| o.get(next_out))
                    .is_some_and(|&o| o == target);
            if hit_output {
                next_out += 1;
            }
            if output.is_none() || hit_output {
                traj.rows.push(row(r, y[0], y[1], &e_last));
            }
            // Keep the proposed step when the last one was shortened to land on a target.
            h = if clamped {
                h.max(h_try * factor)
            } else {
                h_try * factor
            };
        } else {
            traj.rejected += 1;
            h = h_try * factor;
            if h < ctl.h_min * (1.0 + r) {
                return Err(Error::StepFailure {
                    r,
                    reason: "step size underflow".into(),
                });
            }
        }
    }
    Ok(traj)
}
