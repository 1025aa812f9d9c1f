//! The named verification suites behind `conformal2d verify`.

use std::f64::consts::PI;
use std::sync::Arc;

use conformal2d::conformal_ops::ConeIndex;
use conformal2d::fields::{
    conformal_mass, fd_jet_richardson, Bubble, ChenLiBubble, ConformalMap, LiouvilleField,
    QuadraticField,
};
use conformal2d::invariance::{
    a_covariance_defect, admissible, check_a_covariance, check_b_covariance,
    check_liouville_equation, check_trace_conformal, counterexample_iz2, covariance_sweep,
    sample_annulus, seeded_cubic, sweep_fields, SweepConfig,
};
use conformal2d::radial::{
    check_monotone_4log, diagonal_seed, inf_envelope, linspace, ode_solve, radial_lambda,
    StepControl, MONOTONE_SLACK,
};
use conformal2d::{
    a_from_jet, b_from_jet, eig2, CheckReport, EigenPair, Field, HolomorphicMap, Jet2, MobiusMap,
    RadialProfile, Result, ScalarField, Sym2, SymmetricFunction, Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Suite, SuiteConfig};
use crate::output::{at_least, scalar_check};

pub struct SuiteOutcome {
    pub checks: Vec<CheckReport>,
    pub details: Value,
}

/// Runs one suite. Numerical errors become a failing check, so a report is
/// still written.
pub fn run(suite: Suite, cfg: &SuiteConfig) -> SuiteOutcome {
    let res = match suite {
        Suite::Covariance => covariance(cfg),
        Suite::BCovariance => b_covariance(cfg),
        Suite::Counterexample => counterexample(cfg),
        Suite::Trace => trace(cfg),
        Suite::Liouville => liouville(cfg),
        Suite::Bubble => bubble(cfg),
        Suite::Mass => mass(),
        Suite::CrossRepresentation => cross_representation(cfg),
        Suite::Envelope => envelope(),
        Suite::Monotone => monotone(),
        Suite::Radial => radial(),
        Suite::All => unreachable!("expanded by the caller"),
    };
    res.unwrap_or_else(|e| SuiteOutcome {
        checks: vec![scalar_check(suite.name(), 0.0, f64::INFINITY)],
        details: json!({ "error": e.to_string() }),
    })
}

fn pair_seed(seed: u64, i: usize, k: usize) -> u64 {
    seed ^ ((i as u64) << 32) ^ (k as u64).wrapping_mul(0x9e37_79b9)
}

fn box_points(rng: &mut ChaCha8Rng, n: usize, lo: Vec2, hi: Vec2) -> Vec<Vec2> {
    (0..n)
        .map(|_| Vec2::new(rng.gen_range(lo.x1..hi.x1), rng.gen_range(lo.x2..hi.x2)))
        .collect()
}

fn covariance(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let tol = cfg.tol.unwrap_or(1e-8);
    let s = cfg.sweep;
    let sweep = SweepConfig {
        seed: cfg.seed,
        maps: s.maps,
        points: s.points,
        tol,
        r_min: s.r_min,
        r_max: s.r_max,
    };
    let rep = covariance_sweep(&sweep)?;
    let mut checks = vec![rep.covariance, rep.tensor, rep.eigenvalues];
    let mut details = json!({
        "maps": s.maps,
        "fields": sweep_fields().iter().map(|f| f.describe()).collect::<Vec<_>>(),
        "points_per_pair": s.points,
        "annulus": [s.r_min, s.r_max],
    });

    if !cfg.fields.is_empty() {
        let fields: Vec<Field> = cfg
            .fields
            .iter()
            .map(|f| f.build())
            .collect::<Result<_>>()?;
        let maps: Vec<MobiusMap> = if cfg.maps.is_empty() {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
            (0..s.maps).map(|_| MobiusMap::random(&mut rng)).collect()
        } else {
            cfg.maps.clone()
        };
        let mut parts: [Vec<CheckReport>; 3] = Default::default();
        for (i, m) in maps.iter().enumerate() {
            let map = ConformalMap::Mobius(*m);
            for (k, u) in fields.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(pair_seed(cfg.seed.wrapping_add(1), i, k));
                let pts = sample_annulus(&mut rng, s.points, s.r_min, s.r_max, |x| {
                    admissible(u, &map, x)
                })?;
                let r = check_a_covariance(u, m, &pts, tol)?;
                parts[0].push(r.covariance);
                parts[1].push(r.tensor);
                parts[2].push(r.eigenvalues);
            }
        }
        for (p, name) in
            parts
                .iter()
                .zip(["a_covariance", "tensor_identity", "eigenvalue_invariance"])
        {
            checks.push(CheckReport::merge(format!("{name}_config_fields"), tol, p));
        }
        details["config_fields"] = json!(fields.iter().map(|f| f.describe()).collect::<Vec<_>>());
        details["config_maps"] = json!(maps);
    }
    Ok(SuiteOutcome { checks, details })
}

fn b_covariance(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let tol = cfg.tol.unwrap_or(1e-8);
    let s = cfg.sweep;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Anti-holomorphic draws are made holomorphic by composing with z ↦ z̄.
    let maps: Vec<MobiusMap> = (0..s.maps)
        .map(|_| {
            let m = MobiusMap::random(&mut rng);
            if m.is_conjugating() {
                m.compose(&MobiusMap::reflection())
            } else {
                m
            }
        })
        .collect();
    let fields = sweep_fields();
    let mut parts = Vec::new();
    for (i, m) in maps.iter().enumerate() {
        let map = ConformalMap::Mobius(*m);
        for (k, u) in fields.iter().enumerate() {
            let mut local = ChaCha8Rng::seed_from_u64(pair_seed(cfg.seed, i, k));
            let pts = sample_annulus(&mut local, s.points, s.r_min, s.r_max, |x| {
                admissible(u, &map, x)
            })?;
            parts.push(check_b_covariance(u, m, &pts, tol)?);
        }
    }
    Ok(SuiteOutcome {
        checks: vec![CheckReport::merge("b_covariance", tol, &parts)],
        details: json!({ "maps": maps.len(), "fields": fields.len(), "points_per_pair": s.points }),
    })
}

fn counterexample(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let tol = cfg.tol.unwrap_or(1e-10);
    let c = counterexample_iz2(1.0, 1.0)?;
    let mut checks = vec![
        scalar_check(
            "counterexample_lhs",
            tol,
            c.lhs.max_abs_diff(&Sym2::diag(-2.75, 0.75)),
        ),
        scalar_check(
            "counterexample_rhs",
            tol,
            c.rhs.max_abs_diff(&Sym2::diag(-2.0, 0.0)),
        ),
        scalar_check(
            "counterexample_trace_match",
            0.0,
            if c.trace_match { 0.0 } else { 1.0 },
        ),
        scalar_check("counterexample_eigen_gap", tol, (c.eigen_gap - 0.75).abs()),
    ];
    let mut cases = Vec::new();
    let mut bound_errs = Vec::new();
    for a in [0.25, 0.5, 1.0, 2.0] {
        for y in [-1.0, 0.5, 1.0, 1.5] {
            let k = counterexample_iz2(a, y)?;
            let bound = 0.75 / y.powi(4) - 1e-10;
            bound_errs.push((Vec2::new(a, y), (bound - k.eigen_gap).max(0.0)));
            cases.push(
                json!({ "a": a, "y": y, "eigen_gap": k.eigen_gap, "trace_match": k.trace_match }),
            );
        }
    }
    checks.push(CheckReport::from_errors(
        "counterexample_gap_bound",
        0.0,
        &bound_errs,
    ));
    Ok(SuiteOutcome {
        checks,
        details: json!({ "a1_y1": c, "cases": cases }),
    })
}

fn trace(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let tol = cfg.tol.unwrap_or(1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fields: Vec<Field> = vec![
        Arc::new(Bubble::new(1.0, 8.0, Vec2::ZERO)?),
        Arc::new(ChenLiBubble::new(1.0, Vec2::new(0.2, 0.1))?),
        Arc::new(QuadraticField { a: 0.7 }),
    ];
    let right = (Vec2::new(0.5, 0.5), Vec2::new(1.5, 1.5));
    let centred = (Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0));
    let maps = [
        ("z^2", HolomorphicMap::square(), right),
        ("iz^2", HolomorphicMap::i_square(), right),
        ("exp", HolomorphicMap::exp(), centred),
    ];
    let mut checks = Vec::new();
    for (name, psi, (lo, hi)) in &maps {
        let pts = box_points(&mut rng, 100, *lo, *hi);
        let parts: Vec<CheckReport> = fields
            .iter()
            .map(|u| check_trace_conformal(u, psi, &pts, tol))
            .collect::<Result<_>>()?;
        checks.push(CheckReport::merge(format!("trace_law_{name}"), tol, &parts));
    }
    let q: Field = Arc::new(QuadraticField { a: 1.0 });
    let defect = a_covariance_defect(&q, &HolomorphicMap::i_square(), &[Vec2::new(0.0, 1.0)], tol)?;
    checks.push(at_least("iz2_breaks_a_covariance", defect.max_error, 0.5));
    Ok(SuiteOutcome {
        checks,
        details: json!({
            "fields": fields.iter().map(|f| f.describe()).collect::<Vec<_>>(),
            "boxes": { "z^2": [right.0, right.1], "iz^2": [right.0, right.1], "exp": [centred.0, centred.1] },
            "iz2_covariance_defect": defect.max_error,
        }),
    })
}

fn liouville(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let tol = cfg.tol.unwrap_or(1e-7);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cubic = seeded_cubic(cfg.seed, 1.0);
    let generators = [
        ("z", HolomorphicMap::identity()),
        ("exp", HolomorphicMap::exp()),
        ("cubic", cubic.clone()),
    ];
    let mut checks = Vec::new();
    for (name, f) in generators {
        let u: Field = Arc::new(LiouvilleField::new(f));
        let pts = box_points(&mut rng, 200, Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0));
        let mut r = check_liouville_equation(&u, &pts, tol)?;
        r.name = format!("liouville_{name}");
        checks.push(r);
    }
    Ok(SuiteOutcome {
        checks,
        details: json!({ "cubic": cubic.describe(), "box": [[-1.0, -1.0], [1.0, 1.0]] }),
    })
}

fn bubble(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let tol = cfg.tol.unwrap_or(1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut spread = Vec::new();
    let mut ratios = Vec::new();
    let mut oracle = Vec::new();
    let mut cases = Vec::new();
    for _ in 0..10 {
        let a = rng.gen_range(0.3..3.0);
        let b = rng.gen_range(0.3..10.0);
        let c = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let u = Bubble::new(a, b, c)?;
        let kappa = a_from_jet(&u.jet(c)?)?.a11;
        let pts = sample_annulus(&mut rng, 50, 0.0, 2.0, |_| true)?;
        for p in pts {
            let x = c + p;
            let m = a_from_jet(&u.jet(x)?)?;
            spread.push((x, m.max_abs_diff(&Sym2::diag(kappa, kappa))));
        }
        ratios.push(kappa * a * a / b);
        let h = 1e-3 * (b / 8.0).sqrt();
        let fd = a_from_jet(&fd_jet_richardson(&u, c, h)?)?;
        let rel = fd.max_abs_diff(&Sym2::diag(kappa, kappa)) / kappa;
        oracle.push((c, rel));
        cases.push(json!({ "a": a, "b": b, "center": c, "kappa": kappa, "kappa_fd": fd.a11 }));
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let resolved = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(SuiteOutcome {
        checks: vec![
            CheckReport::from_errors("bubble_a_constant", tol, &spread),
            scalar_check("bubble_kappa_scaling", 1e-10, hi - lo),
            CheckReport::from_errors("bubble_kappa_fd_oracle", 1e-5, &oracle),
            scalar_check("bubble_kappa_half", 1e-10, (resolved - 0.5).abs()),
        ],
        details: json!({
            "kappa_formula": "b/(2a^2)",
            "kappa_a2_over_b": resolved,
            "alternative_2b_over_a2_ratio": resolved / 2.0,
            "cases": cases,
        }),
    })
}

fn mass() -> Result<SuiteOutcome> {
    let target = 8.0 * PI;
    let mut errs = Vec::new();
    let mut rows = Vec::new();
    for (a, c) in [
        (1.0, Vec2::ZERO),
        (0.3, Vec2::new(0.5, -0.2)),
        (2.0, Vec2::new(-1.0, 1.0)),
    ] {
        let u = ChenLiBubble::new(a, c)?;
        let radius = 100.0 * 8f64.sqrt() * a;
        let m = conformal_mass(&u, c, radius, 64)?;
        errs.push((c, (m.total - target).abs() / target));
        rows.push(json!({ "a": a, "center": c, "radius": radius, "estimate": m }));
    }
    Ok(SuiteOutcome {
        checks: vec![CheckReport::from_errors("chen_li_mass", 1e-3, &errs)],
        details: json!({ "target": target, "cases": rows }),
    })
}

fn cross_representation(cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let tol = cfg.tol.unwrap_or(1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut errs = Vec::with_capacity(1000);
    for i in 0..1000 {
        let mut u = |r: f64| rng.gen_range(-r..r);
        let j = Jet2::new(
            u(2.0),
            Vec2::new(u(3.0), u(3.0)),
            Sym2::new(u(5.0), u(5.0), u(5.0)),
        );
        let la = eig2(&a_from_jet(&j)?)?;
        let lb = b_from_jet(&j)?.eigenvalues();
        let twice = EigenPair::sorted(2.0 * lb.lambda1, 2.0 * lb.lambda2);
        errs.push((Vec2::new(i as f64, 0.0), la.max_abs_diff(&twice)));
    }
    Ok(SuiteOutcome {
        checks: vec![CheckReport::from_errors(
            "lambda_a_equals_twice_lambda_b",
            tol,
            &errs,
        )],
        details: json!({ "jets": 1000 }),
    })
}

fn envelope() -> Result<SuiteOutcome> {
    let n = 401;
    let dr = 4.0 / (n - 1) as f64;
    let parabola = RadialProfile::sample(0.0, 4.0, n, |r| r * r)?;
    let e = inf_envelope(&parabola, 1.0)?;
    let closed: Vec<(Vec2, f64)> = e
        .profile
        .r()
        .iter()
        .zip(e.profile.v())
        .map(|(&r, &u)| (Vec2::new(r, 0.0), (u - r * r / 2.0).abs()))
        .collect();
    let mut checks = vec![CheckReport::from_errors(
        "envelope_parabola",
        4.0 * dr * dr,
        &closed,
    )];

    type Profile = (&'static str, fn(f64) -> f64);
    let profiles: [Profile; 5] = [
        ("r^2", |r| r * r),
        ("|r-2|", |r| (r - 2.0).abs()),
        ("sin(3r)", |r| (3.0 * r).sin()),
        ("bubble", |r| 2.0 * (8.0 / (8.0 * r * r + 8.0)).ln()),
        ("min(r,1)", |r| r.min(1.0)),
    ];
    let eps = [0.05, 0.1, 0.2, 0.5, 1.0];
    let (mut below, mut mono, mut semi, mut dist) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut rows = Vec::new();
    for (k, (name, f)) in profiles.iter().enumerate() {
        let p = RadialProfile::sample(0.0, 4.0, n, f)?;
        let lip = p.lipschitz();
        let mut prev: Option<RadialProfile> = None;
        for &e in &eps {
            let res = inf_envelope(&p, e)?;
            let tag = Vec2::new(k as f64, e);
            let over = res
                .profile
                .v()
                .iter()
                .zip(p.v())
                .map(|(u, v)| (u - v).max(0.0))
                .fold(0.0, f64::max);
            below.push((tag, over));
            if let Some(q) = &prev {
                // Larger ε gives a smaller envelope.
                let up = res
                    .profile
                    .v()
                    .iter()
                    .zip(q.v())
                    .map(|(a, b)| (a - b).max(0.0))
                    .fold(0.0, f64::max);
                mono.push((tag, up));
            }
            semi.push((tag, res.semiconcavity_defect));
            dist.push((tag, (res.sup_distance_to_input - lip * lip * e).max(0.0)));
            rows.push(json!({
                "profile": name, "eps": e, "lipschitz": lip,
                "semiconcavity_defect": res.semiconcavity_defect,
                "sup_distance": res.sup_distance_to_input,
            }));
            prev = Some(res.profile);
        }
    }
    checks.push(CheckReport::from_errors(
        "envelope_below_input",
        0.0,
        &below,
    ));
    checks.push(CheckReport::from_errors(
        "envelope_eps_monotone",
        0.0,
        &mono,
    ));
    checks.push(CheckReport::from_errors(
        "envelope_semiconcavity",
        1e-9,
        &semi,
    ));
    checks.push(CheckReport::from_errors(
        "envelope_sup_distance",
        0.0,
        &dist,
    ));
    Ok(SuiteOutcome {
        checks,
        details: json!({ "grid": [0.0, 4.0, n], "runs": rows }),
    })
}

fn monotone() -> Result<SuiteOutcome> {
    let n = 1001;
    let mut checks = Vec::new();
    let mut parts = Vec::new();
    for (a, b) in [(1.0, 8.0), (0.5, 3.0), (2.0, 1.0)] {
        let u = Bubble::new(a, b, Vec2::ZERO)?;
        let p = RadialProfile::sample(0.0, 10.0, n, |r| u.radial_value(r))?;
        parts.push(check_monotone_4log(&p, 0.0).report);
    }
    checks.push(CheckReport::merge(
        "monotone_bubbles",
        MONOTONE_SLACK,
        &parts,
    ));

    let log4 = RadialProfile::sample(0.01, 10.0, n, |r| -4.0 * r.ln())?;
    let m4 = check_monotone_4log(&log4, 0.0);
    checks.push(scalar_check(
        "monotone_minus4log_exact",
        0.0,
        m4.report.max_error,
    ));

    let log5 = RadialProfile::sample(0.01, 10.0, n, |r| -5.0 * r.ln())?;
    let m5 = check_monotone_4log(&log5, 0.0);
    checks.push(at_least(
        "monotone_minus5log_fails",
        m5.report.max_error,
        MONOTONE_SLACK,
    ));
    let mut signs = Vec::new();
    for &r in log5.r() {
        let l = radial_lambda(-5.0 * r.ln(), -5.0 / r, 5.0 / (r * r), r)?;
        signs.push((
            Vec2::new(r, 0.0),
            if l.lambda2 < 0.0 {
                0.0
            } else {
                1.0 + l.lambda2
            },
        ));
    }
    checks.push(CheckReport::from_errors(
        "minus5log_lambda2_negative",
        0.0,
        &signs,
    ));
    Ok(SuiteOutcome {
        checks,
        details: json!({ "minus5log_max_drop": m5.report.max_error, "minus5log_empirical_k0": m5.empirical_k0 }),
    })
}

/// The bubble with `κ = μ` and centre value `v0`: `a = 4e^{−v0/2}/μ`, `b = 2a²μ`.
pub fn matching_bubble(mu: f64, v0: f64) -> Result<Bubble> {
    let a = 4.0 * (-0.5 * v0).exp() / mu;
    Bubble::new(a, 2.0 * a * a * mu, Vec2::ZERO)
}

fn radial() -> Result<SuiteOutcome> {
    let grid = linspace(0.0, 5.0, 501)?;
    let ctl = StepControl::default();
    let cases = [
        ("sigma2", SymmetricFunction::sigma2(), ConeIndex::gamma2()),
        (
            "sigma1",
            SymmetricFunction::sigma1(ConeIndex::new(1.2)?),
            ConeIndex::new(1.2)?,
        ),
    ];
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (name, f, cone) in cases {
        let mu = diagonal_seed(&f)?;
        let b = 2.0 * mu;
        let v0 = 2.0 * (8.0 / b).ln();
        let u = Bubble::new(1.0, b, Vec2::ZERO)?;
        let sol = ode_solve(&f, cone, v0, 5.0, &ctl, Some(&grid))?;
        let errs: Vec<(Vec2, f64)> = sol
            .rows
            .iter()
            .map(|x| (Vec2::new(x.r, 0.0), (x.v - u.radial_value(x.r)).abs()))
            .collect();
        let reached = if sol.cone_exit.is_none() && (sol.r_end() - 5.0).abs() < 1e-12 {
            0.0
        } else {
            1.0
        };
        checks.push(CheckReport::from_errors(
            format!("radial_{name}_bubble"),
            1e-5,
            &errs,
        ));
        checks.push(scalar_check(
            &format!("radial_{name}_reaches_end"),
            0.0,
            reached,
        ));
        checks.push(scalar_check(
            &format!("radial_{name}_residual"),
            1e-9,
            sol.max_residual,
        ));

        let pert = ode_solve(&f, cone, v0 + 1.0, 5.0, &ctl, Some(&grid))?;
        let xor = pert.cone_exit.is_some() != (pert.max_residual <= 1e-9);
        checks.push(scalar_check(
            &format!("radial_{name}_perturbed_xor"),
            0.0,
            if xor { 0.0 } else { 1.0 },
        ));
        rows.push(json!({
            "f": name, "cone": cone.p(), "mu": mu, "v0": v0, "a": 1.0, "b": b,
            "accepted": sol.accepted, "rejected": sol.rejected, "max_residual": sol.max_residual,
            "perturbed": { "v0": v0 + 1.0, "cone_exit": pert.cone_exit, "max_residual": pert.max_residual },
        }));
    }
    Ok(SuiteOutcome {
        checks,
        details: json!({ "grid": [0.0, 5.0, 501], "step_control": ctl, "solves": rows }),
    })
}
