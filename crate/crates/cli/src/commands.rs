use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{ArgGroup, Args};
use conformal2d::invariance::sample_annulus;
use conformal2d::moving_spheres::{bubble_fit, critical_lambda, ms_transform, MovingSphereConfig};
use conformal2d::radial::{
    diagonal_seed, fmt17, inf_envelope, linspace, minimize_on_circles, ode_solve, StepControl,
};
use conformal2d::{
    CheckReport, ConeIndex, Error, Field, FieldSpec, RadialProfile, SymmetricFunction, Vec2,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::output::{at_least, dat_string, io_error, scalar_check, OutputDir, Report};
use crate::suites::matching_bubble;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub r0: f64,
    pub r1: f64,
    pub n: usize,
}

impl Grid {
    fn points(&self) -> Vec<f64> {
        linspace(self.r0, self.r1, self.n).expect("validated grid")
    }
}

/// `r0:r1:n` with `0 <= r0 < r1` and `n >= 2`.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts[..] else {
        return Err(format!("expected r0:r1:n, got {s:?}"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let (r0, r1) = (num(a)?, num(b)?);
    let n: usize = c.trim().parse().map_err(|e| format!("{c:?}: {e}"))?;
    if !(r0 >= 0.0 && r0 < r1 && r1.is_finite()) || n < 2 {
        return Err(format!("grid needs 0 <= r0 < r1 and n >= 2, got {s:?}"));
    }
    Ok(Grid { r0, r1, n })
}

/// `x1,x2`.
pub fn parse_point(s: &str) -> Result<Vec2, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b] if a.is_finite() && b.is_finite() => Ok(Vec2::new(a, b)),
        _ => Err(format!("expected x1,x2, got {s:?}")),
    }
}

fn core_error(e: Error) -> CliError {
    match e {
        Error::Io(m) => CliError::Io(m),
        other => CliError::Config(other.to_string()),
    }
}

/// A field spec given inline as JSON or as `@path`.
fn load_field(spec: &str) -> Result<(Field, FieldSpec), CliError> {
    let text = match spec.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| io_error(path.as_ref(), e))?,
        None => spec.to_string(),
    };
    let parsed: FieldSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("field spec: {e}")))?;
    Ok((parsed.build().map_err(core_error)?, parsed))
}

fn failed(name: &str, e: &Error, details: &mut BTreeMap<String, Value>) -> CheckReport {
    details.insert("error".into(), json!(e.to_string()));
    scalar_check(name, 0.0, f64::INFINITY)
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["profile", "field"])))]
pub struct EnvelopeArgs {
    /// Profile CSV with header r,v[,dv,ddv].
    #[arg(long, conflicts_with = "grid")]
    profile: Option<PathBuf>,
    /// Field spec (JSON or @file); the profile is its minimum over circles.
    #[arg(long, requires = "grid")]
    field: Option<String>,
    /// Radii r0:r1:n for sampling a field.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<Grid>,
    #[arg(long)]
    eps: f64,
    #[arg(long, value_parser = parse_point, default_value = "0,0")]
    center: Vec2,
    /// Angles per circle when sampling a field.
    #[arg(long, default_value_t = 64)]
    angles: usize,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    /// Also write gnuplot .dat files next to the CSVs.
    #[arg(long)]
    dat: bool,
}

pub fn envelope(args: EnvelopeArgs) -> Result<bool, CliError> {
    if !(args.eps > 0.0 && args.eps.is_finite()) {
        return Err(CliError::Config(format!(
            "--eps must be positive, got {}",
            args.eps
        )));
    }
    let files = OutputDir::new(args.csv_dir, args.dat)?;
    let mut details = BTreeMap::new();
    let input = match (&args.profile, &args.field) {
        (Some(path), _) => {
            details.insert("source".into(), json!(path));
            RadialProfile::read_csv(path).map_err(core_error)?
        }
        (None, Some(spec)) => {
            let (u, parsed) = load_field(spec)?;
            let grid = args.grid.expect("required by clap");
            details.insert("source".into(), json!(parsed));
            details.insert("center".into(), json!(args.center));
            minimize_on_circles(u.as_ref(), args.center, &grid.points(), args.angles)
                .map_err(core_error)?
        }
        (None, None) => unreachable!("clap requires an input"),
    };
    let res = inf_envelope(&input, args.eps).map_err(core_error)?;
    let lip = input.lipschitz();
    let over = res
        .profile
        .v()
        .iter()
        .zip(input.v())
        .map(|(u, v)| (u - v).max(0.0))
        .fold(0.0, f64::max);
    let checks = vec![
        scalar_check("envelope_below_input", 0.0, over),
        scalar_check("envelope_semiconcavity", 1e-9, res.semiconcavity_defect),
        at_least(
            "envelope_sup_distance_bound",
            lip * lip * args.eps,
            res.sup_distance_to_input,
        ),
    ];
    details.insert(
        "envelope".into(),
        json!({
            "eps": args.eps,
            "points": input.len(),
            "lipschitz": lip,
            "oscillation": input.oscillation(),
            "semiconcavity_defect": res.semiconcavity_defect,
            "sup_distance_to_input": res.sup_distance_to_input,
            "interior": res.interior,
        }),
    );
    let dat = |p: &RadialProfile| {
        dat_string(
            &["r", "v"],
            p.r().iter().zip(p.v()).map(|(&r, &v)| vec![r, v]),
        )
    };
    files.write("input", &input.to_csv_string(), || dat(&input))?;
    files.write("envelope", &res.profile.to_csv_string(), || {
        dat(&res.profile)
    })?;
    let report = Report::new("envelope", None, checks, details);
    report.emit(args.out.as_deref())?;
    Ok(report.pass)
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// sigma1, sigma2, cone_product or weighted:t.
    #[arg(long = "f", default_value = "sigma2")]
    f: String,
    /// Cone index p in (1, 2] (default 1.2 for sigma1, 2 otherwise).
    #[arg(long)]
    cone: Option<f64>,
    /// Output radii r0:r1:n; the solve runs from 0 to r1.
    #[arg(long, value_parser = parse_grid, default_value = "0:5:501")]
    grid: Grid,
    /// Centre value v(0) (default: the bubble with a = 1).
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<f64>,
    /// Relative step tolerance.
    #[arg(long, default_value_t = 1e-8)]
    rtol: f64,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    #[arg(long)]
    dat: bool,
}

pub fn solve_radial(args: SolveArgs) -> Result<bool, CliError> {
    let p = args
        .cone
        .unwrap_or(if args.f == "sigma1" { 1.2 } else { 2.0 });
    let cone = ConeIndex::new(p).map_err(core_error)?;
    let f = SymmetricFunction::from_name(&args.f, cone).map_err(core_error)?;
    if !(args.rtol > 0.0 && args.rtol < 1.0) {
        return Err(CliError::Config(format!(
            "--rtol must lie in (0, 1), got {}",
            args.rtol
        )));
    }
    let files = OutputDir::new(args.csv_dir, args.dat)?;
    let mu = diagonal_seed(&f).map_err(core_error)?;
    let v0 = args.v0.unwrap_or(2.0 * (4.0 / mu).ln());
    if !v0.is_finite() {
        return Err(CliError::Config("--v0 must be finite".into()));
    }
    let ctl = StepControl {
        rtol: args.rtol,
        ..StepControl::default()
    };
    let grid = args.grid.points();
    let mut details = BTreeMap::new();
    details.insert(
        "problem".into(),
        json!({ "f": f.name(), "cone": p, "mu": mu, "v0": v0, "grid": [args.grid.r0, args.grid.r1, args.grid.n], "step_control": ctl }),
    );
    let mut checks = Vec::new();
    match ode_solve(&f, cone, v0, args.grid.r1, &ctl, Some(&grid)) {
        Ok(sol) => {
            let bubble = matching_bubble(mu, v0).map_err(core_error)?;
            let errs: Vec<(Vec2, f64)> = sol
                .rows
                .iter()
                .map(|x| (Vec2::new(x.r, 0.0), (x.v - bubble.radial_value(x.r)).abs()))
                .collect();
            checks.push(scalar_check("solver_residual", 1e-9, sol.max_residual));
            checks.push(CheckReport::from_errors("bubble_agreement", 1e-5, &errs));
            checks.push(scalar_check(
                "reaches_end",
                0.0,
                if sol.cone_exit.is_none() {
                    0.0
                } else {
                    args.grid.r1 - sol.r_end()
                },
            ));
            details.insert(
                "solution".into(),
                json!({
                    "rows": sol.rows.len(), "cone_exit": sol.cone_exit, "max_residual": sol.max_residual,
                    "accepted": sol.accepted, "rejected": sol.rejected,
                    "bubble": { "a": bubble.a(), "b": bubble.b() },
                }),
            );
            let path = files.write("solution", &sol.to_csv_string(), || {
                dat_string(
                    &["r", "v", "dv", "lambda1", "lambda2", "residual"],
                    sol.rows
                        .iter()
                        .map(|x| vec![x.r, x.v, x.dv, x.lambda1, x.lambda2, x.residual]),
                )
            })?;
            if let Some(p) = path {
                details.insert("csv".into(), json!(p));
            }
        }
        Err(e @ (Error::InvalidParameter(_) | Error::Seed(_))) => return Err(core_error(e)),
        Err(e) => checks.push(failed("radial_solve", &e, &mut details)),
    }
    let report = Report::new("solve-radial", None, checks, details);
    report.emit(args.out.as_deref())?;
    Ok(report.pass)
}

#[derive(Debug, Args)]
pub struct MovingSpheresArgs {
    /// Field spec (JSON or @file); default the bubble a = 1, b = 8.
    #[arg(long)]
    field: Option<String>,
    /// Sphere centre.
    #[arg(long, value_parser = parse_point, default_value = "0,0", allow_hyphen_values = true)]
    x: Vec2,
    #[arg(long, default_value_t = 10.0)]
    lam_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-9)]
    slack: f64,
    #[arg(long, default_value_t = 64)]
    angles: usize,
    #[arg(long, default_value_t = 200)]
    radii: usize,
    /// Seed for the bubble-fit samples.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    #[arg(long)]
    dat: bool,
}

pub fn moving_spheres(args: MovingSpheresArgs) -> Result<bool, CliError> {
    let spec = args
        .field
        .clone()
        .unwrap_or_else(|| r#"{"family": "bubble", "parameters": {"a": 1, "b": 8}}"#.into());
    let (u, parsed) = load_field(&spec)?;
    let cfg = MovingSphereConfig {
        lam_max: args.lam_max,
        rtol: args.rtol,
        slack: args.slack,
        angles: args.angles,
        radii: args.radii,
    };
    if !(cfg.lam_max > 0.0 && cfg.rtol > 0.0 && cfg.slack >= 0.0) || cfg.angles < 4 || cfg.radii < 2
    {
        return Err(CliError::Config(format!(
            "invalid moving-sphere settings {cfg:?}"
        )));
    }
    let files = OutputDir::new(args.csv_dir, args.dat)?;
    let mut details = BTreeMap::new();
    details.insert("field".into(), json!(parsed));
    details.insert("config".into(), json!(cfg));

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let shift = |v: Vec<Vec2>| v.into_iter().map(|p| p + args.x).collect::<Vec<_>>();
    let samples = shift(sample_annulus(&mut rng, 200, 0.0, 2.0, |_| true).map_err(core_error)?);
    let validation = shift(sample_annulus(&mut rng, 100, 0.0, 2.0, |_| true).map_err(core_error)?);
    let fit = match bubble_fit(u.as_ref(), &samples, &validation) {
        Ok(f) => {
            details.insert("fit".into(), json!(f));
            Some(f).filter(|f| f.is_bubble)
        }
        Err(e) => {
            details.insert("fit".into(), json!({ "error": e.to_string() }));
            None
        }
    };

    let mut checks = Vec::new();
    match critical_lambda(&u, args.x, &cfg) {
        Ok(rep) => {
            details.insert("moving_spheres".into(), json!(rep));
            if let Some(f) = fit {
                let expected = ((args.x - f.center).norm_sq() + f.b / 8.0).sqrt();
                details.insert("fit_lambda_bar".into(), json!(expected));
                match rep.lambda_bar {
                    Some(l) => checks.push(scalar_check(
                        "critical_lambda_vs_fit",
                        2.0 * cfg.rtol,
                        (l - expected).abs() / expected,
                    )),
                    None => checks.push(at_least("unbounded_vs_fit", expected, cfg.lam_max)),
                }
            }
            let lam = rep.lambda_bar.unwrap_or(cfg.lam_max);
            let rows = comparison_rows(&u, args.x, lam).map_err(core_error)?;
            let csv = std::iter::once("r,theta,u,u_lambda".to_string())
                .chain(
                    rows.iter()
                        .map(|r| r.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(",")),
                )
                .collect::<Vec<_>>()
                .join("\n")
                + "\n";
            files.write("moving_spheres", &csv, || {
                dat_string(&["r", "theta", "u", "u_lambda"], rows.clone())
            })?;
        }
        Err(e) => checks.push(failed("critical_lambda", &e, &mut details)),
    }
    let report = Report::new("moving-spheres", Some(args.seed), checks, details);
    report.emit(args.out.as_deref())?;
    Ok(report.pass)
}

/// `u` and `u_{x,λ}` on log-spaced radii in `[λ, 10λ]` × 16 angles.
fn comparison_rows(u: &Field, x: Vec2, lam: f64) -> conformal2d::Result<Vec<Vec<f64>>> {
    let t = ms_transform(u, x, lam)?;
    let mut rows = Vec::new();
    for i in 0..50 {
        let r = lam * 10f64.powf(i as f64 / 49.0);
        for k in 0..16 {
            let theta = 2.0 * PI * k as f64 / 16.0;
            let y = x + Vec2::polar(r, theta);
            rows.push(vec![r, theta, u.value(y)?, t.value(y)?]);
        }
    }
    Ok(rows)
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Reports to summarise.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Merged report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn report(args: ReportArgs) -> Result<bool, CliError> {
    let mut checks = Vec::new();
    let mut sources = Vec::new();
    for p in &args.inputs {
        let r = Report::read(p)?;
        sources.push(json!({ "path": p, "command": r.command, "seed": r.seed, "pass": r.pass }));
        checks.extend(r.checks);
    }
    let mut details = BTreeMap::new();
    details.insert("sources".into(), json!(sources));
    let merged = Report::new("report", None, checks, details);
    merged.emit(args.out.as_deref())?;
    Ok(merged.pass)
}
