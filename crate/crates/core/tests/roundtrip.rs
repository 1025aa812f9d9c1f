use std::sync::Arc;

use conformal2d::fields::{fd_jet, Bubble, RadialField};
use conformal2d::radial::{minimize_on_circles, ode_solve, StepControl};
use conformal2d::{
    eval_jet, pullback, ConeIndex, Field, FieldSpec, MobiusMap, RadialProfile, SymmetricFunction,
    Vec2,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn csv_radial_field_circle_minimum_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bubble.csv");
    let u = Bubble::new(1.0, 8.0, Vec2::ZERO).unwrap();
    let p = RadialProfile::sample(0.0, 3.0, 301, |r| u.radial_value(r)).unwrap();
    p.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 302);

    let back = RadialProfile::read_csv(&path).unwrap();
    assert_eq!(back, p);
    let c = Vec2::new(0.4, -0.3);
    let field = RadialField::new(&back, c).unwrap();
    let radii: Vec<f64> = (0..=28).map(|i| 0.1 * i as f64).collect();
    let mins = minimize_on_circles(&field, c, &radii, 32).unwrap();
    for (r, v) in radii.iter().zip(mins.v()) {
        assert!((v - u.radial_value(*r)).abs() < 1e-6, "r = {r}");
    }
}

#[test]
fn solver_csv_reloads_as_profile() {
    let f = SymmetricFunction::sigma2();
    let grid: Vec<f64> = (0..=100).map(|i| 0.05 * i as f64).collect();
    let sol = ode_solve(
        &f,
        ConeIndex::gamma2(),
        2.0 * 4f64.ln(),
        5.0,
        &StepControl::default(),
        Some(&grid),
    )
    .unwrap();
    let p = RadialProfile::from_csv_str(&sol.to_csv_string()).unwrap();
    assert_eq!(p.len(), grid.len());
    assert_eq!(p.r(), &grid[..]);
    assert!(p.dv().is_none());
}

#[test]
fn field_spec_json_roundtrip() {
    let text = r#"{"family": "pullback", "parameters": {
        "field": {"family": "bubble", "parameters": {"a": 1, "b": 8, "center": [0.5, 0]}},
        "map": {"kind": "mobius", "map": {"a": [0, 0], "b": [1, 0], "c": [1, 0], "d": [0, 0], "conjugating": true}}}}"#;
    let spec: FieldSpec = serde_json::from_str(text).unwrap();
    let again: FieldSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(spec, again);
    let u = spec.build().unwrap();
    let x = Vec2::new(0.7, 0.2);
    assert_eq!(
        u.value(x).unwrap(),
        again.build().unwrap().value(x).unwrap()
    );
}

#[test]
fn finite_differences_converge_at_second_order() {
    let base: Field = Arc::new(Bubble::new(0.8, 3.0, Vec2::new(0.1, 0.2)).unwrap());
    let m = MobiusMap::random(&mut ChaCha8Rng::seed_from_u64(5));
    let u = pullback(base, m);
    let x = Vec2::new(0.3, -0.6);
    let exact = eval_jet(u.as_ref(), x).unwrap();
    let err = |h: f64| fd_jet(u.as_ref(), x, h).unwrap().max_abs_diff(&exact);
    let ratio = err(1e-2) / err(5e-3);
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

fn mobius() -> impl Strategy<Value = MobiusMap> {
    any::<u64>().prop_map(|s| MobiusMap::random(&mut ChaCha8Rng::seed_from_u64(s)))
}

proptest! {
    #[test]
    fn inverse_undoes_map(m in mobius(), x1 in -2.0..2.0f64, x2 in -2.0..2.0f64) {
        let x = Vec2::new(x1, x2);
        let y = m.apply(x);
        prop_assume!(y.as_ref().is_ok_and(|y| y.norm() < 1e3));
        let back = m.inverse().apply(y.unwrap()).unwrap();
        prop_assert!((back - x).norm() < 1e-8 * (1.0 + x.norm()));
    }

    #[test]
    fn pullback_respects_composition(m1 in mobius(), m2 in mobius(), x1 in -1.5..1.5f64, x2 in -1.5..1.5f64) {
        let u: Field = Arc::new(Bubble::new(1.0, 8.0, Vec2::ZERO).unwrap());
        let x = Vec2::new(x1, x2);
        let nested = pullback(pullback(u.clone(), m1), m2);
        let direct = pullback(u, m1.compose(&m2));
        let (a, b) = (nested.jet(x), direct.jet(x));
        prop_assume!(a.is_ok() && b.is_ok());
        let (a, b) = (a.unwrap(), b.unwrap());
        prop_assume!(a.value.abs() < 20.0);
        let scale = 1.0 + a.value.abs() + a.gradient.norm() + a.hessian.max_abs();
        prop_assert!(a.max_abs_diff(&b) < 1e-7 * scale, "{a:?} vs {b:?}");
    }
}
