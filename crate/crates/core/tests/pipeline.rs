use simplex_core::exec::Execution;
use simplex_core::extremizer::{estimate_norm_with, ExtremizerConfig, InputGrid, NormEstimate};
use simplex_core::inequalities::{indicator, t_l1_region_contains, Expectation, ExponentPoint2, FamilyKind, Harness, SetFamily};
use simplex_core::operators::{apply_operator, l1_pairing, McConfig, OperatorKind};
use simplex_core::{Exponent, ExponentTuple, ShapeSet};

fn l1(values: &[f64], cell: f64) -> f64 {
    values.iter().sum::<f64>() * cell
}

#[test]
fn execution_strategy_does_not_change_outputs() {
    let e = indicator(&ShapeSet::ball(vec![0.0, 0.0], 0.6), 1.0 / 16.0).unwrap();
    let f = indicator(&ShapeSet::annulus(vec![0.4, 0.1], 0.2, 0.5), 1.0 / 16.0).unwrap();
    for (op, inputs) in [
        (OperatorKind::Spherical, vec![&e]),
        (OperatorKind::TRIANGLE, vec![&e, &f]),
        (OperatorKind::Bilinear, vec![&e, &f]),
    ] {
        let seq = apply_operator(op, &inputs, &McConfig::new(64, 3).with_execution(Execution::Sequential)).unwrap();
        let par = apply_operator(op, &inputs, &McConfig::new(64, 3).with_execution(Execution::Parallel)).unwrap();
        assert_eq!(seq, par, "{op}");
    }
}

#[test]
fn operator_mass_matches_pairing() {
    let h = 1.0 / 16.0;
    let e = indicator(&ShapeSet::ball(vec![0.0, 0.0], 1.0), h).unwrap();
    let f = indicator(&ShapeSet::ball(vec![0.0, 0.0], 3.0), h).unwrap();
    let cfg = McConfig::new(256, 17);
    let out = apply_operator(OperatorKind::TRIANGLE, &[&e, &f], &cfg).unwrap();
    let cell = out.grid().cell_volume();
    let mass = l1(&out.values.values, cell);
    let mass_err = out.stderr.iter().map(|s| (s * cell).powi(2)).sum::<f64>().sqrt();
    let pairing = l1_pairing(&e, &f, &cfg).unwrap();
    let combined = (mass_err.powi(2) + pairing.stderr.powi(2)).sqrt();
    assert!((mass - pairing.value).abs() <= 3.0 * combined + 1e-3 * mass, "{mass} vs {}", pairing.value);
    assert!((pairing.value - std::f64::consts::PI).abs() < 0.02 * std::f64::consts::PI);
}

#[test]
fn twin_balls_detect_unboundedness_at_l1() {
    let family = SetFamily::new(FamilyKind::TwinBalls, 2, 2, 0.05, 0.2, 5).unwrap();
    let harness = Harness::new(OperatorKind::TRIANGLE, 1.0 / 32.0, McConfig::new(1024, 5));
    let e = ExponentTuple::new(vec![Exponent::int(1); 2], Exponent::int(1));
    let report = harness
        .verify(&e, &family, Expectation::Unbounded { max_slope: -0.8 })
        .unwrap();
    assert!(report.pass, "slope {}", report.slope.slope);
}

#[test]
fn region_is_symmetric() {
    for (a, b) in [("0", "1"), ("1/2", "1/2"), ("2/3", "2/3"), ("1/3", "1")] {
        let p = ExponentPoint2::parse(&format!("{a},{b}")).unwrap();
        assert_eq!(t_l1_region_contains(2, &p), t_l1_region_contains(2, &p.swapped()));
    }
}

#[test]
fn norm_estimate_round_trips_through_json() {
    let e = ExponentTuple::new(vec![Exponent::int(1)], Exponent::int(1));
    let grid = InputGrid::new(2, 1.5, 0.25).unwrap();
    let cfg = ExtremizerConfig {
        iterations: 3,
        restarts: 1,
        mc: McConfig::new(32, 2),
        ..ExtremizerConfig::default()
    };
    let est = estimate_norm_with(OperatorKind::Spherical, &e, &grid, &cfg).unwrap();
    let json = serde_json::to_string(&est).unwrap();
    let back: NormEstimate = serde_json::from_str(&json).unwrap();
    assert_eq!(back, est);
}
