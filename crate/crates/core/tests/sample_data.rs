use std::path::PathBuf;

use tha_core::planner::{load_countermeasure_catalog, search_min_stack, verify_plan, Plan, SearchStrategy};
use tha_core::scheme::{composite_transmittance, load_scheme};
use tha_core::security::{evaluate, ProbeBudget, SecurityThresholds};
use tha_core::spectrum::WavelengthGrid;
use tha_core::PlanConstraints;

fn sample(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/sample").join(rel)
}

fn extrema(name: &str) -> ((f64, f64), (f64, f64)) {
    let grid = WavelengthGrid::analysis_band();
    let scheme = load_scheme(&sample(name), None, &grid).unwrap();
    let t = composite_transmittance(&scheme, &grid).unwrap();
    let (imax, vmax) = t.max();
    let (imin, vmin) = t.min();
    ((grid.points()[imax], vmax), (grid.points()[imin], vmin))
}

#[test]
fn alice_composite_extrema() {
    let ((lmax, tmax), (lmin, tmin)) = extrema("alice.json");
    assert!((tmax + 71.0).abs() <= 3.0 && (lmax - 1673.0).abs() <= 10.0, "{tmax} @ {lmax}");
    assert!((tmin + 185.0).abs() <= 5.0, "{tmin} @ {lmin}");
}

#[test]
fn bob_composite_extrema() {
    let ((lmax, tmax), (_, tmin)) = extrema("bob.json");
    assert!((tmax + 64.0).abs() <= 3.0 && (lmax - 1801.0).abs() <= 10.0, "{tmax} @ {lmax}");
    assert!((tmin + 101.0).abs() <= 5.0, "{tmin}");
}

#[test]
fn protected_schemes_are_secure() {
    let grid = WavelengthGrid::analysis_band();
    for name in ["alice_protected.json", "bob_protected.json"] {
        let scheme = load_scheme(&sample(name), None, &grid).unwrap();
        let t = composite_transmittance(&scheme, &grid).unwrap();
        let curve = evaluate(&t, &ProbeBudget::default(), &SecurityThresholds::default()).unwrap();
        assert!(curve.is_secure(), "{name}: worst {:?}", curve.worst());
    }
}

#[test]
fn protected_scheme_matches_verified_plan() {
    let grid = WavelengthGrid::analysis_band();
    let scheme = load_scheme(&sample("alice.json"), None, &grid).unwrap();
    let catalog = load_countermeasure_catalog(&sample("countermeasures/catalog.json"), &grid).unwrap();
    let plan: Plan = serde_json::from_str(&std::fs::read_to_string(sample("plans/alice_stack.json")).unwrap()).unwrap();
    let report = verify_plan(&plan, &catalog, &scheme, &ProbeBudget::default(), &PlanConstraints::default(), &grid).unwrap();
    assert!(report.pass, "{report:?}");

    let explicit = load_scheme(&sample("alice_protected.json"), None, &grid).unwrap();
    let a = composite_transmittance(&explicit, &grid).unwrap();
    let curve = evaluate(&a, &ProbeBudget::default(), &SecurityThresholds::default()).unwrap();
    assert!((curve.worst().chi - report.worst.chi).abs() <= 1e-5 * report.worst.chi);
}

#[test]
fn search_recovers_published_stacks() {
    let grid = WavelengthGrid::analysis_band();
    let catalog = load_countermeasure_catalog(&sample("countermeasures/catalog.json"), &grid).unwrap();
    let budget = ProbeBudget::default();
    let constraints = PlanConstraints::default();
    for (name, expect) in [
        ("alice.json", [("cwdm", 1), ("isolator", 1), ("windings_12mm", 1)]),
        ("bob.json", [("cwdm", 1), ("isolator", 2), ("windings_12mm", 1)]),
    ] {
        let scheme = load_scheme(&sample(name), None, &grid).unwrap();
        let r = search_min_stack(&catalog, &scheme, &budget, &constraints, &grid, None).unwrap();
        assert_eq!(r.strategy, SearchStrategy::Exhaustive);
        assert!(r.is_feasible(), "{name}");
        let picks: Vec<(&str, u32)> = r.plan().picks.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        assert_eq!(picks, expect.to_vec(), "{name}");
    }
}

#[test]
fn single_isolator_is_not_enough() {
    let grid = WavelengthGrid::analysis_band();
    let catalog = load_countermeasure_catalog(&sample("countermeasures/isolator_only.json"), &grid).unwrap();
    let scheme = load_scheme(&sample("alice.json"), None, &grid).unwrap();
    let r = search_min_stack(&catalog, &scheme, &ProbeBudget::default(), &PlanConstraints::default(), &grid, None)
        .unwrap();
    assert!(!r.is_feasible());
    assert!(r.plan().achieved_worst_chi > 1e-2);
}
