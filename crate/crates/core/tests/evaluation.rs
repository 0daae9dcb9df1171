mod common;

use std::sync::OnceLock;

use firehazard::data::{FireEvent, SpaceTimeGrid};
use firehazard::evaluation::{poisson_moments, residuals, roc, Grouping, ResidualGrid};
use firehazard::models::{ConstantIntensity, ModelId};
use firehazard::simulation::{simulate_events, Scenario};

fn scenario() -> &'static Scenario {
    static SC: OnceLock<Scenario> = OnceLock::new();
    SC.get_or_init(|| common::small_scenario(ModelId::M8, 5))
}

fn fit_events(sc: &Scenario) -> &[FireEvent] {
    sc.catalog.events_between(sc.split, sc.domain.t1)
}

fn residual_grid(sc: &Scenario, c: Option<f64>, events: &[FireEvent]) -> ResidualGrid {
    let g = &sc.domain.grid;
    match c {
        Some(c) => residuals(
            &ConstantIntensity(c),
            events,
            g,
            25.6f64.sqrt(),
            30.0,
            sc.calendar,
        ),
        None => residuals(&sc.truth, events, g, 25.6f64.sqrt(), 30.0, sc.calendar),
    }
    .unwrap()
}

#[test]
fn true_intensity_beats_a_constant_alarm() {
    let sc = scenario();
    let region = sc.domain.region.clone();
    let grid = SpaceTimeGrid::new(&region, sc.domain.t0, sc.domain.t1, 2.0, 1.0).unwrap();
    let events = fit_events(sc);
    let oracle = roc(&sc.truth, events, &grid, None).unwrap();
    let flat = roc(&ConstantIntensity(1.0), events, &grid, None).unwrap();
    assert!((flat.auc() - 0.5).abs() < 1e-12);
    assert!(oracle.auc() >= flat.auc() + 0.15, "{}", oracle.auc());
    for w in oracle.points.windows(2) {
        assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
    }
}

#[test]
fn residuals_shift_with_the_rate() {
    let sc = scenario();
    let events = fit_events(sc);
    let (a, b) = (
        residual_grid(sc, Some(0.01), events),
        residual_grid(sc, Some(0.03), events),
    );
    assert_eq!(a.cells.len(), b.cells.len());
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert_eq!((x.ix, x.iy, x.it, x.count), (y.ix, y.iy, y.it, y.count));
        // the integral is linear in a constant rate
        assert!((y.residual - x.residual - (x.integral - y.integral)).abs() < 1e-9);
        assert!((y.integral - 3.0 * x.integral).abs() < 1e-9 * y.integral);
    }
}

#[test]
fn empty_catalog_leaves_minus_the_integral() {
    let sc = scenario();
    let c = 0.02;
    let r = residual_grid(sc, Some(c), &[]);
    let volume = sc.domain.grid.volume();
    assert!((r.total_residual() + c * volume).abs() < 1e-9 * c * volume);
    for cell in &r.cells {
        assert_eq!(cell.count, 0);
        assert_eq!(cell.residual, -cell.integral);
    }
}

#[test]
fn totals_and_summaries() {
    let sc = scenario();
    let events = fit_events(sc);
    let r = residual_grid(sc, None, events);
    assert_eq!(r.events, events.len());
    let n = events.len() as f64;
    assert!((r.total_residual() - (n - r.total_integral)).abs() < 1e-8 * n);
    for by in [Grouping::Month, Grouping::Location] {
        let rows = r.summary(by);
        assert_eq!(rows.iter().map(|s| s.cells).sum::<usize>(), r.cells.len());
        assert!(rows.iter().all(|s| s.median_abs >= 0.0));
    }
    assert_eq!(r.summary(Grouping::Location).len(), r.nx * r.ny);
}

#[test]
fn standardized_residuals_of_the_truth_are_unit() {
    let sc = scenario();
    let mut th = firehazard::simulation::ThinningConfig::default();
    let grids: Vec<ResidualGrid> = (0..20)
        .map(|seed| {
            th.seed = 1000 + seed;
            let ev = simulate_events(&sc.truth, &sc.domain, &th).unwrap();
            residual_grid(sc, None, &ev)
        })
        .collect();
    let m = poisson_moments(&grids, 0.5).unwrap();
    assert!(m.consistent(3.0, 0.15), "{m:?}");
}
