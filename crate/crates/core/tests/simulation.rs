mod common;

use firehazard::data::FireEvent;
use firehazard::models::{Intensity, ModelId, Param};
use firehazard::simulation::Scenario;

/// Midpoint integral of the truth over each time cell of length `dt` days,
/// on the scenario's own spatial grid.
fn time_integrals(sc: &Scenario, dt: f64) -> Vec<f64> {
    let grid = &sc.domain.grid;
    let cells = grid.spatial_cells();
    let pts: Vec<(f64, f64)> = cells.iter().map(|c| (c.cx, c.cy)).collect();
    let n = ((sc.domain.t1 - sc.domain.t0) / dt).ceil() as usize;
    let mut out = vec![0.0; n];
    for tc in grid.time_cells() {
        let rates = sc.truth.rates_product(&[tc.mid()], &pts).unwrap();
        let mass: f64 = rates.iter().zip(&cells).map(|(r, c)| r * c.area).sum();
        let k = (((tc.mid() - sc.domain.t0) / dt) as usize).min(n - 1);
        out[k] += mass * tc.len();
    }
    out
}

fn fit_events(sc: &Scenario) -> &[FireEvent] {
    sc.catalog.events_between(sc.split, sc.domain.t1)
}

#[test]
fn saved_scenario_is_reproducible() {
    let read = |seed: u64| {
        let dir = tempfile::tempdir().unwrap();
        common::small_scenario(ModelId::M8, seed)
            .save(dir.path())
            .unwrap();
        [
            "catalog.csv",
            "stations.csv",
            "station_daily.csv",
            "fuel_history.csv",
        ]
        .map(|f| std::fs::read(dir.path().join(f)).unwrap())
    };
    let a = read(11);
    assert_eq!(a, read(11));
    assert_ne!(a[0], read(12)[0]);
}

#[test]
fn rescaled_weights_keep_their_ratio() {
    let mut cfg = common::small_config(ModelId::M1);
    cfg.truth.params.insert("gamma".into(), 0.02.into());
    cfg.truth.params.insert("alpha".into(), 0.01.into());
    cfg.truth.rescale = true;
    cfg.truth.expected_events = 400.0;
    let sc = Scenario::build(&cfg, 2).unwrap();
    let p = sc.truth.params();
    assert!((p.value(Param::Gamma) / p.value(Param::Alpha) - 2.0).abs() < 1e-12);
    let total: f64 = time_integrals(&sc, 365.0).iter().sum();
    assert!((total / 400.0 - 1.0).abs() < 0.02, "{total}");
}

#[test]
fn background_counts_follow_the_smoothed_prior() {
    let mut cfg = common::small_config(ModelId::M1);
    cfg.truth.params.insert("gamma".into(), 1.0.into());
    cfg.truth.params.insert("alpha".into(), 0.0.into());
    cfg.truth.rescale = true;
    cfg.truth.expected_events = 2000.0;
    let sc = Scenario::build(&cfg, 8).unwrap();
    // 2 km blocks
    let (nb, side) = (6, 2.0);
    let mut counts = vec![0.0; nb * nb];
    for e in fit_events(&sc) {
        let (i, j) = ((e.x / side) as usize, (e.y / side) as usize);
        counts[j.min(nb - 1) * nb + i.min(nb - 1)] += 1.0;
    }
    let t = sc.domain.t0 + 10.5;
    let mut expect = vec![0.0; nb * nb];
    for c in sc.domain.grid.spatial_cells() {
        let (i, j) = ((c.cx / side) as usize, (c.cy / side) as usize);
        expect[j * nb + i] += sc.truth.intensity(t, c.cx, c.cy).unwrap() * c.area;
    }
    let rho = common::spearman(&counts, &expect);
    assert!(rho > 0.7, "spearman {rho}");
}

#[test]
fn monthly_counts_match_the_truth() {
    let sc = common::small_scenario(ModelId::M8, 21);
    let lambda = time_integrals(&sc, 30.0);
    let mut counts = vec![0.0; lambda.len()];
    for e in fit_events(&sc) {
        counts[(((e.time - sc.domain.t0) / 30.0) as usize).min(lambda.len() - 1)] += 1.0;
    }
    assert_eq!(lambda.len(), 13);
    let chi2: f64 = counts
        .iter()
        .zip(&lambda)
        .map(|(n, l)| (n - l).powi(2) / l)
        .sum();
    // upper 0.1% point of chi-square with 13 degrees of freedom
    assert!(
        chi2 < 34.53,
        "chi2 {chi2} counts {counts:?} expected {lambda:?}"
    );
}
