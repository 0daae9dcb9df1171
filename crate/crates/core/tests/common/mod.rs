#![allow(dead_code)]

use firehazard::models::ModelId;
use firehazard::simulation::{Scenario, ScenarioConfig};

/// Two years of prior and one of fit data on a 12 km square.
pub fn small_config(model: ModelId) -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        prior_years: 2.0,
        fit_years: 1.0,
        history_years: 10.0,
        region: [0.0, 12.0, 0.0, 12.0],
        stations: 4,
        hotspots: 3,
        hotspot_sd: 2.5,
        prior_events: 150.0,
        scars: 12,
        scar_area: [2.0, 10.0],
        ..ScenarioConfig::default()
    };
    cfg.truth.model = model;
    cfg.truth.expected_events = 150.0;
    cfg
}

pub fn small_scenario(model: ModelId, seed: u64) -> Scenario {
    Scenario::build(&small_config(model), seed).expect("scenario")
}

/// Spearman rank correlation, ties given their mean rank.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut k = 0;
        while k < idx.len() {
            let mut m = k;
            while m + 1 < idx.len() && v[idx[m + 1]] == v[idx[k]] {
                m += 1;
            }
            let mean = 0.5 * (k + m) as f64 + 1.0;
            for &i in &idx[k..=m] {
                r[i] = mean;
            }
            k = m + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
