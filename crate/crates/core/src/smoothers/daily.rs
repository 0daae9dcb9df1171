use std::f64::consts::TAU;

use crate::data::{FireCatalog, StationDay, StationTable};

/// County-wide weather and burn totals for one day. Weather fields are
/// `None` when no station reported the variable.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyRow {
    pub day: i64,
    pub temp: Option<f64>,
    pub rh: Option<f64>,
    pub wind: Option<f64>,
    /// Speed-weighted circular mean, radians in [0, 2π).
    pub wind_dir: Option<f64>,
    pub precip: Option<f64>,
    pub bi: Option<f64>,
    /// Total burn area of fires starting that day, km².
    pub area: f64,
    pub fires: usize,
}

/// Total burn area per day over `first..=last`.
pub fn daily_burn_area(catalog: &FireCatalog, first: i64, last: i64) -> Vec<(f64, usize)> {
    let len = (last - first + 1).max(0) as usize;
    let mut out = vec![(0.0, 0); len];
    for ev in catalog.events() {
        let d = ev.day();
        if (first..=last).contains(&d) {
            let slot = &mut out[(d - first) as usize];
            slot.0 += ev.area;
            slot.1 += 1;
        }
    }
    out
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Direction of the speed-weighted resultant of unit vectors. Falls back to
/// equal weights when every speed is zero; `None` when the resultant
/// vanishes.
pub fn circular_mean(samples: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let samples: Vec<(f64, f64)> = samples.into_iter().collect();
    if samples.is_empty() {
        return None;
    }
    let calm = samples.iter().all(|&(w, _)| w == 0.0);
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(w, theta) in &samples {
        let w = if calm { 1.0 } else { w };
        sx += w * theta.cos();
        sy += w * theta.sin();
    }
    let r = sx.hypot(sy);
    if r <= 1e-12 * samples.len() as f64 {
        return None;
    }
    let theta = sy.atan2(sx).rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU
    Some(if theta >= TAU { 0.0 } else { theta })
}

fn aggregate(day: i64, recs: &[StationDay], area: f64, fires: usize) -> DailyRow {
    let col = |f: fn(&StationDay) -> Option<f64>| mean(recs.iter().filter_map(f));
    DailyRow {
        day,
        temp: col(|r| r.temp),
        rh: col(|r| r.rh),
        wind: col(|r| r.wind),
        wind_dir: circular_mean(recs.iter().filter_map(|r| Some((r.wind?, r.wind_dir?)))),
        precip: col(|r| r.precip),
        bi: col(|r| r.bi),
        area,
        fires,
    }
}

/// One row per day in `first..=last`, averaging each variable over the
/// stations reporting it. Fire-free days carry `area = 0`.
pub fn aggregate_daily(
    catalog: &FireCatalog,
    stations: &StationTable,
    first: i64,
    last: i64,
) -> Vec<DailyRow> {
    daily_burn_area(catalog, first, last)
        .into_iter()
        .zip(first..=last)
        .map(|((area, fires), day)| aggregate(day, stations.on_day(day), area, fires))
        .collect()
}
