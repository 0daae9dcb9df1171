use std::collections::BTreeMap;

use crate::data::{SpatialCell, Station, StationDay, StationTable};
use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::num::compensated_sum;

/// Log kernel weights `ln K(d_s/β)` of every station at one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct StationWeights {
    ln_w: Vec<f64>,
    dist: Vec<f64>,
}

impl StationWeights {
    pub fn new(
        stations: &[Station],
        x: f64,
        y: f64,
        beta: f64,
        family: KernelFamily,
    ) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::invalid("beta", beta, "bandwidth must be positive"));
        }
        let dist: Vec<f64> = stations.iter().map(|s| (x - s.x).hypot(y - s.y)).collect();
        let ln_w = dist.iter().map(|d| family.ln_eval(d / beta)).collect();
        Ok(Self { ln_w, dist })
    }

    pub fn len(&self) -> usize {
        self.ln_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_w.is_empty()
    }

    /// Normalized weights over the stations flagged in `present`; zero
    /// elsewhere. When every present weight vanishes the nearest present
    /// station takes all the weight. `None` if nothing is present.
    pub fn normalized(&self, present: &[bool]) -> Option<Vec<f64>> {
        let max = self
            .ln_w
            .iter()
            .zip(present)
            .filter(|(_, &p)| p)
            .map(|(&l, _)| l)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut out = vec![0.0; self.ln_w.len()];
        if max == f64::NEG_INFINITY {
            let s = (0..self.ln_w.len())
                .filter(|&s| present[s])
                .min_by(|&a, &b| self.dist[a].total_cmp(&self.dist[b]))?;
            out[s] = 1.0;
            return Some(out);
        }
        let mut den = 0.0;
        for s in 0..out.len() {
            if present[s] {
                out[s] = (self.ln_w[s] - max).exp();
                den += out[s];
            }
        }
        out.iter_mut().for_each(|w| *w /= den);
        Some(out)
    }

    /// Weighted mean of `(station, value)` pairs.
    pub fn mean(&self, values: impl IntoIterator<Item = (usize, f64)>) -> Option<f64> {
        let values: Vec<(usize, f64)> = values.into_iter().collect();
        let max = values
            .iter()
            .map(|&(s, _)| self.ln_w[s])
            .fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() {
            return None;
        }
        if max == f64::NEG_INFINITY {
            let &(_, v) = values
                .iter()
                .min_by(|a, b| self.dist[a.0].total_cmp(&self.dist[b.0]))?;
            return Some(v);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (s, v) in values {
            let w = (self.ln_w[s] - max).exp();
            num += w * v;
            den += w;
        }
        Some(num / den)
    }
}

/// Per-station daily values of one covariate channel. A day on which no
/// station has a value takes the channel's fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTable {
    first_day: i64,
    n_days: usize,
    n_stations: usize,
    values: Vec<Option<f64>>,
    fallback: f64,
}

impl ChannelTable {
    /// Applies `value` to every station record in `first..=last`.
    pub fn from_records(
        table: &StationTable,
        first: i64,
        last: i64,
        fallback: f64,
        value: impl Fn(&StationDay) -> Option<f64>,
    ) -> Result<Self> {
        if !fallback.is_finite() {
            return Err(Error::NonFinite("channel fallback".into()));
        }
        let n_days = (last - first + 1).max(0) as usize;
        let n_stations = table.stations().len();
        let mut values = vec![None; n_days * n_stations];
        for d in 0..n_days {
            for rec in table.on_day(first + d as i64) {
                if let Some(v) = value(rec) {
                    if !v.is_finite() {
                        return Err(Error::NonFinite(format!(
                            "channel value at station {} on day {}",
                            rec.station, rec.day
                        )));
                    }
                    values[d * n_stations + rec.station] = Some(v);
                }
            }
        }
        Ok(Self {
            first_day: first,
            n_days,
            n_stations,
            values,
            fallback,
        })
    }

    pub fn fallback(&self) -> f64 {
        self.fallback
    }

    pub fn day_range(&self) -> (i64, i64) {
        (self.first_day, self.first_day + self.n_days as i64 - 1)
    }

    fn row(&self, day: i64) -> Option<&[Option<f64>]> {
        let d = day - self.first_day;
        (d >= 0 && (d as usize) < self.n_days).then(|| {
            let d = d as usize;
            &self.values[d * self.n_stations..(d + 1) * self.n_stations]
        })
    }

    /// Reporting stations and their values on `day`.
    pub fn on_day(&self, day: i64) -> Vec<(usize, f64)> {
        self.row(day)
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter_map(|(s, v)| v.map(|v| (s, v)))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Interpolated field value on `day` at the point the weights describe.
    pub fn field(&self, day: i64, weights: &StationWeights) -> f64 {
        weights.mean(self.on_day(day)).unwrap_or(self.fallback)
    }

    /// `Σ_d τ_d Σ_c area_c · field(d, c)` over the given day weights `τ_d`.
    ///
    /// Days are grouped by their set of reporting stations so that the
    /// per-cell normalization is computed once per set.
    pub fn integral(
        &self,
        cells: &[SpatialCell],
        cell_weights: &[StationWeights],
        day_weights: &[(i64, f64)],
    ) -> f64 {
        let mut fallback_time = 0.0;
        let mut groups: BTreeMap<Vec<bool>, Vec<f64>> = BTreeMap::new();
        for &(day, tau) in day_weights {
            let present: Vec<bool> = match self.row(day) {
                Some(r) => r.iter().map(Option::is_some).collect(),
                None => vec![false; self.n_stations],
            };
            if !present.iter().any(|&p| p) {
                fallback_time += tau;
                continue;
            }
            let acc = groups
                .entry(present)
                .or_insert_with(|| vec![0.0; self.n_stations]);
            for (s, v) in self.on_day(day) {
                acc[s] += tau * v;
            }
        }
        let area: f64 = compensated_sum(cells.iter().map(|c| c.area));
        let mut terms = vec![fallback_time * area * self.fallback];
        for (present, acc) in &groups {
            for (cell, w) in cells.iter().zip(cell_weights) {
                let nw = w.normalized(present).expect("nonempty pattern");
                let dot: f64 = nw.iter().zip(acc).map(|(a, b)| a * b).sum();
                terms.push(cell.area * dot);
            }
        }
        compensated_sum(terms)
    }
}
