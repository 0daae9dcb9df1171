use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::channel::{ChannelTable, StationWeights};
use crate::data::{StationDay, StationTable};
use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::smoothers::{
    circular_mean, cross_validate_directional, cross_validate_subsampled, DailyRow,
    DirectionalCurve, Reflection, RegressionCurve,
};

/// Bandwidth search settings for the weather regressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveOptions {
    pub family: KernelFamily,
    /// Candidate bandwidths as multiples of the predictor's standard
    /// deviation.
    pub bandwidth_multipliers: Vec<f64>,
    /// Number of evenly spaced candidate wind directions `μ₀`.
    pub direction_candidates: usize,
    pub kappa_candidates: Vec<f64>,
    /// Cap on held-out points scored per leave-one-out pass.
    pub cv_max_points: Option<usize>,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            family: KernelFamily::Gaussian,
            bandwidth_multipliers: vec![0.1, 0.2, 0.4, 0.8, 1.6],
            direction_candidates: 8,
            kappa_candidates: vec![0.0, 0.5, 1.0, 2.0, 4.0],
            cv_max_points: Some(600),
        }
    }
}

/// The four weather regressions entering the covariate fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CurveVar {
    Temperature,
    Humidity,
    Wind,
    Precipitation,
}

impl CurveVar {
    pub const ALL: [CurveVar; 4] = [
        CurveVar::Temperature,
        CurveVar::Humidity,
        CurveVar::Wind,
        CurveVar::Precipitation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CurveVar::Temperature => "temp",
            CurveVar::Humidity => "rh",
            CurveVar::Wind => "wind",
            CurveVar::Precipitation => "precip",
        }
    }
}

/// Fit-period county means, used when no station reports a variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherMeans {
    pub temp: f64,
    pub rh: f64,
    pub wind: f64,
    pub wind_dir: f64,
    pub precip: f64,
    pub bi: f64,
}

impl WeatherMeans {
    pub fn from_daily(rows: &[DailyRow]) -> Result<Self> {
        let mean = |f: fn(&DailyRow) -> Option<f64>, what: &'static str| {
            let v: Vec<f64> = rows.iter().filter_map(f).collect();
            if v.is_empty() {
                Err(Error::Empty(what))
            } else {
                Ok(v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        let wind_dir =
            circular_mean(rows.iter().filter_map(|r| Some((r.wind?, r.wind_dir?)))).unwrap_or(0.0);
        Ok(Self {
            temp: mean(|r| r.temp, "temperature records")?,
            rh: mean(|r| r.rh, "humidity records")?,
            wind: mean(|r| r.wind, "wind records")?,
            wind_dir,
            precip: mean(|r| r.precip, "precipitation records")?,
            bi: mean(|r| r.bi, "burning index records").unwrap_or(0.0),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
struct StationCurves {
    temp: Option<RegressionCurve<f64>>,
    rh: Option<RegressionCurve<f64>>,
    wind: Option<DirectionalCurve<f64>>,
    precip: Option<RegressionCurve<f64>>,
}

/// Pooled and per-station regressions of county daily burn area on weather.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherCurves {
    pub temp: RegressionCurve<f64>,
    pub rh: RegressionCurve<f64>,
    pub wind: DirectionalCurve<f64>,
    pub precip: RegressionCurve<f64>,
    stations: Vec<StationCurves>,
    pub means: WeatherMeans,
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let s = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn fit_scalar(pairs: &[(f64, f64)], opts: &CurveOptions) -> Result<RegressionCurve<f64>> {
    let sd = std_dev(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let cands: Vec<f64> = opts.bandwidth_multipliers.iter().map(|m| m * sd).collect();
    let h = cross_validate_subsampled(
        pairs,
        &cands,
        opts.family,
        Reflection::DataRange,
        opts.cv_max_points,
    )?;
    RegressionCurve::fit(pairs, h, opts.family, Reflection::DataRange)
}

fn fit_wind(samples: &[(f64, f64, f64)], opts: &CurveOptions) -> Result<DirectionalCurve<f64>> {
    let sd = std_dev(&samples.iter().map(|s| s.0).collect::<Vec<_>>());
    let hs: Vec<f64> = opts.bandwidth_multipliers.iter().map(|m| m * sd).collect();
    let k = opts.direction_candidates.max(1);
    let mus: Vec<f64> = (0..k).map(|i| TAU * i as f64 / k as f64).collect();
    let c = cross_validate_directional(
        samples,
        &hs,
        &mus,
        &opts.kappa_candidates,
        opts.family,
        Reflection::DataRange,
        opts.cv_max_points,
    )?;
    DirectionalCurve::fit(
        samples,
        c.h_w,
        c.mu0,
        c.kappa0,
        opts.family,
        Reflection::DataRange,
    )
}

impl WeatherCurves {
    /// Fits pooled curves on county daily means by cross-validation. Each
    /// station's curve regresses the county daily burn total on that
    /// station's own readings, reusing the pooled bandwidths.
    pub fn fit(rows: &[DailyRow], table: &StationTable, opts: &CurveOptions) -> Result<Self> {
        let pairs = |f: fn(&DailyRow) -> Option<f64>| -> Vec<(f64, f64)> {
            rows.iter().filter_map(|r| Some((f(r)?, r.area))).collect()
        };
        let temp = fit_scalar(&pairs(|r| r.temp), opts)?;
        let rh = fit_scalar(&pairs(|r| r.rh), opts)?;
        let precip = fit_scalar(&pairs(|r| r.precip), opts)?;
        let wind_samples: Vec<(f64, f64, f64)> = rows
            .iter()
            .filter_map(|r| Some((r.wind?, r.wind_dir?, r.area)))
            .collect();
        let wind = fit_wind(&wind_samples, opts)?;

        let n = table.stations().len();
        let mut per: Vec<[Vec<(f64, f64)>; 3]> = vec![Default::default(); n];
        let mut per_wind: Vec<Vec<(f64, f64, f64)>> = vec![Vec::new(); n];
        for r in rows {
            for rec in table.on_day(r.day) {
                let s = rec.station;
                if let Some(v) = rec.temp {
                    per[s][0].push((v, r.area));
                }
                if let Some(v) = rec.rh {
                    per[s][1].push((v, r.area));
                }
                if let Some(v) = rec.precip {
                    per[s][2].push((v, r.area));
                }
                if let (Some(w), Some(th)) = (rec.wind, rec.wind_dir) {
                    per_wind[s].push((w, th, r.area));
                }
            }
        }
        let scalar = |p: &[(f64, f64)], h: f64| -> Result<Option<RegressionCurve<f64>>> {
            if p.is_empty() {
                return Ok(None);
            }
            RegressionCurve::fit(p, h, opts.family, Reflection::DataRange).map(Some)
        };
        let vm = wind.von_mises();
        let stations = per
            .iter()
            .zip(&per_wind)
            .map(|(p, pw)| {
                Ok(StationCurves {
                    temp: scalar(&p[0], temp.bandwidth())?,
                    rh: scalar(&p[1], rh.bandwidth())?,
                    precip: scalar(&p[2], precip.bandwidth())?,
                    wind: if pw.is_empty() {
                        None
                    } else {
                        Some(DirectionalCurve::fit(
                            pw,
                            wind.bandwidth(),
                            vm.mu0(),
                            vm.kappa0(),
                            opts.family,
                            Reflection::DataRange,
                        )?)
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            temp,
            rh,
            wind,
            precip,
            stations,
            means: WeatherMeans::from_daily(rows)?,
        })
    }

    /// Curve value for one station-day, `None` if the inputs are missing.
    /// Stations without their own curve use the pooled one.
    pub fn factor(&self, var: CurveVar, rec: &StationDay, per_station: bool) -> Option<f64> {
        let own = per_station.then(|| &self.stations[rec.station]);
        match var {
            CurveVar::Temperature => {
                let c = own.and_then(|s| s.temp.as_ref()).unwrap_or(&self.temp);
                Some(c.eval(rec.temp?))
            }
            CurveVar::Humidity => {
                let c = own.and_then(|s| s.rh.as_ref()).unwrap_or(&self.rh);
                Some(c.eval(rec.rh?))
            }
            CurveVar::Precipitation => {
                let c = own.and_then(|s| s.precip.as_ref()).unwrap_or(&self.precip);
                Some(c.eval(rec.precip?))
            }
            CurveVar::Wind => {
                let c = own.and_then(|s| s.wind.as_ref()).unwrap_or(&self.wind);
                Some(c.eval(rec.wind?, rec.wind_dir?))
            }
        }
    }

    /// Pooled curve at the county mean.
    pub fn fallback(&self, var: CurveVar) -> f64 {
        let m = &self.means;
        match var {
            CurveVar::Temperature => self.temp.eval(m.temp),
            CurveVar::Humidity => self.rh.eval(m.rh),
            CurveVar::Wind => self.wind.eval(m.wind, m.wind_dir),
            CurveVar::Precipitation => self.precip.eval(m.precip),
        }
    }

    /// `g_T·g_H·g_W·g_P` for one station-day. Missing factors take their
    /// fallback; `None` when the station reports none of the four.
    pub fn product(&self, rec: &StationDay, per_station: bool) -> Option<f64> {
        let f: Vec<Option<f64>> = CurveVar::ALL
            .iter()
            .map(|&v| self.factor(v, rec, per_station))
            .collect();
        if f.iter().all(Option::is_none) {
            return None;
        }
        Some(
            CurveVar::ALL
                .iter()
                .zip(f)
                .map(|(&v, x)| x.unwrap_or_else(|| self.fallback(v)))
                .product(),
        )
    }

    pub fn product_fallback(&self) -> f64 {
        CurveVar::ALL.iter().map(|&v| self.fallback(v)).product()
    }

    pub fn additive_channel(
        &self,
        var: CurveVar,
        table: &StationTable,
        first: i64,
        last: i64,
        per_station: bool,
    ) -> Result<ChannelTable> {
        ChannelTable::from_records(table, first, last, self.fallback(var), |r| {
            self.factor(var, r, per_station)
        })
    }

    pub fn product_channel(
        &self,
        table: &StationTable,
        first: i64,
        last: i64,
        per_station: bool,
    ) -> Result<ChannelTable> {
        ChannelTable::from_records(table, first, last, self.product_fallback(), |r| {
            self.product(r, per_station)
        })
    }

    /// `Σ_v μ_v · Σ_s w_s g_v(s) / Σ_s w_s`, each variable with its own
    /// bandwidth and reporting set.
    #[allow(clippy::too_many_arguments)]
    pub fn field_additive(
        &self,
        table: &StationTable,
        day: i64,
        x: f64,
        y: f64,
        betas: [f64; 4],
        mus: [f64; 4],
        family: KernelFamily,
        per_station: bool,
    ) -> Result<f64> {
        let recs = table.on_day(day);
        let mut total = 0.0;
        for ((&var, beta), mu) in CurveVar::ALL.iter().zip(betas).zip(mus) {
            let w = StationWeights::new(table.stations(), x, y, beta, family)?;
            let vals = recs
                .iter()
                .filter_map(|r| Some((r.station, self.factor(var, r, per_station)?)));
            total += mu * w.mean(vals).unwrap_or_else(|| self.fallback(var));
        }
        Ok(total)
    }

    /// `Σ_s w_s [g_T g_H g_W g_P](s) / Σ_s w_s`.
    #[allow(clippy::too_many_arguments)]
    pub fn field_multiplicative(
        &self,
        table: &StationTable,
        day: i64,
        x: f64,
        y: f64,
        beta: f64,
        family: KernelFamily,
        per_station: bool,
    ) -> Result<f64> {
        let w = StationWeights::new(table.stations(), x, y, beta, family)?;
        let vals = table
            .on_day(day)
            .iter()
            .filter_map(|r| Some((r.station, self.product(r, per_station)?)));
        Ok(w.mean(vals).unwrap_or_else(|| self.product_fallback()))
    }
}
