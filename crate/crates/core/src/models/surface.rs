use std::sync::Arc;

use rayon::prelude::*;

use super::{ModelData, ModelId, ParamVector, TermKind, TermSpec};
use crate::covariates::{age_from_times, ChannelTable, StationWeights};
use crate::data::{StationTable, YEAR_DAYS};
use crate::error::{Error, Result};
use crate::smoothers::{SeasonalRate, SpatialBackground};

/// One unscaled term evaluated over a product set of times and points.
/// Each variant precomputes whatever does not vary along the other axis.
#[derive(Debug, Clone)]
pub(crate) enum PreparedTerm {
    /// Depends on location only.
    Spatial(Vec<f64>),
    /// Depends on time only.
    Temporal(Vec<f64>),
    Channel {
        table: Arc<ChannelTable>,
        days: Vec<i64>,
        weights: Vec<StationWeights>,
    },
    Fuel {
        psi: f64,
        times: Vec<f64>,
        cover: Vec<Vec<f64>>,
    },
}

fn stations(data: &ModelData) -> Result<&StationTable> {
    data.stations
        .as_deref()
        .ok_or_else(|| Error::Config("weather models need station records".into()))
}

impl PreparedTerm {
    pub(crate) fn new(
        spec: &TermSpec,
        shape: f64,
        data: &ModelData,
        times: &[f64],
        points: &[(f64, f64)],
    ) -> Result<Self> {
        Ok(match spec.kind {
            TermKind::Background => {
                let m = SpatialBackground::from_shared(
                    data.background_centers.clone(),
                    shape,
                    data.family,
                )?;
                PreparedTerm::Spatial(points.par_iter().map(|&(x, y)| m.eval(x, y)).collect())
            }
            TermKind::Seasonal => {
                let s = SeasonalRate::from_shared(
                    data.seasonal_days.clone(),
                    shape,
                    data.family,
                    YEAR_DAYS,
                )?;
                PreparedTerm::Temporal(
                    times
                        .par_iter()
                        .map(|&t| s.eval_at(t, &data.calendar))
                        .collect(),
                )
            }
            TermKind::Channel { kind, per_station } => {
                let table = data.channel(kind, per_station)?;
                let st = stations(data)?.stations();
                let weights = points
                    .iter()
                    .map(|&(x, y)| StationWeights::new(st, x, y, shape, data.family))
                    .collect::<Result<Vec<_>>>()?;
                PreparedTerm::Channel {
                    table,
                    days: times.iter().map(|t| t.floor() as i64).collect(),
                    weights,
                }
            }
            TermKind::Fuel => {
                if !(shape > 0.0) {
                    return Err(Error::invalid("psi", shape, "truncation must be positive"));
                }
                let fuel = data
                    .fuel
                    .as_ref()
                    .ok_or_else(|| Error::Config("fuel models need a burn history".into()))?;
                PreparedTerm::Fuel {
                    psi: shape,
                    times: times.to_vec(),
                    cover: points
                        .par_iter()
                        .map(|&(x, y)| fuel.covering_times(x, y))
                        .collect(),
                }
            }
        })
    }

    /// Value at time index `it` and point index `ip`.
    pub(crate) fn value(&self, it: usize, ip: usize) -> f64 {
        match self {
            PreparedTerm::Spatial(v) => v[ip],
            PreparedTerm::Temporal(v) => v[it],
            PreparedTerm::Channel {
                table,
                days,
                weights,
            } => table.field(days[it], &weights[ip]),
            PreparedTerm::Fuel { psi, times, cover } => {
                age_from_times(&cover[ip], times[it]).min(*psi)
            }
        }
    }
}

/// An evaluable intensity `λ(t, x, y)`: a model, its parameters and data.
#[derive(Debug, Clone)]
pub struct IntensitySurface {
    data: Arc<ModelData>,
    params: ParamVector,
    terms: Vec<TermSpec>,
}

impl IntensitySurface {
    pub fn new(data: Arc<ModelData>, params: ParamVector) -> Result<Self> {
        params.validate()?;
        let terms = params.model().terms();
        // fail early on missing inputs
        for t in &terms {
            match t.kind {
                TermKind::Channel { kind, per_station } => {
                    data.channel(kind, per_station)?;
                }
                TermKind::Fuel if data.fuel.is_none() => {
                    return Err(Error::Config("fuel models need a burn history".into()));
                }
                _ => {}
            }
        }
        Ok(Self {
            data,
            params,
            terms,
        })
    }

    pub fn model(&self) -> ModelId {
        self.params.model()
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn data(&self) -> &Arc<ModelData> {
        &self.data
    }

    pub fn terms(&self) -> &[TermSpec] {
        &self.terms
    }

    pub(crate) fn prepare(
        &self,
        times: &[f64],
        points: &[(f64, f64)],
    ) -> Result<Vec<PreparedTerm>> {
        self.terms
            .iter()
            .map(|t| PreparedTerm::new(t, self.params.value(t.shape), &self.data, times, points))
            .collect()
    }

    fn scales(&self) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| self.params.value(t.scale))
            .collect()
    }

    /// Unscaled term values at one point, in [`ModelId::terms`] order.
    pub fn term_values(&self, t: f64, x: f64, y: f64) -> Result<Vec<f64>> {
        let prepared = self.prepare(&[t], &[(x, y)])?;
        Ok(prepared.iter().map(|p| p.value(0, 0)).collect())
    }

    /// Rate in events per day per km². Errors outside the study domain.
    pub fn intensity(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        if !self.data.domain.contains(t, x, y) {
            return Err(Error::OutOfDomain { t, x, y });
        }
        self.intensity_unchecked(t, x, y)
    }

    /// Same as [`intensity`](Self::intensity) without the domain check.
    pub fn intensity_unchecked(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        let v = self.term_values(t, x, y)?;
        Ok(self.scales().iter().zip(v).map(|(c, f)| c * f).sum())
    }

    /// `λ` over every `(time, point)` pair, time-major.
    pub fn eval_product(&self, times: &[f64], points: &[(f64, f64)]) -> Result<Vec<f64>> {
        let prepared = self.prepare(times, points)?;
        let scales = self.scales();
        let np = points.len();
        Ok((0..times.len() * np)
            .into_par_iter()
            .map(|k| {
                let (it, ip) = (k / np, k % np);
                scales
                    .iter()
                    .zip(&prepared)
                    .map(|(c, p)| c * p.value(it, ip))
                    .sum()
            })
            .collect())
    }

    /// `λ` at each `(t, x, y)` triple.
    pub fn eval_points(&self, pts: &[(f64, f64, f64)]) -> Result<Vec<f64>> {
        let times: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let xy: Vec<(f64, f64)> = pts.iter().map(|p| (p.1, p.2)).collect();
        let prepared = self.prepare(&times, &xy)?;
        let scales = self.scales();
        Ok((0..pts.len())
            .into_par_iter()
            .map(|i| {
                scales
                    .iter()
                    .zip(&prepared)
                    .map(|(c, p)| c * p.value(i, i))
                    .sum()
            })
            .collect())
    }
}

/// Anything that yields a rate in events per day per km².
pub trait Intensity: Sync {
    /// `λ` at each `(t, x, y)` triple.
    fn rates(&self, pts: &[(f64, f64, f64)]) -> Result<Vec<f64>>;

    /// `λ` over every `(time, point)` pair, time-major.
    fn rates_product(&self, times: &[f64], points: &[(f64, f64)]) -> Result<Vec<f64>> {
        let pts: Vec<(f64, f64, f64)> = times
            .iter()
            .flat_map(|&t| points.iter().map(move |&(x, y)| (t, x, y)))
            .collect();
        self.rates(&pts)
    }
}

impl Intensity for IntensitySurface {
    fn rates(&self, pts: &[(f64, f64, f64)]) -> Result<Vec<f64>> {
        self.eval_points(pts)
    }

    fn rates_product(&self, times: &[f64], points: &[(f64, f64)]) -> Result<Vec<f64>> {
        self.eval_product(times, points)
    }
}

/// `λ = c` everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantIntensity(pub f64);

impl Intensity for ConstantIntensity {
    fn rates(&self, pts: &[(f64, f64, f64)]) -> Result<Vec<f64>> {
        Ok(vec![self.0; pts.len()])
    }
}

/// A closed-form intensity.
#[derive(Debug, Clone, Copy)]
pub struct FnIntensity<F>(pub F);

impl<F: Fn(f64, f64, f64) -> f64 + Sync> Intensity for FnIntensity<F> {
    fn rates(&self, pts: &[(f64, f64, f64)]) -> Result<Vec<f64>> {
        Ok(pts.par_iter().map(|&(t, x, y)| (self.0)(t, x, y)).collect())
    }
}
