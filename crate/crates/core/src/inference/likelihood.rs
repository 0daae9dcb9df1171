use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::covariates::StationWeights;
use crate::data::{FireEvent, SpaceTimeGrid, SpatialCell, TimeCell};
use crate::error::{Error, Result};
use crate::models::{Intensity, ModelData, ModelId, ParamVector, PreparedTerm, TermKind};
use crate::num::compensated_sum;

/// Midpoint rule over the active cells of a space-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub cells: Vec<SpatialCell>,
    pub times: Vec<TimeCell>,
}

impl Quadrature {
    pub fn new(grid: &SpaceTimeGrid) -> Self {
        Self {
            cells: grid.spatial_cells(),
            times: grid.time_cells(),
        }
    }

    pub fn area(&self) -> f64 {
        compensated_sum(self.cells.iter().map(|c| c.area))
    }

    pub fn duration(&self) -> f64 {
        compensated_sum(self.times.iter().map(TimeCell::len))
    }

    pub fn volume(&self) -> f64 {
        self.area() * self.duration()
    }

    pub(crate) fn centers(&self) -> Vec<(f64, f64)> {
        self.cells.iter().map(|c| (c.cx, c.cy)).collect()
    }

    pub(crate) fn mids(&self) -> Vec<f64> {
        self.times.iter().map(TimeCell::mid).collect()
    }

    /// Total time weight per whole day of the time-cell midpoints.
    pub(crate) fn day_weights(&self) -> Vec<(i64, f64)> {
        let mut out: Vec<(i64, f64)> = Vec::new();
        for tc in &self.times {
            let d = tc.mid().floor() as i64;
            match out.last_mut() {
                Some((day, w)) if *day == d => *w += tc.len(),
                _ => out.push((d, tc.len())),
            }
        }
        out
    }
}

/// `Σ log λ_i` with the contract that every rate is positive and finite.
pub(crate) fn event_sum(rates: &[f64]) -> Result<f64> {
    for (i, &r) in rates.iter().enumerate() {
        if r.is_nan() || r.is_infinite() {
            return Err(Error::NonFinite(format!("intensity at event {i}")));
        }
        if r <= 0.0 {
            return Err(Error::ZeroIntensity { index: i });
        }
    }
    Ok(compensated_sum(rates.iter().map(|r| r.ln())))
}

/// Midpoint-rule integral of `λ` over the quadrature cells.
pub fn integrate<I: Intensity + ?Sized>(surface: &I, quad: &Quadrature) -> Result<f64> {
    let centers = quad.centers();
    let mids = quad.mids();
    let mut parts = Vec::with_capacity(quad.times.len());
    // bounded memory: a block of time cells at a time
    for (block, tcs) in mids.chunks(64).zip(quad.times.chunks(64)) {
        let lam = surface.rates_product(block, &centers)?;
        for (it, tc) in tcs.iter().enumerate() {
            let row = &lam[it * centers.len()..(it + 1) * centers.len()];
            parts.push(
                tc.len() * compensated_sum(row.iter().zip(&quad.cells).map(|(l, c)| l * c.area)),
            );
        }
    }
    let total = compensated_sum(parts);
    if !total.is_finite() {
        return Err(Error::NonFinite("intensity integral".into()));
    }
    Ok(total)
}

/// `Σ_i log λ(t_i, x_i, y_i) − ∫ λ`, the integral by the midpoint rule
/// evaluated cell by cell.
pub fn log_likelihood<I: Intensity + ?Sized>(
    surface: &I,
    events: &[FireEvent],
    quad: &Quadrature,
) -> Result<f64> {
    let pts: Vec<(f64, f64, f64)> = events.iter().map(|e| (e.time, e.x, e.y)).collect();
    let rates = surface.rates(&pts)?;
    Ok(event_sum(&rates)? - integrate(surface, quad)?)
}

/// One unscaled term at the events and its integral.
#[derive(Debug, Clone, PartialEq)]
pub struct TermParts {
    pub at_events: Vec<f64>,
    pub integral: f64,
}

const CACHE_LIMIT: usize = 256;

/// Fast likelihood for one model over fixed data: each term's event values
/// and integral depend on a single shape parameter and are cached by it.
#[derive(Debug)]
pub struct LikelihoodEngine {
    data: Arc<ModelData>,
    model: ModelId,
    quad: Quadrature,
    centers: Vec<(f64, f64)>,
    mids: Vec<f64>,
    day_weights: Vec<(i64, f64)>,
    cache: Mutex<HashMap<(usize, u64), Arc<TermParts>>>,
}

impl LikelihoodEngine {
    pub fn new(data: Arc<ModelData>, model: ModelId, quad: Quadrature) -> Result<Self> {
        if data.events.is_empty() {
            return Err(Error::Empty("no events in fit period"));
        }
        Ok(Self {
            centers: quad.centers(),
            mids: quad.mids(),
            day_weights: quad.day_weights(),
            data,
            model,
            quad,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn model(&self) -> ModelId {
        self.model
    }

    pub fn data(&self) -> &Arc<ModelData> {
        &self.data
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    /// Event values and integral of term `k` at shape value `shape`.
    pub fn parts(&self, k: usize, shape: f64) -> Result<Arc<TermParts>> {
        let key = (k, shape.to_bits());
        if let Some(p) = self.cache.lock().expect("term cache").get(&key) {
            return Ok(p.clone());
        }
        let parts = Arc::new(self.compute(k, shape)?);
        let mut cache = self.cache.lock().expect("term cache");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, parts.clone());
        Ok(parts)
    }

    fn compute(&self, k: usize, shape: f64) -> Result<TermParts> {
        let spec = self.model.terms()[k];
        let ev = &self.data.events;
        let times: Vec<f64> = ev.iter().map(|e| e.time).collect();
        let points: Vec<(f64, f64)> = ev.iter().map(|e| (e.x, e.y)).collect();
        let at = PreparedTerm::new(&spec, shape, &self.data, &times, &points)?;
        let at_events: Vec<f64> = (0..ev.len()).map(|i| at.value(i, i)).collect();

        let cells = &self.quad.cells;
        let integral = match spec.kind {
            TermKind::Background | TermKind::Seasonal | TermKind::Fuel => {
                let grid = PreparedTerm::new(&spec, shape, &self.data, &self.mids, &self.centers)?;
                match grid {
                    PreparedTerm::Spatial(v) => {
                        self.quad.duration()
                            * compensated_sum(v.iter().zip(cells).map(|(m, c)| m * c.area))
                    }
                    PreparedTerm::Temporal(v) => {
                        self.quad.area()
                            * compensated_sum(
                                v.iter().zip(&self.quad.times).map(|(s, tc)| s * tc.len()),
                            )
                    }
                    ref g => {
                        let per_cell: Vec<f64> = (0..cells.len())
                            .into_par_iter()
                            .map(|ip| {
                                cells[ip].area
                                    * compensated_sum(
                                        self.quad
                                            .times
                                            .iter()
                                            .enumerate()
                                            .map(|(it, tc)| tc.len() * g.value(it, ip)),
                                    )
                            })
                            .collect();
                        compensated_sum(per_cell)
                    }
                }
            }
            TermKind::Channel { kind, per_station } => {
                let table = self.data.channel(kind, per_station)?;
                let st =
                    self.data.stations.as_ref().ok_or_else(|| {
                        Error::Config("weather models need station records".into())
                    })?;
                let weights = self
                    .centers
                    .iter()
                    .map(|&(x, y)| {
                        StationWeights::new(st.stations(), x, y, shape, self.data.family)
                    })
                    .collect::<Result<Vec<_>>>()?;
                table.integral(cells, &weights, &self.day_weights)
            }
        };
        if !integral.is_finite() || at_events.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("term {k} at shape {shape}")));
        }
        Ok(TermParts {
            at_events,
            integral,
        })
    }

    /// Parts of every term at the shapes of `params`.
    pub fn all_parts(&self, params: &ParamVector) -> Result<Vec<Arc<TermParts>>> {
        self.model
            .terms()
            .iter()
            .enumerate()
            .map(|(k, t)| self.parts(k, params.value(t.shape)))
            .collect()
    }

    pub fn log_likelihood(&self, params: &ParamVector) -> Result<f64> {
        if params.model() != self.model {
            return Err(Error::Config(format!(
                "parameters for {} given to a {} likelihood",
                params.model(),
                self.model
            )));
        }
        let parts = self.all_parts(params)?;
        let scales: Vec<f64> = self
            .model
            .terms()
            .iter()
            .map(|t| params.value(t.scale))
            .collect();
        loglik_from_parts(&parts, &scales)
    }
}

pub(crate) fn rates(parts: &[Arc<TermParts>], scales: &[f64]) -> Vec<f64> {
    let n = parts[0].at_events.len();
    (0..n)
        .map(|i| {
            parts
                .iter()
                .zip(scales)
                .map(|(p, c)| c * p.at_events[i])
                .sum()
        })
        .collect()
}

pub(crate) fn loglik_from_parts(parts: &[Arc<TermParts>], scales: &[f64]) -> Result<f64> {
    let lam = rates(parts, scales);
    let integral = compensated_sum(parts.iter().zip(scales).map(|(p, c)| c * p.integral));
    let ll = event_sum(&lam)? - integral;
    if ll.is_nan() {
        return Err(Error::NonFinite("log-likelihood".into()));
    }
    Ok(ll)
}
