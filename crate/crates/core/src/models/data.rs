use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{ChannelKind, ModelId, TermKind};
use crate::covariates::{ChannelTable, CurveOptions, FuelHistory, WeatherCurves};
use crate::data::{Calendar, FireCatalog, FireEvent, StationTable, StudyDomain};
use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::smoothers::aggregate_daily;

/// Smoothing settings shared by every model built from one data bundle.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataOptions {
    pub family: KernelFamily,
    pub curves: CurveOptions,
}

/// Everything an intensity needs besides its parameters: prior-period
/// smoothing inputs, fit-period events, station channels and fuel history.
#[derive(Debug)]
pub struct ModelData {
    pub calendar: Calendar,
    pub domain: StudyDomain,
    pub family: KernelFamily,
    pub background_centers: Arc<[(f64, f64)]>,
    /// Day of year of each prior event.
    pub seasonal_days: Arc<[f64]>,
    /// Fit-period events inside the domain, time-ordered.
    pub events: Vec<FireEvent>,
    pub stations: Option<Arc<StationTable>>,
    pub curves: Option<Arc<WeatherCurves>>,
    pub fuel: Option<Arc<FuelHistory>>,
    channels: Mutex<BTreeMap<(ChannelKind, bool), Arc<ChannelTable>>>,
}

impl ModelData {
    /// Low-level constructor; channels are built on first use.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        calendar: Calendar,
        domain: StudyDomain,
        family: KernelFamily,
        prior: &[FireEvent],
        events: Vec<FireEvent>,
        stations: Option<Arc<StationTable>>,
        curves: Option<Arc<WeatherCurves>>,
        fuel: Option<Arc<FuelHistory>>,
    ) -> Result<Self> {
        if prior.is_empty() {
            return Err(Error::Empty("prior-period events"));
        }
        if events.iter().any(|e| !domain.contains(e.time, e.x, e.y)) {
            return Err(Error::Config(
                "fit events must lie inside the study domain".into(),
            ));
        }
        Ok(Self {
            calendar,
            family,
            background_centers: prior.iter().map(|e| (e.x, e.y)).collect(),
            seasonal_days: prior.iter().map(|e| calendar.day_of_year(e.time)).collect(),
            domain,
            events,
            stations,
            curves,
            fuel,
            channels: Mutex::new(BTreeMap::new()),
        })
    }

    /// Splits the catalog into prior and fit periods, fits the weather
    /// curves the requested models need, and gathers the fuel history
    /// (the catalog itself unless one is given).
    pub fn build(
        catalog: &FireCatalog,
        stations: Option<StationTable>,
        domain: StudyDomain,
        fuel: Option<FuelHistory>,
        opts: &DataOptions,
        models: &[ModelId],
    ) -> Result<Self> {
        let events: Vec<FireEvent> = catalog
            .events_between(domain.t0, domain.t1)
            .iter()
            .filter(|e| domain.contains(e.time, e.x, e.y))
            .cloned()
            .collect();
        if events.is_empty() {
            return Err(Error::Empty("no events in fit period"));
        }
        let kinds: Vec<TermKind> = models
            .iter()
            .flat_map(|m| m.terms())
            .map(|t| t.kind)
            .collect();
        let needs_curves = kinds.iter().any(|k| {
            matches!(
                k,
                TermKind::Channel {
                    kind: ChannelKind::Additive(_) | ChannelKind::Product,
                    ..
                }
            )
        });
        let needs_stations = kinds.iter().any(|k| matches!(k, TermKind::Channel { .. }));
        if needs_stations && stations.is_none() {
            return Err(Error::Config("weather models need station records".into()));
        }
        let stations = stations.map(Arc::new);
        let curves = match (&stations, needs_curves) {
            (Some(table), true) => {
                let (first, last) = day_span(&domain);
                let rows = aggregate_daily(catalog, table, first, last);
                Some(Arc::new(WeatherCurves::fit(&rows, table, &opts.curves)?))
            }
            _ => None,
        };
        let fuel = if models.iter().any(|m| m.has_fuel()) {
            Some(Arc::new(match fuel {
                Some(f) => f,
                None => FuelHistory::from_catalog(catalog)?,
            }))
        } else {
            fuel.map(Arc::new)
        };
        Self::assemble(
            catalog.calendar(),
            domain,
            opts.family,
            catalog.prior_events(),
            events,
            stations,
            curves,
            fuel,
        )
    }

    /// Same inputs with a different event set (e.g. a simulated catalog).
    pub fn with_events(&self, events: Vec<FireEvent>) -> Result<Self> {
        if events
            .iter()
            .any(|e| !self.domain.contains(e.time, e.x, e.y))
        {
            return Err(Error::Config(
                "fit events must lie inside the study domain".into(),
            ));
        }
        Ok(Self {
            calendar: self.calendar,
            domain: self.domain.clone(),
            family: self.family,
            background_centers: self.background_centers.clone(),
            seasonal_days: self.seasonal_days.clone(),
            events,
            stations: self.stations.clone(),
            curves: self.curves.clone(),
            fuel: self.fuel.clone(),
            channels: Mutex::new(self.channels.lock().expect("channel cache").clone()),
        })
    }

    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    /// Station channel for a covariate term, built on first request.
    pub fn channel(&self, kind: ChannelKind, per_station: bool) -> Result<Arc<ChannelTable>> {
        let mut cache = self.channels.lock().expect("channel cache");
        if let Some(c) = cache.get(&(kind, per_station)) {
            return Ok(c.clone());
        }
        let table = self
            .stations
            .as_ref()
            .ok_or_else(|| Error::Config("weather models need station records".into()))?;
        let (first, last) = day_span(&self.domain);
        let curves = || {
            self.curves
                .as_ref()
                .ok_or_else(|| Error::Config("weather curves were not fitted".into()))
        };
        let built = match kind {
            ChannelKind::BurningIndex => {
                let vals: Vec<f64> = (first..=last)
                    .flat_map(|d| table.on_day(d).iter().filter_map(|r| r.bi))
                    .collect();
                if vals.is_empty() {
                    return Err(Error::Empty("burning index records"));
                }
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                ChannelTable::from_records(table, first, last, mean, |r| r.bi)?
            }
            ChannelKind::Additive(v) => {
                curves()?.additive_channel(v, table, first, last, per_station)?
            }
            ChannelKind::Product => curves()?.product_channel(table, first, last, per_station)?,
        };
        let built = Arc::new(built);
        cache.insert((kind, per_station), built.clone());
        Ok(built)
    }
}

/// Whole days overlapping the study window.
pub(crate) fn day_span(domain: &StudyDomain) -> (i64, i64) {
    (domain.t0.floor() as i64, domain.t1.ceil() as i64 - 1)
}
