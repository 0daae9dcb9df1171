//! Complete synthetic data sets: a prior period from a hotspot process,
//! station weather, an exogenous burn history, and a fit period drawn from
//! a fully specified model.

use std::f64::consts::TAU;
use std::path::Path;
use std::sync::Arc;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{simulate_events, simulate_weather, ThinningConfig, WeatherConfig};
use crate::covariates::{CurveOptions, FuelHistory, WeatherCurves};
use crate::data::{
    parse_date, Calendar, FireCatalog, FireEvent, Region, Station, StationTable, StudyDomain,
    YEAR_DAYS,
};
use crate::error::{Error, Result};
use crate::inference::{LikelihoodEngine, Quadrature};
use crate::kernels::KernelFamily;
use crate::models::{
    DataOptions, FnIntensity, IntensitySurface, ModelData, ModelId, Param, ParamVector,
};
use crate::smoothers::aggregate_daily;

/// The generating model. Parameters not listed take defaults; when any
/// weight is missing, all weights are calibrated so that each term
/// contributes an equal share of `expected_events`. With every weight given
/// they are used as is, or multiplied by one common factor when `rescale`
/// is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthConfig {
    pub model: ModelId,
    pub expected_events: f64,
    pub params: toml::Table,
    pub rescale: bool,
}

impl Default for TruthConfig {
    fn default() -> Self {
        Self {
            model: ModelId::M8,
            expected_events: 2000.0,
            params: toml::Table::new(),
            rescale: false,
        }
    }
}

/// Default bandwidths of a generating model.
pub fn default_shape(p: Param) -> f64 {
    match p {
        Param::BetaM => 3.0,
        Param::BetaT => 20.0,
        Param::Psi => crate::models::DEFAULT_PSI,
        _ => 15.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Calendar epoch and start of the prior period.
    pub epoch: String,
    pub prior_years: f64,
    pub fit_years: f64,
    /// Length of the burn history before the fit period.
    pub history_years: f64,
    /// `[xmin, xmax, ymin, ymax]`, km.
    pub region: [f64; 4],
    pub quadrature_dd: f64,
    pub quadrature_dt: f64,
    pub stations: usize,
    /// Gaussian hotspots of the prior-period process.
    pub hotspots: usize,
    pub hotspot_sd: f64,
    pub prior_events: f64,
    /// Burn scars in the history, with areas uniform on `scar_area` km².
    pub scars: usize,
    pub scar_area: [f64; 2],
    pub family: KernelFamily,
    pub curves: CurveOptions,
    pub weather: WeatherConfig,
    pub thinning: ThinningConfig,
    pub truth: TruthConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            epoch: "1990-01-01".into(),
            prior_years: 4.0,
            fit_years: 8.0,
            history_years: 30.0,
            region: [0.0, 40.0, 0.0, 40.0],
            quadrature_dd: 1.0,
            quadrature_dt: 1.0,
            stations: 6,
            hotspots: 5,
            hotspot_sd: 4.0,
            prior_events: 400.0,
            scars: 60,
            scar_area: [5.0, 80.0],
            family: KernelFamily::Gaussian,
            curves: CurveOptions::default(),
            weather: WeatherConfig::default(),
            thinning: ThinningConfig::default(),
            truth: TruthConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn calendar(&self) -> Result<Calendar> {
        let epoch: NaiveDate = parse_date(&self.epoch, 0)
            .map_err(|_| Error::Config(format!("malformed epoch `{}`", self.epoch)))?;
        Ok(Calendar::new(epoch))
    }

    /// Day index where the fit period starts.
    pub fn split(&self) -> f64 {
        (self.prior_years * YEAR_DAYS).round()
    }

    pub fn region(&self) -> Result<Region> {
        let [a, b, c, d] = self.region;
        Region::rect(a, b, c, d)
    }

    pub fn fit_domain(&self) -> Result<StudyDomain> {
        let t0 = self.split();
        let t1 = t0 + (self.fit_years * YEAR_DAYS).round();
        StudyDomain::new(
            t0,
            t1,
            self.region()?,
            self.quadrature_dd,
            self.quadrature_dt,
        )
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("prior_years", self.prior_years),
            ("fit_years", self.fit_years),
            ("hotspot_sd", self.hotspot_sd),
            ("prior_events", self.prior_events),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, v, "must be positive"));
            }
        }
        if !(self.history_years >= 0.0) {
            return Err(Error::invalid(
                "history_years",
                self.history_years,
                "must be >= 0",
            ));
        }
        if self.stations == 0 || self.hotspots == 0 {
            return Err(Error::Config(
                "need at least one station and one hotspot".into(),
            ));
        }
        let [lo, hi] = self.scar_area;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::invalid("scar_area", lo, "needs 0 < low <= high"));
        }
        if !(self.truth.expected_events > 0.0) {
            return Err(Error::invalid(
                "truth.expected_events",
                self.truth.expected_events,
                "must be positive",
            ));
        }
        Ok(())
    }
}

/// A generated data set together with the surface that produced it.
#[derive(Debug)]
pub struct Scenario {
    pub calendar: Calendar,
    pub split: f64,
    pub domain: StudyDomain,
    pub stations: StationTable,
    pub episode_days: Vec<i64>,
    /// Burn history as a catalog of past fires.
    pub history: FireCatalog,
    pub truth: IntensitySurface,
    /// Prior and fit periods together.
    pub catalog: FireCatalog,
}

fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + rng.gen::<f64>() * (hi - lo)
}

/// Daily burn area used to shape the generating weather curves: hotter,
/// drier, windier days and offshore winds burn more.
fn pilot_area(r: &crate::smoothers::DailyRow, episode_dir: f64) -> f64 {
    let t = r.temp.unwrap_or(18.0);
    let h = r.rh.unwrap_or(50.0);
    let w = r.wind.unwrap_or(10.0);
    let dir = r.wind_dir.map_or(0.0, |d| (d - episode_dir).cos());
    let wet = if r.precip.unwrap_or(0.0) > 1.0 {
        0.3
    } else {
        1.0
    };
    wet * (0.10 * (t - 18.0) - 0.03 * (h - 50.0) + 0.04 * (w - 10.0) + 0.5 * dir).exp()
}

impl Scenario {
    pub fn build(cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let calendar = cfg.calendar()?;
        let region = cfg.region()?;
        let domain = cfg.fit_domain()?;
        let split = domain.t0;
        let b = region.bbox();
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let seeds: [u64; 4] = master.gen();

        // stations away from the edges
        let (mx, my) = (0.1 * (b.xmax - b.xmin), 0.1 * (b.ymax - b.ymin));
        let stations: Vec<Station> = (0..cfg.stations)
            .map(|i| Station {
                id: format!("ST{:02}", i + 1),
                x: uniform_in(&mut master, b.xmin + mx, b.xmax - mx),
                y: uniform_in(&mut master, b.ymin + my, b.ymax - my),
            })
            .collect();
        let first = split as i64;
        let last = domain.t1.ceil() as i64 - 1;
        let weather = simulate_weather(&stations, first, last, calendar, &cfg.weather, seeds[0])?;

        // burn history: disks of uniform area, recorded like catalog fires
        let h0 = split - (cfg.history_years * YEAR_DAYS).round();
        let scars: Vec<FireEvent> = (0..cfg.scars)
            .map(|_| {
                let t = uniform_in(&mut master, h0, domain.t1).floor() + 0.5;
                let x = uniform_in(&mut master, b.xmin, b.xmax);
                let y = uniform_in(&mut master, b.ymin, b.ymax);
                FireEvent::new(
                    t,
                    x,
                    y,
                    uniform_in(&mut master, cfg.scar_area[0], cfg.scar_area[1]),
                )
            })
            .collect();
        let history = FireCatalog::new(scars, calendar, split)?;

        // prior period: seasonal hotspot process
        let centers: Vec<(f64, f64, f64)> = (0..cfg.hotspots)
            .map(|_| {
                (
                    uniform_in(&mut master, b.xmin + mx, b.xmax - mx),
                    uniform_in(&mut master, b.ymin + my, b.ymax - my),
                    uniform_in(&mut master, 0.5, 1.5),
                )
            })
            .collect();
        let total: f64 = centers.iter().map(|c| c.2).sum();
        let sd = cfg.hotspot_sd;
        let mixture = move |x: f64, y: f64| -> f64 {
            centers
                .iter()
                .map(|&(cx, cy, w)| {
                    let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                    w / total * (-0.5 * r2 / (sd * sd)).exp() / (TAU * sd * sd)
                })
                .sum()
        };
        let prior_domain = StudyDomain::new(
            0.0,
            split,
            region.clone(),
            cfg.quadrature_dd,
            cfg.quadrature_dt,
        )?;
        let mass: f64 = prior_domain
            .grid
            .spatial_cells()
            .iter()
            .map(|c| c.area * mixture(c.cx, c.cy))
            .sum();
        let scale = cfg.prior_events / (mass * split);
        let prior_rate = FnIntensity(move |t: f64, x: f64, y: f64| {
            let doy = calendar.day_of_year(t);
            scale * mixture(x, y) * (1.0 + 0.8 * (TAU * (doy - 220.0) / YEAR_DAYS).cos())
        });
        let mut th = cfg.thinning.clone();
        th.seed = seeds[1];
        let prior = simulate_events(&prior_rate, &prior_domain, &th)?;
        if prior.is_empty() {
            return Err(Error::Empty("prior-period events"));
        }

        // generating model
        let model = cfg.truth.model;
        let needs_curves = model.terms().iter().any(|t| {
            matches!(
                t.kind,
                crate::models::TermKind::Channel {
                    kind: crate::models::ChannelKind::Additive(_)
                        | crate::models::ChannelKind::Product,
                    ..
                }
            )
        });
        let curves = if needs_curves {
            let empty = FireCatalog::new(Vec::new(), calendar, split)?;
            let mut rows = aggregate_daily(&empty, &weather.table, first, last);
            for r in &mut rows {
                r.area = pilot_area(r, cfg.weather.episodes.direction);
            }
            Some(Arc::new(WeatherCurves::fit(
                &rows,
                &weather.table,
                &cfg.curves,
            )?))
        } else {
            None
        };
        let fuel = if model.has_fuel() {
            Some(Arc::new(FuelHistory::from_catalog(&history)?))
        } else {
            None
        };
        let data = ModelData::assemble(
            calendar,
            domain.clone(),
            cfg.family,
            &prior,
            Vec::new(),
            Some(Arc::new(weather.table.clone())),
            curves,
            fuel,
        )?;
        let params = truth_params(&data, &domain, &cfg.truth)?;
        let truth = IntensitySurface::new(Arc::new(data), params)?;

        th.seed = seeds[2];
        let fit_events = simulate_events(&truth, &domain, &th)?;
        let mut all = prior;
        all.extend(fit_events);
        let catalog = FireCatalog::new(all, calendar, split)?;
        Ok(Self {
            calendar,
            split,
            domain,
            stations: weather.table,
            episode_days: weather.episode_days,
            history,
            truth,
            catalog,
        })
    }

    /// Model data rebuilt from the generated files, as a fit would see them.
    pub fn model_data(&self, models: &[ModelId], opts: &DataOptions) -> Result<ModelData> {
        let fuel = if models.iter().any(|m| m.has_fuel()) {
            Some(FuelHistory::from_catalog(&self.history)?)
        } else {
            None
        };
        ModelData::build(
            &self.catalog,
            Some(self.stations.clone()),
            self.domain.clone(),
            fuel,
            opts,
            models,
        )
    }

    /// Writes `catalog.csv`, `stations.csv`, `station_daily.csv` and
    /// `fuel_history.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.catalog.save(dir.join("catalog.csv"))?;
        self.stations.save(
            dir.join("stations.csv"),
            dir.join("station_daily.csv"),
            self.calendar,
        )?;
        self.history.save(dir.join("fuel_history.csv"))
    }
}

/// Shapes from the config or defaults; weights as given, or calibrated
/// from the term integrals.
fn truth_params(
    data: &ModelData,
    domain: &StudyDomain,
    truth: &TruthConfig,
) -> Result<ParamVector> {
    let model = truth.model;
    let mut given =
        ParamVector::from_fn(model, |p| if p.is_scale() { 1.0 } else { default_shape(p) })?;
    let mut all_scales = true;
    for p in model.params() {
        match truth.params.get(p.name()) {
            Some(v) => {
                let x = v
                    .as_float()
                    .or_else(|| v.as_integer().map(|i| i as f64))
                    .ok_or_else(|| {
                        Error::Config(format!("truth parameter `{}` must be a number", p.name()))
                    })?;
                given.set(p, x)?;
            }
            None if p.is_scale() => all_scales = false,
            None => {}
        }
    }
    for k in truth.params.keys() {
        if !model.params().iter().any(|p| p.name() == k) {
            return Err(Error::Config(format!(
                "model {model} has no parameter `{k}`"
            )));
        }
    }
    if all_scales && !truth.rescale {
        return Ok(given);
    }
    // the engine wants one event; any point of the domain will do
    let c = domain.grid.spatial_cells()[0];
    let probe = data.with_events(vec![FireEvent::new(domain.t0 + 0.5, c.cx, c.cy, 1.0)])?;
    let engine = LikelihoodEngine::new(Arc::new(probe), model, Quadrature::new(&domain.grid))?;
    let terms = model.terms();
    let mut integrals = Vec::with_capacity(terms.len());
    for (k, t) in terms.iter().enumerate() {
        let integral = engine.parts(k, given.value(t.shape))?.integral;
        if !(integral > 0.0) {
            return Err(Error::Config(format!(
                "term `{}` integrates to zero over the domain",
                t.scale.name()
            )));
        }
        integrals.push(integral);
    }
    if all_scales {
        let expected: f64 = terms
            .iter()
            .zip(&integrals)
            .map(|(t, i)| given.value(t.scale) * i)
            .sum();
        let factor = truth.expected_events / expected;
        for t in &terms {
            given.set(t.scale, given.value(t.scale) * factor)?;
        }
        return Ok(given);
    }
    let share = truth.expected_events / terms.len() as f64;
    for (t, i) in terms.iter().zip(&integrals) {
        given.set(t.scale, share / i)?;
    }
    Ok(given)
}
