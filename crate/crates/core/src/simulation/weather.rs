use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Calendar, Station, StationDay, StationTable, YEAR_DAYS};
use crate::error::{Error, Result};

/// `mean + amplitude·cos(2π(doy − peak_day)/year)` plus AR(1) noise with
/// stationary standard deviation `noise_sd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeasonalSeries {
    pub mean: f64,
    pub amplitude: f64,
    pub peak_day: f64,
    pub noise_sd: f64,
}

impl SeasonalSeries {
    pub fn cycle(&self, doy: f64) -> f64 {
        self.mean + self.amplitude * (TAU * (doy - self.peak_day) / YEAR_DAYS).cos()
    }
}

/// Dry offshore wind spells: strong wind from a fixed direction with low
/// humidity and no rain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    /// Daily probability that a spell starts.
    pub rate: f64,
    pub mean_days: f64,
    /// Added to the wind speed, km/h.
    pub wind: f64,
    /// Humidity during a spell, percent.
    pub rh: f64,
    /// Added to the temperature, °C.
    pub temp: f64,
    /// Direction the wind blows from, radians.
    pub direction: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeatherConfig {
    pub temp: SeasonalSeries,
    pub rh: SeasonalSeries,
    pub wind: SeasonalSeries,
    /// Chance of a wet day; the noise field is unused.
    pub rain_chance: SeasonalSeries,
    pub rain_mean_mm: f64,
    pub wind_dir_mean: f64,
    pub wind_dir_kappa: f64,
    /// Lag-one autocorrelation of the daily noise.
    pub ar: f64,
    /// Share of noise variance private to each station; the rest is common.
    pub station_share: f64,
    /// Standard deviation of fixed per-station offsets (temp, rh, wind).
    pub station_offset_sd: [f64; 3],
    pub episodes: EpisodeConfig,
    /// Chance that any one recorded value is missing.
    pub missing_rate: f64,
    /// Burning index `b0 + b_T·T − b_H·H + b_W·W − b_P·P`, floored at 0.
    pub bi_coefficients: [f64; 5],
}

impl Default for WeatherConfig {
    fn default() -> Self {
        Self {
            temp: SeasonalSeries {
                mean: 18.0,
                amplitude: 7.0,
                peak_day: 210.0,
                noise_sd: 2.5,
            },
            rh: SeasonalSeries {
                mean: 50.0,
                amplitude: 15.0,
                peak_day: 15.0,
                noise_sd: 10.0,
            },
            wind: SeasonalSeries {
                mean: 10.0,
                amplitude: 2.0,
                peak_day: 100.0,
                noise_sd: 3.0,
            },
            rain_chance: SeasonalSeries {
                mean: 0.12,
                amplitude: 0.1,
                peak_day: 30.0,
                noise_sd: 0.0,
            },
            rain_mean_mm: 8.0,
            wind_dir_mean: 4.0,
            wind_dir_kappa: 2.0,
            ar: 0.7,
            station_share: 0.3,
            station_offset_sd: [1.5, 5.0, 2.0],
            episodes: EpisodeConfig {
                rate: 0.02,
                mean_days: 2.5,
                wind: 30.0,
                rh: 8.0,
                temp: 6.0,
                direction: 0.8,
                kappa: 8.0,
            },
            missing_rate: 0.02,
            bi_coefficients: [20.0, 1.5, 0.6, 1.8, 2.0],
        }
    }
}

impl WeatherConfig {
    /// No noise, offsets, spells, rain or gaps: every station follows the
    /// pure seasonal cycles.
    pub fn noiseless() -> Self {
        let mut c = Self::default();
        c.temp.noise_sd = 0.0;
        c.rh.noise_sd = 0.0;
        c.wind.noise_sd = 0.0;
        c.rain_chance.mean = 0.0;
        c.rain_chance.amplitude = 0.0;
        c.station_offset_sd = [0.0; 3];
        c.episodes.rate = 0.0;
        c.missing_rate = 0.0;
        c.wind_dir_kappa = f64::INFINITY;
        c
    }

    fn validate(&self) -> Result<()> {
        if !(-1.0 < self.ar && self.ar < 1.0) {
            return Err(Error::invalid("ar", self.ar, "must lie in (-1, 1)"));
        }
        if !(0.0..=1.0).contains(&self.station_share) {
            return Err(Error::invalid(
                "station_share",
                self.station_share,
                "must lie in [0, 1]",
            ));
        }
        if !(0.0..=1.0).contains(&self.missing_rate) {
            return Err(Error::invalid(
                "missing_rate",
                self.missing_rate,
                "must lie in [0, 1]",
            ));
        }
        if !(0.0..=1.0).contains(&self.episodes.rate) {
            return Err(Error::invalid(
                "episodes.rate",
                self.episodes.rate,
                "must lie in [0, 1]",
            ));
        }
        if !(self.episodes.mean_days >= 1.0) {
            return Err(Error::invalid(
                "episodes.mean_days",
                self.episodes.mean_days,
                "must be at least 1",
            ));
        }
        for (name, s) in [("temp", &self.temp), ("rh", &self.rh), ("wind", &self.wind)] {
            if !(s.noise_sd >= 0.0) {
                return Err(Error::invalid(name, s.noise_sd, "noise must be >= 0"));
            }
        }
        if !(self.rain_mean_mm >= 0.0) {
            return Err(Error::invalid(
                "rain_mean_mm",
                self.rain_mean_mm,
                "must be >= 0",
            ));
        }
        Ok(())
    }
}

/// Simulated records plus the days that fell in a dry-wind spell.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedWeather {
    pub table: StationTable,
    pub episode_days: Vec<i64>,
}

/// Draw from the von Mises distribution (Best–Fisher rejection).
pub(crate) fn sample_von_mises<R: Rng + ?Sized>(rng: &mut R, mu: f64, kappa: f64) -> f64 {
    let theta = if kappa.is_infinite() {
        mu
    } else if kappa < 1e-8 {
        rng.gen::<f64>() * TAU
    } else {
        let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
        let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
        let r = (1.0 + rho * rho) / (2.0 * rho);
        loop {
            let z = (PI * rng.gen::<f64>()).cos();
            let f = (1.0 + r * z) / (r + z);
            let c = kappa * (r - f);
            let u2: f64 = rng.gen();
            let u3: f64 = rng.gen();
            if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
                let a = f.clamp(-1.0, 1.0).acos();
                break if u3 < 0.5 { mu - a } else { mu + a };
            }
        }
    };
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// AR(1) noise with unit stationary variance.
struct Ar1 {
    phi: f64,
    state: f64,
}

impl Ar1 {
    fn new<R: Rng + ?Sized>(phi: f64, rng: &mut R) -> Self {
        Self {
            phi,
            state: rng.sample(StandardNormal),
        }
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.state = self.phi * self.state + (1.0 - self.phi * self.phi).sqrt() * z;
        self.state
    }
}

/// Daily records for `first..=last` at every station, from one seeded
/// stream. Days are generated in order and stations in index order.
pub fn simulate_weather(
    stations: &[Station],
    first: i64,
    last: i64,
    calendar: Calendar,
    cfg: &WeatherConfig,
    seed: u64,
) -> Result<SimulatedWeather> {
    if stations.is_empty() {
        return Err(Error::Empty("stations"));
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = stations.len();
    let offsets: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            let mut o = [0.0; 3];
            for (k, v) in o.iter_mut().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                *v = cfg.station_offset_sd[k] * z;
            }
            o
        })
        .collect();
    let mut common: Vec<Ar1> = (0..3).map(|_| Ar1::new(cfg.ar, &mut rng)).collect();
    let mut own: Vec<Vec<Ar1>> = (0..n)
        .map(|_| (0..3).map(|_| Ar1::new(cfg.ar, &mut rng)).collect())
        .collect();
    let (wc, ws) = ((1.0 - cfg.station_share).sqrt(), cfg.station_share.sqrt());
    let series = [cfg.temp, cfg.rh, cfg.wind];
    let ep = cfg.episodes;

    let mut records = Vec::new();
    let mut episode_days = Vec::new();
    let mut spell_left = 0usize;
    for day in first..=last {
        let doy = calendar.day_of_year(day as f64 + 0.5);
        if spell_left == 0 && ep.rate > 0.0 && rng.gen::<f64>() < ep.rate {
            // geometric length with the configured mean
            let p = 1.0 / ep.mean_days;
            spell_left = 1;
            while rng.gen::<f64>() > p {
                spell_left += 1;
            }
        }
        let spell = spell_left > 0;
        if spell {
            episode_days.push(day);
            spell_left -= 1;
        }
        let shared: Vec<f64> = common.iter_mut().map(|a| a.step(&mut rng)).collect();
        let rain_p = cfg.rain_chance.cycle(doy).clamp(0.0, 1.0);
        let dir_mean = cfg.wind_dir_mean;
        for s in 0..n {
            let mut v = [0.0; 3];
            for k in 0..3 {
                let e = wc * shared[k] + ws * own[s][k].step(&mut rng);
                v[k] = series[k].cycle(doy) + offsets[s][k] + series[k].noise_sd * e;
            }
            let (mut temp, mut rh, mut wind) = (v[0], v[1], v[2]);
            let mut dir = sample_von_mises(&mut rng, dir_mean, cfg.wind_dir_kappa);
            let wet = rng.gen::<f64>() < rain_p;
            let amount = -cfg.rain_mean_mm * (1.0 - rng.gen::<f64>()).ln();
            let mut precip = if wet { amount } else { 0.0 };
            if spell {
                temp += ep.temp;
                wind += ep.wind;
                rh = ep.rh + 0.2 * (rh - cfg.rh.cycle(doy));
                dir = sample_von_mises(&mut rng, ep.direction, ep.kappa);
                precip = 0.0;
            }
            let rh = rh.clamp(0.0, 100.0);
            let wind = wind.max(0.0);
            let [b0, bt, bh, bw, bp] = cfg.bi_coefficients;
            let bi = (b0 + bt * temp - bh * rh + bw * wind - bp * precip).max(0.0);
            let mut keep = || rng.gen::<f64>() >= cfg.missing_rate;
            records.push(StationDay {
                station: s,
                day,
                temp: keep().then_some(temp),
                rh: keep().then_some(rh),
                wind: keep().then_some(wind),
                wind_dir: keep().then_some(dir),
                precip: keep().then_some(precip),
                bi: keep().then_some(bi),
            });
        }
    }
    Ok(SimulatedWeather {
        table: StationTable::new(stations.to_vec(), records)?,
        episode_days,
    })
}
