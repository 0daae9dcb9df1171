//! Space-time covariate fields built from station records: interpolated
//! burning index, weather-curve fields and fuel age.

mod channel;
mod curves;
mod fuel;

pub use channel::{ChannelTable, StationWeights};
pub use curves::{CurveOptions, CurveVar, WeatherCurves, WeatherMeans};
pub(crate) use fuel::age_from_times;
pub use fuel::{truncated_fuel, BurnScar, FuelHistory};

use crate::data::Station;
use crate::error::{Error, Result};
use crate::kernels::KernelFamily;

/// Kernel-weighted mean of station values at `(x, y)`:
/// `Σ_s K(d_s/β) v_s / Σ_s K(d_s/β)` over the stations in `values`.
///
/// `values` pairs a station index with that station's value on `day`; an
/// empty list is reported as [`Error::NoReportingStation`].
pub fn interpolate_station_scalar(
    values: &[(usize, f64)],
    stations: &[Station],
    x: f64,
    y: f64,
    beta: f64,
    family: KernelFamily,
    day: i64,
) -> Result<f64> {
    let w = StationWeights::new(stations, x, y, beta, family)?;
    w.mean(values.iter().copied())
        .ok_or(Error::NoReportingStation { day })
}
