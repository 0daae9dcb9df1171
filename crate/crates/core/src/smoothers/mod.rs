//! Data-driven components of the intensity: spatial background, seasonal
//! rate, and kernel regressions of daily burn area on weather.

mod background;
mod daily;
mod regression;

use std::io::Write;

pub use background::{SeasonalRate, SpatialBackground};
pub use daily::{aggregate_daily, circular_mean, daily_burn_area, DailyRow};
pub use regression::{
    cross_validate, cross_validate_directional, cross_validate_subsampled, DirectionalChoice,
    DirectionalCurve, Estimate, Reflection, RegressionCurve,
};

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Writes `(v, g(v))` samples as a two-column CSV.
pub fn write_curve_csv<F: Scalar, W: Write>(
    mut out: W,
    header: (&str, &str),
    samples: &[(F, F)],
) -> Result<()> {
    let io = |e| Error::io("<curve csv>", e);
    writeln!(out, "{},{}", header.0, header.1).map_err(io)?;
    for (v, g) in samples {
        writeln!(out, "{v},{g}").map_err(io)?;
    }
    Ok(())
}
