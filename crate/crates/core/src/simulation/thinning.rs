use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::TaperedPareto;
use crate::data::{Calendar, FireCatalog, FireEvent, StudyDomain};
use crate::error::{Error, Result};
use crate::models::Intensity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThinningConfig {
    /// Dominating rate; `None` takes the dense-grid maximum times
    /// `bound_margin`.
    pub lambda_max: Option<f64>,
    pub bound_margin: f64,
    pub seed: u64,
    pub area: TaperedPareto,
    /// Put event times at the midpoint of their day, as catalog files do.
    pub daily_times: bool,
}

impl Default for ThinningConfig {
    fn default() -> Self {
        Self {
            lambda_max: None,
            bound_margin: 1.5,
            seed: 0,
            area: TaperedPareto::default(),
            daily_times: true,
        }
    }
}

/// Largest rate at the quadrature cell centers and time-cell midpoints.
pub fn grid_max_rate<I: Intensity + ?Sized>(intensity: &I, domain: &StudyDomain) -> Result<f64> {
    Ok(grid_argmax(intensity, domain)?.0)
}

fn grid_argmax<I: Intensity + ?Sized>(
    intensity: &I,
    domain: &StudyDomain,
) -> Result<(f64, f64, f64, f64)> {
    let centers: Vec<(f64, f64)> = domain
        .grid
        .spatial_cells()
        .iter()
        .map(|c| (c.cx, c.cy))
        .collect();
    let mids: Vec<f64> = domain.grid.time_cells().iter().map(|t| t.mid()).collect();
    let mut top = (0.0f64, domain.t0, centers[0].0, centers[0].1);
    for block in mids.chunks(64) {
        for (k, r) in intensity
            .rates_product(block, &centers)?
            .into_iter()
            .enumerate()
        {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::NonFinite(format!("simulated intensity {r}")));
            }
            if r > top.0 {
                let (x, y) = centers[k % centers.len()];
                top = (r, block[k / centers.len()], x, y);
            }
        }
    }
    Ok(top)
}

/// Errors if the rate exceeds `lambda_max` anywhere on the dense grid.
pub fn check_rate_bound<I: Intensity + ?Sized>(
    intensity: &I,
    domain: &StudyDomain,
    lambda_max: f64,
) -> Result<()> {
    let (rate, t, x, y) = grid_argmax(intensity, domain)?;
    if rate > lambda_max {
        return Err(Error::RateBoundExceeded {
            t,
            x,
            y,
            rate,
            bound: lambda_max,
        });
    }
    Ok(())
}

/// Events of an inhomogeneous Poisson process by thinning: homogeneous
/// candidates at `λ_max` over the domain's bounding box, each kept with
/// probability `λ/λ_max`. Returned in time order.
pub fn simulate_events<I: Intensity + ?Sized>(
    intensity: &I,
    domain: &StudyDomain,
    cfg: &ThinningConfig,
) -> Result<Vec<FireEvent>> {
    cfg.area.validate()?;
    let lambda_max = match cfg.lambda_max {
        Some(l) => {
            check_rate_bound(intensity, domain, l)?;
            l
        }
        None => {
            if !(cfg.bound_margin >= 1.0) {
                return Err(Error::invalid(
                    "bound_margin",
                    cfg.bound_margin,
                    "must be at least 1",
                ));
            }
            grid_max_rate(intensity, domain)? * cfg.bound_margin
        }
    };
    if !(lambda_max >= 0.0) || !lambda_max.is_finite() {
        return Err(Error::invalid(
            "lambda_max",
            lambda_max,
            "must be finite and >= 0",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let b = domain.region.bbox();
    let volume = (b.xmax - b.xmin) * (b.ymax - b.ymin) * domain.duration();
    let mean = lambda_max * volume;
    let n = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|_| Error::invalid("lambda_max", lambda_max, "candidate count"))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    let mut cand: Vec<(f64, f64, f64, f64)> = (0..n)
        .map(|_| {
            let t = domain.t0 + rng.gen::<f64>() * domain.duration();
            let x = b.xmin + rng.gen::<f64>() * (b.xmax - b.xmin);
            let y = b.ymin + rng.gen::<f64>() * (b.ymax - b.ymin);
            (t, x, y, rng.gen::<f64>())
        })
        .filter(|&(t, x, y, _)| domain.contains(t, x, y))
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pts: Vec<(f64, f64, f64)> = cand.iter().map(|&(t, x, y, _)| (t, x, y)).collect();
    let rates = intensity.rates(&pts)?;
    let mut out = Vec::new();
    for (&(t, x, y, u), &r) in cand.iter().zip(&rates) {
        if r > lambda_max {
            return Err(Error::RateBoundExceeded {
                t,
                x,
                y,
                rate: r,
                bound: lambda_max,
            });
        }
        if !(r >= 0.0) {
            return Err(Error::NonFinite(format!(
                "simulated intensity at ({t}, {x}, {y})"
            )));
        }
        if u * lambda_max < r {
            let time = if cfg.daily_times { t.floor() + 0.5 } else { t };
            out.push(FireEvent::new(time, x, y, 0.0));
        }
    }
    for e in &mut out {
        e.area = cfg.area.sample(&mut rng);
    }
    Ok(out)
}

/// [`simulate_events`] wrapped as a catalog.
pub fn simulate_catalog<I: Intensity + ?Sized>(
    intensity: &I,
    domain: &StudyDomain,
    cfg: &ThinningConfig,
    calendar: Calendar,
    split: f64,
) -> Result<FireCatalog> {
    FireCatalog::new(simulate_events(intensity, domain, cfg)?, calendar, split)
}
