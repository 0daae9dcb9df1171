use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, WrappedKernel};
use crate::num::{compensated_sum, Scalar};

/// Kernel-smoothed density of prior-period event locations.
///
/// `m(x, y) = 1/(n₀ β²) Σ_j K₂(‖(x, y) − (x_j, y_j)‖ / β)` with `K₂` the radial
/// density of the chosen family, so the surface integrates to one over the
/// plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialBackground<F: Scalar> {
    centers: Arc<[(F, F)]>,
    beta: F,
    family: KernelFamily,
}

impl<F: Scalar> SpatialBackground<F> {
    pub fn fit(centers: Vec<(F, F)>, beta: F, family: KernelFamily) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Empty("prior catalog for the spatial background"));
        }
        Self::from_shared(centers.into(), beta, family)
    }

    pub fn from_shared(centers: Arc<[(F, F)]>, beta: F, family: KernelFamily) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Empty("prior catalog for the spatial background"));
        }
        check_bandwidth("beta_m", beta)?;
        Ok(Self {
            centers,
            beta,
            family,
        })
    }

    /// Same centers, new bandwidth. The center list is shared, not copied.
    pub fn with_bandwidth(&self, beta: F) -> Result<Self> {
        Self::from_shared(self.centers.clone(), beta, self.family)
    }

    pub fn bandwidth(&self) -> F {
        self.beta
    }

    pub fn centers(&self) -> &[(F, F)] {
        &self.centers
    }

    pub fn eval(&self, x: F, y: F) -> F {
        let inv = F::one() / self.beta;
        let total = compensated_sum(self.centers.iter().map(|&(cx, cy)| {
            let dx = (x - cx) * inv;
            let dy = (y - cy) * inv;
            self.family.eval_radial((dx * dx + dy * dy).sqrt())
        }));
        total * inv * inv / F::from_usize_lossy(self.centers.len())
    }
}

/// Wrapped-kernel density of prior-period event dates on the seasonal
/// circle. Queries take a position within the cycle (day of year).
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalRate<F: Scalar> {
    days: Arc<[F]>,
    kernel: WrappedKernel<F>,
}

impl<F: Scalar> SeasonalRate<F> {
    /// `days` are the prior events' positions within the cycle.
    pub fn fit(days: Vec<F>, beta_t: F, family: KernelFamily, period: F) -> Result<Self> {
        Self::from_shared(days.into(), beta_t, family, period)
    }

    pub fn from_shared(days: Arc<[F]>, beta_t: F, family: KernelFamily, period: F) -> Result<Self> {
        if days.is_empty() {
            return Err(Error::Empty("prior catalog for the seasonal rate"));
        }
        check_bandwidth("beta_t", beta_t)?;
        Ok(Self {
            days,
            kernel: WrappedKernel::new(family, beta_t, period)?,
        })
    }

    pub fn with_bandwidth(&self, beta_t: F) -> Result<Self> {
        check_bandwidth("beta_t", beta_t)?;
        Ok(Self {
            days: self.days.clone(),
            kernel: WrappedKernel::new(self.kernel.family(), beta_t, self.kernel.period())?,
        })
    }

    pub fn bandwidth(&self) -> F {
        self.kernel.bandwidth()
    }

    pub fn period(&self) -> F {
        self.kernel.period()
    }

    pub fn eval_day_of_year(&self, doy: F) -> F {
        let total = compensated_sum(self.days.iter().map(|&d| self.kernel.eval(doy - d)));
        total / F::from_usize_lossy(self.days.len())
    }
}

impl SeasonalRate<f64> {
    pub fn eval_at(&self, t: f64, calendar: &crate::data::Calendar) -> f64 {
        self.eval_day_of_year(calendar.day_of_year(t))
    }
}

pub(crate) fn check_bandwidth<F: Scalar>(name: &str, h: F) -> Result<()> {
    if !(h > F::zero()) || !h.is_finite() {
        return Err(Error::invalid(
            name,
            h.to_f64_lossy(),
            "bandwidth must be positive",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::data::YEAR_DAYS;

    #[test]
    fn single_center_peak_and_tail() {
        let m = SpatialBackground::fit(vec![(0.0, 0.0)], 1.0, KernelFamily::Gaussian).unwrap();
        assert_relative_eq!(m.eval(0.0, 0.0), 1.0 / TAU, max_relative = 1e-14);
        let oracle = (-12.5f64).exp() / TAU;
        assert_relative_eq!(m.eval(3.0, 4.0), oracle, max_relative = 1e-12);
        assert!((m.eval(3.0, 4.0) - 5.9e-7).abs() < 1e-8);
    }

    #[test]
    fn linear_in_centers() {
        let a = SpatialBackground::fit(vec![(0.0, 0.0)], 1.5, KernelFamily::Gaussian).unwrap();
        let b = SpatialBackground::fit(vec![(4.0, 0.0)], 1.5, KernelFamily::Gaussian).unwrap();
        let ab = SpatialBackground::fit(vec![(0.0, 0.0), (4.0, 0.0)], 1.5, KernelFamily::Gaussian)
            .unwrap();
        for (x, y) in [(2.0, 0.0), (1.0, 1.0), (-3.0, 2.0)] {
            assert_relative_eq!(
                ab.eval(x, y),
                0.5 * (a.eval(x, y) + b.eval(x, y)),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn background_normalizes_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let centers: Vec<(f64, f64)> = (0..40)
            .map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
            .collect();
        for fam in [KernelFamily::Gaussian, KernelFamily::Epanechnikov] {
            let m = SpatialBackground::fit(centers.clone(), 1.0, fam).unwrap();
            // stratified midpoint sampling over a generous box
            let (lo, hi, n) = (-10.0, 20.0, 600);
            let h = (hi - lo) / n as f64;
            let mut total = 0.0;
            for i in 0..n {
                for j in 0..n {
                    total += m.eval(lo + (i as f64 + 0.5) * h, lo + (j as f64 + 0.5) * h);
                }
            }
            total *= h * h;
            assert!((total - 1.0).abs() < 1e-3, "{fam:?} {total}");
        }
    }

    #[test]
    fn seasonal_peak_and_symmetry() {
        let s = SeasonalRate::fit(vec![200.0], 10.0, KernelFamily::Gaussian, YEAR_DAYS).unwrap();
        let peak = s.eval_day_of_year(200.0);
        for d in [1.0, 5.0, 30.0, 150.0] {
            assert!(s.eval_day_of_year(200.0 + d) < peak);
            assert_relative_eq!(
                s.eval_day_of_year(200.0 + d),
                s.eval_day_of_year(200.0 - d),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn seasonal_uniform_days_are_flat() {
        let days: Vec<f64> = (0..25).map(|i| i as f64 * YEAR_DAYS / 25.0).collect();
        let s = SeasonalRate::fit(days.clone(), 30.0, KernelFamily::Gaussian, YEAR_DAYS).unwrap();
        let flat = 1.0 / YEAR_DAYS;
        for k in 0..365 {
            let t = k as f64;
            // brute-force oracle, 200 images per side
            let brute: f64 = days
                .iter()
                .map(|&d| {
                    (-200..=200)
                        .map(|j| KernelFamily::Gaussian.eval((t - d + j as f64 * YEAR_DAYS) / 30.0))
                        .sum::<f64>()
                        / 30.0
                })
                .sum::<f64>()
                / 25.0;
            let v = s.eval_day_of_year(t);
            assert_relative_eq!(v, brute, max_relative = 1e-10);
            assert!((v - flat).abs() < 0.2 * flat);
        }
    }

    #[test]
    fn seasonal_integrates_to_one() {
        let days = vec![10.0, 100.0, 200.0, 360.0];
        for h in [2.0, 9.86, 34.1, 200.0] {
            let s = SeasonalRate::fit(days.clone(), h, KernelFamily::Gaussian, YEAR_DAYS).unwrap();
            let n = 20_000;
            let step = YEAR_DAYS / n as f64;
            let total: f64 = (0..n)
                .map(|i| s.eval_day_of_year((i as f64 + 0.5) * step))
                .sum::<f64>()
                * step;
            assert!((total - 1.0).abs() < 1e-8, "h={h} total={total}");
        }
    }

    #[test]
    fn empty_prior_is_an_error() {
        assert!(SpatialBackground::<f64>::fit(vec![], 1.0, KernelFamily::Gaussian).is_err());
        assert!(SeasonalRate::<f64>::fit(vec![], 1.0, KernelFamily::Gaussian, 365.0).is_err());
        assert!(SpatialBackground::fit(vec![(0.0, 0.0)], 0.0, KernelFamily::Gaussian).is_err());
    }

    #[test]
    fn with_bandwidth_keeps_family() {
        let s = SeasonalRate::fit(vec![0.0], 5.0, KernelFamily::Epanechnikov, YEAR_DAYS).unwrap();
        let s2 = s.with_bandwidth(7.0).unwrap();
        assert_eq!(s2.eval_day_of_year(8.0), 0.0);
        let g = SeasonalRate::fit(vec![0.0], 5.0, KernelFamily::Gaussian, YEAR_DAYS).unwrap();
        assert!(g.with_bandwidth(7.0).unwrap().eval_day_of_year(8.0) > 0.0);
    }
}
