use std::f64::consts::PI;

use crate::data::{FireCatalog, FireEvent, YEAR_DAYS};
use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Polygon};

/// Footprint of one past burn.
#[derive(Debug, Clone, PartialEq)]
pub enum BurnScar {
    Polygon(Polygon),
    /// Disk proxy used when no outline was recorded.
    Disk {
        x: f64,
        y: f64,
        radius: f64,
    },
}

impl BurnScar {
    /// The event's polygon, or a disk of equal area centred on its location.
    pub fn of_event(ev: &FireEvent) -> Self {
        match &ev.polygon {
            Some(p) => BurnScar::Polygon(p.clone()),
            None => BurnScar::Disk {
                x: ev.x,
                y: ev.y,
                radius: (ev.area / PI).sqrt(),
            },
        }
    }

    pub fn bbox(&self) -> BoundingBox {
        match self {
            BurnScar::Polygon(p) => p.bbox(),
            BurnScar::Disk { x, y, radius } => BoundingBox {
                xmin: x - radius,
                xmax: x + radius,
                ymin: y - radius,
                ymax: y + radius,
            },
        }
    }

    pub fn contains(&self, px: f64, py: f64) -> bool {
        match self {
            BurnScar::Polygon(p) => p.contains(px, py),
            BurnScar::Disk { x, y, radius } => (px - x).hypot(py - y) <= *radius,
        }
    }
}

const BUCKETS: usize = 32;

/// Time-ordered burn footprints with a bucket index for point queries.
#[derive(Debug, Clone, PartialEq)]
pub struct FuelHistory {
    times: Vec<f64>,
    scars: Vec<BurnScar>,
    extent: Option<BoundingBox>,
    /// Scar indices per bucket, ascending in time.
    buckets: Vec<Vec<usize>>,
}

impl FuelHistory {
    pub fn new(mut burns: Vec<(f64, BurnScar)>) -> Result<Self> {
        if burns.iter().any(|(t, _)| !t.is_finite()) {
            return Err(Error::NonFinite("burn time".into()));
        }
        burns.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (times, scars): (Vec<f64>, Vec<BurnScar>) = burns.into_iter().unzip();
        let extent = scars.iter().map(BurnScar::bbox).reduce(|a, b| BoundingBox {
            xmin: a.xmin.min(b.xmin),
            xmax: a.xmax.max(b.xmax),
            ymin: a.ymin.min(b.ymin),
            ymax: a.ymax.max(b.ymax),
        });
        let mut h = Self {
            times,
            scars,
            extent,
            buckets: vec![Vec::new(); BUCKETS * BUCKETS],
        };
        for (i, s) in h.scars.iter().enumerate() {
            let b = s.bbox();
            let (ix0, iy0) = h.bucket_of(b.xmin, b.ymin);
            let (ix1, iy1) = h.bucket_of(b.xmax, b.ymax);
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    h.buckets[iy * BUCKETS + ix].push(i);
                }
            }
        }
        Ok(h)
    }

    /// Every event of the catalog, as polygon or disk proxy.
    pub fn from_catalog(catalog: &FireCatalog) -> Result<Self> {
        Self::new(
            catalog
                .events()
                .iter()
                .map(|e| (e.time, BurnScar::of_event(e)))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn bucket_of(&self, x: f64, y: f64) -> (usize, usize) {
        let e = self.extent.expect("bucket lookup on empty history");
        let idx = |v: f64, lo: f64, hi: f64| {
            let span = (hi - lo).max(f64::MIN_POSITIVE);
            (((v - lo) / span * BUCKETS as f64).floor().max(0.0) as usize).min(BUCKETS - 1)
        };
        (idx(x, e.xmin, e.xmax), idx(y, e.ymin, e.ymax))
    }

    fn candidates(&self, x: f64, y: f64) -> &[usize] {
        match self.extent {
            Some(e) if e.contains(x, y) => {
                let (ix, iy) = self.bucket_of(x, y);
                &self.buckets[iy * BUCKETS + ix]
            }
            _ => &[],
        }
    }

    /// Burn times covering `(x, y)`, ascending.
    pub fn covering_times(&self, x: f64, y: f64) -> Vec<f64> {
        self.candidates(x, y)
            .iter()
            .filter(|&&i| self.scars[i].contains(x, y))
            .map(|&i| self.times[i])
            .collect()
    }

    /// Years since the most recent burn before `t` covering `(x, y)`;
    /// infinite when no recorded burn covers it.
    pub fn fuel_age(&self, t: f64, x: f64, y: f64) -> f64 {
        self.candidates(x, y)
            .iter()
            .rev()
            .filter(|&&i| self.times[i] < t)
            .find(|&&i| self.scars[i].contains(x, y))
            .map_or(f64::INFINITY, |&i| (t - self.times[i]) / YEAR_DAYS)
    }
}

/// Fuel age as of `t` from a precomputed ascending list of covering burns.
pub(crate) fn age_from_times(times: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|&b| b < t);
    if k == 0 {
        f64::INFINITY
    } else {
        (t - times[k - 1]) / YEAR_DAYS
    }
}

/// `min{D, ψ}`; an unburned point (infinite age) maps to `ψ`.
pub fn truncated_fuel(age: f64, psi: f64) -> f64 {
    age.min(psi)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn square(c: f64, h: f64) -> BurnScar {
        BurnScar::Polygon(
            Polygon::new(vec![
                (c - h, c - h),
                (c + h, c - h),
                (c + h, c + h),
                (c - h, c + h),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn age_from_single_burn() {
        let h = FuelHistory::new(vec![(0.0, square(0.0, 1.0))]).unwrap();
        assert_relative_eq!(
            h.fuel_age(5.0 * YEAR_DAYS, 0.5, 0.5),
            5.0,
            max_relative = 1e-14
        );
        assert_eq!(h.fuel_age(5.0, 3.0, 3.0), f64::INFINITY);
        // the burn itself is not prior to its own time
        assert_eq!(h.fuel_age(0.0, 0.0, 0.0), f64::INFINITY);
    }

    #[test]
    fn most_recent_nested_burn_wins() {
        let h = FuelHistory::new(vec![
            (27.0 * YEAR_DAYS, square(0.0, 1.0)),
            (0.0, square(0.0, 5.0)),
        ])
        .unwrap();
        let t = 30.0 * YEAR_DAYS;
        assert_relative_eq!(h.fuel_age(t, 0.0, 0.0), 3.0, max_relative = 1e-12);
        assert_relative_eq!(h.fuel_age(t, 3.0, 3.0), 30.0, max_relative = 1e-12);
    }

    #[test]
    fn disk_proxy_has_event_area() {
        let ev = FireEvent::new(0.0, 2.0, 2.0, PI);
        let scar = BurnScar::of_event(&ev);
        assert!(scar.contains(2.0, 2.99));
        assert!(!scar.contains(2.0, 3.01));
    }

    #[test]
    fn truncation() {
        assert_eq!(truncated_fuel(5.0, 22.0), 5.0);
        assert_eq!(truncated_fuel(40.0, 22.0), 22.0);
        assert_eq!(truncated_fuel(f64::INFINITY, 22.0), 22.0);
    }

    proptest! {
        #[test]
        fn index_matches_linear_scan(
            burns in prop::collection::vec((0.0f64..1000.0, 0.0f64..50.0, 0.0f64..50.0, 0.1f64..40.0), 1..30),
            qx in -5.0f64..55.0, qy in -5.0f64..55.0, t in 0.0f64..1200.0,
        ) {
            let list: Vec<(f64, BurnScar)> = burns
                .iter()
                .map(|&(bt, x, y, a)| (bt, BurnScar::of_event(&FireEvent::new(bt, x, y, a))))
                .collect();
            let h = FuelHistory::new(list.clone()).unwrap();
            let brute = list
                .iter()
                .filter(|(bt, s)| *bt < t && s.contains(qx, qy))
                .map(|(bt, _)| (t - bt) / YEAR_DAYS)
                .fold(f64::INFINITY, f64::min);
            prop_assert_eq!(h.fuel_age(t, qx, qy), brute);
            prop_assert_eq!(age_from_times(&h.covering_times(qx, qy), t), brute);
        }

        #[test]
        fn age_grows_linearly_between_burns(t in 10.0f64..500.0, dt in 0.0f64..100.0) {
            let h = FuelHistory::new(vec![(5.0, square(0.0, 1.0))]).unwrap();
            let a = h.fuel_age(t, 0.0, 0.0);
            let b = h.fuel_age(t + dt, 0.0, 0.0);
            prop_assert!((b - a - dt / YEAR_DAYS).abs() < 1e-9);
        }
    }
}
