use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::calendar::{parse_date, Calendar};
use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Polygon};

/// Spatial extent of the study area.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Rect(BoundingBox),
    Polygon(Polygon),
}

impl Region {
    pub fn rect(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        if !(xmax > xmin) || !(ymax > ymin) {
            return Err(Error::Config(format!(
                "region bounds [{xmin}, {xmax}] x [{ymin}, {ymax}] are empty"
            )));
        }
        Ok(Region::Rect(BoundingBox {
            xmin,
            xmax,
            ymin,
            ymax,
        }))
    }

    pub fn bbox(&self) -> BoundingBox {
        match self {
            Region::Rect(b) => *b,
            Region::Polygon(p) => p.bbox(),
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Region::Rect(b) => b.contains(x, y),
            Region::Polygon(p) => p.contains(x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialCell {
    pub ix: usize,
    pub iy: usize,
    pub cx: f64,
    pub cy: f64,
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeCell {
    pub it: usize,
    pub start: f64,
    pub end: f64,
}

impl TimeCell {
    pub fn mid(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

/// Rectangular space-time cells of pitch `dd` (km) and `dt` (days). Edge
/// cells are clipped to the bounding box and to `[t0, t1)`; cells whose
/// center falls outside the region are masked out.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    pub dd: f64,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub nt: usize,
    mask: Vec<bool>,
}

fn cell_count(extent: f64, pitch: f64) -> usize {
    ((extent / pitch) - 1e-9).ceil().max(1.0) as usize
}

impl SpaceTimeGrid {
    pub fn new(region: &Region, t0: f64, t1: f64, dd: f64, dt: f64) -> Result<Self> {
        if !(dd > 0.0) || !dd.is_finite() {
            return Err(Error::invalid("dd", dd, "spatial pitch must be positive"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", dt, "temporal pitch must be positive"));
        }
        if !(t1 > t0) {
            return Err(Error::Config(format!("time range [{t0}, {t1}) is empty")));
        }
        let b = region.bbox();
        let nx = cell_count(b.width(), dd);
        let ny = cell_count(b.height(), dd);
        let nt = cell_count(t1 - t0, dt);
        let mut grid = Self {
            x0: b.xmin,
            y0: b.ymin,
            x1: b.xmax,
            y1: b.ymax,
            nx,
            ny,
            dd,
            t0,
            t1,
            dt,
            nt,
            mask: vec![true; nx * ny],
        };
        if let Region::Polygon(p) = region {
            for iy in 0..ny {
                for ix in 0..nx {
                    let (cx, cy) = grid.center(ix, iy);
                    grid.mask[iy * nx + ix] = p.contains(cx, cy);
                }
            }
        }
        if !grid.mask.iter().any(|&m| m) {
            return Err(Error::Config("region contains no grid cell".into()));
        }
        Ok(grid)
    }

    pub fn x_range(&self, ix: usize) -> (f64, f64) {
        let lo = self.x0 + ix as f64 * self.dd;
        (lo, (lo + self.dd).min(self.x1))
    }

    pub fn y_range(&self, iy: usize) -> (f64, f64) {
        let lo = self.y0 + iy as f64 * self.dd;
        (lo, (lo + self.dd).min(self.y1))
    }

    pub fn t_range(&self, it: usize) -> (f64, f64) {
        let lo = self.t0 + it as f64 * self.dt;
        (lo, (lo + self.dt).min(self.t1))
    }

    fn center(&self, ix: usize, iy: usize) -> (f64, f64) {
        let (xa, xb) = self.x_range(ix);
        let (ya, yb) = self.y_range(iy);
        (0.5 * (xa + xb), 0.5 * (ya + yb))
    }

    pub fn is_active(&self, ix: usize, iy: usize) -> bool {
        self.mask[iy * self.nx + ix]
    }

    /// In-region spatial cells, row-major in (iy, ix).
    pub fn spatial_cells(&self) -> Vec<SpatialCell> {
        let mut out = Vec::new();
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if !self.is_active(ix, iy) {
                    continue;
                }
                let (xa, xb) = self.x_range(ix);
                let (ya, yb) = self.y_range(iy);
                out.push(SpatialCell {
                    ix,
                    iy,
                    cx: 0.5 * (xa + xb),
                    cy: 0.5 * (ya + yb),
                    area: (xb - xa) * (yb - ya),
                });
            }
        }
        out
    }

    pub fn time_cells(&self) -> Vec<TimeCell> {
        (0..self.nt)
            .map(|it| {
                let (start, end) = self.t_range(it);
                TimeCell { it, start, end }
            })
            .collect()
    }

    pub fn area(&self) -> f64 {
        self.spatial_cells().iter().map(|c| c.area).sum()
    }

    pub fn volume(&self) -> f64 {
        self.area() * (self.t1 - self.t0)
    }

    /// Nominal interior cell volume `dd²·dt`.
    pub fn cell_volume(&self) -> f64 {
        self.dd * self.dd * self.dt
    }

    /// Spatial cell containing `(x, y)`, if it is inside the active region.
    pub fn locate_xy(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !(x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1) {
            return None;
        }
        let ix = (((x - self.x0) / self.dd).floor() as usize).min(self.nx - 1);
        let iy = (((y - self.y0) / self.dd).floor() as usize).min(self.ny - 1);
        self.is_active(ix, iy).then_some((ix, iy))
    }

    pub fn locate_t(&self, t: f64) -> Option<usize> {
        if !(t >= self.t0 && t < self.t1) {
            return None;
        }
        Some((((t - self.t0) / self.dt).floor() as usize).min(self.nt - 1))
    }

    pub fn locate(&self, t: f64, x: f64, y: f64) -> Option<(usize, usize, usize)> {
        let it = self.locate_t(t)?;
        let (ix, iy) = self.locate_xy(x, y)?;
        Some((ix, iy, it))
    }

    /// Same extent, different pitch.
    pub fn with_pitch(&self, region: &Region, dd: f64, dt: f64) -> Result<Self> {
        Self::new(region, self.t0, self.t1, dd, dt)
    }
}

/// Study window `[t0, t1) × region` with its quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyDomain {
    pub t0: f64,
    pub t1: f64,
    pub region: Region,
    pub grid: SpaceTimeGrid,
}

impl StudyDomain {
    pub fn new(t0: f64, t1: f64, region: Region, dd: f64, dt: f64) -> Result<Self> {
        let grid = SpaceTimeGrid::new(&region, t0, t1, dd, dt)?;
        if !(grid.area() > 0.0) {
            return Err(Error::Config("region area must be positive".into()));
        }
        Ok(Self {
            t0,
            t1,
            region,
            grid,
        })
    }

    /// Membership is decided by the quadrature grid so that the likelihood
    /// integral and the event sum cover the same set.
    pub fn contains(&self, t: f64, x: f64, y: f64) -> bool {
        self.grid.locate(t, x, y).is_some()
    }

    pub fn duration(&self) -> f64 {
        self.t1 - self.t0
    }
}

/// Domain section of the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Calendar anchor for day indices.
    pub epoch: String,
    /// End of the prior (background-estimation) period.
    pub split: String,
    /// Start of the fitting window.
    pub start: String,
    /// End of the fitting window (exclusive).
    pub end: String,
    /// `[xmin, xmax, ymin, ymax]` in km.
    pub region: [f64; 4],
    /// Optional WKT polygon; restricts the bounding region.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_wkt: Option<String>,
    #[serde(default = "default_quadrature_dd")]
    pub quadrature_dd: f64,
    #[serde(default = "default_quadrature_dt")]
    pub quadrature_dt: f64,
}

fn default_quadrature_dd() -> f64 {
    1.0
}

fn default_quadrature_dt() -> f64 {
    1.0
}

impl DomainConfig {
    pub fn calendar(&self) -> Result<Calendar> {
        Ok(Calendar::new(self.parse("epoch", &self.epoch)?))
    }

    fn parse(&self, key: &str, value: &str) -> Result<NaiveDate> {
        parse_date(value, 0)
            .map_err(|_| Error::Config(format!("`{key}`: malformed date `{value}`")))
    }

    pub fn split_time(&self) -> Result<f64> {
        let cal = self.calendar()?;
        Ok(cal.day_index(self.parse("split", &self.split)?) as f64)
    }

    pub fn region(&self) -> Result<Region> {
        match &self.region_wkt {
            Some(wkt) => Ok(Region::Polygon(Polygon::from_wkt(wkt)?)),
            None => {
                let [xmin, xmax, ymin, ymax] = self.region;
                Region::rect(xmin, xmax, ymin, ymax)
            }
        }
    }

    pub fn study_domain(&self) -> Result<StudyDomain> {
        let cal = self.calendar()?;
        let t0 = cal.day_index(self.parse("start", &self.start)?) as f64;
        let t1 = cal.day_index(self.parse("end", &self.end)?) as f64;
        if !(t1 > t0) {
            return Err(Error::Config("`end` must be after `start`".into()));
        }
        StudyDomain::new(
            t0,
            t1,
            self.region()?,
            self.quadrature_dd,
            self.quadrature_dt,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipped_edge_cells_cover_region_exactly() {
        let region = Region::rect(0.0, 10.0, 0.0, 5.0).unwrap();
        let g = SpaceTimeGrid::new(&region, 0.0, 10.0, 4.0, 3.0).unwrap();
        assert_eq!((g.nx, g.ny, g.nt), (3, 2, 4));
        assert!((g.area() - 50.0).abs() < 1e-12);
        assert!((g.volume() - 500.0).abs() < 1e-9);
        let total_t: f64 = g.time_cells().iter().map(TimeCell::len).sum();
        assert!((total_t - 10.0).abs() < 1e-12);
        assert_eq!(g.cell_volume(), 48.0);
    }

    #[test]
    fn locate_respects_bounds() {
        let region = Region::rect(0.0, 10.0, 0.0, 10.0).unwrap();
        let g = SpaceTimeGrid::new(&region, 0.0, 5.0, 1.0, 1.0).unwrap();
        assert_eq!(g.locate(0.5, 0.5, 9.99), Some((0, 9, 0)));
        assert_eq!(g.locate(4.999, 10.0, 10.0), Some((9, 9, 4)));
        assert_eq!(g.locate(5.0, 1.0, 1.0), None);
        assert_eq!(g.locate(1.0, -0.1, 1.0), None);
    }

    #[test]
    fn polygon_region_masks_cells() {
        let tri = Polygon::new(vec![(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)]).unwrap();
        let region = Region::Polygon(tri);
        let g = SpaceTimeGrid::new(&region, 0.0, 1.0, 1.0, 1.0).unwrap();
        // cells whose center lies below x + y = 10: 45 of 100
        assert_eq!(g.spatial_cells().len(), 45);
        assert!(g.locate_xy(9.5, 9.5).is_none());
        assert!(g.locate_xy(0.5, 0.5).is_some());
    }

    #[test]
    fn rejects_bad_pitch() {
        let region = Region::rect(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(SpaceTimeGrid::new(&region, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(SpaceTimeGrid::new(&region, 0.0, 1.0, 1.0, -1.0).is_err());
        assert!(SpaceTimeGrid::new(&region, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn config_builds_domain() {
        let cfg: DomainConfig = toml::from_str(
            r#"
            epoch = "1970-01-01"
            split = "1970-01-11"
            start = "1970-01-11"
            end = "1970-01-21"
            region = [0.0, 4.0, 0.0, 2.0]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.split_time().unwrap(), 10.0);
        let d = cfg.study_domain().unwrap();
        assert_eq!((d.t0, d.t1), (10.0, 20.0));
        assert!((d.grid.volume() - 80.0).abs() < 1e-12);
        assert!(d.contains(10.5, 1.0, 1.0));
        assert!(!d.contains(9.5, 1.0, 1.0));
    }
}
