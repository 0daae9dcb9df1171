use std::collections::BTreeMap;
use std::io::Write;

use crate::data::{Calendar, FireEvent, SpaceTimeGrid};
use crate::error::{Error, Result};
use crate::models::Intensity;
use crate::num::compensated_sum;

/// One coarse cell: observed count minus integrated intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCell {
    pub ix: usize,
    pub iy: usize,
    pub it: usize,
    /// Center of the nominal coarse cell.
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub month: u32,
    pub count: usize,
    pub integral: f64,
    pub residual: f64,
}

/// Residuals on a coarse grid laid over the quadrature grid. Each fine cell
/// belongs to the coarse cell holding its center, and each event to the
/// coarse cell of its fine cell, so the coarse cells partition both the
/// events and the integral.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualGrid {
    pub dd: f64,
    pub dt: f64,
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    /// Cells that hold at least one fine cell, ordered by (it, iy, ix).
    pub cells: Vec<ResidualCell>,
    pub events: usize,
    pub total_integral: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    Month,
    Location,
}

/// Median absolute residual of one group of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// Month number, or `ix,iy` of the coarse column.
    pub key: String,
    pub cells: usize,
    pub median_abs: f64,
}

impl ResidualGrid {
    pub fn total_residual(&self) -> f64 {
        compensated_sum(self.cells.iter().map(|c| c.residual))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Config(format!("writing residual table: {e}"));
        w.write_record([
            "cell_x", "cell_y", "cell_t", "count", "integral", "residual",
        ])
        .map_err(err)?;
        for c in &self.cells {
            w.write_record([
                c.x.to_string(),
                c.y.to_string(),
                c.t.to_string(),
                c.count.to_string(),
                c.integral.to_string(),
                c.residual.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("<residual writer>", e))
    }

    /// Median absolute residual by calendar month of the cell midpoint, or by
    /// spatial column.
    pub fn summary(&self, by: Grouping) -> Vec<SummaryRow> {
        let mut groups: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        for c in &self.cells {
            let key = match by {
                Grouping::Month => (c.month as usize, 0),
                Grouping::Location => (c.iy, c.ix),
            };
            groups.entry(key).or_default().push(c.residual.abs());
        }
        groups
            .into_iter()
            .map(|((a, b), mut v)| SummaryRow {
                key: match by {
                    Grouping::Month => a.to_string(),
                    Grouping::Location => format!("{b},{a}"),
                },
                cells: v.len(),
                median_abs: median(&mut v),
            })
            .collect()
    }
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], by: Grouping, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Config(format!("writing residual summary: {e}"));
    let key = match by {
        Grouping::Month => "month",
        Grouping::Location => "cell",
    };
    w.write_record([key, "cells", "median_abs_residual"])
        .map_err(err)?;
    for r in rows {
        w.write_record([r.key.clone(), r.cells.to_string(), r.median_abs.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("<summary writer>", e))
}

/// Midpoint of the two central values for even lengths.
pub fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn coarse_count(extent: f64, pitch: f64) -> usize {
    ((extent / pitch) - 1e-9).ceil().max(1.0) as usize
}

fn coarse_index(v: f64, origin: f64, pitch: f64, n: usize) -> usize {
    (((v - origin) / pitch).floor().max(0.0) as usize).min(n - 1)
}

/// Residuals of `surface` on cells of side `dd` and length `dt`, integrating
/// by the midpoint rule on `fine`. Events outside `fine` are ignored.
pub fn residuals<I: Intensity + ?Sized>(
    surface: &I,
    events: &[FireEvent],
    fine: &SpaceTimeGrid,
    dd: f64,
    dt: f64,
    calendar: Calendar,
) -> Result<ResidualGrid> {
    if !(dd > 0.0) || !dd.is_finite() {
        return Err(Error::invalid("residual dd", dd, "must be positive"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("residual dt", dt, "must be positive"));
    }
    let nx = coarse_count(fine.x1 - fine.x0, dd);
    let ny = coarse_count(fine.y1 - fine.y0, dd);
    let nt = coarse_count(fine.t1 - fine.t0, dt);
    let flat = |ix: usize, iy: usize, it: usize| (it * ny + iy) * nx + ix;

    let cells = fine.spatial_cells();
    let centers: Vec<(f64, f64)> = cells.iter().map(|c| (c.cx, c.cy)).collect();
    let col: Vec<usize> = cells
        .iter()
        .map(|c| coarse_index(c.cy, fine.y0, dd, ny) * nx + coarse_index(c.cx, fine.x0, dd, nx))
        .collect();
    let times = fine.time_cells();
    let mut integral = vec![0.0; nx * ny * nt];
    let mut touched = vec![false; nx * ny * nt];
    for block in times.chunks(64) {
        let mids: Vec<f64> = block.iter().map(|t| t.mid()).collect();
        let lam = surface.rates_product(&mids, &centers)?;
        for (k, tc) in block.iter().enumerate() {
            let base = coarse_index(tc.mid(), fine.t0, dt, nt) * nx * ny;
            let row = &lam[k * centers.len()..(k + 1) * centers.len()];
            for ((l, c), &j) in row.iter().zip(&cells).zip(&col) {
                integral[base + j] += l * c.area * tc.len();
                touched[base + j] = true;
            }
        }
    }
    let mut counts = vec![0usize; nx * ny * nt];
    let mut located = 0;
    for e in events {
        let Some((ix, iy, it)) = fine.locate(e.time, e.x, e.y) else {
            continue;
        };
        let (xa, xb) = fine.x_range(ix);
        let (ya, yb) = fine.y_range(iy);
        let (ta, tb) = fine.t_range(it);
        let cx = coarse_index(0.5 * (xa + xb), fine.x0, dd, nx);
        let cy = coarse_index(0.5 * (ya + yb), fine.y0, dd, ny);
        let ct = coarse_index(0.5 * (ta + tb), fine.t0, dt, nt);
        counts[flat(cx, cy, ct)] += 1;
        touched[flat(cx, cy, ct)] = true;
        located += 1;
    }

    let mut out = Vec::new();
    for it in 0..nt {
        let (ta, tb) = (
            fine.t0 + it as f64 * dt,
            (fine.t0 + (it + 1) as f64 * dt).min(fine.t1),
        );
        let t = 0.5 * (ta + tb);
        for iy in 0..ny {
            for ix in 0..nx {
                let k = flat(ix, iy, it);
                if !touched[k] {
                    continue;
                }
                if !integral[k].is_finite() {
                    return Err(Error::NonFinite(format!("integral of residual cell {k}")));
                }
                let xa = fine.x0 + ix as f64 * dd;
                let ya = fine.y0 + iy as f64 * dd;
                out.push(ResidualCell {
                    ix,
                    iy,
                    it,
                    x: 0.5 * (xa + (xa + dd).min(fine.x1)),
                    y: 0.5 * (ya + (ya + dd).min(fine.y1)),
                    t,
                    month: calendar.month_of(t),
                    count: counts[k],
                    integral: integral[k],
                    residual: counts[k] as f64 - integral[k],
                });
            }
        }
    }
    Ok(ResidualGrid {
        dd,
        dt,
        nx,
        ny,
        nt,
        total_integral: compensated_sum(out.iter().map(|c| c.integral)),
        cells: out,
        events: located,
    })
}

/// Pooled moments of standardized residuals `(N − Λ)/√Λ`. Under the true
/// intensity each cell has mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonMoments {
    pub cells: usize,
    pub mean: f64,
    pub variance: f64,
}

impl PoissonMoments {
    /// Mean within `z` standard errors of 0 and variance within `rel` of 1.
    pub fn consistent(&self, z: f64, rel: f64) -> bool {
        let se = (1.0 / self.cells as f64).sqrt();
        self.mean.abs() <= z * se && (self.variance - 1.0).abs() <= rel
    }
}

/// Cells with integral below `min_integral` are skipped.
pub fn poisson_moments(grids: &[ResidualGrid], min_integral: f64) -> Result<PoissonMoments> {
    let z: Vec<f64> = grids
        .iter()
        .flat_map(|g| &g.cells)
        .filter(|c| c.integral >= min_integral && c.integral > 0.0)
        .map(|c| c.residual / c.integral.sqrt())
        .collect();
    if z.len() < 2 {
        return Err(Error::Empty("residual cells for the moment check"));
    }
    let n = z.len() as f64;
    let mean = compensated_sum(z.iter().copied()) / n;
    let variance = compensated_sum(z.iter().map(|v| (v - mean).powi(2))) / (n - 1.0);
    Ok(PoissonMoments {
        cells: z.len(),
        mean,
        variance,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use chrono::NaiveDate;

    use super::*;
    use crate::data::Region;
    use crate::inference::{integrate, Quadrature};
    use crate::models::{ConstantIntensity, FnIntensity};

    fn cal() -> Calendar {
        Calendar::new(NaiveDate::from_ymd_opt(2000, 1, 1).unwrap())
    }

    fn grid() -> SpaceTimeGrid {
        SpaceTimeGrid::new(
            &Region::rect(0.0, 12.0, 0.0, 12.0).unwrap(),
            0.0,
            90.0,
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn residuals_sum_to_count_minus_integral() {
        let f = FnIntensity(|t: f64, x: f64, y: f64| {
            0.01 * (1.0 + x / 12.0) * (1.5 + (t / 9.0).sin()) + 0.001 * y
        });
        let g = grid();
        let events: Vec<FireEvent> = (0..40)
            .map(|i| {
                FireEvent::new(
                    i as f64 * 2.2 + 0.3,
                    (i * 7 % 12) as f64 + 0.4,
                    (i * 5 % 12) as f64 + 0.9,
                    1.0,
                )
            })
            .collect();
        let r = residuals(&f, &events, &g, 25.6f64.sqrt(), 30.0, cal()).unwrap();
        assert_eq!((r.nx, r.ny, r.nt), (3, 3, 3));
        assert_eq!(r.events, 40);
        let lam = integrate(&f, &Quadrature::new(&g)).unwrap();
        assert_relative_eq!(r.total_integral, lam, max_relative = 1e-12);
        assert_relative_eq!(r.total_residual(), 40.0 - lam, max_relative = 1e-9);
    }

    #[test]
    fn single_coarse_cell_holds_everything() {
        let g = grid();
        let events = vec![
            FireEvent::new(3.0, 1.0, 1.0, 1.0),
            FireEvent::new(80.0, 11.0, 2.0, 1.0),
        ];
        let r = residuals(&ConstantIntensity(0.001), &events, &g, 100.0, 1000.0, cal()).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.cells[0].count, 2);
        assert_relative_eq!(
            r.cells[0].integral,
            0.001 * 144.0 * 90.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [1.0, 3.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }

    #[test]
    fn summaries_group_cells() {
        let g = grid();
        let r = residuals(&ConstantIntensity(0.01), &[], &g, 4.0, 30.0, cal()).unwrap();
        let by_loc = r.summary(Grouping::Location);
        assert_eq!(by_loc.len(), 9);
        assert!(by_loc.iter().all(|row| row.cells == 3));
        // 16 km² × 30 days × 0.01
        assert_relative_eq!(by_loc[0].median_abs, 4.8, max_relative = 1e-12);
        let by_month = r.summary(Grouping::Month);
        assert_eq!(
            by_month.iter().map(|m| m.key.as_str()).collect::<Vec<_>>(),
            ["1", "2", "3"]
        );
    }

    #[test]
    fn csv_header() {
        let r = residuals(&ConstantIntensity(0.01), &[], &grid(), 6.0, 45.0, cal()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("cell_x,cell_y,cell_t,count,integral,residual\n"));
        assert_eq!(text.lines().count(), 1 + 8);
    }

    #[test]
    fn bad_pitch() {
        assert!(residuals(&ConstantIntensity(1.0), &[], &grid(), 0.0, 30.0, cal()).is_err());
    }
}
