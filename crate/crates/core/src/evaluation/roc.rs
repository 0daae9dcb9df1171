use std::io::Write;

use crate::data::{FireEvent, SpaceTimeGrid};
use crate::error::{Error, Result};
use crate::models::Intensity;

/// Number of default thresholds: the 0th to 100th percentiles.
pub const DEFAULT_THRESHOLDS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Alarm rates by threshold, highest threshold first. The first point is
/// `(0, 0)` at `+∞` and the last is `(1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub positives: usize,
    pub negatives: usize,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * 0.5 * (w[0].tpr + w[1].tpr))
            .sum()
    }

    /// True-positive rate at false-positive rate `fpr`, interpolating
    /// linearly between points.
    pub fn tpr_at(&self, fpr: f64) -> f64 {
        for w in self.points.windows(2) {
            if fpr <= w[1].fpr {
                let span = w[1].fpr - w[0].fpr;
                if span <= 0.0 {
                    return w[1].tpr;
                }
                return w[0].tpr + (fpr - w[0].fpr) / span * (w[1].tpr - w[0].tpr);
            }
        }
        1.0
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Config(format!("writing ROC table: {e}"));
        w.write_record(["threshold", "fpr", "tpr"]).map_err(err)?;
        for p in &self.points {
            w.write_record([
                p.threshold.to_string(),
                p.fpr.to_string(),
                p.tpr.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("<roc writer>", e))
    }
}

/// Nearest-rank quantiles at `0, 1/(k−1), …, 1`, so every threshold is one
/// of the scores.
pub fn quantile_thresholds(scores: &[f64], k: usize) -> Vec<f64> {
    if scores.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    (0..k)
        .map(|i| {
            let q = if k == 1 {
                1.0
            } else {
                i as f64 / (k - 1) as f64
            };
            s[(q * (n - 1) as f64).round() as usize]
        })
        .collect()
}

/// ROC from per-cell scores and positivity. A cell is alarmed when its
/// score is at least the threshold.
pub fn roc_from_scores(
    scores: &[f64],
    positive: &[bool],
    thresholds: Option<&[f64]>,
) -> Result<RocCurve> {
    if scores.len() != positive.len() {
        return Err(Error::Config("scores and labels differ in length".into()));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::NonFinite(format!("alarm score {s}")));
    }
    let positives = positive.iter().filter(|&&p| p).count();
    if positives == 0 {
        return Err(Error::NoPositiveCells);
    }
    let negatives = positive.len() - positives;
    let mut thr: Vec<f64> = match thresholds {
        Some(t) if !t.is_empty() => t.to_vec(),
        Some(_) => return Err(Error::Config("threshold list is empty".into())),
        None => quantile_thresholds(scores, DEFAULT_THRESHOLDS),
    };
    thr.sort_by(|a, b| b.total_cmp(a));
    thr.dedup();

    // descending scores with cumulative label counts
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| scores[i]).collect();
    let mut cum_pos = vec![0usize; sorted.len() + 1];
    for (k, &i) in order.iter().enumerate() {
        cum_pos[k + 1] = cum_pos[k] + positive[i] as usize;
    }
    let rate = |count: usize, total: usize| {
        if total == 0 {
            0.0
        } else {
            count as f64 / total as f64
        }
    };
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    for &t in &thr {
        let alarmed = sorted.partition_point(|&s| s >= t);
        let tp = cum_pos[alarmed];
        points.push(RocPoint {
            threshold: t,
            fpr: rate(alarmed - tp, negatives),
            tpr: rate(tp, positives),
        });
    }
    let last = *points.last().expect("nonempty");
    if last.fpr < 1.0 || last.tpr < 1.0 {
        points.push(RocPoint {
            threshold: f64::NEG_INFINITY,
            fpr: 1.0,
            tpr: 1.0,
        });
    }
    Ok(RocCurve {
        points,
        positives,
        negatives,
    })
}

/// Alarm cells of `grid`, in (time, spatial cell) order, with the rate at
/// each cell center and whether any event falls in the cell.
pub fn alarm_cells<I: Intensity + ?Sized>(
    surface: &I,
    events: &[FireEvent],
    grid: &SpaceTimeGrid,
) -> Result<(Vec<f64>, Vec<bool>)> {
    let cells = grid.spatial_cells();
    let centers: Vec<(f64, f64)> = cells.iter().map(|c| (c.cx, c.cy)).collect();
    let mut index = vec![usize::MAX; grid.nx * grid.ny];
    for (k, c) in cells.iter().enumerate() {
        index[c.iy * grid.nx + c.ix] = k;
    }
    let mids: Vec<f64> = grid.time_cells().iter().map(|t| t.mid()).collect();
    let mut scores = Vec::with_capacity(mids.len() * cells.len());
    for block in mids.chunks(64) {
        scores.extend(surface.rates_product(block, &centers)?);
    }
    let mut positive = vec![false; scores.len()];
    for e in events {
        if let Some((ix, iy, it)) = grid.locate(e.time, e.x, e.y) {
            positive[it * cells.len() + index[iy * grid.nx + ix]] = true;
        }
    }
    Ok((scores, positive))
}

/// ROC of `surface` against `events` on the alarm grid.
pub fn roc<I: Intensity + ?Sized>(
    surface: &I,
    events: &[FireEvent],
    grid: &SpaceTimeGrid,
    thresholds: Option<&[f64]>,
) -> Result<RocCurve> {
    let (scores, positive) = alarm_cells(surface, events, grid)?;
    roc_from_scores(&scores, &positive, thresholds)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    fn monotone(c: &RocCurve) -> bool {
        c.points.windows(2).all(|w| {
            w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr && w[1].threshold < w[0].threshold
        })
    }

    #[test]
    fn constant_scores_give_the_diagonal() {
        let pos = [true, false, false, true, false];
        let c = roc_from_scores(&[2.0; 5], &pos, None).unwrap();
        assert_eq!(c.points.len(), 2);
        assert!(c.points.iter().all(|p| p.fpr == p.tpr));
        assert_abs_diff_eq!(c.auc(), 0.5);
    }

    #[test]
    fn endpoints() {
        let s = [0.1, 0.5, 0.9, 0.3];
        let pos = [false, true, true, false];
        let c = roc_from_scores(&s, &pos, Some(&[5.0, 0.0])).unwrap();
        assert_eq!((c.points[1].fpr, c.points[1].tpr), (0.0, 0.0));
        assert_eq!((c.points[2].fpr, c.points[2].tpr), (1.0, 1.0));
        assert_eq!(c.points.len(), 3);
        // perfect separation
        assert_abs_diff_eq!(roc_from_scores(&s, &pos, None).unwrap().auc(), 1.0);
    }

    #[test]
    fn no_positive_cells() {
        assert!(matches!(
            roc_from_scores(&[1.0, 2.0], &[false, false], None),
            Err(Error::NoPositiveCells)
        ));
    }

    #[test]
    fn quantiles_are_scores() {
        let s: Vec<f64> = (0..37).map(|i| (i * 7 % 37) as f64).collect();
        let q = quantile_thresholds(&s, 101);
        assert_eq!(q.len(), 101);
        assert_eq!(q[0], 0.0);
        assert_eq!(q[100], 36.0);
        assert!(q.iter().all(|v| s.contains(v)));
    }

    proptest! {
        #[test]
        fn monotone_and_invariant_under_increasing_maps(
            cells in prop::collection::vec((0.0f64..10.0, any::<bool>()), 2..200)
        ) {
            let scores: Vec<f64> = cells.iter().map(|c| c.0).collect();
            let mut pos: Vec<bool> = cells.iter().map(|c| c.1).collect();
            pos[0] = true;
            let a = roc_from_scores(&scores, &pos, None).unwrap();
            prop_assert!(monotone(&a));
            prop_assert!((0.0..=1.0).contains(&a.auc()));
            let warped: Vec<f64> = scores.iter().map(|s| (2.0 * s).exp() + 3.0).collect();
            let b = roc_from_scores(&warped, &pos, None).unwrap();
            prop_assert_eq!(a.points.len(), b.points.len());
            for (p, q) in a.points.iter().zip(&b.points) {
                prop_assert!((p.fpr - q.fpr).abs() <= 1e-12 && (p.tpr - q.tpr).abs() <= 1e-12);
            }
        }
    }
}
