//! Nadaraya–Watson regressions of burn area on weather predictors.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, VonMisesKernel};
use crate::num::{compensated_sum, Scalar};

use super::background::check_bandwidth;

/// Edge handling for a 1-D regression predictor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Reflection<F> {
    None,
    /// Mirror every sample about the observed minimum and maximum.
    #[default]
    DataRange,
    Bounds(F, F),
}

/// Result of a regression query. `fallback` is set when every kernel weight
/// vanished (compact kernels only) and the nearest sample's response was
/// returned instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<F> {
    pub value: F,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Predictor<F: Scalar> {
    h: F,
    family: KernelFamily,
    bounds: Option<(F, F)>,
}

impl<F: Scalar> Predictor<F> {
    fn new(samples: &[F], h: F, family: KernelFamily, reflection: Reflection<F>) -> Result<Self> {
        check_bandwidth("h", h)?;
        let bounds = match reflection {
            Reflection::None => None,
            Reflection::DataRange => {
                let lo = samples.iter().copied().fold(F::infinity(), F::min);
                let hi = samples.iter().copied().fold(F::neg_infinity(), F::max);
                Some((lo, hi))
            }
            Reflection::Bounds(lo, hi) => {
                if !(lo <= hi) {
                    return Err(Error::invalid(
                        "reflection bounds",
                        lo.to_f64_lossy(),
                        "lower bound exceeds upper bound",
                    ));
                }
                Some((lo, hi))
            }
        };
        Ok(Self { h, family, bounds })
    }

    /// Summed kernel weight of sample `vj` and its mirror images at `v`.
    #[inline]
    fn weight(&self, v: F, vj: F) -> F {
        let k = |c: F| self.family.eval((v - c) / self.h);
        match self.bounds {
            None => k(vj),
            Some((lo, hi)) => {
                let two = F::lit(2.0);
                k(vj) + k(two * lo - vj) + k(two * hi - vj)
            }
        }
    }

    #[inline]
    fn ln_weight(&self, v: F, vj: F) -> F {
        let k = |c: F| self.family.ln_eval((v - c) / self.h);
        match self.bounds {
            None => k(vj),
            Some((lo, hi)) => {
                let two = F::lit(2.0);
                ln_sum3(k(vj), k(two * lo - vj), k(two * hi - vj))
            }
        }
    }
}

/// `ln(e^a + e^b + e^c)`.
#[inline]
fn ln_sum3<F: Scalar>(a: F, b: F, c: F) -> F {
    let m = a.max(b).max(c);
    if m == F::neg_infinity() {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp() + (c - m).exp()).ln()
}

/// Weighted mean of `a` over all samples except `exclude`. Falls back to a
/// log-space pass with a running maximum when the linear weights underflow,
/// and returns `None` only when every weight is exactly zero.
fn weighted_mean<F: Scalar>(
    a: &[F],
    exclude: Option<usize>,
    weight: impl Fn(usize) -> F,
    ln_weight: impl Fn(usize) -> F,
) -> Option<F> {
    let (mut num, mut den) = (F::zero(), F::zero());
    for (j, &aj) in a.iter().enumerate() {
        if Some(j) != exclude {
            let w = weight(j);
            num = num + w * aj;
            den = den + w;
        }
    }
    if den > F::min_positive_value().sqrt() && den.is_finite() {
        return Some(num / den);
    }
    let (mut max, mut num, mut den) = (F::neg_infinity(), F::zero(), F::zero());
    for (j, &aj) in a.iter().enumerate() {
        if Some(j) == exclude {
            continue;
        }
        let lw = ln_weight(j);
        if lw == F::neg_infinity() {
            continue;
        }
        if lw > max {
            let scale = (max - lw).exp();
            num = num * scale;
            den = den * scale;
            max = lw;
        }
        let w = (lw - max).exp();
        num = num + w * aj;
        den = den + w;
    }
    (den > F::zero()).then(|| num / den)
}

fn nearest<F: Scalar>(values: &[F], v: F, exclude: Option<usize>) -> usize {
    let mut best: Option<usize> = None;
    for (j, &x) in values.iter().enumerate() {
        if Some(j) == exclude {
            continue;
        }
        if best.is_none_or(|b| (x - v).abs() < (values[b] - v).abs()) {
            best = Some(j);
        }
    }
    best.expect("nonempty sample set")
}

/// Indices at which leave-one-out predictions are scored: all of them, or an
/// evenly strided subset of at most `max_points`.
fn scoring_indices(n: usize, max_points: Option<usize>) -> Vec<usize> {
    match max_points {
        Some(m) if m > 0 && m < n => (0..m).map(|k| k * n / m).collect(),
        _ => (0..n).collect(),
    }
}

/// Kernel regression `g(v) = Σ K((v − v_j)/h) A_j / Σ K((v − v_j)/h)` with
/// optional reflection of the samples about the predictor bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionCurve<F: Scalar> {
    v: Vec<F>,
    a: Vec<F>,
    predictor: Predictor<F>,
}

impl<F: Scalar> RegressionCurve<F> {
    pub fn fit(
        pairs: &[(F, F)],
        h: F,
        family: KernelFamily,
        reflection: Reflection<F>,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("regression samples"));
        }
        if pairs.iter().any(|(v, a)| !v.is_finite() || !a.is_finite()) {
            return Err(Error::NonFinite("regression samples".into()));
        }
        let (v, a): (Vec<F>, Vec<F>) = pairs.iter().copied().unzip();
        let predictor = Predictor::new(&v, h, family, reflection)?;
        Ok(Self { v, a, predictor })
    }

    pub fn bandwidth(&self) -> F {
        self.predictor.h
    }

    pub fn bounds(&self) -> Option<(F, F)> {
        self.predictor.bounds
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn response_range(&self) -> (F, F) {
        let lo = self.a.iter().copied().fold(F::infinity(), F::min);
        let hi = self.a.iter().copied().fold(F::neg_infinity(), F::max);
        (lo, hi)
    }

    fn predict(&self, v: F, exclude: Option<usize>) -> Estimate<F> {
        let p = &self.predictor;
        match weighted_mean(
            &self.a,
            exclude,
            |j| p.weight(v, self.v[j]),
            |j| p.ln_weight(v, self.v[j]),
        ) {
            Some(value) => Estimate {
                value,
                fallback: false,
            },
            None => Estimate {
                value: self.a[nearest(&self.v, v, exclude)],
                fallback: true,
            },
        }
    }

    pub fn eval_detail(&self, v: F) -> Estimate<F> {
        self.predict(v, None)
    }

    pub fn eval(&self, v: F) -> F {
        self.predict(v, None).value
    }

    /// Mean squared leave-one-out prediction error.
    pub fn loo_error(&self) -> F {
        self.loo_error_subsampled(None)
    }

    /// Leave-one-out error scored on at most `max_points` samples; each
    /// prediction still uses every other sample.
    pub fn loo_error_subsampled(&self, max_points: Option<usize>) -> F {
        assert!(self.v.len() >= 2, "leave-one-out needs two samples");
        let idx = scoring_indices(self.v.len(), max_points);
        let errs: Vec<F> = idx
            .par_iter()
            .map(|&i| {
                let e = self.predict(self.v[i], Some(i)).value - self.a[i];
                e * e
            })
            .collect();
        compensated_sum(errs) / F::from_usize_lossy(idx.len())
    }

    /// `n` evenly spaced `(v, g(v))` samples over `[lo, hi]`.
    pub fn samples(&self, lo: F, hi: F, n: usize) -> Vec<(F, F)> {
        let n = n.max(2);
        let steps = F::from_usize_lossy(n - 1);
        (0..n)
            .map(|i| {
                let v = lo + (hi - lo) * F::from_usize_lossy(i) / steps;
                (v, self.eval(v))
            })
            .collect()
    }
}

/// Product-kernel regression on wind speed and direction:
/// `g(W, θ) = Σ K(|W − W_j|/h) vM(θ − θ_j; μ₀, κ₀) A_j / Σ K(·) vM(·)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalCurve<F: Scalar> {
    speed: Vec<F>,
    theta: Vec<F>,
    a: Vec<F>,
    predictor: Predictor<F>,
    vm: VonMisesKernel<F>,
}

impl<F: Scalar> DirectionalCurve<F> {
    /// `samples` are `(W_j, θ_j, A_j)`.
    pub fn fit(
        samples: &[(F, F, F)],
        h_w: F,
        mu0: F,
        kappa0: F,
        family: KernelFamily,
        reflection: Reflection<F>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("directional regression samples"));
        }
        if samples
            .iter()
            .any(|(w, t, a)| !w.is_finite() || !t.is_finite() || !a.is_finite())
        {
            return Err(Error::NonFinite("directional regression samples".into()));
        }
        let speed: Vec<F> = samples.iter().map(|s| s.0).collect();
        let theta = samples.iter().map(|s| s.1).collect();
        let a = samples.iter().map(|s| s.2).collect();
        let predictor = Predictor::new(&speed, h_w, family, reflection)?;
        let vm = VonMisesKernel::new(mu0, kappa0)?;
        Ok(Self {
            speed,
            theta,
            a,
            predictor,
            vm,
        })
    }

    pub fn bandwidth(&self) -> F {
        self.predictor.h
    }

    pub fn von_mises(&self) -> &VonMisesKernel<F> {
        &self.vm
    }

    pub fn len(&self) -> usize {
        self.speed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speed.is_empty()
    }

    pub fn response_range(&self) -> (F, F) {
        let lo = self.a.iter().copied().fold(F::infinity(), F::min);
        let hi = self.a.iter().copied().fold(F::neg_infinity(), F::max);
        (lo, hi)
    }

    fn predict(&self, w: F, theta: F, exclude: Option<usize>) -> Estimate<F> {
        let p = &self.predictor;
        match weighted_mean(
            &self.a,
            exclude,
            |j| p.weight(w, self.speed[j]) * self.vm.eval(theta - self.theta[j]),
            |j| p.ln_weight(w, self.speed[j]) + self.vm.eval(theta - self.theta[j]).ln(),
        ) {
            Some(value) => Estimate {
                value,
                fallback: false,
            },
            None => Estimate {
                value: self.a[nearest(&self.speed, w, exclude)],
                fallback: true,
            },
        }
    }

    pub fn eval_detail(&self, w: F, theta: F) -> Estimate<F> {
        self.predict(w, theta, None)
    }

    pub fn eval(&self, w: F, theta: F) -> F {
        self.predict(w, theta, None).value
    }

    pub fn loo_error(&self) -> F {
        self.loo_error_subsampled(None)
    }

    pub fn loo_error_subsampled(&self, max_points: Option<usize>) -> F {
        assert!(self.speed.len() >= 2, "leave-one-out needs two samples");
        let idx = scoring_indices(self.speed.len(), max_points);
        let errs: Vec<F> = idx
            .par_iter()
            .map(|&i| {
                let e = self.predict(self.speed[i], self.theta[i], Some(i)).value - self.a[i];
                e * e
            })
            .collect();
        compensated_sum(errs) / F::from_usize_lossy(idx.len())
    }
}

/// Relative tolerance under which two cross-validation scores tie.
const CV_TIE: f64 = 1e-12;

/// `floor` is the mean squared response, so rounding noise in a zero LOO
/// error still counts as a tie.
fn ties_or_beats<F: Scalar>(candidate: F, best: F, floor: F) -> bool {
    candidate <= best + F::lit(CV_TIE) * best.abs().max(floor)
}

fn mean_square<F: Scalar>(a: impl Iterator<Item = F>) -> F {
    let sq: Vec<F> = a.map(|x| x * x).collect();
    let n = F::from_usize_lossy(sq.len());
    compensated_sum(sq) / n
}

fn sorted<F: Scalar>(xs: &[F], descending: bool) -> Vec<F> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| {
        let o = a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    v
}

/// Picks the bandwidth with the smallest leave-one-out squared error. Ties go
/// to the larger bandwidth.
pub fn cross_validate<F: Scalar>(
    pairs: &[(F, F)],
    candidates: &[F],
    family: KernelFamily,
    reflection: Reflection<F>,
) -> Result<F> {
    cross_validate_subsampled(pairs, candidates, family, reflection, None)
}

/// [`cross_validate`] scoring at most `max_points` held-out samples.
pub fn cross_validate_subsampled<F: Scalar>(
    pairs: &[(F, F)],
    candidates: &[F],
    family: KernelFamily,
    reflection: Reflection<F>,
    max_points: Option<usize>,
) -> Result<F> {
    if pairs.len() < 3 {
        return Err(Error::Empty("cross-validation needs at least 3 pairs"));
    }
    if candidates.is_empty() {
        return Err(Error::Empty("cross-validation candidate list"));
    }
    let floor = mean_square(pairs.iter().map(|p| p.1));
    let mut best: Option<(F, F)> = None;
    // ascending bandwidth: a tie replaces the incumbent
    for h in sorted(candidates, false) {
        let err =
            RegressionCurve::fit(pairs, h, family, reflection)?.loo_error_subsampled(max_points);
        if best.is_none_or(|(_, e)| ties_or_beats(err, e, floor)) {
            best = Some((h, err));
        }
    }
    Ok(best.expect("nonempty candidates").0)
}

/// Selected directional-regression hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalChoice<F> {
    pub h_w: F,
    pub mu0: F,
    pub kappa0: F,
    pub loo_error: F,
}

/// Grid search over `(h_W, μ₀, κ₀)` by leave-one-out error. Ties prefer the
/// larger speed bandwidth, then the smaller concentration, then the later
/// center in `mu_candidates`.
pub fn cross_validate_directional<F: Scalar>(
    samples: &[(F, F, F)],
    h_candidates: &[F],
    mu_candidates: &[F],
    kappa_candidates: &[F],
    family: KernelFamily,
    reflection: Reflection<F>,
    max_points: Option<usize>,
) -> Result<DirectionalChoice<F>> {
    if samples.len() < 3 {
        return Err(Error::Empty("cross-validation needs at least 3 samples"));
    }
    if h_candidates.is_empty() || mu_candidates.is_empty() || kappa_candidates.is_empty() {
        return Err(Error::Empty("cross-validation candidate list"));
    }
    let floor = mean_square(samples.iter().map(|s| s.2));
    let mut best: Option<DirectionalChoice<F>> = None;
    for h in sorted(h_candidates, false) {
        for kappa in sorted(kappa_candidates, true) {
            // with κ₀ = 0 every center gives the same curve
            let mus = if kappa == F::zero() {
                &mu_candidates[..1]
            } else {
                mu_candidates
            };
            for &mu in mus {
                let err = DirectionalCurve::fit(samples, h, mu, kappa, family, reflection)?
                    .loo_error_subsampled(max_points);
                if best.is_none_or(|b| ties_or_beats(err, b.loo_error, floor)) {
                    best = Some(DirectionalChoice {
                        h_w: h,
                        mu0: mu,
                        kappa0: kappa,
                        loo_error: err,
                    });
                }
            }
        }
    }
    Ok(best.expect("nonempty candidates"))
}
