//! Scalar kernel primitives: line kernels, their radial 2-D counterparts,
//! wrapped (circular) kernels, the von Mises density and the modified Bessel
//! function I₀.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Kernel family for line kernels. Both members are unimodal, symmetric about
/// zero and integrate to one over the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl KernelFamily {
    /// Density at `u`.
    #[inline]
    pub fn eval<F: Scalar>(self, u: F) -> F {
        match self {
            KernelFamily::Gaussian => (-(u * u) / F::lit(2.0)).exp() / (F::TAU()).sqrt(),
            KernelFamily::Epanechnikov => {
                if u.abs() <= F::one() {
                    F::lit(0.75) * (F::one() - u * u)
                } else {
                    F::zero()
                }
            }
        }
    }

    /// Logarithm of the density; `-inf` outside the support.
    #[inline]
    pub fn ln_eval<F: Scalar>(self, u: F) -> F {
        match self {
            KernelFamily::Gaussian => -(u * u) / F::lit(2.0) - F::lit(0.5) * F::TAU().ln(),
            KernelFamily::Epanechnikov => self.eval(u).ln(),
        }
    }

    /// Radially symmetric density on the plane at radius `r`, normalized so
    /// that it integrates to one over ℝ².
    #[inline]
    pub fn eval_radial<F: Scalar>(self, r: F) -> F {
        match self {
            KernelFamily::Gaussian => (-(r * r) / F::lit(2.0)).exp() / F::TAU(),
            KernelFamily::Epanechnikov => {
                if r <= F::one() {
                    F::lit(2.0) / F::PI() * (F::one() - r * r)
                } else {
                    F::zero()
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Epanechnikov => "epanechnikov",
        }
    }
}

/// Free-function form of [`KernelFamily::eval`].
#[inline]
pub fn eval_kernel<F: Scalar>(family: KernelFamily, u: F) -> F {
    family.eval(u)
}

const WRAP_CUTOFF: f64 = 1e-15;
const FOURIER_CUTOFF: f64 = 1e-17;
/// Wide kernels switch from summing images to a form whose cost does not
/// grow with the bandwidth.
const WIDE_GAUSSIAN: f64 = 0.5;
const WIDE_EPANECHNIKOV: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WrapMethod {
    /// `terms` images on each side of the principal one.
    Images,
    /// Gaussian as a cosine series with `terms` harmonics.
    Fourier,
    /// Epanechnikov images summed in closed form.
    Polynomial,
}

/// A line kernel wrapped onto a circle of circumference `period`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrappedKernel<F: Scalar> {
    family: KernelFamily,
    bandwidth: F,
    period: F,
    method: WrapMethod,
    terms: usize,
}

impl<F: Scalar> WrappedKernel<F> {
    pub fn new(family: KernelFamily, bandwidth: F, period: F) -> Result<Self> {
        if !(bandwidth > F::zero()) || !bandwidth.is_finite() {
            return Err(Error::invalid(
                "bandwidth",
                bandwidth.to_f64_lossy(),
                "must be positive and finite",
            ));
        }
        if !(period > F::zero()) || !period.is_finite() {
            return Err(Error::invalid(
                "period",
                period.to_f64_lossy(),
                "must be positive and finite",
            ));
        }
        let ratio = (bandwidth / period).to_f64_lossy();
        let (method, terms) = match family {
            KernelFamily::Gaussian if ratio > WIDE_GAUSSIAN => {
                // harmonic k is damped by exp(-2π²k²h²/P²)
                let a = 2.0 * std::f64::consts::PI.powi(2) * ratio * ratio;
                let k = ((-FOURIER_CUTOFF.ln()) / a).sqrt().ceil() as usize;
                (WrapMethod::Fourier, k.max(1))
            }
            KernelFamily::Epanechnikov if ratio > WIDE_EPANECHNIKOV => (WrapMethod::Polynomial, 0),
            _ => {
                // smallest J with K((J·P − P/2)/h) below the cutoff
                let half = period / F::lit(2.0);
                let cutoff = F::lit(WRAP_CUTOFF);
                let mut terms = 1usize;
                while family.eval((F::from_usize_lossy(terms) * period - half) / bandwidth)
                    >= cutoff
                {
                    terms += 1;
                }
                (WrapMethod::Images, terms)
            }
        };
        Ok(Self {
            family,
            bandwidth,
            period,
            method,
            terms,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> F {
        self.bandwidth
    }

    pub fn period(&self) -> F {
        self.period
    }

    /// Work per evaluation: images on each side, or harmonics for a wide
    /// gaussian; zero when the images are summed in closed form.
    pub fn wrap_terms(&self) -> usize {
        self.terms
    }

    /// Wrapped density at circular offset `d`.
    pub fn eval(&self, d: F) -> F {
        let p = self.period;
        let two = F::lit(2.0);
        // principal offset in [-P/2, P/2)
        let shifted = d + p / two;
        let r = shifted - (shifted / p).floor() * p - p / two;
        let h = self.bandwidth;
        match self.method {
            WrapMethod::Images => {
                let mut acc = self.family.eval(r / h);
                for j in 1..=self.terms {
                    let jp = F::from_usize_lossy(j) * p;
                    acc = acc + self.family.eval((r + jp) / h) + self.family.eval((r - jp) / h);
                }
                acc / h
            }
            WrapMethod::Fourier => {
                let w = F::TAU() / p;
                let mut acc = F::one();
                for k in 1..=self.terms {
                    let kw = F::from_usize_lossy(k) * w;
                    acc = acc + two * (-(kw * h) * (kw * h) / two).exp() * (kw * r).cos();
                }
                acc / p
            }
            WrapMethod::Polynomial => {
                // Σ (1 − ((r + jP)/h)²) over the images inside the support
                let lo = ((-h - r) / p).ceil();
                let hi = ((h - r) / p).floor();
                let n = hi - lo + F::one();
                let s1 = (lo + hi) * n / two;
                let six = F::lit(6.0);
                let sq = |m: F| m * (m + F::one()) * (two * m + F::one()) / six;
                let s2 = if lo >= F::zero() {
                    sq(hi) - sq(lo - F::one())
                } else {
                    sq(hi) + sq(-lo)
                };
                let quad = n * r * r + two * r * p * s1 + p * p * s2;
                F::lit(0.75) * (n - quad / (h * h)) / h
            }
        }
    }
}

/// Wrapped kernel density `(1/h) Σ_j K((d + j·period)/h)`.
pub fn eval_wrapped<F: Scalar>(family: KernelFamily, d: F, bandwidth: F, period: F) -> Result<F> {
    Ok(WrappedKernel::new(family, bandwidth, period)?.eval(d))
}

const BESSEL_SERIES_LIMIT: f64 = 15.0;

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0<F: Scalar>(x: F) -> Result<F> {
    if !(x >= F::zero()) {
        return Err(Error::invalid("x", x.to_f64_lossy(), "I0 requires x >= 0"));
    }
    if x <= F::lit(BESSEL_SERIES_LIMIT) {
        Ok(i0_series(x))
    } else {
        Ok(i0_asymptotic_scaled(x) * x.exp())
    }
}

/// `e^{-x} I₀(x)`, finite for every `x ≥ 0`.
pub(crate) fn bessel_i0_scaled<F: Scalar>(x: F) -> F {
    if x <= F::lit(BESSEL_SERIES_LIMIT) {
        i0_series(x) * (-x).exp()
    } else {
        i0_asymptotic_scaled(x)
    }
}

fn i0_series<F: Scalar>(x: F) -> F {
    let q = x * x / F::lit(4.0);
    let mut term = F::one();
    let mut sum = F::one();
    let mut k = 1usize;
    loop {
        let kf = F::from_usize_lossy(k);
        term = term * q / (kf * kf);
        sum = sum + term;
        if term <= sum * F::epsilon() * F::lit(0.01) || k > 500 {
            break;
        }
        k += 1;
    }
    sum
}

// e^x/√(2πx) Σ_k [(2k−1)!!]² / (k! 8^k x^k), truncated at the smallest term
fn i0_asymptotic_scaled<F: Scalar>(x: F) -> F {
    let mut term = F::one();
    let mut sum = F::one();
    for k in 1..60usize {
        let kf = F::from_usize_lossy(k);
        let odd = F::lit(2.0) * kf - F::one();
        let next = term * odd * odd / (F::lit(8.0) * kf * x);
        if next >= term {
            break;
        }
        term = next;
        sum = sum + term;
        if term <= sum * F::epsilon() * F::lit(0.01) {
            break;
        }
    }
    sum / (F::TAU() * x).sqrt()
}

/// Von Mises density on the circle with center `mu0` and concentration
/// `kappa0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMisesKernel<F: Scalar> {
    mu0: F,
    kappa0: F,
    // 2π e^{-κ} I₀(κ)
    norm: F,
}

impl<F: Scalar> VonMisesKernel<F> {
    pub fn new(mu0: F, kappa0: F) -> Result<Self> {
        if !(kappa0 >= F::zero()) || !kappa0.is_finite() {
            return Err(Error::invalid(
                "kappa0",
                kappa0.to_f64_lossy(),
                "concentration must be finite and >= 0",
            ));
        }
        if !mu0.is_finite() {
            return Err(Error::invalid("mu0", mu0.to_f64_lossy(), "must be finite"));
        }
        Ok(Self {
            mu0,
            kappa0,
            norm: F::TAU() * bessel_i0_scaled(kappa0),
        })
    }

    pub fn mu0(&self) -> F {
        self.mu0
    }

    pub fn kappa0(&self) -> F {
        self.kappa0
    }

    #[inline]
    pub fn eval(&self, theta: F) -> F {
        (self.kappa0 * ((theta - self.mu0).cos() - F::one())).exp() / self.norm
    }
}

/// Free-function form of [`VonMisesKernel::eval`].
#[inline]
pub fn eval_von_mises<F: Scalar>(theta: F, kernel: &VonMisesKernel<F>) -> F {
    kernel.eval(theta)
}
