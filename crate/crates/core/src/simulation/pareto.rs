use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Burn-area law with survival `S(x) = (a/x)^β · exp((a − x)/θ)` for
/// `x ≥ a`, in km².
///
/// The defaults are synthetic choices for simulation, not estimates. `a` is
/// the 0.0405 km² (ten acre) reporting threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaperedPareto {
    pub a: f64,
    pub beta: f64,
    pub theta: f64,
}

impl Default for TaperedPareto {
    fn default() -> Self {
        Self {
            a: 0.0405,
            beta: 0.5,
            theta: 20.0,
        }
    }
}

impl TaperedPareto {
    pub fn new(a: f64, beta: f64, theta: f64) -> Result<Self> {
        let law = Self { a, beta, theta };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::invalid("a", self.a, "lower cutoff must be positive"));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::invalid(
                "beta_p",
                self.beta,
                "shape must be positive",
            ));
        }
        // an infinite taper is the pure Pareto
        if !(self.theta > 0.0) {
            return Err(Error::invalid(
                "theta_p",
                self.theta,
                "taper must be positive",
            ));
        }
        Ok(())
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= self.a {
            return 1.0;
        }
        (self.a / x).powf(self.beta) * ((self.a - x) / self.theta).exp()
    }

    /// The survival is the product of a Pareto and a shifted exponential
    /// survival, so the minimum of one draw from each has this law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let pareto = self.a * u.powf(-1.0 / self.beta);
        let v: f64 = 1.0 - rng.gen::<f64>();
        let taper = self.a - self.theta * v.ln();
        pareto.min(taper)
    }
}

/// One draw with its own seeded stream.
pub fn sample_tapered_pareto(a: f64, beta_p: f64, theta_p: f64, seed: u64) -> Result<f64> {
    let law = TaperedPareto::new(a, beta_p, theta_p)?;
    Ok(law.sample(&mut ChaCha8Rng::seed_from_u64(seed)))
}
