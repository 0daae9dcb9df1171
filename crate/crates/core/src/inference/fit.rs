use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::likelihood::LikelihoodEngine;
use super::optimizer::{minimize, NelderMeadOptions};
use super::profile::maximize_weights;
use crate::error::{Error, Result};
use crate::models::{ModelId, Param, ParamVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub optimizer: NelderMeadOptions,
    /// Number of starts; the first is the initial value, the rest jitter it.
    pub starts: usize,
    /// Standard deviation of the start jitter in log coordinates.
    pub jitter: f64,
    pub seed: u64,
    /// Estimate the fuel truncation `ψ` instead of holding it fixed.
    pub psi_free: bool,
    /// Finite-difference step for the Hessian, in log coordinates.
    pub hessian_step: f64,
    /// Relative perturbation used to confirm a local maximum.
    pub check_step: f64,
    /// Largest log-likelihood gain a perturbation may find at a maximum.
    pub check_tol: f64,
    pub standard_errors: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optimizer: NelderMeadOptions::default(),
            starts: 3,
            jitter: 0.3,
            seed: 0,
            psi_free: false,
            hessian_step: 1e-4,
            check_step: 0.01,
            check_tol: 1e-5,
            standard_errors: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeStatus {
    Computed,
    /// The negated Hessian was not positive definite.
    Indefinite,
    NotComputed,
}

impl SeStatus {
    pub fn name(self) -> &'static str {
        match self {
            SeStatus::Computed => "computed",
            SeStatus::Indefinite => "indefinite",
            SeStatus::NotComputed => "not-computed",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        [
            SeStatus::Computed,
            SeStatus::Indefinite,
            SeStatus::NotComputed,
        ]
        .into_iter()
        .find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardErrors {
    pub status: SeStatus,
    /// Natural-scale standard errors of the free parameters; empty unless
    /// `status` is `Computed`.
    pub values: Vec<(Param, f64)>,
}

impl StandardErrors {
    pub fn not_computed() -> Self {
        Self {
            status: SeStatus::NotComputed,
            values: Vec::new(),
        }
    }

    pub fn get(&self, p: Param) -> Option<f64> {
        self.values.iter().find(|(q, _)| *q == p).map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: ModelId,
    pub params: ParamVector,
    pub loglik: f64,
    pub aic: f64,
    pub se: StandardErrors,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub config_hash: Option<String>,
}

impl FitResult {
    pub fn param_count(&self) -> usize {
        self.model.param_count(self.params.psi_free())
    }

    pub fn to_toml(&self) -> toml::Table {
        let mut t = toml::Table::new();
        t.insert("model".into(), self.model.to_string().into());
        t.insert("converged".into(), self.converged.into());
        t.insert("iterations".into(), (self.iterations as i64).into());
        t.insert("evaluations".into(), (self.evaluations as i64).into());
        t.insert("loglik".into(), self.loglik.into());
        t.insert("aic".into(), self.aic.into());
        t.insert("param_count".into(), (self.param_count() as i64).into());
        t.insert("psi_free".into(), self.params.psi_free().into());
        t.insert("se_status".into(), self.se.status.name().into());
        if let Some(h) = &self.config_hash {
            t.insert("config_hash".into(), h.clone().into());
        }
        t.insert("params".into(), self.params.to_toml().into());
        let se: toml::Table = self
            .se
            .values
            .iter()
            .map(|(p, v)| (p.name().to_string(), toml::Value::Float(*v)))
            .collect();
        t.insert("se".into(), se.into());
        t
    }

    pub fn from_toml(t: &toml::Table) -> Result<Self> {
        fn field<'a>(t: &'a toml::Table, k: &str) -> Result<&'a toml::Value> {
            t.get(k)
                .ok_or_else(|| Error::Config(format!("fit result lacks `{k}`")))
        }
        fn float(t: &toml::Table, k: &str) -> Result<f64> {
            let v = field(t, k)?;
            v.as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .ok_or_else(|| Error::Config(format!("`{k}` must be a number")))
        }
        fn count(t: &toml::Table, k: &str) -> Result<usize> {
            field(t, k)?
                .as_integer()
                .and_then(|i| usize::try_from(i).ok())
                .ok_or_else(|| Error::Config(format!("`{k}` must be a nonnegative integer")))
        }
        let bad = |k: &str| Error::Config(format!("malformed `{k}` in fit result"));
        let model: ModelId = field(t, "model")?
            .as_str()
            .ok_or_else(|| bad("model"))?
            .parse()?;
        let table = field(t, "params")?
            .as_table()
            .ok_or_else(|| bad("params"))?;
        let psi_free = field(t, "psi_free")?
            .as_bool()
            .ok_or_else(|| bad("psi_free"))?;
        let params = ParamVector::from_toml(model, table)?.with_psi_free(psi_free);
        let status = field(t, "se_status")?
            .as_str()
            .and_then(SeStatus::from_name)
            .ok_or_else(|| bad("se_status"))?;
        let mut values = Vec::new();
        if let Some(se) = t.get("se").and_then(|v| v.as_table()) {
            for (k, _) in se {
                let p = Param::from_name(k).ok_or_else(|| bad("se"))?;
                values.push((p, float(se, k)?));
            }
        }
        // keep model order rather than key order
        values.sort_by_key(|(p, _)| model.params().iter().position(|q| q == p));
        Ok(Self {
            model,
            params,
            loglik: float(t, "loglik")?,
            aic: float(t, "aic")?,
            se: StandardErrors { status, values },
            iterations: count(t, "iterations")?,
            evaluations: count(t, "evaluations")?,
            converged: field(t, "converged")?
                .as_bool()
                .ok_or_else(|| bad("converged"))?,
            config_hash: t
                .get("config_hash")
                .and_then(|v| v.as_str())
                .map(str::to_string),
        })
    }
}

/// `−2L + 2p`.
pub fn aic(loglik: f64, param_count: usize) -> f64 {
    -2.0 * loglik + 2.0 * param_count as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct AicRow {
    pub model: ModelId,
    pub param_count: usize,
    pub loglik: f64,
    pub aic: f64,
    /// AIC minus the smallest AIC in the table.
    pub relative: f64,
}

/// One row per fit, in the given order.
pub fn relative_aic(fits: &[FitResult]) -> Vec<AicRow> {
    let best = fits.iter().map(|f| f.aic).fold(f64::INFINITY, f64::min);
    fits.iter()
        .map(|f| AicRow {
            model: f.model,
            param_count: f.param_count(),
            loglik: f.loglik,
            aic: f.aic,
            relative: f.aic - best,
        })
        .collect()
}

/// Central-difference Hessian of `f` at `x`.
pub fn finite_difference_hessian(
    f: &mut impl FnMut(&[f64]) -> Result<f64>,
    x: &[f64],
    step: f64,
) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut at = |d: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in d {
            y[i] += s;
        }
        f(&y)
    };
    let f0 = at(&[])?;
    let h = step;
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        hess[(i, i)] = (at(&[(i, h)])? - 2.0 * f0 + at(&[(i, -h)])?) / (h * h);
        for j in 0..i {
            let v = (at(&[(i, h), (j, h)])? - at(&[(i, h), (j, -h)])? - at(&[(i, -h), (j, h)])?
                + at(&[(i, -h), (j, -h)])?)
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// `sqrt(diag((−H)⁻¹))`, or `None` unless `−H` is positive definite.
pub fn standard_errors_from_hessian(hess: &DMatrix<f64>) -> Option<Vec<f64>> {
    let neg = -hess.clone();
    if neg.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let eig = SymmetricEigen::new(neg.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    // eigenvalues at finite-difference noise level count as zero
    if !(top > 0.0) || eig.eigenvalues.iter().any(|&l| l <= 1e-7 * top) {
        return None;
    }
    let inv = neg.cholesky()?.inverse();
    Some((0..inv.nrows()).map(|i| inv[(i, i)].sqrt()).collect())
}

/// Standard errors of the free parameters: the Hessian is taken in log
/// coordinates and mapped back by the delta method, `SE(θ) = θ·SE(log θ)`.
pub fn standard_errors(
    engine: &LikelihoodEngine,
    params: &ParamVector,
    step: f64,
) -> Result<StandardErrors> {
    let x = params.pack()?;
    let mut f = |u: &[f64]| engine.log_likelihood(&params.unpack(u)?);
    let hess = finite_difference_hessian(&mut f, &x, step)?;
    Ok(match standard_errors_from_hessian(&hess) {
        Some(se) => StandardErrors {
            status: SeStatus::Computed,
            values: params
                .free_params()
                .into_iter()
                .zip(se)
                .map(|(p, s)| (p, params.value(p) * s))
                .collect(),
        },
        None => StandardErrors {
            status: SeStatus::Indefinite,
            values: Vec::new(),
        },
    })
}

/// Log-likelihood maximized over the term weights, the shapes given.
struct Profile<'a> {
    engine: &'a LikelihoodEngine,
    base: ParamVector,
    shapes: Vec<Param>,
    start_weights: Vec<f64>,
}

impl Profile<'_> {
    fn with_shapes(&self, coords: &[f64]) -> Result<ParamVector> {
        let mut p = self.base.clone();
        for (&q, &u) in self.shapes.iter().zip(coords) {
            p.set(q, u.exp())?;
        }
        Ok(p)
    }

    fn solve(&self, coords: &[f64]) -> Result<(ParamVector, f64)> {
        let mut p = self.with_shapes(coords)?;
        let parts = self.engine.all_parts(&p)?;
        let (c, ll) = maximize_weights(&parts, &self.start_weights)?;
        for (t, v) in self.engine.model().terms().iter().zip(c) {
            p.set(t.scale, v)?;
        }
        Ok((p, ll))
    }
}

/// Maximum likelihood fit from `init`. Shapes are searched by Nelder–Mead in
/// log coordinates; for each trial the weights are solved exactly, since the
/// log-likelihood is concave in them. Every run returns a result; check
/// `converged`.
pub fn fit_mle(
    engine: &LikelihoodEngine,
    init: &ParamVector,
    opts: &FitOptions,
) -> Result<FitResult> {
    let model = engine.model();
    if init.model() != model {
        return Err(Error::Config(format!(
            "initial values for {} given to a {model} fit",
            init.model()
        )));
    }
    if engine.data().events.is_empty() {
        return Err(Error::Empty("no events in fit period"));
    }
    init.validate()?;
    let init = init.clone().with_psi_free(opts.psi_free);
    let terms = model.terms();
    let shapes: Vec<Param> = init
        .free_params()
        .into_iter()
        .filter(|p| !p.is_scale())
        .collect();
    let profile = Profile {
        engine,
        start_weights: terms.iter().map(|t| init.value(t.scale)).collect(),
        base: init.clone(),
        shapes,
    };
    let x0: Vec<f64> = profile.shapes.iter().map(|&p| init.value(p).ln()).collect();
    let objective = |u: &[f64]| match profile.solve(u) {
        Ok((_, ll)) => -ll,
        Err(_) => f64::INFINITY,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let noise = Normal::new(0.0, opts.jitter.max(0.0))
        .map_err(|_| Error::invalid("jitter", opts.jitter, "must be finite"))?;
    let mut best: Option<super::optimizer::Minimum> = None;
    let (mut iterations, mut evaluations) = (0, 0);
    for s in 0..opts.starts.max(1) {
        let start: Vec<f64> = if s == 0 {
            x0.clone()
        } else {
            x0.iter().map(|u| u + noise.sample(&mut rng)).collect()
        };
        let m = minimize(objective, &start, &opts.optimizer);
        iterations += m.iterations;
        evaluations += m.evaluations;
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    if !best.f.is_finite() {
        return Err(Error::NonFinite(format!(
            "log-likelihood of {model} at every start"
        )));
    }
    let (params, loglik) = profile.solve(&best.x)?;
    let converged = best.converged && is_local_max(engine, &params, loglik, opts)?;
    let se = if converged && opts.standard_errors {
        standard_errors(engine, &params, opts.hessian_step)?
    } else {
        StandardErrors::not_computed()
    };
    Ok(FitResult {
        model,
        aic: aic(loglik, model.param_count(params.psi_free())),
        params,
        loglik,
        se,
        iterations,
        evaluations,
        converged,
        config_hash: None,
    })
}

/// No single log coordinate moved by ±`check_step` gains more than
/// `check_tol`. Weights at zero sit on the boundary and are skipped.
fn is_local_max(
    engine: &LikelihoodEngine,
    params: &ParamVector,
    loglik: f64,
    opts: &FitOptions,
) -> Result<bool> {
    for p in params.free_params() {
        let v = params.value(p);
        if !(v > 0.0) {
            continue;
        }
        for s in [1.0 + opts.check_step, 1.0 - opts.check_step] {
            let mut q = params.clone();
            q.set(p, v * s)?;
            if let Ok(l) = engine.log_likelihood(&q) {
                if l > loglik + opts.check_tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn aic_examples() {
        assert_eq!(aic(-100.0, 6), 212.0);
    }

    fn fake(model: ModelId, aic_value: f64) -> FitResult {
        let params = ParamVector::from_fn(model, |_| 1.0).unwrap();
        FitResult {
            model,
            params,
            loglik: 0.0,
            aic: aic_value,
            se: StandardErrors::not_computed(),
            iterations: 0,
            evaluations: 0,
            converged: true,
            config_hash: None,
        }
    }

    #[test]
    fn relative_table_subtracts_minimum() {
        let rows = relative_aic(&[fake(ModelId::M1, 212.0), fake(ModelId::M2, 210.0)]);
        assert_eq!(rows[0].relative, 2.0);
        assert_eq!(rows[1].relative, 0.0);
        assert_eq!(rows[1].param_count, 6);
    }

    #[test]
    fn quadratic_curvature_gives_known_se() {
        for c in [0.5, 4.0, 250.0] {
            let mut f =
                |x: &[f64]| Ok(-0.5 * c * (x[0] - 0.3).powi(2) - 0.5 * (x[1] + 1.0).powi(2));
            let h = finite_difference_hessian(&mut f, &[0.3, -1.0], 1e-4).unwrap();
            let se = standard_errors_from_hessian(&h).unwrap();
            assert_abs_diff_eq!(se[0], 1.0 / c.sqrt(), epsilon = 1e-6);
            assert_abs_diff_eq!(se[1], 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn flat_direction_is_flagged() {
        // the two coordinates only enter through their sum
        let mut f = |x: &[f64]| Ok(-(x[0] + x[1] - 1.0).powi(2));
        let h = finite_difference_hessian(&mut f, &[0.5, 0.5], 1e-4).unwrap();
        assert!(standard_errors_from_hessian(&h).is_none());
        let mut g = |x: &[f64]| Ok((x[0]).powi(2));
        let h = finite_difference_hessian(&mut g, &[0.0], 1e-4).unwrap();
        assert!(standard_errors_from_hessian(&h).is_none());
    }

    #[test]
    fn result_toml_round_trip() {
        let mut r = fake(ModelId::M8, 10.5);
        r.params = r.params.with_psi_free(true);
        r.loglik = -1234.567891234;
        r.se = StandardErrors {
            status: SeStatus::Computed,
            values: vec![(Param::Gamma, 0.25), (Param::Psi, 3.0)],
        };
        r.config_hash = Some("abc".into());
        let text = toml::to_string(&r.to_toml()).unwrap();
        let back = FitResult::from_toml(&toml::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
