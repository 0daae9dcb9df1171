use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use firehazard::covariates::FuelHistory;
use firehazard::data::{FireCatalog, StationTable};
use firehazard::error::{Error, Result};
use firehazard::evaluation::{
    monthly_svg, quantile_thresholds, residual_map_svg, residuals, roc_from_scores, roc_svg,
    write_summary_csv, Grouping, RocCurve,
};
use firehazard::inference::{
    fit_mle, integrate, relative_aic, FitResult, LikelihoodEngine, Quadrature,
};
use firehazard::models::{ConstantIntensity, IntensitySurface, ModelData, ModelId, ParamVector};
use firehazard::simulation::{default_shape, Scenario};

use crate::config::RunConfig;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Config(Error),
    Data(Error),
    Convergence(Vec<ModelId>),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Convergence(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(Error::Config(m)) => write!(f, "config error: {m}"),
            Failure::Config(e) => write!(f, "config error: {e}"),
            Failure::Data(e) => write!(f, "data error: {e}"),
            Failure::Convergence(ms) => {
                let names: Vec<String> = ms.iter().map(|m| m.to_string()).collect();
                write!(
                    f,
                    "convergence failure: {} did not converge (rerun with --allow-nonconverged to accept)",
                    names.join(", ")
                )
            }
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter { .. } => Failure::Config(e),
            _ => Failure::Data(e),
        }
    }
}

pub type Outcome = std::result::Result<(), Failure>;

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

pub fn simulate(cfg: &RunConfig) -> Outcome {
    let scenario = Scenario::build(&cfg.simulate, cfg.seed)?;
    let dir = cfg.data_dir();
    scenario.save(&dir)?;
    let mut truth = toml::Table::new();
    truth.insert("model".into(), scenario.truth.model().to_string().into());
    truth.insert("seed".into(), (cfg.seed as i64).into());
    truth.insert("events".into(), (scenario.catalog.len() as i64).into());
    truth.insert(
        "fit_events".into(),
        ((scenario.catalog.len() - scenario.catalog.prior_events().len()) as i64).into(),
    );
    truth.insert("params".into(), scenario.truth.params().to_toml().into());
    write_file(
        &dir.join("truth.toml"),
        toml::to_string(&truth).expect("table").as_bytes(),
    )?;
    eprintln!(
        "simulated {} events ({} in the prior period) into {}",
        scenario.catalog.len(),
        scenario.catalog.prior_events().len(),
        dir.display()
    );
    Ok(())
}

/// Catalog, stations and fuel history as configured, assembled for `models`.
fn load_data(cfg: &RunConfig, models: &[ModelId]) -> Result<ModelData> {
    let (calendar, split, domain) = cfg.window()?;
    let catalog = FireCatalog::load(cfg.catalog_path(), calendar, split)?;
    let needs_stations = models.iter().any(|m| m.terms().len() > 2);
    let stations = if needs_stations {
        Some(StationTable::load(
            cfg.stations_path(),
            cfg.station_daily_path(),
            calendar,
        )?)
    } else {
        None
    };
    let fuel = match cfg.fuel_history_path() {
        Some(p) if models.iter().any(|m| m.has_fuel()) => Some(FuelHistory::from_catalog(
            &FireCatalog::load(p, calendar, split)?,
        )?),
        _ => None,
    };
    ModelData::build(&catalog, stations, domain, fuel, &cfg.data, models)
}

fn initial_values(cfg: &RunConfig, model: ModelId) -> Result<ParamVector> {
    let mut init = ParamVector::from_fn(
        model,
        |p| {
            if p.is_scale() {
                0.01
            } else {
                default_shape(p)
            }
        },
    )?;
    for (k, v) in &cfg.init {
        let Some(p) = model.params().into_iter().find(|p| p.name() == k) else {
            continue;
        };
        let x = v
            .as_float()
            .or_else(|| v.as_integer().map(|i| i as f64))
            .ok_or_else(|| Error::Config(format!("`init.{k}` must be a number")))?;
        init.set(p, x)?;
    }
    Ok(init)
}

fn fit_path(cfg: &RunConfig, m: ModelId) -> std::path::PathBuf {
    cfg.fit_dir().join(format!("{m}.toml"))
}

pub fn fit(cfg: &RunConfig, allow_nonconverged: bool) -> Outcome {
    let hash = cfg.hash()?;
    let data = Arc::new(load_data(cfg, &cfg.models)?);
    let quad = Quadrature::new(&data.domain.grid);
    let mut opts = cfg.fit.clone();
    opts.seed = cfg.seed;
    let mut fits = Vec::new();
    for &m in &cfg.models {
        let engine = LikelihoodEngine::new(data.clone(), m, quad.clone())?;
        let mut result = fit_mle(&engine, &initial_values(cfg, m)?, &opts)?;
        result.config_hash = Some(hash.clone());
        let text = toml::to_string(&result.to_toml()).expect("table");
        write_file(&fit_path(cfg, m), text.as_bytes())?;
        eprintln!(
            "{m}: loglik {:.4}, AIC {:.4}, converged {}",
            result.loglik, result.aic, result.converged
        );
        fits.push(result);
    }
    print!("{}", aic_table(&fits));
    let failed: Vec<ModelId> = fits
        .iter()
        .filter(|f| !f.converged)
        .map(|f| f.model)
        .collect();
    if !failed.is_empty() && !allow_nonconverged {
        return Err(Failure::Convergence(failed));
    }
    Ok(())
}

fn load_fit(cfg: &RunConfig, m: ModelId) -> Result<FitResult> {
    let path = fit_path(cfg, m);
    let text = read_file(&path)?;
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    FitResult::from_toml(&table)
}

/// Relative AIC with model, p, log-likelihood and absolute AIC.
pub fn aic_table(fits: &[FitResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<6} {:>4} {:>16} {:>16} {:>14}",
        "model", "p", "loglik", "AIC", "relative AIC"
    );
    for r in relative_aic(fits) {
        let _ = writeln!(
            s,
            "{:<6} {:>4} {:>16.4} {:>16.4} {:>14.4}",
            r.model.to_string(),
            r.param_count,
            r.loglik,
            r.aic,
            r.relative
        );
    }
    s
}

fn aic_csv(fits: &[FitResult]) -> String {
    let mut s = String::from("model,param_count,loglik,aic,relative_aic\n");
    for r in relative_aic(fits) {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.model, r.param_count, r.loglik, r.aic, r.relative
        );
    }
    s
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub fn evaluate(cfg: &RunConfig) -> Outcome {
    let data = Arc::new(load_data(cfg, &cfg.models)?);
    let fits: Vec<FitResult> = cfg
        .models
        .iter()
        .map(|&m| load_fit(cfg, m))
        .collect::<Result<_>>()?;
    let dir = cfg.eval_dir();
    let ev = &cfg.evaluate;
    let domain = &data.domain;
    write_file(&dir.join("aic.csv"), aic_csv(&fits).as_bytes())?;
    write_file(&dir.join("aic.txt"), aic_table(&fits).as_bytes())?;

    let alarm = domain
        .grid
        .with_pitch(&domain.region, ev.alarm_dd, ev.alarm_dt)?;
    let quad = Quadrature::new(&domain.grid);
    let rate = data.events.len() as f64 / quad.volume();
    let constant = ConstantIntensity(rate);
    let (scores, positive) = firehazard::evaluation::alarm_cells(&constant, &data.events, &alarm)?;
    let mut curves: Vec<(String, RocCurve)> = Vec::new();
    let thresholds = |s: &[f64]| quantile_thresholds(s, ev.thresholds);
    curves.push((
        "constant".into(),
        roc_from_scores(&scores, &positive, Some(&thresholds(&scores)))?,
    ));
    let mut summary = toml::Table::new();
    let mut auc = toml::Table::new();
    let mut residual_sums = toml::Table::new();
    for fit in &fits {
        let surface = IntensitySurface::new(data.clone(), fit.params.clone())?;
        let (scores, positive) =
            firehazard::evaluation::alarm_cells(&surface, &data.events, &alarm)?;
        let curve = roc_from_scores(&scores, &positive, Some(&thresholds(&scores)))?;
        let m = fit.model;
        write_file(
            &dir.join(format!("roc_{m}.csv")),
            &csv_bytes(|b| curve.write_csv(b))?,
        )?;
        auc.insert(m.to_string(), curve.auc().into());
        curves.push((m.to_string(), curve));

        let grid = residuals(
            &surface,
            &data.events,
            &domain.grid,
            ev.residual_area.sqrt(),
            ev.residual_dt,
            data.calendar,
        )?;
        let total = integrate(&surface, &quad)?;
        let mut sums = toml::Table::new();
        sums.insert("events".into(), (grid.events as i64).into());
        sums.insert("integral".into(), grid.total_integral.into());
        sums.insert("residual_sum".into(), grid.total_residual().into());
        sums.insert("direct_integral".into(), total.into());
        residual_sums.insert(m.to_string(), sums.into());
        write_file(
            &dir.join(format!("residuals_{m}.csv")),
            &csv_bytes(|b| grid.write_csv(b))?,
        )?;
        let by_month = grid.summary(Grouping::Month);
        let by_cell = grid.summary(Grouping::Location);
        write_file(
            &dir.join(format!("residual_months_{m}.csv")),
            &csv_bytes(|b| write_summary_csv(&by_month, Grouping::Month, b))?,
        )?;
        write_file(
            &dir.join(format!("residual_cells_{m}.csv")),
            &csv_bytes(|b| write_summary_csv(&by_cell, Grouping::Location, b))?,
        )?;
        write_file(
            &dir.join(format!("residuals_{m}.svg")),
            residual_map_svg(&grid, &by_cell).as_bytes(),
        )?;
        write_file(
            &dir.join(format!("residual_months_{m}.svg")),
            monthly_svg(&by_month).as_bytes(),
        )?;
    }
    write_file(
        &dir.join("roc_constant.csv"),
        &csv_bytes(|b| curves[0].1.write_csv(b))?,
    )?;
    auc.insert("constant".into(), curves[0].1.auc().into());
    let labelled: Vec<(&str, &RocCurve)> = curves.iter().map(|(l, c)| (l.as_str(), c)).collect();
    write_file(&dir.join("roc.svg"), roc_svg(&labelled).as_bytes())?;

    summary.insert("config_hash".into(), cfg.hash()?.into());
    summary.insert("events".into(), (data.events.len() as i64).into());
    summary.insert("auc".into(), auc.into());
    summary.insert("residuals".into(), residual_sums.into());
    write_file(
        &dir.join("summary.toml"),
        toml::to_string(&summary).expect("table").as_bytes(),
    )?;
    print!("{}", aic_table(&fits));
    eprintln!("evaluation written to {}", dir.display());
    Ok(())
}

/// Collates fit files and the evaluation summary into `report.md`.
pub fn report(cfg: &RunConfig) -> Outcome {
    let fits: Vec<FitResult> = cfg
        .models
        .iter()
        .map(|&m| load_fit(cfg, m))
        .collect::<Result<_>>()?;
    let summary_path = cfg.eval_dir().join("summary.toml");
    let summary: toml::Table = toml::from_str(&read_file(&summary_path)?)
        .map_err(|e| Error::Config(format!("{}: {e}", summary_path.display())))?;
    let mut s = String::new();
    let _ = writeln!(s, "# Run report\n");
    let _ = writeln!(s, "- seed: {}", cfg.seed);
    let _ = writeln!(s, "- config hash: `{}`", cfg.hash()?);
    if let Some(n) = summary.get("events").and_then(|v| v.as_integer()) {
        let _ = writeln!(s, "- events in fit period: {n}");
    }
    let _ = writeln!(s, "\n## Model comparison\n\n```\n{}```\n", aic_table(&fits));
    let _ = writeln!(s, "## Estimates\n");
    for f in &fits {
        let _ = writeln!(
            s,
            "### {}\n\nconverged: {}, iterations: {}, standard errors: {}\n",
            f.model,
            f.converged,
            f.iterations,
            f.se.status.name()
        );
        let _ = writeln!(s, "| parameter | estimate | SE |\n|---|---|---|");
        for (p, v) in f.params.entries() {
            let se =
                f.se.get(p)
                    .map_or_else(|| "-".to_string(), |e| format!("{e:.6e}"));
            let _ = writeln!(s, "| {} | {v:.6e} | {se} |", p.name());
        }
        let _ = writeln!(s);
    }
    if let Some(auc) = summary.get("auc").and_then(|v| v.as_table()) {
        let _ = writeln!(s, "## ROC\n\n| surface | AUC |\n|---|---|");
        for (k, v) in auc {
            let _ = writeln!(s, "| {k} | {:.4} |", v.as_float().unwrap_or(f64::NAN));
        }
        let _ = writeln!(s);
    }
    if let Some(res) = summary.get("residuals").and_then(|v| v.as_table()) {
        let _ = writeln!(
            s,
            "## Residuals\n\n| model | events | integral | sum of residuals |\n|---|---|---|---|"
        );
        for (k, v) in res {
            let get = |key: &str| v.get(key).and_then(|x| x.as_float()).unwrap_or(f64::NAN);
            let n = v.get("events").and_then(|x| x.as_integer()).unwrap_or(0);
            let _ = writeln!(
                s,
                "| {k} | {n} | {:.4} | {:.4} |",
                get("integral"),
                get("residual_sum")
            );
        }
    }
    write_file(&cfg.out.join("report.md"), s.as_bytes())?;
    eprintln!("report written to {}", cfg.out.join("report.md").display());
    Ok(())
}
