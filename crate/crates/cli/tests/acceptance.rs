//! Acceptance run. Prints one PASS/FAIL line per criterion and fails if any
//! criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use firehazard::data::{FireEvent, Region, YEAR_DAYS};
use firehazard::evaluation::{
    alarm_cells, poisson_moments, residuals, roc, roc_from_scores, RocCurve,
};
use firehazard::inference::{
    fit_mle, log_likelihood, relative_aic, FitOptions, FitResult, LikelihoodEngine, Quadrature,
};
use firehazard::kernels::{KernelFamily, VonMisesKernel};
use firehazard::models::{
    param_count, ConstantIntensity, DataOptions, IntensitySurface, ModelData, ModelId, Param,
    ParamVector,
};
use firehazard::simulation::{default_shape, simulate_events, Scenario, ScenarioConfig};
use firehazard::smoothers::{SeasonalRate, SpatialBackground};

/// Tolerances, fixed here so that loosening one shows up in review.
const TOL_BACKGROUND: f64 = 1e-6;
const TOL_SEASONAL: f64 = 1e-8;
const TOL_VON_MISES: f64 = 1e-8;
const TOL_CONSTANT_LL: f64 = 1e-9;
const TOL_QUADRATURE: f64 = 1e-3;
const TOL_SCALES: f64 = 0.15;
const TOL_BANDWIDTHS: f64 = 0.35;
const MIN_AUC_GAIN: f64 = 0.15;
const TOL_RESIDUAL_SUM: f64 = 1e-9;
const MIN_COVERAGE: f64 = 0.90;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn small_m8() -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        prior_years: 2.0,
        fit_years: 1.0,
        history_years: 10.0,
        region: [0.0, 12.0, 0.0, 12.0],
        stations: 4,
        hotspots: 3,
        hotspot_sd: 2.5,
        prior_events: 150.0,
        scars: 12,
        scar_area: [2.0, 10.0],
        ..ScenarioConfig::default()
    };
    cfg.truth.model = ModelId::M8;
    cfg.truth.expected_events = 150.0;
    cfg
}

/// M1 truth with weights 0.02 and 0.01, rescaled together to about 2000
/// fit-period events.
fn recovery_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        prior_years: 4.0,
        fit_years: 4.0,
        region: [0.0, 20.0, 0.0, 20.0],
        stations: 3,
        hotspots: 4,
        hotspot_sd: 4.0,
        prior_events: 400.0,
        scars: 10,
        ..ScenarioConfig::default()
    };
    cfg.truth.model = ModelId::M1;
    cfg.truth.params.insert("gamma".into(), 0.02.into());
    cfg.truth.params.insert("alpha".into(), 0.01.into());
    cfg.truth.rescale = true;
    cfg.truth.expected_events = 2000.0;
    cfg
}

fn fit_model(data: &Arc<ModelData>, m: ModelId, opts: &FitOptions) -> FitResult {
    let engine =
        LikelihoodEngine::new(data.clone(), m, Quadrature::new(&data.domain.grid)).unwrap();
    let init = ParamVector::from_fn(m, |p| {
        if p.is_scale() {
            0.01
        } else if p == Param::Psi {
            default_shape(p)
        } else {
            1.5 * default_shape(p)
        }
    })
    .unwrap();
    fit_mle(&engine, &init, opts).unwrap()
}

/// One M1 recovery fit per seed, the truth alongside.
fn recovery_study(seeds: u64) -> Vec<(ParamVector, FitResult)> {
    let cfg = recovery_config();
    let opts = FitOptions {
        starts: 1,
        ..FitOptions::default()
    };
    (0..seeds)
        .map(|seed| {
            let sc = Scenario::build(&cfg, seed).unwrap();
            let data = Arc::new(
                sc.model_data(&[ModelId::M1], &DataOptions::default())
                    .unwrap(),
            );
            (
                sc.truth.params().clone(),
                fit_model(&data, ModelId::M1, &opts),
            )
        })
        .collect()
}

fn criterion_1() -> Check {
    let sc = Scenario::build(&small_m8(), 1).unwrap();
    let prior: Vec<&FireEvent> = sc.catalog.prior_events().iter().collect();
    let centers: Vec<(f64, f64)> = prior.iter().map(|e| (e.x, e.y)).collect();
    let beta = 2.0;
    let m = SpatialBackground::fit(centers, beta, KernelFamily::Gaussian).unwrap();
    // 10⁶ midpoints over the region padded by ten bandwidths
    let (lo, hi, n) = (-10.0 * beta, 12.0 + 10.0 * beta, 1000);
    let h = (hi - lo) / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let x = lo + (i as f64 + 0.5) * h;
        for j in 0..n {
            total += m.eval(x, lo + (j as f64 + 0.5) * h);
        }
    }
    let m_err = (total * h * h - 1.0).abs();

    let days: Vec<f64> = prior
        .iter()
        .map(|e| sc.calendar.day_of_year(e.time))
        .collect();
    let mut s_err: f64 = 0.0;
    for bt in [2.0, 20.0, 120.0] {
        let s = SeasonalRate::fit(days.clone(), bt, KernelFamily::Gaussian, YEAR_DAYS).unwrap();
        let k = 20_000;
        let step = YEAR_DAYS / k as f64;
        let total: f64 = (0..k)
            .map(|i| s.eval_day_of_year((i as f64 + 0.5) * step))
            .sum::<f64>()
            * step;
        s_err = s_err.max((total - 1.0).abs());
    }

    let mut vm_err: f64 = 0.0;
    for kappa in [0.0, 0.5, 2.0, 10.0] {
        let k = VonMisesKernel::new(1.3, kappa).unwrap();
        let n = 100_000;
        let step = TAU / n as f64;
        let total: f64 = (0..n).map(|i| k.eval((i as f64 + 0.5) * step)).sum::<f64>() * step;
        vm_err = vm_err.max((total - 1.0).abs());
    }
    ensure(
        m_err <= TOL_BACKGROUND && s_err <= TOL_SEASONAL && vm_err <= TOL_VON_MISES,
        format!("|∫m−1| {m_err:.2e}, |∫S−1| {s_err:.2e}, |∫vM−1| {vm_err:.2e}"),
    )
}

fn criterion_2() -> Check {
    let sc = Scenario::build(&small_m8(), 2).unwrap();
    let data = Arc::new(
        sc.model_data(&[ModelId::M1], &DataOptions::default())
            .unwrap(),
    );
    let quad = Quadrature::new(&data.domain.grid);
    let c = 0.0037;
    let n = data.events.len() as f64;
    let ll = log_likelihood(&ConstantIntensity(c), &data.events, &quad).unwrap();
    let exact = n * c.ln() - c * data.domain.grid.volume();
    let const_err = rel(ll, exact);

    let p = ParamVector::from_fn(ModelId::M1, |p| match p {
        Param::Gamma => 0.2,
        Param::Alpha => 0.05,
        p => default_shape(p),
    })
    .unwrap();
    let s = IntensitySurface::new(data.clone(), p).unwrap();
    let coarse = log_likelihood(&s, &data.events, &quad).unwrap();
    // 30 × 30 × 1111 ≈ 10⁶ midpoints
    let region = Region::rect(0.0, 12.0, 0.0, 12.0).unwrap();
    let g = &data.domain.grid;
    let fine_grid = g.with_pitch(&region, 0.4, (g.t1 - g.t0) / 1111.0).unwrap();
    let fine = log_likelihood(&s, &data.events, &Quadrature::new(&fine_grid)).unwrap();
    let quad_err = rel(coarse, fine);
    ensure(
        const_err <= TOL_CONSTANT_LL && quad_err <= TOL_QUADRATURE,
        format!("constant rate rel err {const_err:.2e}, M1 midpoint vs fine grid {quad_err:.2e}"),
    )
}

fn criterion_3(study: &[(ParamVector, FitResult)]) -> Check {
    let (truth, fit) = &study[0];
    let mut worst = BTreeMap::new();
    let mut ok = fit.converged;
    for (p, tol) in [
        (Param::Gamma, TOL_SCALES),
        (Param::Alpha, TOL_SCALES),
        (Param::BetaM, TOL_BANDWIDTHS),
        (Param::BetaT, TOL_BANDWIDTHS),
    ] {
        let e = rel(fit.params.value(p), truth.value(p));
        ok &= e <= tol;
        worst.insert(p.name(), e);
    }
    let detail: Vec<String> = worst
        .iter()
        .map(|(k, v)| format!("{k} {:.1}%", 100.0 * v))
        .collect();
    ensure(ok, format!("seed 0 relative errors: {}", detail.join(", ")))
}

fn criterion_4_and_5() -> (Check, Check, f64) {
    let sc = Scenario::build(&ScenarioConfig::default(), 42).unwrap();
    let models = [ModelId::M1, ModelId::M2, ModelId::M8];
    let data = Arc::new(sc.model_data(&models, &DataOptions::default()).unwrap());
    let opts = FitOptions::default();
    let fits: Vec<FitResult> = models.iter().map(|&m| fit_model(&data, m, &opts)).collect();
    let rows = relative_aic(&fits);
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("{} {:.1}", r.model, r.relative))
        .collect();
    let by = |m: ModelId| rows.iter().find(|r| r.model == m).unwrap().relative;
    let c4 = ensure(
        by(ModelId::M8) == 0.0 && by(ModelId::M1) > by(ModelId::M2),
        format!("relative AIC {}", table.join(", ")),
    );

    let grid = data
        .domain
        .grid
        .with_pitch(&data.domain.region, 4.0, 1.0)
        .unwrap();
    let fitted = IntensitySurface::new(data.clone(), fits[2].params.clone()).unwrap();
    let oracle = roc(&sc.truth, &data.events, &grid, None).unwrap();
    let flat = roc(&ConstantIntensity(1.0), &data.events, &grid, None).unwrap();
    let m8 = roc(&fitted, &data.events, &grid, None).unwrap();
    let monotone = |c: &RocCurve| {
        c.points
            .windows(2)
            .all(|w| w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr)
    };
    // an increasing transform of the scores leaves the curve unchanged
    let (scores, hits) = alarm_cells(&sc.truth, &data.events, &grid).unwrap();
    let base = roc_from_scores(&scores, &hits, None).unwrap();
    let warped: Vec<f64> = scores.iter().map(|s| (1.0 + s).ln() * 7.0 - 3.0).collect();
    let again = roc_from_scores(&warped, &hits, None).unwrap();
    let invariant = base.points.len() == again.points.len()
        && base
            .points
            .iter()
            .zip(&again.points)
            .all(|(a, b)| a.fpr == b.fpr && a.tpr == b.tpr);
    let gain = oracle.auc() - flat.auc();
    let c5 = ensure(
        gain >= MIN_AUC_GAIN && [&oracle, &flat, &m8, &base].into_iter().all(monotone) && invariant,
        format!(
            "AUC oracle {:.3}, constant {:.3}, fitted M8 {:.3}; monotone and invariant {}",
            oracle.auc(),
            flat.auc(),
            m8.auc(),
            invariant
        ),
    );
    (c4, c5, residual_sums(&data, &fits))
}

/// Worst residual-sum error over the fitted models, which criterion 6 also
/// covers.
fn residual_sums(data: &Arc<ModelData>, fits: &[FitResult]) -> f64 {
    let mut worst: f64 = 0.0;
    for f in fits {
        let s = IntensitySurface::new(data.clone(), f.params.clone()).unwrap();
        let r = residuals(
            &s,
            &data.events,
            &data.domain.grid,
            25.6f64.sqrt(),
            30.0,
            data.calendar,
        )
        .unwrap();
        // n − Λ vanishes at the estimate, so the error is scaled by Λ
        let n = data.events.len() as f64;
        let err = (r.total_residual() - (n - r.total_integral)).abs() / r.total_integral;
        worst = worst.max(err);
    }
    worst
}

fn criterion_6(fitted_worst: f64) -> Check {
    let sc = Scenario::build(&small_m8(), 5).unwrap();
    let mut th = small_m8().thinning;
    let dd = 25.6f64.sqrt();
    let mut worst: f64 = 0.0;
    let mut grids = Vec::new();
    for seed in 0..20 {
        th.seed = 500 + seed;
        let ev = simulate_events(&sc.truth, &sc.domain, &th).unwrap();
        let r = residuals(&sc.truth, &ev, &sc.domain.grid, dd, 30.0, sc.calendar).unwrap();
        let n = ev.len() as f64;
        worst = worst.max((r.total_residual() - (n - r.total_integral)).abs() / r.total_integral);
        grids.push(r);
    }
    let m = poisson_moments(&grids, 0.5).unwrap();
    let ok = worst.max(fitted_worst) <= TOL_RESIDUAL_SUM && m.consistent(3.0, 0.15);
    ensure(
        ok,
        format!(
            "max sum error {worst:.2e} simulated, {fitted_worst:.2e} fitted; standardized residuals over {} cells: mean {:.3}, variance {:.3}",
            m.cells,
            m.mean,
            m.variance
        ),
    )
}

fn criterion_7() -> Check {
    let counts: Vec<usize> = ModelId::ALL.iter().map(|&m| param_count(m)).collect();
    ensure(
        counts == [4, 6, 12, 6, 12, 6, 13, 7],
        format!("counts {counts:?}"),
    )
}

fn criterion_8(study: &[(ParamVector, FitResult)]) -> Check {
    let mut covered = 0;
    for (truth, fit) in study {
        let g = truth.value(Param::Gamma);
        if let Some(se) = fit.se.get(Param::Gamma) {
            if (fit.params.value(Param::Gamma) - g).abs() <= 2.0 * se {
                covered += 1;
            }
        }
    }
    let rate = covered as f64 / study.len() as f64;
    ensure(
        rate >= MIN_COVERAGE,
        format!("gamma covered in {covered}/{} replicates", study.len()),
    )
}

const CLI_CONFIG: &str = r#"
seed = 11
models = ["M1", "M2", "M8"]

[simulate]
prior_years = 2.0
fit_years = 1.0
history_years = 10.0
region = [0.0, 12.0, 0.0, 12.0]
stations = 4
hotspots = 3
hotspot_sd = 2.5
prior_events = 150.0
scars = 12
scar_area = [2.0, 10.0]

[simulate.truth]
expected_events = 150.0
"#;

fn snapshot(dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            snapshot(&path, out);
        } else {
            out.insert(path.display().to_string(), std::fs::read(&path).unwrap());
        }
    }
}

fn criterion_9() -> Check {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), CLI_CONFIG).unwrap();
    let run_all = || -> Result<BTreeMap<String, Vec<u8>>, String> {
        for cmd in ["simulate", "fit", "evaluate"] {
            let o = Command::new(env!("CARGO_BIN_EXE_firehazard"))
                .args([cmd, "--config", "run.toml", "--allow-nonconverged"])
                .current_dir(dir.path())
                .output()
                .unwrap();
            if !o.status.success() {
                return Err(format!("{cmd}: {}", String::from_utf8_lossy(&o.stderr)));
            }
        }
        let mut files = BTreeMap::new();
        snapshot(&dir.path().join("out"), &mut files);
        Ok(files)
    };
    let first = run_all()?;
    let second = run_all()?;
    let differing: Vec<&String> = first
        .iter()
        .filter(|(k, v)| second.get(*k) != Some(v))
        .map(|(k, _)| k)
        .collect();
    ensure(
        differing.is_empty() && first.len() == second.len(),
        format!("{} artifact files, {} differ", first.len(), differing.len()),
    )
}

fn report(n: u32, started: Instant, c: Check, failed: &mut u32) {
    let secs = started.elapsed().as_secs_f64();
    match c {
        Ok(msg) => println!("criterion {n}: PASS ({secs:.1} s) {msg}"),
        Err(msg) => {
            *failed += 1;
            println!("criterion {n}: FAIL ({secs:.1} s) {msg}");
        }
    }
}

fn main() {
    let mut failed = 0;
    let t = Instant::now();
    report(1, t, criterion_1(), &mut failed);
    let t = Instant::now();
    report(2, t, criterion_2(), &mut failed);

    let t = Instant::now();
    let study = recovery_study(20);
    let study_time = t.elapsed();
    report(
        3,
        Instant::now() - study_time / 20,
        criterion_3(&study),
        &mut failed,
    );

    let t = Instant::now();
    let (c4, c5, sums) = criterion_4_and_5();
    report(4, t, c4, &mut failed);
    report(5, t, c5, &mut failed);
    let t = Instant::now();
    report(6, t, criterion_6(sums), &mut failed);
    let t = Instant::now();
    report(7, t, criterion_7(), &mut failed);
    report(
        8,
        Instant::now() - study_time,
        criterion_8(&study),
        &mut failed,
    );
    let t = Instant::now();
    report(9, t, criterion_9(), &mut failed);

    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
