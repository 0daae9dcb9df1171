use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
seed = 3
models = ["M1"]

[fit]
starts = 1

[simulate]
prior_years = 2.0
fit_years = 1.0
history_years = 5.0
region = [0.0, 12.0, 0.0, 12.0]
stations = 3
hotspots = 2
hotspot_sd = 3.0
prior_events = 120.0
scars = 8
scar_area = [2.0, 10.0]

[simulate.truth]
model = "M1"
expected_events = 120.0
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_firehazard"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tiny(dir: &Path, extra: &str) {
    std::fs::write(dir.join("run.toml"), format!("{TINY}\n{extra}")).unwrap();
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(dir.path(), &["fit", "--models", "9"]).status.code(),
        Some(2)
    );
    std::fs::write(dir.path().join("bad.toml"), "sead = 1\n").unwrap();
    let o = run(dir.path(), &["fit", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("config error:"), "{}", stderr(&o));
    let o = run(dir.path(), &["fit", "--config", "missing.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_data_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    tiny(dir.path(), "");
    let o = run(dir.path(), &["fit", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("data error:"));
}

#[test]
fn empty_fit_period_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    tiny(dir.path(), "");
    let o = run(dir.path(), &["simulate", "--config", "run.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    // keep the header and the prior-period rows only
    let catalog = std::fs::read_to_string(dir.path().join("out/data/catalog.csv")).unwrap();
    let lines: Vec<&str> = catalog.lines().collect();
    let split_year = 1992;
    let kept: Vec<&str> = std::iter::once(lines[0])
        .chain(lines[1..].iter().copied().filter(|l| {
            l.split(',')
                .find_map(|f| f.get(..4).and_then(|y| y.parse::<i32>().ok()))
                .is_some_and(|y| y < split_year)
        }))
        .collect();
    assert!(kept.len() > 1 && kept.len() < lines.len());
    std::fs::write(dir.path().join("prior.csv"), kept.join("\n") + "\n").unwrap();
    tiny(dir.path(), "[paths]\ncatalog = \"prior.csv\"\n");
    let o = run(dir.path(), &["evaluate", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(
        stderr(&o).contains("no events in fit period"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn nonconverged_fit_exits_4_unless_allowed() {
    let dir = tempfile::tempdir().unwrap();
    tiny(dir.path(), "[fit.optimizer]\nmax_iter = 3\nrestarts = 0\n");
    assert!(run(dir.path(), &["simulate", "--config", "run.toml"])
        .status
        .success());
    let o = run(dir.path(), &["fit", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("--allow-nonconverged"));
    let fit = std::fs::read_to_string(dir.path().join("out/fits/M1.toml")).unwrap();
    assert!(fit.contains("converged = false"));
    let o = run(
        dir.path(),
        &["fit", "--config", "run.toml", "--allow-nonconverged"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn full_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    tiny(dir.path(), "");
    for cmd in ["simulate", "fit", "evaluate", "report"] {
        let o = run(dir.path(), &[cmd, "--config", "run.toml", "--out", "res"]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    let out = dir.path().join("res");
    for f in [
        "data/catalog.csv",
        "data/truth.toml",
        "fits/M1.toml",
        "evaluation/aic.csv",
        "evaluation/roc_M1.csv",
        "evaluation/roc_constant.csv",
        "evaluation/roc.svg",
        "evaluation/residuals_M1.csv",
        "evaluation/residual_months_M1.csv",
        "evaluation/summary.toml",
        "report.md",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let report = std::fs::read(out.join("report.md")).unwrap();
    assert!(run(
        dir.path(),
        &["report", "--config", "run.toml", "--out", "res"]
    )
    .status
    .success());
    assert_eq!(report, std::fs::read(out.join("report.md")).unwrap());
}
