use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use firehazard::data::{Calendar, DomainConfig, StudyDomain};
use firehazard::error::{Error, Result};
use firehazard::inference::FitOptions;
use firehazard::models::{DataOptions, ModelId};
use firehazard::simulation::ScenarioConfig;

/// Input files. Unset paths fall back to the files `simulate` writes under
/// `<out>/data`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub catalog: Option<PathBuf>,
    pub stations: Option<PathBuf>,
    pub station_daily: Option<PathBuf>,
    pub fuel_history: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Alarm grid, km and days.
    pub alarm_dd: f64,
    pub alarm_dt: f64,
    /// Residual cells: area in km² and length in days.
    pub residual_area: f64,
    pub residual_dt: f64,
    pub thresholds: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            alarm_dd: 4.0,
            alarm_dt: 1.0,
            residual_area: 25.6,
            residual_dt: 30.0,
            thresholds: firehazard::evaluation::DEFAULT_THRESHOLDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub models: Vec<ModelId>,
    pub paths: Paths,
    /// Study window; taken from `simulate` when absent.
    pub domain: Option<DomainConfig>,
    pub data: DataOptions,
    pub fit: FitOptions,
    /// Starting values by parameter name.
    pub init: toml::Table,
    pub evaluate: EvaluateConfig,
    pub simulate: ScenarioConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            models: vec![ModelId::M1, ModelId::M2, ModelId::M8],
            paths: Paths::default(),
            domain: None,
            data: DataOptions::default(),
            fit: FitOptions::default(),
            init: toml::Table::new(),
            evaluate: EvaluateConfig::default(),
            simulate: ScenarioConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.evaluate;
        for (name, v) in [
            ("evaluate.alarm_dd", e.alarm_dd),
            ("evaluate.alarm_dt", e.alarm_dt),
            ("evaluate.residual_area", e.residual_area),
            ("evaluate.residual_dt", e.residual_dt),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("`{name}` must be positive")));
            }
        }
        if e.thresholds < 2 {
            return Err(Error::Config(
                "`evaluate.thresholds` must be at least 2".into(),
            ));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models to fit".into()));
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration.
    pub fn hash(&self) -> Result<String> {
        let text =
            toml::to_string(self).map_err(|e| Error::Config(format!("serializing config: {e}")))?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }

    pub fn data_dir(&self) -> PathBuf {
        self.out.join("data")
    }

    pub fn fit_dir(&self) -> PathBuf {
        self.out.join("fits")
    }

    pub fn eval_dir(&self) -> PathBuf {
        self.out.join("evaluation")
    }

    fn path_or(&self, p: &Option<PathBuf>, file: &str) -> PathBuf {
        p.clone().unwrap_or_else(|| self.data_dir().join(file))
    }

    pub fn catalog_path(&self) -> PathBuf {
        self.path_or(&self.paths.catalog, "catalog.csv")
    }

    pub fn stations_path(&self) -> PathBuf {
        self.path_or(&self.paths.stations, "stations.csv")
    }

    pub fn station_daily_path(&self) -> PathBuf {
        self.path_or(&self.paths.station_daily, "station_daily.csv")
    }

    /// A configured history must exist; the default one is optional.
    pub fn fuel_history_path(&self) -> Option<PathBuf> {
        match &self.paths.fuel_history {
            Some(p) => Some(p.clone()),
            None => Some(self.data_dir().join("fuel_history.csv")).filter(|p| p.exists()),
        }
    }

    /// Calendar, split time and study domain of the fit.
    pub fn window(&self) -> Result<(Calendar, f64, StudyDomain)> {
        match &self.domain {
            Some(d) => Ok((d.calendar()?, d.split_time()?, d.study_domain()?)),
            None => {
                let s = &self.simulate;
                Ok((s.calendar()?, s.split(), s.fit_domain()?))
            }
        }
    }
}

/// Accepts `1,2,8` or `M1,M2,M8`.
pub fn parse_models(list: &str) -> Result<Vec<ModelId>> {
    let mut out: Vec<ModelId> = Vec::new();
    for item in list.split(',').filter(|s| !s.trim().is_empty()) {
        let m: ModelId = item.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!("no models in `{list}`")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.hash().unwrap(), back.hash().unwrap());
    }

    #[test]
    fn hash_tracks_changes() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.seed = 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sead = 3").is_err());
        let cfg: RunConfig = toml::from_str("seed = 3\nmodels = [\"M2\"]").unwrap();
        assert_eq!(cfg.models, vec![ModelId::M2]);
    }

    #[test]
    fn model_lists() {
        assert_eq!(
            parse_models("1, M2,m8,2").unwrap(),
            vec![ModelId::M1, ModelId::M2, ModelId::M8]
        );
        assert!(parse_models("9").is_err());
        assert!(parse_models("").is_err());
    }

    #[test]
    fn pitches_must_be_positive() {
        let mut cfg = RunConfig::default();
        cfg.evaluate.alarm_dd = 0.0;
        assert!(cfg.validate().is_err());
    }
}
