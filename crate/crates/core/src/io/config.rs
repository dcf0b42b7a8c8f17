//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synth::{generate_synthetic, SyntheticSpec};
use super::table::{load_csv, read_header, ColumnRoles, GroupRoles};
use crate::bkmr::BkmrConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::penalized::PenalizedConfig;
use crate::sweep::{default_seeds, ModelKind, SweepConfig};
use crate::wqs::WqsConfig;

/// `"a..b"` (inclusive), `"a,b,c"`, or a TOML integer array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Text(String),
}

impl SeedSpec {
    pub fn resolve(&self) -> Result<Vec<u64>> {
        match self {
            SeedSpec::List(v) => Ok(v.clone()),
            SeedSpec::Text(s) => parse_seeds(s),
        }
    }
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let bad = |part: &str| Error::Config(format!("cannot parse seed '{part}' in '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad(a))?;
        let b = b.trim();
        let b: u64 = b.strip_prefix('=').unwrap_or(b).trim().parse().map_err(|_| bad(b))?;
        if a > b {
            return Err(Error::Config(format!("empty seed range {s}")));
        }
        if b - a >= 10_000_000 {
            return Err(Error::Config(format!("seed range {s} is too long")));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<u64>().map_err(|_| bad(p)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    pub outcome: String,
    pub exposures: Vec<String>,
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default)]
    pub groups: Vec<GroupRoles>,
}

impl DataSection {
    pub fn roles(&self) -> ColumnRoles {
        ColumnRoles {
            outcome: self.outcome.clone(),
            exposures: self.exposures.clone(),
            covariates: self.covariates.clone(),
            groups: self.groups.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelKind>,
    pub seeds: Option<SeedSpec>,
    pub parallelism: Option<usize>,
    pub output: Option<PathBuf>,
    pub data: Option<DataSection>,
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default)]
    pub penalized: PenalizedConfig,
    #[serde(default)]
    pub wqs: WqsConfig,
    #[serde(default)]
    pub bkmr: BkmrConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<ModelKind>,
    pub seeds: Option<String>,
    pub jobs: Option<usize>,
    pub output: Option<PathBuf>,
}

/// A validated run: data loaded, sweep configured, nothing fitted yet.
pub struct PreparedRun {
    pub dataset: Dataset,
    pub sweep: SweepConfig,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    /// Reads and parses a config file. A missing or unreadable file is a
    /// usage error.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        if let Some(d) = cfg.data.as_mut() {
            if d.path.is_relative() {
                if let Some(dir) = path.parent() {
                    d.path = dir.join(&d.path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn sweep_config(&self, ov: &Overrides) -> Result<SweepConfig> {
        let model = ov
            .model
            .or(self.model)
            .ok_or_else(|| Error::Config("no model given (config `model` or --model)".into()))?;
        let seeds = match (&ov.seeds, &self.seeds) {
            (Some(s), _) => parse_seeds(s)?,
            (None, Some(s)) => s.resolve()?,
            (None, None) => default_seeds(),
        };
        let cfg = SweepConfig {
            model,
            seeds,
            penalized: self.penalized.clone(),
            wqs: self.wqs.clone(),
            bkmr: self.bkmr.clone(),
            parallelism: ov.jobs.or(self.parallelism).unwrap_or(1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Everything that can be checked before fitting: config values, input
    /// header against roles, data contents and data-dependent limits.
    pub fn prepare(&self, ov: &Overrides) -> Result<PreparedRun> {
        let sweep = self.sweep_config(ov)?;
        let dataset = self.load_dataset()?;
        sweep.validate_for(&dataset)?;
        let output = ov
            .output
            .clone()
            .or_else(|| self.output.clone())
            .unwrap_or_else(|| PathBuf::from("seedsweep-out"));
        Ok(PreparedRun {
            dataset,
            sweep,
            output,
        })
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        match (&self.data, &self.synthetic) {
            (Some(_), Some(_)) => Err(Error::Config(
                "give either [data] or [synthetic], not both".into(),
            )),
            (None, None) => Err(Error::Config("config needs a [data] or [synthetic] table".into())),
            (None, Some(spec)) => generate_synthetic(spec),
            (Some(d), None) => {
                let roles = d.roles();
                roles.validate()?;
                let header = read_header(&d.path)?;
                let wanted = std::iter::once(&roles.outcome)
                    .chain(&roles.exposures)
                    .chain(&roles.covariates);
                for name in wanted {
                    if !header.contains(name) {
                        return Err(Error::MissingColumn(name.clone()));
                    }
                }
                load_csv(&d.path, &roles)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_syntax() {
        assert_eq!(parse_seeds("1..5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_seeds("7, 3,9").unwrap(), vec![7, 3, 9]);
        assert_eq!(parse_seeds("4..4").unwrap(), vec![4]);
        assert!(parse_seeds("5..1").is_err());
        assert!(parse_seeds("1..x").is_err());
        assert!(parse_seeds("a,b").is_err());
    }

    #[test]
    fn parses_full_config() {
        let cfg = RunConfig::from_toml(
            r#"
model = "group_lasso"
seeds = "1..10"
parallelism = 2

[synthetic]
n = 60
p = 4
groups = 2
rho = 0.2

[penalized]
folds = 5
"#,
        )
        .unwrap();
        let sweep = cfg.sweep_config(&Overrides::default()).unwrap();
        assert_eq!(sweep.model, ModelKind::GroupLasso);
        assert_eq!(sweep.seeds.len(), 10);
        assert_eq!(sweep.penalized.folds, 5);
        let ov = Overrides {
            seeds: Some("3,4".into()),
            jobs: Some(8),
            ..Overrides::default()
        };
        let sweep = cfg.sweep_config(&ov).unwrap();
        assert_eq!((sweep.seeds, sweep.parallelism), (vec![3, 4], 8));
        assert_eq!(cfg.prepare(&Overrides::default()).unwrap().dataset.n(), 60);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_toml("model = \"lasso\"\nfolds = 3\n").is_err());
        let cfg = RunConfig::from_toml("model = \"lasso\"\nseeds = [1, 1]\n").unwrap();
        assert!(cfg.sweep_config(&Overrides::default()).is_err());
        let cfg = RunConfig::from_toml("model = \"lasso\"\n").unwrap();
        assert!(matches!(cfg.load_dataset(), Err(Error::Config(_))));
    }
}
