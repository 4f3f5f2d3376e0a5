use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::active::DEFAULT_SEARCH_BUDGET;
use crate::error::{Error, Result};

/// Which fusion and planning scheme drives the sensors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Summary-based fusion with per-component joint-walk planning.
    D2fas,
    /// Subset-of-data regression with centralized planning.
    Sod,
    /// Full GP regression with centralized planning.
    Fgp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::D2fas, Algorithm::Sod, Algorithm::Fgp];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::D2fas => "d2fas",
            Algorithm::Sod => "sod",
            Algorithm::Fgp => "fgp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.label() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// A scalar or a list of values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Length-scales given explicitly, or `"fit"` to estimate them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LengthScales {
    Keyword(String),
    Values(OneOrMany<f64>),
}

impl LengthScales {
    pub fn is_fit(&self) -> bool {
        matches!(self, LengthScales::Keyword(k) if k == "fit")
    }
}

/// Constant prior mean of the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorMean {
    /// `"empirical"`: the mean of all readings so far.
    Keyword(String),
    Value(f64),
}

impl Default for PriorMean {
    fn default() -> Self {
        PriorMean::Keyword("empirical".into())
    }
}

/// How the support set is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportRule {
    #[default]
    Greedy,
    Random,
}

/// Experiment configuration, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Road-network JSON, relative to the config file.
    pub network_path: PathBuf,
    #[serde(rename = "K")]
    pub sensors: OneOrMany<usize>,
    #[serde(rename = "L")]
    pub walk_length: OneOrMany<usize>,
    #[serde(rename = "U_size")]
    pub support_size: usize,
    pub epsilon: f64,
    pub sigma_n2: f64,
    pub signal_variance: f64,
    pub length_scales: LengthScales,
    pub budget: usize,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_search_budget")]
    pub walk_search_budget: u64,

    /// Embedding dimension; by default the smallest keeping 95% of the
    /// positive spectrum.
    #[serde(default)]
    pub embedding_dim: Option<usize>,
    #[serde(default)]
    pub mds_sweeps: usize,
    /// Length-scales of the ground truth when `length_scales = "fit"`.
    #[serde(default)]
    pub truth_length_scales: Option<OneOrMany<f64>>,
    #[serde(default)]
    pub truth_mean: f64,
    /// `"empirical"` (the mean of the readings so far) or a constant.
    #[serde(default)]
    pub prior_mean: PriorMean,
    /// Prior mean while there are no readings yet.
    #[serde(default)]
    pub prior_mean_fallback: f64,
    /// Number of pilot readings used for fitting hyperparameters.
    #[serde(default = "default_fit_sample")]
    pub fit_sample: usize,
    #[serde(default)]
    pub ground_truth_seed: u64,
    #[serde(default)]
    pub support: SupportRule,
    /// Write wall-clock times to the metrics; off by default so that
    /// metrics files are reproducible byte for byte.
    #[serde(default)]
    pub record_timing: bool,
    /// Stop after this many consecutive rounds without a new reading.
    #[serde(default = "default_idle_rounds")]
    pub max_idle_rounds: usize,
    #[serde(default)]
    pub max_rounds: Option<usize>,
}

fn default_search_budget() -> u64 {
    DEFAULT_SEARCH_BUDGET
}

fn default_fit_sample() -> usize {
    50
}

fn default_idle_rounds() -> usize {
    3
}

impl Config {
    /// Parse and validate; `network_path` stays as written.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Read a config file and resolve `network_path` against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut config = Config::from_toml(&std::fs::read_to_string(path)?)?;
        if config.network_path.is_relative() {
            if let Some(dir) = path.parent() {
                config.network_path = dir.join(&config.network_path);
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let sensors = self.sensors.to_vec();
        let lengths = self.walk_length.to_vec();
        if sensors.is_empty() || sensors.contains(&0) {
            return bad("K must list positive sensor counts".into());
        }
        if lengths.is_empty() || lengths.contains(&0) {
            return bad("L must list positive walk lengths".into());
        }
        if self.support_size == 0 {
            return bad("U_size must be positive".into());
        }
        if !(self.epsilon >= 0.0) {
            return bad(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            ));
        }
        if !(self.sigma_n2 >= 0.0) || !self.sigma_n2.is_finite() {
            return bad(format!(
                "sigma_n2 must be non-negative, got {}",
                self.sigma_n2
            ));
        }
        if !(self.signal_variance > 0.0) || !self.signal_variance.is_finite() {
            return bad(format!(
                "signal_variance must be positive, got {}",
                self.signal_variance
            ));
        }
        match &self.length_scales {
            LengthScales::Keyword(k) if k != "fit" => {
                return bad(format!(
                    "length_scales must be a list or \"fit\", got {k:?}"
                ));
            }
            LengthScales::Keyword(_) if self.truth_length_scales.is_none() => {
                return bad(
                    "length_scales = \"fit\" needs truth_length_scales for the ground truth".into(),
                );
            }
            LengthScales::Values(v)
                if v.to_vec().is_empty() || v.to_vec().iter().any(|l| !(*l > 0.0)) =>
            {
                return bad("length_scales must be positive".into());
            }
            _ => {}
        }
        match &self.prior_mean {
            PriorMean::Keyword(k) if k != "empirical" => {
                return bad(format!(
                    "prior_mean must be a number or \"empirical\", got {k:?}"
                ));
            }
            PriorMean::Value(v) if !v.is_finite() => return bad("prior_mean must be finite".into()),
            _ => {}
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.algorithms.is_empty() {
            return bad("algorithms must not be empty".into());
        }
        if self.walk_search_budget == 0 {
            return bad("walk_search_budget must be positive".into());
        }
        if self.embedding_dim == Some(0) {
            return bad("embedding_dim must be positive".into());
        }
        Ok(())
    }

    pub fn sensor_counts(&self) -> Vec<usize> {
        self.sensors.to_vec()
    }

    pub fn walk_lengths(&self) -> Vec<usize> {
        self.walk_length.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMOKE: &str = r#"
network_path = "net.json"
K = 4
L = [2, 4]
U_size = 16
epsilon = 2.0
sigma_n2 = 0.05
signal_variance = 1.0
length_scales = [0.5]
budget = 120
seeds = [0, 1]
algorithms = ["d2fas", "sod", "fgp"]
walk_search_budget = 1000000
"#;

    #[test]
    fn parses_scalars_and_lists() {
        let c = Config::from_toml(SMOKE).unwrap();
        assert_eq!(c.sensor_counts(), vec![4]);
        assert_eq!(c.walk_lengths(), vec![2, 4]);
        assert_eq!(c.algorithms, Algorithm::ALL.to_vec());
        assert!(!c.length_scales.is_fit());
        assert_eq!(c.max_idle_rounds, 3);
        let again = Config::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(Config::from_toml(&format!("{SMOKE}\nbogus = 1\n")).is_err());
        assert!(Config::from_toml(&SMOKE.replace("K = 4", "K = 0")).is_err());
        assert!(Config::from_toml(&SMOKE.replace("[0.5]", "\"auto\"")).is_err());
        assert!(Config::from_toml(&SMOKE.replace("[0.5]", "\"fit\"")).is_err());
        assert!(Config::from_toml(&format!("{SMOKE}\nprior_mean = \"median\"\n")).is_err());
        let fixed = Config::from_toml(&format!("{SMOKE}\nprior_mean = 2.5\n")).unwrap();
        assert_eq!(fixed.prior_mean, PriorMean::Value(2.5));
        let fit = SMOKE.replace("[0.5]", "\"fit\"") + "truth_length_scales = 0.5\n";
        assert!(Config::from_toml(&fit).unwrap().length_scales.is_fit());
    }

    #[test]
    fn algorithm_names() {
        assert_eq!("FGP".parse::<Algorithm>().unwrap(), Algorithm::Fgp);
        assert!("gp".parse::<Algorithm>().is_err());
    }
}
