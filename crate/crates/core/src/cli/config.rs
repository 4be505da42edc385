//! TOML experiment manifests and command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{AchievabilityParams, DEFAULT_EPSILON};
use crate::codec::SimMethod;
use crate::error::{Error, Result};
use crate::info::{AwgnPair, ChannelSpec, DmcPair};

/// How the number of slots grows with the block length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotRule {
    Fixed(u64),
    /// `L_n = ceil(n^kappa)`.
    Polynomial(f64),
}

impl Default for SlotRule {
    fn default() -> Self {
        Self::Polynomial(1.0)
    }
}

impl SlotRule {
    pub fn slots(&self, n: u64) -> u64 {
        match *self {
            Self::Fixed(l) => l,
            Self::Polynomial(kappa) => (n as f64).powf(kappa).ceil() as u64,
        }
    }
}

/// Channel section: either two crossover probabilities or explicit laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelConfig {
    Bsc { bob_crossover: f64, willie_crossover: f64 },
    Spec(ChannelSpec),
}

/// Validated channel pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Channel {
    Dmc(DmcPair),
    Awgn(AwgnPair),
}

impl ChannelConfig {
    pub fn resolve(&self) -> Result<Channel> {
        Ok(match self {
            Self::Bsc {
                bob_crossover,
                willie_crossover,
            } => Channel::Dmc(DmcPair::bsc(*bob_crossover, *willie_crossover)?),
            Self::Spec(ChannelSpec::Dmc(p)) => Channel::Dmc(p.clone()),
            Self::Spec(ChannelSpec::Awgn(p)) => Channel::Awgn(*p),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Slacks {
    pub nu1: f64,
    pub nu2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub epsilon: f64,
}

impl Default for Slacks {
    fn default() -> Self {
        Self {
            nu1: 0.25,
            nu2: 0.5,
            delta1: 0.25,
            delta2: 0.5,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateOptions {
    /// Largest number of codewords actually simulated.
    pub max_codewords: usize,
    /// Trials of the TV estimate; defaults to `trials`.
    pub tv_trials: Option<u64>,
    /// Defaults to symbol level for `simulate`, projected (AWGN) for `sweep`.
    pub method: Option<SimMethod>,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            max_codewords: 32,
            tv_trials: None,
            method: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectOptions {
    /// Weight (power) of the above-threshold codebook, in units of the
    /// partition threshold.
    pub factor: f64,
    pub codewords: usize,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            factor: 1.5,
            codewords: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleOptions {
    pub n_max: usize,
    pub l_max: usize,
    pub alphas: Vec<f64>,
    /// Random binary-output Willie channels per grid cell.
    pub channels: usize,
    pub min_chi2: f64,
    /// Multiplies both bounds; anything below 1 is a negative control.
    pub bound_scale: f64,
    /// Random deterministic tests per instance for the testing inequality.
    pub tests: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            n_max: 3,
            l_max: 3,
            alphas: (1..=9).map(|k| k as f64 / 10.0).collect(),
            channels: 20,
            min_chi2: 0.01,
            bound_scale: 1.0,
            tests: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: ChannelConfig,
    pub n_list: Vec<u64>,
    #[serde(default)]
    pub slot_rule: SlotRule,
    pub delta: f64,
    #[serde(default)]
    pub slacks: Slacks,
    pub trials: u64,
    #[serde(default, alias = "seed")]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub simulate: SimulateOptions,
    #[serde(default)]
    pub detect: DetectOptions,
    #[serde(default)]
    pub oracle: OracleOptions,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            channel: ChannelConfig::Bsc {
                bob_crossover: 0.05,
                willie_crossover: 0.1,
            },
            n_list: vec![10_000],
            slot_rule: SlotRule::Fixed(100),
            delta: 0.5,
            slacks: Slacks::default(),
            trials: 2000,
            master_seed: 1,
            output_dir: default_output_dir(),
            simulate: SimulateOptions::default(),
            detect: DetectOptions::default(),
            oracle: OracleOptions::default(),
        }
    }
}

/// Flag values that replace fields of the manifest.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<Vec<u64>>,
    pub slots: Option<u64>,
    pub delta: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParameters(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameters(format!("reading {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = &o.n {
            self.n_list = n.clone();
        }
        if let Some(l) = o.slots {
            self.slot_rule = SlotRule::Fixed(l);
        }
        if let Some(d) = o.delta {
            self.delta = d;
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(s) = o.seed {
            self.master_seed = s;
        }
        if let Some(p) = &o.out {
            self.output_dir = p.clone();
        }
    }

    /// Checks everything that does not depend on `n`; returns the channel.
    pub fn validate(&self) -> Result<Channel> {
        if self.n_list.is_empty() {
            return Err(Error::InvalidParameters("n_list is empty".into()));
        }
        if self.n_list.contains(&0) {
            return Err(Error::NonPositiveArgument("n"));
        }
        if self.trials == 0 || self.simulate.tv_trials == Some(0) {
            return Err(Error::NonPositiveTrials);
        }
        match self.slot_rule {
            SlotRule::Fixed(0) => return Err(Error::NonPositiveArgument("L")),
            SlotRule::Polynomial(k) if !(k > 0.0 && k.is_finite()) => {
                return Err(Error::RangeViolation(format!("kappa = {k} must be positive")))
            }
            _ => {}
        }
        if self.simulate.max_codewords == 0 || self.detect.codewords == 0 {
            return Err(Error::InvalidParameters("codebook sizes must be positive".into()));
        }
        if !(self.detect.factor > 0.0 && self.detect.factor.is_finite()) {
            return Err(Error::InvalidParameters("detect.factor must be positive".into()));
        }
        self.params()?;
        self.channel.resolve()
    }

    pub fn params(&self) -> Result<AchievabilityParams> {
        let s = &self.slacks;
        AchievabilityParams::new(self.delta, s.nu1, s.nu2, s.delta1, s.delta2, s.epsilon)
    }

    pub fn slots(&self, n: u64) -> u64 {
        self.slot_rule.slots(n)
    }
}
