//! Run configuration. Every path inside a config, the output directory
//! included, resolves against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use maxshape::functionals::SetFunctional;
use maxshape::geometry::{CurveNetwork, DomainSpec};
use maxshape::optimizer::{OptConfig, OptResult};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Evaluate,
    Audit,
    Properties,
    Fixtures,
}

/// Either a path to a JSON file or the value inline.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

/// A network given bare or as a whole solver result.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkInput {
    Result(Box<OptResult>),
    Network(CurveNetwork<f64>),
}

impl NetworkInput {
    pub fn network(&self) -> &CurveNetwork<f64> {
        match self {
            NetworkInput::Result(r) => &r.best,
            NetworkInput::Network(n) => n,
        }
    }

    /// Audit radius cap stored with a solver result.
    pub fn r0(&self) -> Option<f64> {
        match self {
            NetworkInput::Result(r) => Some(r.r0),
            NetworkInput::Network(_) => None,
        }
    }
}

pub const TOP_LEVEL_KEYS: &[&str] = &[
    "command",
    "domain",
    "functional",
    "optimizer",
    "network",
    "grid_h",
    "output_dir",
    "render",
    "fixture_depth",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub domain: Option<Source<DomainSpec<f64>>>,
    /// Functional for `evaluate`; falls back to `optimizer.functional`.
    #[serde(default)]
    pub functional: Option<SetFunctional>,
    #[serde(default)]
    pub optimizer: Option<OptConfig>,
    #[serde(default)]
    pub network: Option<Source<NetworkInput>>,
    /// Lattice spacing for `evaluate` and `audit`; falls back to
    /// `optimizer.grid_h`.
    #[serde(default)]
    pub grid_h: Option<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_render")]
    pub render: bool,
    #[serde(default = "default_fixture_depth")]
    pub fixture_depth: usize,
    /// Directory of the config file, for relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_render() -> bool {
    true
}

fn default_fixture_depth() -> usize {
    10
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            domain: None,
            functional: None,
            optimizer: None,
            network: None,
            grid_h: None,
            output_dir: default_output_dir(),
            render: default_render(),
            fixture_depth: default_fixture_depth(),
            base_dir: PathBuf::from("."),
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(path.to_path_buf(), e))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = read_json(path)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.output_dir = cfg.resolve(&cfg.output_dir);
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn domain(&self) -> Result<DomainSpec<f64>, CliError> {
        match &self.domain {
            None => Err(CliError::Missing("domain")),
            Some(Source::Inline(d)) => Ok(d.clone()),
            Some(Source::Path(p)) => read_json(&self.resolve(p)),
        }
    }

    pub fn network(&self) -> Result<NetworkInput, CliError> {
        match &self.network {
            None => Err(CliError::Missing("network")),
            Some(Source::Inline(n)) => Ok(n.clone()),
            Some(Source::Path(p)) => read_json(&self.resolve(p)),
        }
    }

    pub fn optimizer(&self) -> Result<&OptConfig, CliError> {
        self.optimizer.as_ref().ok_or(CliError::Missing("optimizer"))
    }

    pub fn functional(&self) -> Result<SetFunctional, CliError> {
        self.functional
            .clone()
            .or_else(|| self.optimizer.as_ref().map(|o| o.functional.clone()))
            .ok_or(CliError::Missing("functional"))
    }

    pub fn grid_h(&self) -> Option<f64> {
        self.grid_h.or_else(|| self.optimizer.as_ref().map(|o| o.grid_h))
    }
}
