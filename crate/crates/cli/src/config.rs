//! Experiment configuration (TOML).

use crate::generator::GeneratorSpec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identities,
    Certify,
    SumConverge,
    Clifford,
    SquareSum,
    Dunford,
    KkCheck,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Identities,
        Suite::Certify,
        Suite::SumConverge,
        Suite::Clifford,
        Suite::SquareSum,
        Suite::Dunford,
        Suite::KkCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Certify => "certify",
            Suite::SumConverge => "sum-converge",
            Suite::Clifford => "clifford",
            Suite::SquareSum => "square-sum",
            Suite::Dunford => "dunford",
            Suite::KkCheck => "kk-check",
        }
    }

    pub fn default_instances(self) -> usize {
        match self {
            Suite::Identities => 100,
            Suite::Dunford => 5,
            Suite::KkCheck => 10,
            _ => 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    /// `None` runs every suite; an explicit empty list is a configuration error.
    pub suites: Option<Vec<Suite>>,
    pub seed: u64,
    /// Overrides every suite's default instance count.
    pub instances: Option<usize>,
    /// Tolerance for exact identities, relative to the natural scale.
    pub tol: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            suites: None,
            seed: 0,
            instances: None,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SumConvergeSection {
    pub mu_grid: Vec<f64>,
}

impl Default for SumConvergeSection {
    fn default() -> Self {
        Self {
            mu_grid: vec![0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DunfordSection {
    pub lambdas: Vec<f64>,
    pub nodes: usize,
}

impl Default for DunfordSection {
    fn default() -> Self {
        Self {
            lambdas: vec![10.0, 100.0, 1000.0],
            nodes: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KkSection {
    pub kappa: f64,
}

impl Default for KkSection {
    fn default() -> Self {
        Self { kappa: 0.1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentSection,
    pub generator: GeneratorSpec,
    pub sum_converge: SumConvergeSection,
    pub dunford: DunfordSection,
    pub kk: KkSection,
    /// Not part of the report snapshot, so reports do not depend on where they are written.
    #[serde(skip_serializing)]
    pub output: OutputSection,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Config = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigLoadError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigLoadError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigLoadError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), String> {
        if matches!(&self.experiment.suites, Some(s) if s.is_empty()) {
            return Err("experiment.suites is empty".into());
        }
        if !(self.experiment.tol > 0.0 && self.experiment.tol.is_finite()) {
            return Err(format!(
                "experiment.tol = {} must be positive",
                self.experiment.tol
            ));
        }
        if self.experiment.instances == Some(0) {
            return Err("experiment.instances must be positive".into());
        }
        if self.dunford.nodes < wacpair_core::dunford::MIN_NODES {
            return Err(format!(
                "dunford.nodes must be at least {}",
                wacpair_core::dunford::MIN_NODES
            ));
        }
        if self
            .dunford
            .lambdas
            .iter()
            .any(|&l| !(l > 0.0 && l.is_finite()))
            || self.dunford.lambdas.is_empty()
        {
            return Err("dunford.lambdas must be a nonempty list of positive numbers".into());
        }
        if self
            .sum_converge
            .mu_grid
            .iter()
            .any(|&m| !(m > 0.0 && m.is_finite()))
            || self.sum_converge.mu_grid.is_empty()
        {
            return Err("sum_converge.mu_grid must be a nonempty list of positive numbers".into());
        }
        if !(self.kk.kappa > 0.0 && self.kk.kappa.is_finite()) {
            return Err(format!("kk.kappa = {} must be positive", self.kk.kappa));
        }
        Ok(())
    }

    pub fn suites(&self) -> Vec<Suite> {
        self.experiment
            .suites
            .clone()
            .unwrap_or_else(|| Suite::ALL.to_vec())
    }

    pub fn instances(&self, suite: Suite) -> usize {
        self.experiment
            .instances
            .unwrap_or(suite.default_instances())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigLoadError {
    Io(String),
    Parse(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = Config::parse("").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.suites().len(), 7);
    }

    #[test]
    fn sections_parse() {
        let cfg = Config::parse(
            r#"
            [experiment]
            suites = ["identities", "kk-check"]
            seed = 9
            [generator]
            construction = "clifford_tensor"
            anticommutator_target = 0.5
            [kk]
            kappa = 0.2
            "#,
        )
        .unwrap();
        assert_eq!(cfg.suites(), vec![Suite::Identities, Suite::KkCheck]);
        assert_eq!(cfg.experiment.seed, 9);
        assert_eq!(cfg.kk.kappa, 0.2);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(Config::parse("[experiment]\nsuites = []").is_err());
        assert!(Config::parse("[experiment]\nsuites = [\"nope\"]").is_err());
        assert!(Config::parse("[experiment]\nunknown = 1").is_err());
        assert!(Config::parse("[dunford]\nnodes = 4").is_err());
    }

    #[test]
    fn output_dir_is_not_serialized() {
        let mut cfg = Config::default();
        cfg.output.dir = Some("/tmp/x".into());
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(!json.contains("/tmp/x"));
    }
}
