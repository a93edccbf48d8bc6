//! Run configuration: parsing, defaults and validation.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::designs::DesignKind;
use crate::engine::{Direction, EssMethod, ProgrammeSpec};
use crate::error::{RbsbError, Result};
use crate::gaussian::StudySummary;
use crate::sim::ScenarioSpec;

/// Packaged config reproducing the nine simulation settings.
pub const SETTINGS_JSON: &str = include_str!("../data/settings-table1.json");

pub const DEFAULT_REPS: u64 = 10_000;
pub const DEFAULT_DELTA: f64 = 0.5;
pub const DEFAULT_SAMPLE_SIZES: [i64; 5] = [160, 60, 60, 60, 60];

/// Trajectories of the nine settings as multiples of `delta`.
const SETTING_MULTIPLES: [[f64; 5]; 9] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 1.0, 0.0, 0.0],
    [1.0, 1.0, 1.0, 1.0, 0.0],
    [1.0, 1.0, 1.0, 1.0, 1.0],
    [1.0, 1.0, 0.6, 0.0, 0.0],
    [1.0, 1.0, 0.6, 0.6, 0.0],
    [1.0, 1.0, 0.6, 0.6, 0.6],
];

pub fn packaged_scenarios() -> Vec<ScenarioSpec> {
    SETTING_MULTIPLES
        .iter()
        .enumerate()
        .map(|(i, m)| ScenarioSpec {
            label: format!("setting_{}", i + 1),
            true_effects: m.iter().map(|x| x * DEFAULT_DELTA).collect(),
            sample_sizes: DEFAULT_SAMPLE_SIZES.to_vec(),
            sigma: 1.0,
            delta: DEFAULT_DELTA,
            se_multiplier: 2.0,
        })
        .collect()
}

/// Five stages, `w = (0, 0.5, 0.5, 0.5, 0.5)`, vague prior `N(0, 2)`,
/// `p* = 0.975`.
pub fn default_programme() -> ProgrammeSpec {
    ProgrammeSpec {
        borrow_weights: vec![0.0, 0.5, 0.5, 0.5, 0.5],
        unit_info: StudySummary::unit_info(0.0, 2.0).expect("valid"),
        threshold: 0.975,
        direction: Direction::HigherIsBetter,
        ess_method: EssMethod::Elir,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Markdown,
    Json,
}

fn default_designs() -> Vec<DesignKind> {
    DesignKind::ALL.to_vec()
}

fn default_reps() -> u64 {
    DEFAULT_REPS
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("rbsb-out")
}

fn default_formats() -> BTreeSet<OutputFormat> {
    [OutputFormat::Csv, OutputFormat::Markdown, OutputFormat::Json].into()
}

fn default_conditional_start() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "packaged_scenarios")]
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(default = "default_programme")]
    pub programme: ProgrammeSpec,
    #[serde(default = "default_designs")]
    pub designs: Vec<DesignKind>,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_formats")]
    pub output_formats: BTreeSet<OutputFormat>,
    #[serde(default = "default_conditional_start")]
    pub conditional_start: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenarios: packaged_scenarios(),
            programme: default_programme(),
            designs: default_designs(),
            reps: DEFAULT_REPS,
            seed: 0,
            output_dir: default_output_dir(),
            output_formats: default_formats(),
            conditional_start: 1,
        }
    }
}

/// A run manifest embeds the config it was produced from.
#[derive(Deserialize)]
struct ManifestConfig {
    config: RunConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| RbsbError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse either a config file or a run manifest.
    pub fn from_json_or_manifest(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| RbsbError::config(e.to_string()))?;
        let cfg = if value.get("manifest_version").is_some() {
            serde_json::from_value::<ManifestConfig>(value)
                .map_err(|e| RbsbError::config(format!("manifest: {e}")))?
                .config
        } else {
            serde_json::from_value::<Self>(value).map_err(|e| RbsbError::config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The packaged nine-setting configuration.
    pub fn packaged() -> Self {
        Self::from_json(SETTINGS_JSON).expect("packaged config is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(RbsbError::config("scenarios: at least one scenario is required"));
        }
        if self.designs.is_empty() {
            return Err(RbsbError::config("designs: at least one design is required"));
        }
        if self.output_formats.is_empty() {
            return Err(RbsbError::config("output_formats: at least one format is required"));
        }
        if self.reps == 0 {
            return Err(RbsbError::config("reps: must be at least 1"));
        }
        self.programme
            .validate()
            .map_err(|e| RbsbError::config(format!("programme: {e}")))?;
        let k = self.programme.num_stages();
        if self.conditional_start == 0 || self.conditional_start > k {
            return Err(RbsbError::config(format!(
                "conditional_start: must lie in 1..={k}, got {}",
                self.conditional_start
            )));
        }
        let mut labels = BTreeSet::new();
        for sc in &self.scenarios {
            sc.validate()?;
            if sc.num_stages() != k {
                return Err(RbsbError::config(format!(
                    "scenario '{}' has {} stages but programme.borrow_weights has {k}",
                    sc.label,
                    sc.num_stages()
                )));
            }
            if !labels.insert(sc.label.as_str()) {
                return Err(RbsbError::config(format!("duplicate scenario label '{}'", sc.label)));
            }
        }
        let mut seen = BTreeSet::new();
        for d in &self.designs {
            if !seen.insert(*d) {
                return Err(RbsbError::config(format!("designs: '{d}' listed twice")));
            }
        }
        Ok(())
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| RbsbError::io(path, e))?;
    RunConfig::from_json_or_manifest(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packaged_settings_match_defaults() {
        let cfg = RunConfig::packaged();
        assert_eq!(cfg.scenarios.len(), 9);
        assert_eq!(cfg.scenarios, packaged_scenarios());
        assert_eq!(cfg.programme, default_programme());
        assert_eq!(cfg.scenarios[8].true_effects, vec![0.5, 0.5, 0.3, 0.3, 0.3]);
    }

    #[test]
    fn empty_object_gets_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_json(r#"{"sead": 3}"#).unwrap_err();
        assert!(matches!(err, RbsbError::Config(_)));
        assert!(err.to_string().contains("sead"));
    }

    #[test]
    fn negative_sample_size_names_stage() {
        let mut cfg = RunConfig::default();
        cfg.scenarios[0].sample_sizes[3] = -60;
        let err = RunConfig::from_json(&cfg.to_json()).unwrap_err();
        assert!(err.to_string().contains("stage 4"), "{err}");
    }

    #[test]
    fn stage_mismatch_rejected() {
        let mut cfg = RunConfig::default();
        cfg.programme.borrow_weights.pop();
        assert!(matches!(cfg.validate(), Err(RbsbError::Config(_))));
    }

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig { seed: 12345, reps: 77, ..RunConfig::default() };
        cfg.designs = vec![DesignKind::Rbsb, DesignKind::Adjacent];
        cfg.output_formats = [OutputFormat::Csv].into();
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn reads_manifest_wrapper() {
        let cfg = RunConfig { seed: 5, ..RunConfig::default() };
        let manifest = serde_json::json!({ "manifest_version": 1, "config": cfg });
        assert_eq!(RunConfig::from_json_or_manifest(&manifest.to_string()).unwrap(), cfg);
    }
}
