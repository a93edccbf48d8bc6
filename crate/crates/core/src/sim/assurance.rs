//! Assurance: probability of success when the stage-`j` true effect is
//! drawn from a design prior rather than fixed.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::harness::{Estimate, ScenarioSpec};
use super::rng::{stage_rng, standard_normal};
use crate::designs::{posteriors, stage_prior, DesignKind};
use crate::engine::{decide, MixtureDistribution, ProgrammeSpec};
use crate::error::{RbsbError, Result};
use crate::gaussian::StudySummary;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssuranceMode {
    #[default]
    Marginal,
    /// Given success at every upstream stage from `start_stage`.
    Conditional,
    /// Success at every stage from `start_stage` through `j`.
    Joint,
}

/// Where the upstream summaries `theta_1..theta_{j-1}` come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Upstream {
    /// Already observed; upstream decisions are fixed.
    Fixed { observed: Vec<StudySummary> },
    /// Still to be collected; each replicate redraws them from the scenario.
    Prospective { scenario: ScenarioSpec },
}

/// Distribution the stage-`j` true effect is drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DesignPrior {
    /// The design's own analysis prior for stage `j`, built from the
    /// upstream summaries of each replicate.
    Stage,
    PointMass { value: f64 },
    Mixture { mixture: MixtureDistribution },
}

fn default_start() -> usize {
    1
}

fn default_sigma() -> f64 {
    1.0
}

fn default_se_multiplier() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssuranceSpec {
    pub design: DesignKind,
    /// Target stage `j` (1-based).
    pub stage: usize,
    #[serde(default)]
    pub mode: AssuranceMode,
    pub upstream: Upstream,
    pub design_prior: DesignPrior,
    /// Size of the stage-`j` study.
    pub sample_size: i64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_se_multiplier")]
    pub se_multiplier: f64,
    #[serde(default = "default_start")]
    pub start_stage: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssuranceReport {
    pub design: DesignKind,
    pub stage: usize,
    pub mode: AssuranceMode,
    pub upstream: String,
    pub replicates: u64,
    pub seed: u64,
    /// Estimate for the requested mode.
    pub value: Estimate,
    pub marginal: Estimate,
    pub conditional: Estimate,
    pub joint: Estimate,
}

impl AssuranceSpec {
    fn standard_error(&self) -> f64 {
        self.se_multiplier * self.sigma / (self.sample_size as f64).sqrt()
    }

    fn validate(&self, programme: &ProgrammeSpec) -> Result<()> {
        programme.validate()?;
        let j = self.stage;
        if j == 0 || j > programme.num_stages() {
            return Err(RbsbError::config(format!(
                "assurance stage {j} outside 1..={}",
                programme.num_stages()
            )));
        }
        if self.start_stage == 0 || self.start_stage > j {
            return Err(RbsbError::config(format!(
                "start_stage {} must lie in 1..={j}",
                self.start_stage
            )));
        }
        if self.sample_size <= 0 {
            return Err(RbsbError::config(format!(
                "sample size at stage {j} must be positive, got {}",
                self.sample_size
            )));
        }
        if !(self.sigma > 0.0 && self.se_multiplier > 0.0) {
            return Err(RbsbError::config("sigma and se_multiplier must be positive"));
        }
        match &self.upstream {
            Upstream::Fixed { observed } => {
                if observed.len() != j - 1 {
                    return Err(RbsbError::config(format!(
                        "stage {j} assurance needs {} observed upstream summaries, got {}",
                        j - 1,
                        observed.len()
                    )));
                }
                observed.iter().try_for_each(StudySummary::validate)
            }
            Upstream::Prospective { scenario } => {
                scenario.validate()?;
                if scenario.num_stages() < j - 1 {
                    return Err(RbsbError::config(format!(
                        "scenario '{}' covers {} stages, stage {j} assurance needs {}",
                        scenario.label,
                        scenario.num_stages(),
                        j - 1
                    )));
                }
                Ok(())
            }
        }
    }
}

fn sample_mixture(mix: &MixtureDistribution, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let last = mix.components.len() - 1;
    let comp = mix
        .components
        .iter()
        .enumerate()
        .find(|(i, c)| {
            acc += c.weight;
            u < acc || *i == last
        })
        .map(|(_, c)| c)
        .expect("mixture is non-empty");
    comp.pooled.mean + comp.pooled.sd * standard_normal(rng)
}

/// Per-replicate outcome: upstream success indicator and `D_j`.
fn replicate(
    a: &AssuranceSpec,
    programme: &ProgrammeSpec,
    upstream: &[StudySummary],
    fixed_prior: Option<&MixtureDistribution>,
    seed: u64,
    r: u64,
) -> Result<(bool, bool)> {
    let j = a.stage;
    let mut rng = stage_rng(seed, r, j);
    let mu = match &a.design_prior {
        DesignPrior::PointMass { value } => *value,
        DesignPrior::Mixture { mixture } => sample_mixture(mixture, &mut rng),
        DesignPrior::Stage => match fixed_prior {
            Some(p) => sample_mixture(p, &mut rng),
            None => sample_mixture(&stage_prior(a.design, programme, upstream)?, &mut rng),
        },
    };
    let se = a.standard_error();
    let obs = StudySummary {
        mean_hat: mu + se * standard_normal(&mut rng),
        se_hat: se,
        label: String::new(),
        sample_size: None,
    };
    let mut all = upstream.to_vec();
    all.push(obs);
    let post = posteriors(a.design, programme, &all)?;
    let decisions: Vec<bool> = post.iter().map(|(m, _)| decide(m, programme)).collect();
    let upstream_ok = decisions[a.start_stage - 1..j - 1].iter().all(|&d| d);
    Ok((upstream_ok, decisions[j - 1]))
}

/// Monte Carlo assurance of `a.design` at stage `a.stage`. All three
/// modes come from the same replicates; `value` echoes the requested one.
pub fn assurance(
    a: &AssuranceSpec,
    programme: &ProgrammeSpec,
    reps: u64,
    seed: u64,
) -> Result<AssuranceReport> {
    a.validate(programme)?;
    if reps == 0 {
        return Err(RbsbError::config("reps must be at least 1"));
    }
    let (fixed_upstream, fixed_prior) = match &a.upstream {
        Upstream::Fixed { observed } => {
            let prior = match a.design_prior {
                DesignPrior::Stage => Some(stage_prior(a.design, programme, observed)?),
                _ => None,
            };
            (Some(observed.clone()), prior)
        }
        Upstream::Prospective { .. } => (None, None),
    };
    let outcomes: Vec<(bool, bool)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let upstream = match (&fixed_upstream, &a.upstream) {
                (Some(obs), _) => obs.clone(),
                (None, Upstream::Prospective { scenario }) => scenario.draw_stages(seed, r, a.stage - 1),
                (None, Upstream::Fixed { .. }) => unreachable!(),
            };
            replicate(a, programme, &upstream, fixed_prior.as_ref(), seed, r)
        })
        .collect::<Result<_>>()?;

    let n = outcomes.len();
    let marginal = Estimate::rate(outcomes.iter().filter(|o| o.1).count(), n);
    let conditioned = outcomes.iter().filter(|o| o.0).count();
    let conditional = Estimate::rate(outcomes.iter().filter(|o| o.0 && o.1).count(), conditioned);
    let joint = Estimate::rate(outcomes.iter().filter(|o| o.0 && o.1).count(), n);
    let value = match a.mode {
        AssuranceMode::Marginal => marginal,
        AssuranceMode::Conditional => conditional,
        AssuranceMode::Joint => joint,
    };
    Ok(AssuranceReport {
        design: a.design,
        stage: a.stage,
        mode: a.mode,
        upstream: match a.upstream {
            Upstream::Fixed { .. } => "fixed".into(),
            Upstream::Prospective { .. } => "prospective".into(),
        },
        replicates: reps,
        seed,
        value,
        marginal,
        conditional,
        joint,
    })
}
