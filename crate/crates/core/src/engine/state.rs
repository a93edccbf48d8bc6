use log::warn;
use serde::{Deserialize, Serialize};

use super::mixture::{log_sum_exp, MixtureDistribution, MixtureKind, PathComponent, WEIGHT_SUM_TOL};
use super::paths::{path_weights, VAGUE_RANGE};
use super::programme::{Direction, ProgrammeSpec};
use crate::error::{RbsbError, Result};
use crate::gaussian::{normal_ln_pdf_unchecked, pool_unchecked, PooledNormal, StudySummary};

/// Outcome of one posterior mixture-weight update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightUpdate {
    pub wstar: f64,
    /// log marginal predictive likelihood under the informative paths
    pub ln_m_inf: f64,
    /// log marginal predictive likelihood under the vague component
    pub ln_m_vag: f64,
    /// Both marginals vanished; `wstar` fell back to the prior weight.
    pub indeterminate: bool,
}

/// Posterior weight of the informative part of a robust mixture prior
/// after observing `obs`.
pub fn update_wstar(
    prior_paths: &[PathComponent],
    vague: &StudySummary,
    w_j: f64,
    obs: &StudySummary,
) -> Result<f64> {
    update_wstar_detailed(prior_paths, vague, w_j, obs).map(|u| u.wstar)
}

pub fn update_wstar_detailed(
    prior_paths: &[PathComponent],
    vague: &StudySummary,
    w_j: f64,
    obs: &StudySummary,
) -> Result<WeightUpdate> {
    if !(0.0..=1.0).contains(&w_j) {
        return Err(RbsbError::domain(format!(
            "prior borrowing weight {w_j} outside [0, 1]"
        )));
    }
    obs.validate()?;
    vague.validate()?;
    let total: f64 = prior_paths.iter().map(|c| c.weight).sum();
    if prior_paths.is_empty() || (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(RbsbError::domain(format!(
            "informative path weights must sum to 1, got {total}"
        )));
    }

    let se2 = obs.se_hat * obs.se_hat;
    let ln_m_inf = log_sum_exp(prior_paths.iter().filter(|c| c.weight > 0.0).map(|c| {
        let sd = (c.pooled.variance() + se2).sqrt();
        c.weight.ln() + normal_ln_pdf_unchecked(obs.mean_hat, c.pooled.mean, sd)
    }));
    let ln_m_vag = normal_ln_pdf_unchecked(
        obs.mean_hat,
        vague.mean_hat,
        (vague.se_hat * vague.se_hat + se2).sqrt(),
    );

    let mut update = WeightUpdate {
        wstar: w_j,
        ln_m_inf,
        ln_m_vag,
        indeterminate: false,
    };
    if w_j == 0.0 || w_j == 1.0 {
        return Ok(update);
    }

    let a = w_j.ln() + ln_m_inf;
    let b = (1.0 - w_j).ln() + ln_m_vag;
    update.wstar = match (a.is_finite(), b.is_finite()) {
        (true, true) => 1.0 / (1.0 + (b - a).exp()),
        (true, false) => 1.0,
        (false, true) => 0.0,
        (false, false) => {
            warn!(
                "w* update indeterminate for '{}': both marginal likelihoods vanished, keeping w = {w_j}",
                obs.label
            );
            update.indeterminate = true;
            w_j
        }
    };
    Ok(update)
}

/// Update a robust mixture prior (informative paths ending at `j - 1` plus
/// the vague component) with the stage-`j` observation.
///
/// Informative path `(i, j-1)` becomes `(i, j)` with weight `w* W_S`; the
/// vague component becomes the singleton path `(j, j)` with weight `1 - w*`.
pub fn robust_update(
    informative: &[PathComponent],
    unit_info: &StudySummary,
    w_j: f64,
    obs: &StudySummary,
    j: usize,
) -> Result<(WeightUpdate, MixtureDistribution)> {
    let update = update_wstar_detailed(informative, unit_info, w_j, obs)?;
    let mut components: Vec<PathComponent> = informative
        .iter()
        .map(|c| PathComponent::new((c.start, j), c.pooled.update(obs), update.wstar * c.weight))
        .collect();
    components.push(PathComponent::new(
        (j, j),
        pool_unchecked(unit_info, std::iter::once(obs)),
        1.0 - update.wstar,
    ));
    Ok((
        update,
        MixtureDistribution {
            components,
            kind: MixtureKind::Posterior,
        },
    ))
}

/// Immutable state of a programme after `stage` analyses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineState {
    pub stage: usize,
    pub observed: Vec<StudySummary>,
    /// `w*_1..w*_stage`, with `w*_1 = 0`.
    pub wstar_history: Vec<f64>,
    /// Posterior over the paths ending at `stage`; `None` before stage 1.
    pub posterior: Option<MixtureDistribution>,
    /// Prior used for the most recent analysis.
    pub last_prior: Option<MixtureDistribution>,
    pub last_update: Option<WeightUpdate>,
}

impl Default for EngineState {
    fn default() -> Self {
        Self::new()
    }
}

impl EngineState {
    pub fn new() -> Self {
        Self {
            stage: 0,
            observed: Vec::new(),
            wstar_history: Vec::new(),
            posterior: None,
            last_prior: None,
            last_update: None,
        }
    }

    /// Prior for the next stage: the vague prior at stage 1, the robust
    /// mixture otherwise.
    pub fn next_prior(&self, spec: &ProgrammeSpec) -> Result<MixtureDistribution> {
        if self.stage == 0 {
            Ok(MixtureDistribution::single(
                VAGUE_RANGE,
                PooledNormal::from_summary(&spec.unit_info),
                MixtureKind::Prior,
            ))
        } else {
            build_prior(self, spec, self.stage + 1)
        }
    }
}

/// Robust mixture prior for stage `j >= 2` given stages `1..j-1`.
pub fn build_prior(
    state: &EngineState,
    spec: &ProgrammeSpec,
    j: usize,
) -> Result<MixtureDistribution> {
    if j < 2 || j > spec.num_stages() {
        return Err(RbsbError::domain(format!(
            "build_prior: stage {j} outside 2..={}",
            spec.num_stages()
        )));
    }
    if state.stage != j - 1 {
        return Err(RbsbError::State(format!(
            "build_prior: stage {j} needs {} analysed stages, state has {}",
            j - 1,
            state.stage
        )));
    }
    let posterior = state
        .posterior
        .as_ref()
        .ok_or_else(|| RbsbError::State("build_prior: missing posterior".into()))?;
    let w_j = spec.weight(j)?;

    let mut components: Vec<PathComponent> = posterior
        .components
        .iter()
        .map(|c| PathComponent { weight: w_j * c.weight, ..*c })
        .collect();
    components.push(PathComponent::new(
        VAGUE_RANGE,
        PooledNormal::from_summary(&spec.unit_info),
        1.0 - w_j,
    ));
    MixtureDistribution::new(components, MixtureKind::Prior)
}

/// Analyse the next study in the sequence and return the new state.
pub fn advance(
    state: &EngineState,
    spec: &ProgrammeSpec,
    obs: &StudySummary,
) -> Result<EngineState> {
    if state.stage >= spec.num_stages() {
        return Err(RbsbError::State(format!(
            "programme complete: all {} stages analysed",
            spec.num_stages()
        )));
    }
    obs.validate()?;
    let j = state.stage + 1;
    let prior = state.next_prior(spec)?;

    let mut observed = state.observed.clone();
    observed.push(obs.clone());
    let mut wstar_history = state.wstar_history.clone();

    let (posterior, update) = if j == 1 {
        wstar_history.push(0.0);
        let pooled = pool_unchecked(&spec.unit_info, std::iter::once(obs));
        (
            MixtureDistribution::single((1, 1), pooled, MixtureKind::Posterior),
            None,
        )
    } else {
        let previous = state.posterior.as_ref().expect("stage >= 1 has a posterior");
        let (update, mut posterior) =
            robust_update(&previous.components, &spec.unit_info, spec.weight(j)?, obs, j)?;
        wstar_history.push(update.wstar);
        // weights straight from the path-weight recursion
        for (c, w) in posterior.components.iter_mut().zip(path_weights(&wstar_history)?) {
            c.weight = w;
        }
        (posterior, Some(update))
    };

    Ok(EngineState {
        stage: j,
        observed,
        wstar_history,
        posterior: Some(posterior),
        last_prior: Some(prior),
        last_update: update,
    })
}

pub fn success_probability(mix: &MixtureDistribution, direction: Direction) -> f64 {
    mix.success_probability(direction)
}

/// Strict `Pr(benefit) > p*`; ties fail.
pub fn decide(mix: &MixtureDistribution, spec: &ProgrammeSpec) -> bool {
    mix.success_probability(spec.direction) > spec.threshold
}
