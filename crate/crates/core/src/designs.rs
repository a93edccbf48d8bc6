//! The four analysis strategies behind a common per-stage interface.
//!
//! The baselines reuse the robust two-component machinery: their
//! informative component is a fixed pooled estimate (all earlier studies,
//! or just the previous one) mixed with the same vague component, and the
//! weight is updated with the same marginal-likelihood rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{
    advance, build_prior, robust_update, EngineState, MixtureDistribution, MixtureKind,
    PathComponent, ProgrammeSpec, VAGUE_RANGE,
};
use crate::error::{RbsbError, Result};
use crate::gaussian::{pool, PooledNormal, StudySummary};
use crate::metrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Standalone,
    FullPooling,
    Adjacent,
    Rbsb,
}

impl DesignKind {
    pub const ALL: [DesignKind; 4] = [
        DesignKind::Standalone,
        DesignKind::FullPooling,
        DesignKind::Adjacent,
        DesignKind::Rbsb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Standalone => "standalone",
            Self::FullPooling => "full_pooling",
            Self::Adjacent => "adjacent",
            Self::Rbsb => "rbsb",
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DesignKind {
    type Err = RbsbError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "standalone" => Ok(Self::Standalone),
            "full_pooling" | "pooling" | "fp" => Ok(Self::FullPooling),
            "adjacent" => Ok(Self::Adjacent),
            "rbsb" => Ok(Self::Rbsb),
            other => Err(RbsbError::config(format!(
                "unknown design '{other}' (expected standalone, full_pooling, adjacent or rbsb)"
            ))),
        }
    }
}

/// Result of analysing one stage under one design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAnalysis {
    pub stage: usize,
    pub posterior: MixtureDistribution,
    /// Posterior informative weight; 0 for standalone and stage 1.
    pub wstar: f64,
    pub success_probability: f64,
    pub decision: bool,
    pub ess: f64,
    pub ess_pct: f64,
    /// Posterior median.
    pub point_estimate: f64,
}

/// Own-data information of `obs` in units of one observation.
pub fn own_information(obs: &StudySummary, spec: &ProgrammeSpec) -> f64 {
    obs.sample_size
        .unwrap_or_else(|| spec.unit_variance() * obs.precision())
}

pub(crate) fn summarise(
    stage: usize,
    posterior: MixtureDistribution,
    wstar: f64,
    obs: &StudySummary,
    spec: &ProgrammeSpec,
) -> Result<StageAnalysis> {
    let success_probability = posterior.success_probability(spec.direction);
    let ess = metrics::ess(&posterior, spec.unit_variance(), spec.ess_method)?;
    let ess_pct = metrics::ess_pct(ess, own_information(obs, spec))?;
    let point_estimate = posterior.median();
    Ok(StageAnalysis {
        stage,
        posterior,
        wstar,
        success_probability,
        decision: success_probability > spec.threshold,
        ess,
        ess_pct,
        point_estimate,
    })
}

fn standalone_posterior(obs: &StudySummary, spec: &ProgrammeSpec, stage: usize) -> Result<MixtureDistribution> {
    let pooled = pool(&spec.unit_info, std::slice::from_ref(obs))?;
    Ok(MixtureDistribution::single((stage, stage), pooled, MixtureKind::Posterior))
}

/// No borrowing: `pool(unit_info, [obs])`.
pub fn analyze_standalone(obs: &StudySummary, spec: &ProgrammeSpec) -> Result<StageAnalysis> {
    analyze_standalone_at(1, obs, spec)
}

pub fn analyze_standalone_at(stage: usize, obs: &StudySummary, spec: &ProgrammeSpec) -> Result<StageAnalysis> {
    let posterior = standalone_posterior(obs, spec, stage)?;
    summarise(stage, posterior, 0.0, obs, spec)
}

fn fixed_informative_posterior(
    stage: usize,
    informative: PathComponent,
    obs: &StudySummary,
    w_j: f64,
    spec: &ProgrammeSpec,
) -> Result<(MixtureDistribution, f64)> {
    let (update, posterior) = robust_update(&[informative], &spec.unit_info, w_j, obs, stage)?;
    Ok((posterior, update.wstar))
}

fn analyze_fixed_informative(
    stage: usize,
    informative: PathComponent,
    obs: &StudySummary,
    w_j: f64,
    spec: &ProgrammeSpec,
) -> Result<StageAnalysis> {
    let (posterior, wstar) = fixed_informative_posterior(stage, informative, obs, w_j, spec)?;
    summarise(stage, posterior, wstar, obs, spec)
}

/// Fixed-effect pooling of every earlier study as the informative
/// component. With no history the informative component is the vague
/// prior itself, the data cannot tell the two apart and the posterior is
/// the standalone one.
pub fn analyze_full_pooling(
    history: &[StudySummary],
    obs: &StudySummary,
    w_j: f64,
    spec: &ProgrammeSpec,
) -> Result<StageAnalysis> {
    let stage = history.len() + 1;
    if history.is_empty() {
        obs.validate()?;
        let mut out = analyze_standalone_at(stage, obs, spec)?;
        out.wstar = w_j;
        return Ok(out);
    }
    let informative = PathComponent::new((1, stage - 1), pool(&spec.unit_info, history)?, 1.0);
    analyze_fixed_informative(stage, informative, obs, w_j, spec)
}

/// Only the immediately preceding study informs the prior.
pub fn analyze_adjacent(
    stage: usize,
    prev: Option<&StudySummary>,
    obs: &StudySummary,
    w_j: f64,
    spec: &ProgrammeSpec,
) -> Result<StageAnalysis> {
    match (stage, prev) {
        (0, _) => Err(RbsbError::domain("stages are numbered from 1")),
        (1, Some(_)) => Err(RbsbError::domain(
            "adjacent design: stage 1 has no preceding study",
        )),
        (1, None) => analyze_standalone_at(1, obs, spec),
        (_, None) => Err(RbsbError::domain(format!(
            "adjacent design: stage {stage} needs the preceding study"
        ))),
        (j, Some(prev)) => {
            let informative =
                PathComponent::new((j - 1, j - 1), pool(&spec.unit_info, std::slice::from_ref(prev))?, 1.0);
            analyze_fixed_informative(j, informative, obs, w_j, spec)
        }
    }
}

/// Posterior and posterior informative weight at every stage of a
/// sequence under one design. Stage 1 is standalone for every design.
pub fn posteriors(
    kind: DesignKind,
    spec: &ProgrammeSpec,
    observations: &[StudySummary],
) -> Result<Vec<(MixtureDistribution, f64)>> {
    if observations.len() > spec.num_stages() {
        return Err(RbsbError::config(format!(
            "{} summaries supplied for a programme of {} stages",
            observations.len(),
            spec.num_stages()
        )));
    }
    let mut out = Vec::with_capacity(observations.len());
    let mut state = EngineState::new();
    for (i, obs) in observations.iter().enumerate() {
        let j = i + 1;
        if kind == DesignKind::Rbsb {
            state = advance(&state, spec, obs)?;
            let posterior = state.posterior.clone().expect("advanced state has a posterior");
            out.push((posterior, state.wstar_history[i]));
            continue;
        }
        let w_j = spec.weight(j)?;
        let step = match kind {
            _ if j == 1 => (standalone_posterior(obs, spec, 1)?, 0.0),
            DesignKind::Standalone => (standalone_posterior(obs, spec, j)?, 0.0),
            DesignKind::FullPooling => {
                let informative =
                    PathComponent::new((1, j - 1), pool(&spec.unit_info, &observations[..i])?, 1.0);
                fixed_informative_posterior(j, informative, obs, w_j, spec)?
            }
            DesignKind::Adjacent => {
                let informative = PathComponent::new(
                    (j - 1, j - 1),
                    pool(&spec.unit_info, &observations[i - 1..i])?,
                    1.0,
                );
                fixed_informative_posterior(j, informative, obs, w_j, spec)?
            }
            DesignKind::Rbsb => unreachable!(),
        };
        out.push(step);
    }
    Ok(out)
}

/// Analyse a whole sequence under one design.
pub fn run_programme(
    kind: DesignKind,
    spec: &ProgrammeSpec,
    observations: &[StudySummary],
) -> Result<Vec<StageAnalysis>> {
    posteriors(kind, spec, observations)?
        .into_iter()
        .zip(observations)
        .enumerate()
        .map(|(i, ((posterior, wstar), obs))| summarise(i + 1, posterior, wstar, obs, spec))
        .collect()
}

/// Prior each design would use at stage `history.len() + 1`.
pub fn stage_prior(
    kind: DesignKind,
    spec: &ProgrammeSpec,
    history: &[StudySummary],
) -> Result<MixtureDistribution> {
    let j = history.len() + 1;
    let vague = PooledNormal::from_summary(&spec.unit_info);
    if j == 1 || kind == DesignKind::Standalone {
        return Ok(MixtureDistribution::single(VAGUE_RANGE, vague, MixtureKind::Prior));
    }
    let w_j = spec.weight(j)?;
    let informative = match kind {
        DesignKind::FullPooling => PathComponent::new((1, j - 1), pool(&spec.unit_info, history)?, w_j),
        DesignKind::Adjacent => PathComponent::new(
            (j - 1, j - 1),
            pool(&spec.unit_info, &history[j - 2..])?,
            w_j,
        ),
        DesignKind::Rbsb => {
            let state = history
                .iter()
                .try_fold(EngineState::new(), |st, o| advance(&st, spec, o))?;
            return build_prior(&state, spec, j);
        }
        DesignKind::Standalone => unreachable!(),
    };
    MixtureDistribution::new(
        vec![informative, PathComponent::new(VAGUE_RANGE, vague, 1.0 - w_j)],
        MixtureKind::Prior,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{update_wstar, Direction};

    fn s(m: f64, se: f64) -> StudySummary {
        StudySummary::new(m, se, "s").unwrap()
    }

    fn sim_spec() -> ProgrammeSpec {
        ProgrammeSpec::constant_weight(5, 0.5, StudySummary::unit_info(0.0, 1.0).unwrap(), 0.975, Direction::HigherIsBetter)
            .unwrap()
    }

    fn start_spec(w: f64) -> ProgrammeSpec {
        ProgrammeSpec::constant_weight(3, w, StudySummary::unit_info(0.0, 2.0).unwrap(), 0.975, Direction::LowerIsBetter)
            .unwrap()
    }

    fn start() -> Vec<StudySummary> {
        vec![s(-0.62, 0.158), s(-0.58, 0.316), s(-0.51, 0.207)]
    }

    fn same_components(a: &MixtureDistribution, b: &MixtureDistribution, tol: f64) -> bool {
        a.len() == b.len()
            && a.components.iter().zip(&b.components).all(|(x, y)| {
                x.range() == y.range()
                    && (x.weight - y.weight).abs() <= tol
                    && (x.pooled.mean - y.pooled.mean).abs() <= tol
                    && (x.pooled.sd - y.pooled.sd).abs() <= tol
            })
    }

    #[test]
    fn standalone_decisions() {
        let spec = sim_spec();
        let a = analyze_standalone(&s(0.5, 0.129), &spec).unwrap();
        assert!(a.decision);
        assert!(!analyze_standalone(&s(0.0, 0.129), &spec).unwrap().decision);
        assert_eq!(a, analyze_standalone(&s(0.5, 0.129), &spec).unwrap());
        assert_eq!(a.wstar, 0.0);
    }

    #[test]
    fn full_pooling_empty_history_is_standalone() {
        let spec = sim_spec();
        let fp = analyze_full_pooling(&[], &s(0.4, 0.2), 0.5, &spec).unwrap();
        let sa = analyze_standalone(&s(0.4, 0.2), &spec).unwrap();
        assert!(same_components(&fp.posterior, &sa.posterior, 0.0));
    }

    #[test]
    fn concordant_history_raises_weight() {
        let spec = sim_spec();
        let hist = [s(0.5, 0.079), s(0.5, 0.129)];
        let a = analyze_full_pooling(&hist, &s(0.5, 0.129), 0.5, &spec).unwrap();
        assert!(a.wstar > 0.5);
        let direct = update_wstar(
            &[PathComponent::new((1, 2), pool(&spec.unit_info, &hist).unwrap(), 1.0)],
            &spec.unit_info,
            0.5,
            &s(0.5, 0.129),
        )
        .unwrap();
        assert_eq!(a.wstar, direct);
        let shifted = analyze_full_pooling(&hist, &s(5.5, 0.129), 0.5, &spec).unwrap();
        assert!(shifted.wstar < a.wstar);
    }

    #[test]
    fn adjacent_argument_checks() {
        let spec = sim_spec();
        assert!(analyze_adjacent(1, Some(&s(0.0, 1.0)), &s(0.0, 1.0), 0.5, &spec).is_err());
        assert!(analyze_adjacent(2, None, &s(0.0, 1.0), 0.5, &spec).is_err());
        assert!(analyze_adjacent(1, None, &s(0.0, 1.0), 0.5, &spec).is_ok());
    }

    #[test]
    fn stage_two_designs_coincide() {
        let spec = start_spec(0.5);
        let obs = start();
        let rbsb = run_programme(DesignKind::Rbsb, &spec, &obs[..2]).unwrap();
        let adj = analyze_adjacent(2, Some(&obs[0]), &obs[1], 0.5, &spec).unwrap();
        let fp = analyze_full_pooling(&obs[..1], &obs[1], 0.5, &spec).unwrap();
        assert!(same_components(&rbsb[1].posterior, &adj.posterior, 1e-12));
        assert!(same_components(&rbsb[1].posterior, &fp.posterior, 1e-12));
    }

    #[test]
    fn stage_three_adjacent_differs_from_rbsb() {
        let spec = start_spec(0.5);
        let rbsb = run_programme(DesignKind::Rbsb, &spec, &start()).unwrap();
        let adj = run_programme(DesignKind::Adjacent, &spec, &start()).unwrap();
        assert!(rbsb[1].wstar < 1.0);
        assert_ne!(rbsb[2].posterior.len(), adj[2].posterior.len());
        assert!((rbsb[2].point_estimate - adj[2].point_estimate).abs() > 1e-6);
    }

    #[test]
    fn all_designs_agree_at_stage_one() {
        let spec = start_spec(0.5);
        let base = run_programme(DesignKind::Standalone, &spec, &start()).unwrap();
        for kind in DesignKind::ALL {
            let r = run_programme(kind, &spec, &start()).unwrap();
            assert_eq!(r[0], base[0], "{kind}");
        }
    }

    #[test]
    fn zero_weight_reproduces_standalone() {
        let spec = start_spec(0.0);
        let base = run_programme(DesignKind::Standalone, &spec, &start()).unwrap();
        for kind in [DesignKind::FullPooling, DesignKind::Adjacent, DesignKind::Rbsb] {
            let r = run_programme(kind, &spec, &start()).unwrap();
            for (a, b) in r.iter().zip(&base) {
                let pa = a.posterior.pruned();
                assert_eq!(pa.len(), 1);
                let (x, y) = (pa.components[0].pooled, b.posterior.components[0].pooled);
                assert!((x.mean - y.mean).abs() < 1e-12 && (x.sd - y.sd).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pooling_carries_more_precision_than_adjacent() {
        let spec = start_spec(0.5);
        let obs = start();
        let fp = stage_prior(DesignKind::FullPooling, &spec, &obs[..2]).unwrap();
        let adj = stage_prior(DesignKind::Adjacent, &spec, &obs[..2]).unwrap();
        assert!(fp.components[0].pooled.precision >= adj.components[0].pooled.precision);
    }

    #[test]
    fn design_names_round_trip() {
        for kind in DesignKind::ALL {
            assert_eq!(kind.as_str().parse::<DesignKind>().unwrap(), kind);
        }
        assert!("exnex".parse::<DesignKind>().is_err());
    }

    #[test]
    fn too_many_summaries() {
        let spec = start_spec(0.5);
        let mut obs = start();
        obs.push(s(0.0, 1.0));
        assert!(run_programme(DesignKind::Rbsb, &spec, &obs).is_err());
    }
}
