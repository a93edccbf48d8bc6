//! Sequential analysis of user-supplied summaries and the packaged
//! three-stratum asthma case study.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::designs::summarise;
use crate::engine::{advance, Direction, EngineState, EssMethod, MixtureDistribution, PathRange, ProgrammeSpec};
use crate::error::{RbsbError, Result};
use crate::gaussian::StudySummary;

pub const START_JSON: &str = include_str!("../data/start.json");

/// z for a two-sided 95% interval, used to recover SEs from reported CIs.
const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeSource {
    Explicit,
    Events,
    ConfidenceInterval,
    /// Supplied directly as a study summary.
    Summary,
}

/// One stratum on the analysis (log) scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stratum {
    pub label: String,
    pub estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_upper: Option<f64>,
    /// Event count; one event carries the unit-information variance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
}

impl Stratum {
    /// Standard error by precedence: explicit, then events, then CI.
    pub fn resolve(&self, unit_variance: f64) -> Result<(StudySummary, SeSource)> {
        let bad = |msg: String| Err(RbsbError::Input(format!("stratum '{}': {msg}", self.label)));
        if !self.estimate.is_finite() {
            return bad(format!("estimate {} is not finite", self.estimate));
        }
        let ci = match (self.ci_lower, self.ci_upper) {
            (Some(lo), Some(hi)) => {
                if !(lo < self.estimate && self.estimate < hi) {
                    return bad(format!(
                        "confidence interval ({lo}, {hi}) does not bracket the estimate {}",
                        self.estimate
                    ));
                }
                Some((lo, hi))
            }
            (None, None) => None,
            _ => return bad("confidence interval needs both bounds".into()),
        };
        if let Some(d) = self.events {
            if !(d.is_finite() && d > 0.0) {
                return bad(format!("event count must be positive, got {d}"));
            }
        }
        let (se, source) = match (self.se, self.events, ci) {
            (Some(se), _, _) => (se, SeSource::Explicit),
            (None, Some(d), _) => ((unit_variance / d).sqrt(), SeSource::Events),
            (None, None, Some((lo, hi))) => ((hi - lo) / (2.0 * Z_975), SeSource::ConfidenceInterval),
            (None, None, None) => return bad("needs an SE, an event count or a confidence interval".into()),
        };
        let mut summary = StudySummary::new(self.estimate, se, self.label.clone())
            .map_err(|e| RbsbError::Input(e.to_string()))?;
        if let Some(d) = self.events {
            summary = summary.with_sample_size(d);
        }
        Ok((summary, source))
    }
}

fn default_unit_info() -> StudySummary {
    StudySummary::unit_info(0.0, 2.0).expect("valid")
}

fn default_threshold() -> f64 {
    0.975
}

fn default_direction() -> Direction {
    Direction::LowerIsBetter
}

fn default_level() -> f64 {
    0.95
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseStudyInput {
    pub strata: Vec<Stratum>,
    #[serde(default = "default_unit_info")]
    pub unit_info: StudySummary,
    /// Defaults to 0 for the first stratum and 0.5 afterwards.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub borrow_weights: Option<Vec<f64>>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    #[serde(default)]
    pub ess_method: EssMethod,
    #[serde(default = "default_level")]
    pub credible_level: f64,
    /// Also report medians and intervals on the exponentiated scale.
    #[serde(default = "default_true")]
    pub exponentiate: bool,
}

impl CaseStudyInput {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| RbsbError::Input(e.to_string()))
    }

    pub fn start() -> Self {
        Self::from_json(START_JSON).expect("packaged case study is valid")
    }

    pub fn programme(&self) -> Result<ProgrammeSpec> {
        let k = self.strata.len();
        let weights = match &self.borrow_weights {
            Some(w) if w.len() != k => {
                return Err(RbsbError::Input(format!(
                    "{} borrow weights for {k} strata",
                    w.len()
                )))
            }
            Some(w) => w.clone(),
            None => (0..k).map(|i| if i == 0 { 0.0 } else { 0.5 }).collect(),
        };
        let spec = ProgrammeSpec::new(weights, self.unit_info.clone(), self.threshold, self.direction)?;
        Ok(spec.with_ess_method(self.ess_method))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathWeight {
    pub path: PathRange,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    pub label: String,
    pub observed: StudySummary,
    pub se_source: SeSource,
    pub prior: MixtureDistribution,
    pub wstar: f64,
    pub path_weights: Vec<PathWeight>,
    pub posterior: MixtureDistribution,
    pub median: f64,
    pub cri_lower: f64,
    pub cri_upper: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_exp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cri_lower_exp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cri_upper_exp: Option<f64>,
    pub success_probability: f64,
    pub decision: bool,
    pub ess: f64,
    pub n_own: f64,
    pub ess_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub design: String,
    pub credible_level: f64,
    pub credible_interval: String,
    pub ess_method: EssMethod,
    pub threshold: f64,
    pub direction: Direction,
    pub stages: Vec<StageReport>,
}

/// Options shared by `run_analyze` and `run_case_study`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub credible_level: f64,
    pub exponentiate: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            credible_level: 0.95,
            exponentiate: false,
        }
    }
}

fn analyze_inner(
    summaries: &[(StudySummary, SeSource)],
    spec: &ProgrammeSpec,
    opts: ReportOptions,
) -> Result<AnalysisReport> {
    if summaries.is_empty() {
        return Err(RbsbError::Input("at least one study summary is required".into()));
    }
    if summaries.len() > spec.num_stages() {
        return Err(RbsbError::Input(format!(
            "{} summaries supplied for a programme of {} stages",
            summaries.len(),
            spec.num_stages()
        )));
    }
    let mut state = EngineState::new();
    let mut stages = Vec::with_capacity(summaries.len());
    for (i, (obs, source)) in summaries.iter().enumerate() {
        state = advance(&state, spec, obs)?;
        let posterior = state.posterior.clone().expect("advanced state has a posterior");
        let prior = state.last_prior.clone().expect("advanced state has a prior");
        let a = summarise(i + 1, posterior, state.wstar_history[i], obs, spec)?;
        let (lo, hi) = a.posterior.credible_interval(opts.credible_level)?;
        let exp = |x: f64| opts.exponentiate.then(|| x.exp());
        stages.push(StageReport {
            stage: i + 1,
            label: obs.label.clone(),
            observed: obs.clone(),
            se_source: *source,
            prior,
            wstar: a.wstar,
            path_weights: a
                .posterior
                .components
                .iter()
                .map(|c| PathWeight { path: c.range(), weight: c.weight })
                .collect(),
            median: a.point_estimate,
            cri_lower: lo,
            cri_upper: hi,
            median_exp: exp(a.point_estimate),
            cri_lower_exp: exp(lo),
            cri_upper_exp: exp(hi),
            success_probability: a.success_probability,
            decision: a.decision,
            ess: a.ess,
            n_own: crate::designs::own_information(obs, spec),
            ess_pct: a.ess_pct,
            posterior: a.posterior,
        });
    }
    Ok(AnalysisReport {
        design: "rbsb".into(),
        credible_level: opts.credible_level,
        credible_interval: "equal-tailed".into(),
        ess_method: spec.ess_method,
        threshold: spec.threshold,
        direction: spec.direction,
        stages,
    })
}

/// Sequential RBSB analysis of summaries given in programme order.
pub fn run_analyze(
    summaries: &[StudySummary],
    spec: &ProgrammeSpec,
    opts: ReportOptions,
) -> Result<AnalysisReport> {
    spec.validate()?;
    let tagged: Vec<_> = summaries.iter().map(|s| (s.clone(), SeSource::Summary)).collect();
    analyze_inner(&tagged, spec, opts)
}

pub fn run_case_study(input: &CaseStudyInput) -> Result<AnalysisReport> {
    if input.strata.is_empty() {
        return Err(RbsbError::Input("case study needs at least one stratum".into()));
    }
    let spec = input.programme()?;
    let unit_variance = spec.unit_variance();
    let resolved = input
        .strata
        .iter()
        .map(|s| s.resolve(unit_variance))
        .collect::<Result<Vec<_>>>()?;
    analyze_inner(
        &resolved,
        &spec,
        ReportOptions {
            credible_level: input.credible_level,
            exponentiate: input.exponentiate,
        },
    )
}

fn fmt_path(p: PathRange) -> String {
    if p.0 == p.1 {
        format!("{{{}}}", p.0)
    } else {
        format!("{{{}..{}}}", p.0, p.1)
    }
}

/// Markdown summary: one row per stage with median, credible interval,
/// ESS and ESS%, followed by the path weights.
pub fn to_markdown(report: &AnalysisReport) -> String {
    let pct = report.credible_level * 100.0;
    let exp = report.stages.iter().all(|s| s.median_exp.is_some());
    let mut md = String::new();
    let _ = writeln!(md, "| Stage | Population | SE source | w* | Posterior median ({pct:.0}% CrI) |{} Posterior ESS | ESS % | Pr(success) | Decision |",
        if exp { " Exp. median (CrI) |" } else { "" });
    let _ = writeln!(md, "|---|---|---|---|---|{}---|---|---|---|", if exp { "---|" } else { "" });
    for s in &report.stages {
        let exp_col = match (s.median_exp, s.cri_lower_exp, s.cri_upper_exp) {
            (Some(m), Some(l), Some(u)) => format!(" {m:.2} ({l:.2}, {u:.2}) |"),
            _ => String::new(),
        };
        let _ = writeln!(
            md,
            "| {} | {} | {} | {:.3} | {:.3} ({:.3}, {:.3}) |{} {:.0} | {:.1}% | {:.4} | {} |",
            s.stage,
            s.label,
            serde_json::to_value(s.se_source).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            s.wstar,
            s.median,
            s.cri_lower,
            s.cri_upper,
            exp_col,
            s.ess,
            s.ess_pct * 100.0,
            s.success_probability,
            if s.decision { "go" } else { "no-go" },
        );
    }
    let _ = writeln!(md);
    let _ = writeln!(
        md,
        "Credible intervals are {}; ESS method: {}.",
        report.credible_interval,
        serde_json::to_value(report.ess_method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
    );
    let _ = writeln!(md);
    let _ = writeln!(md, "| Stage | Path | Weight | Mean | SD |");
    let _ = writeln!(md, "|---|---|---|---|---|");
    for s in &report.stages {
        for c in &s.posterior.components {
            let _ = writeln!(
                md,
                "| {} | {} | {:.3} | {:.3} | {:.3} |",
                s.stage,
                fmt_path(c.range()),
                c.weight,
                c.pooled.mean,
                c.pooled.sd
            );
        }
    }
    md
}
