use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{stage_rng, standard_normal};
use crate::designs::{posteriors, summarise, DesignKind};
use crate::engine::{EssMethod, ProgrammeSpec};
use crate::error::{RbsbError, Result};
use crate::gaussian::StudySummary;
use crate::metrics::StageMetrics;

/// Conditioning sets smaller than this are flagged as sparse.
pub const SPARSE_CONDITIONING: usize = 50;

fn default_sigma() -> f64 {
    1.0
}

fn default_delta() -> f64 {
    0.5
}

fn default_se_multiplier() -> f64 {
    2.0
}

/// True-effect trajectory and study sizes for one simulation setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub label: String,
    pub true_effects: Vec<f64>,
    pub sample_sizes: Vec<i64>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Planning alternative.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Standard error of a study estimate is `se_multiplier * sigma / sqrt(n)`.
    /// The default of 2 is a 1:1 two-arm comparison with `n` subjects in total.
    #[serde(default = "default_se_multiplier")]
    pub se_multiplier: f64,
}

impl ScenarioSpec {
    pub fn num_stages(&self) -> usize {
        self.true_effects.len()
    }

    pub fn standard_error(&self, stage: usize) -> f64 {
        self.se_multiplier * self.sigma / (self.sample_sizes[stage - 1] as f64).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let what = format!("scenario '{}'", self.label);
        if self.true_effects.is_empty() {
            return Err(RbsbError::config(format!("{what}: true_effects is empty")));
        }
        if self.sample_sizes.len() != self.true_effects.len() {
            return Err(RbsbError::config(format!(
                "{what}: {} true effects but {} sample sizes",
                self.true_effects.len(),
                self.sample_sizes.len()
            )));
        }
        for (i, (&mu, &n)) in self.true_effects.iter().zip(&self.sample_sizes).enumerate() {
            if !mu.is_finite() {
                return Err(RbsbError::config(format!(
                    "{what}: true effect at stage {} is not finite",
                    i + 1
                )));
            }
            if n <= 0 {
                return Err(RbsbError::config(format!(
                    "{what}: sample size at stage {} must be positive, got {n}",
                    i + 1
                )));
            }
        }
        for (name, v) in [("sigma", self.sigma), ("se_multiplier", self.se_multiplier)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(RbsbError::config(format!("{what}: {name} must be positive, got {v}")));
            }
        }
        if !self.delta.is_finite() {
            return Err(RbsbError::config(format!("{what}: delta must be finite")));
        }
        Ok(())
    }

    /// The `K` study summaries of one replicate.
    pub fn draw(&self, seed: u64, replicate: u64) -> Vec<StudySummary> {
        self.draw_stages(seed, replicate, self.num_stages())
    }

    /// Summaries for stages `1..=count` of one replicate.
    pub fn draw_stages(&self, seed: u64, replicate: u64, count: usize) -> Vec<StudySummary> {
        (1..=count.min(self.num_stages()))
            .map(|j| {
                let se = self.standard_error(j);
                let z = standard_normal(&mut stage_rng(seed, replicate, j));
                StudySummary {
                    mean_hat: self.true_effects[j - 1] + se * z,
                    se_hat: se,
                    label: String::new(),
                    sample_size: None,
                }
            })
            .collect()
    }
}

/// One replicate: the shared draws and per-design, per-stage metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateTrace {
    pub replicate: u64,
    pub seed: u64,
    pub draws: Vec<StudySummary>,
    /// Indexed `[design][stage - 1]`, designs in the order requested.
    pub per_stage: Vec<Vec<StageMetrics>>,
}

/// A Monte Carlo estimate. `value` is `None` when undefined (empty
/// conditioning set); `n` is the number of replicates it averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub n: usize,
}

impl Estimate {
    pub(crate) fn rate(hits: usize, n: usize) -> Self {
        if n == 0 {
            return Self { value: None, mc_stderr: None, n };
        }
        let p = hits as f64 / n as f64;
        Self {
            value: Some(p),
            mc_stderr: Some((p * (1.0 - p) / n as f64).sqrt()),
            n,
        }
    }

    fn mean(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { value: None, mc_stderr: None, n };
        }
        let mean = compensated_sum(values.iter().copied()) / n as f64;
        let stderr = (n > 1).then(|| {
            let ss = compensated_sum(values.iter().map(|x| (x - mean) * (x - mean)));
            (ss / (n - 1) as f64 / n as f64).sqrt()
        });
        Self { value: Some(mean), mc_stderr: stderr, n }
    }

    pub fn is_sparse(&self) -> bool {
        self.n < SPARSE_CONDITIONING
    }
}

/// Neumaier summation, applied in replicate order.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in values {
        let t = sum + x;
        c += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + c
}

/// Stage-by-design table of estimates: `cells[design][stage - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub designs: Vec<DesignKind>,
    pub cells: Vec<Vec<Estimate>>,
}

impl MetricTable {
    pub fn get(&self, design: DesignKind, stage: usize) -> Option<&Estimate> {
        let d = self.designs.iter().position(|&k| k == design)?;
        self.cells[d].get(stage.checked_sub(1)?)
    }

    /// Point value, `None` when the design/stage is absent or undefined.
    pub fn value(&self, design: DesignKind, stage: usize) -> Option<f64> {
        self.get(design, stage).and_then(|e| e.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub label: String,
    pub replicates: u64,
    pub seed: u64,
    pub num_stages: usize,
    pub designs: Vec<DesignKind>,
    /// First stage of the conditioning event for conditional rates.
    pub conditional_start: usize,
    pub ess_method: EssMethod,
    pub marginal: MetricTable,
    pub conditional: MetricTable,
    pub joint: MetricTable,
    pub bias: MetricTable,
    pub ess_pct: MetricTable,
}

fn check_inputs(
    scenario: &ScenarioSpec,
    designs: &[DesignKind],
    spec: &ProgrammeSpec,
    reps: u64,
) -> Result<()> {
    scenario.validate()?;
    spec.validate()?;
    if scenario.num_stages() != spec.num_stages() {
        return Err(RbsbError::config(format!(
            "scenario '{}' has {} stages but the programme has {}",
            scenario.label,
            scenario.num_stages(),
            spec.num_stages()
        )));
    }
    if designs.is_empty() {
        return Err(RbsbError::config("at least one design is required"));
    }
    if reps == 0 {
        return Err(RbsbError::config("reps must be at least 1"));
    }
    Ok(())
}

/// Simulate one replicate and analyse its draws under every design.
pub fn simulate_replicate(
    scenario: &ScenarioSpec,
    designs: &[DesignKind],
    spec: &ProgrammeSpec,
    seed: u64,
    replicate: u64,
) -> Result<ReplicateTrace> {
    let draws = scenario.draw(seed, replicate);
    let per_stage = designs
        .iter()
        .map(|&kind| {
            posteriors(kind, spec, &draws)?
                .into_iter()
                .zip(&draws)
                .enumerate()
                .map(|(i, ((posterior, wstar), obs))| {
                    let a = summarise(i + 1, posterior, wstar, obs, spec)?;
                    Ok(StageMetrics {
                        stage: i + 1,
                        rejected: a.decision,
                        bias_sample: a.point_estimate - scenario.true_effects[i],
                        ess: a.ess,
                        ess_pct: a.ess_pct,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateTrace {
        replicate,
        seed,
        draws,
        per_stage,
    })
}

/// All replicate traces, in replicate order, on the current rayon pool.
pub fn simulate_traces(
    scenario: &ScenarioSpec,
    designs: &[DesignKind],
    spec: &ProgrammeSpec,
    reps: u64,
    seed: u64,
) -> Result<Vec<ReplicateTrace>> {
    check_inputs(scenario, designs, spec, reps)?;
    (0..reps)
        .into_par_iter()
        .map(|r| simulate_replicate(scenario, designs, spec, seed, r))
        .collect()
}

fn table(
    traces: &[ReplicateTrace],
    designs: &[DesignKind],
    cell: impl Fn(&[ReplicateTrace], usize, usize) -> Estimate,
) -> MetricTable {
    let stages = traces.first().map_or(0, |t| t.draws.len());
    MetricTable {
        designs: designs.to_vec(),
        cells: (0..designs.len())
            .map(|d| (0..stages).map(|k| cell(traces, d, k)).collect())
            .collect(),
    }
}

/// Mean of `D_j` over all replicates.
pub fn marginal_rates(traces: &[ReplicateTrace], designs: &[DesignKind]) -> MetricTable {
    table(traces, designs, |tr, d, k| {
        Estimate::rate(tr.iter().filter(|t| t.per_stage[d][k].rejected).count(), tr.len())
    })
}

/// Mean of `D_j` among replicates with `D_start = ... = D_{j-1} = 1`.
/// Stages at or before `start` have a vacuous condition.
pub fn conditional_rates(
    traces: &[ReplicateTrace],
    designs: &[DesignKind],
    start: usize,
) -> MetricTable {
    let first = start.max(1) - 1;
    table(traces, designs, |tr, d, k| {
        let mut n = 0;
        let mut hits = 0;
        for t in tr {
            let row = &t.per_stage[d];
            if row[first.min(k)..k].iter().all(|m| m.rejected) {
                n += 1;
                hits += usize::from(row[k].rejected);
            }
        }
        Estimate::rate(hits, n)
    })
}

/// Mean of `D_1 * ... * D_j`.
pub fn joint_rates(traces: &[ReplicateTrace], designs: &[DesignKind]) -> MetricTable {
    table(traces, designs, |tr, d, k| {
        let hits = tr
            .iter()
            .filter(|t| t.per_stage[d][..=k].iter().all(|m| m.rejected))
            .count();
        Estimate::rate(hits, tr.len())
    })
}

pub fn bias_table(traces: &[ReplicateTrace], designs: &[DesignKind]) -> MetricTable {
    table(traces, designs, |tr, d, k| {
        Estimate::mean(&tr.iter().map(|t| t.per_stage[d][k].bias_sample).collect::<Vec<_>>())
    })
}

pub fn ess_pct_table(traces: &[ReplicateTrace], designs: &[DesignKind]) -> MetricTable {
    table(traces, designs, |tr, d, k| {
        Estimate::mean(&tr.iter().map(|t| t.per_stage[d][k].ess_pct).collect::<Vec<_>>())
    })
}

/// Aggregate traces into a report.
pub fn summarize_traces(
    scenario: &ScenarioSpec,
    designs: &[DesignKind],
    spec: &ProgrammeSpec,
    traces: &[ReplicateTrace],
    seed: u64,
    conditional_start: usize,
) -> SimReport {
    SimReport {
        label: scenario.label.clone(),
        replicates: traces.len() as u64,
        seed,
        num_stages: scenario.num_stages(),
        designs: designs.to_vec(),
        conditional_start,
        ess_method: spec.ess_method,
        marginal: marginal_rates(traces, designs),
        conditional: conditional_rates(traces, designs, conditional_start),
        joint: joint_rates(traces, designs),
        bias: bias_table(traces, designs),
        ess_pct: ess_pct_table(traces, designs),
    }
}

/// Simulate `reps` replicates of `scenario`, feeding identical draws to
/// every design. Output does not depend on the number of worker threads.
pub fn run_scenario(
    scenario: &ScenarioSpec,
    designs: &[DesignKind],
    spec: &ProgrammeSpec,
    reps: u64,
    seed: u64,
) -> Result<SimReport> {
    run_scenario_with_start(scenario, designs, spec, reps, seed, 1)
}

/// As [`run_scenario`], conditioning from `conditional_start` onwards.
pub fn run_scenario_with_start(
    scenario: &ScenarioSpec,
    designs: &[DesignKind],
    spec: &ProgrammeSpec,
    reps: u64,
    seed: u64,
    conditional_start: usize,
) -> Result<SimReport> {
    let traces = simulate_traces(scenario, designs, spec, reps, seed)?;
    Ok(summarize_traces(scenario, designs, spec, &traces, seed, conditional_start))
}

/// Run `f` on a dedicated pool of `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RbsbError::config(format!("cannot start {workers} worker threads: {e}")))?;
    Ok(pool.install(f))
}
