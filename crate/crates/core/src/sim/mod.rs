//! Deterministic parallel Monte Carlo evaluation of the designs.

mod assurance;
mod harness;
pub mod rng;

pub use assurance::{assurance, AssuranceMode, AssuranceReport, AssuranceSpec, DesignPrior, Upstream};
pub use harness::{
    bias_table, conditional_rates, ess_pct_table, joint_rates, marginal_rates, run_scenario,
    run_scenario_with_start,
    simulate_replicate, simulate_traces, summarize_traces, with_workers, Estimate, MetricTable,
    ReplicateTrace, ScenarioSpec, SimReport, SPARSE_CONDITIONING,
};
