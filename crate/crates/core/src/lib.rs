//! Sequential Bayesian borrowing across a chain of studies with robust
//! mixture priors, plus the comparator designs, evaluation metrics and
//! Monte Carlo harness used to study its operating characteristics.

pub mod case_study;
pub mod config;
pub mod designs;
pub mod engine;
pub mod error;
pub mod gaussian;
pub mod metrics;
pub mod output;
mod quadrature;
pub mod sim;

pub use case_study::{run_analyze, run_case_study, AnalysisReport, CaseStudyInput, ReportOptions};
pub use config::{parse_config, OutputFormat, RunConfig};
pub use designs::{run_programme, DesignKind, StageAnalysis};
pub use engine::{
    advance, build_prior, decide, enumerate_paths, path_weights, robust_update,
    success_probability, update_wstar, update_wstar_detailed, Direction, EngineState, EssMethod,
    MixtureDistribution, MixtureKind, PathComponent, PathRange, ProgrammeSpec, WeightUpdate,
    VAGUE_RANGE,
};
pub use error::{RbsbError, Result};
pub use gaussian::{normal_ln_pdf, normal_pdf, normal_upper_tail, pool, PooledNormal, StudySummary};
pub use metrics::StageMetrics;
pub use sim::{run_scenario, ScenarioSpec, SimReport};
