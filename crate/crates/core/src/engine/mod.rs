//! The sequential borrowing engine: adjacent-only paths, path weights,
//! robust mixture priors, the posterior weight update and the per-stage
//! decision.

mod mixture;
mod paths;
mod programme;
mod state;

pub use mixture::{MixtureDistribution, MixtureKind, PathComponent, WEIGHT_SUM_TOL};
pub use paths::{enumerate_paths, path_weights, PathRange, VAGUE_RANGE};
pub use programme::{Direction, EssMethod, ProgrammeSpec};
pub use state::{
    advance, build_prior, decide, robust_update, success_probability, update_wstar,
    update_wstar_detailed, EngineState, WeightUpdate,
};
