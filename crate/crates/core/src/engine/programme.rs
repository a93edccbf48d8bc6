use serde::{Deserialize, Serialize};

use crate::error::{RbsbError, Result};
use crate::gaussian::StudySummary;

/// Which sign of the effect counts as benefit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    HigherIsBetter,
    /// e.g. log hazard ratios, where benefit is negative.
    LowerIsBetter,
}

impl Direction {
    /// Map an effect onto the higher-is-better scale.
    #[inline]
    pub fn orient(self, effect: f64) -> f64 {
        match self {
            Self::HigherIsBetter => effect,
            Self::LowerIsBetter => -effect,
        }
    }
}

/// Effective sample size estimator used for ESS and ESS%.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EssMethod {
    /// Expected local information ratio: the Fisher information of the
    /// posterior location family in units of one observation.
    #[default]
    Elir,
    /// Variance ratio `unit_variance / Var(posterior)`.
    Moment,
}

/// Pre-specified programme: stage weights, vague prior, decision rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgrammeSpec {
    /// `w_1..w_K`; `w_1` must be 0.
    pub borrow_weights: Vec<f64>,
    pub unit_info: StudySummary,
    pub threshold: f64,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default)]
    pub ess_method: EssMethod,
}

impl ProgrammeSpec {
    pub fn new(
        borrow_weights: Vec<f64>,
        unit_info: StudySummary,
        threshold: f64,
        direction: Direction,
    ) -> Result<Self> {
        let spec = Self {
            borrow_weights,
            unit_info,
            threshold,
            direction,
            ess_method: EssMethod::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `K` stages, `w_1 = 0` and `w_j = w` afterwards.
    pub fn constant_weight(
        num_stages: usize,
        w: f64,
        unit_info: StudySummary,
        threshold: f64,
        direction: Direction,
    ) -> Result<Self> {
        let weights = (0..num_stages)
            .map(|j| if j == 0 { 0.0 } else { w })
            .collect();
        Self::new(weights, unit_info, threshold, direction)
    }

    pub fn with_ess_method(mut self, method: EssMethod) -> Self {
        self.ess_method = method;
        self
    }

    pub fn num_stages(&self) -> usize {
        self.borrow_weights.len()
    }

    /// Borrowing weight for 1-based stage `j`.
    pub fn weight(&self, j: usize) -> Result<f64> {
        j.checked_sub(1)
            .and_then(|i| self.borrow_weights.get(i))
            .copied()
            .ok_or_else(|| {
                RbsbError::domain(format!(
                    "stage {j} outside programme of {} stages",
                    self.num_stages()
                ))
            })
    }

    /// Variance of one observation's worth of information: `s0^2`.
    pub fn unit_variance(&self) -> f64 {
        self.unit_info.se_hat * self.unit_info.se_hat
    }

    pub fn validate(&self) -> Result<()> {
        if self.borrow_weights.is_empty() {
            return Err(RbsbError::config("programme needs at least one stage"));
        }
        for (i, w) in self.borrow_weights.iter().enumerate() {
            if !(0.0..=1.0).contains(w) {
                return Err(RbsbError::config(format!(
                    "borrow weight for stage {} is {w}, must lie in [0, 1]",
                    i + 1
                )));
            }
        }
        if self.borrow_weights[0] != 0.0 {
            return Err(RbsbError::config(format!(
                "borrow weight for stage 1 must be 0, got {}",
                self.borrow_weights[0]
            )));
        }
        if !(self.threshold > 0.5 && self.threshold < 1.0) {
            return Err(RbsbError::config(format!(
                "threshold must lie in (0.5, 1), got {}",
                self.threshold
            )));
        }
        self.unit_info
            .validate()
            .map_err(|e| RbsbError::config(format!("unit_info: {e}")))
    }
}
