//! Scalar Gaussian arithmetic: densities, tail probabilities and
//! precision-weighted pooling of Normal summaries.
//!
//! Normals are parametrised by mean and standard deviation throughout.
//! Pooled results are carried as precisions since pooling is additive
//! in precision.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{RbsbError, Result};

/// Standard deviations below this are treated as degenerate input.
pub const MIN_SD: f64 = 1e-12;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

pub(crate) fn check_sd(sd: f64, what: &str) -> Result<()> {
    if sd.is_finite() && sd >= MIN_SD {
        Ok(())
    } else {
        Err(RbsbError::domain(format!(
            "{what}: standard deviation must be finite and >= {MIN_SD:e}, got {sd}"
        )))
    }
}

/// Summary of one study on the analysis scale: an effect estimate and its
/// standard error. The unit-information pseudo-study uses the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySummary {
    pub mean_hat: f64,
    pub se_hat: f64,
    #[serde(default)]
    pub label: String,
    /// Own sample size (or event count) used for ESS%; when absent the
    /// observation's information is expressed in unit-prior units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<f64>,
}

impl StudySummary {
    pub fn new(mean_hat: f64, se_hat: f64, label: impl Into<String>) -> Result<Self> {
        let summary = Self {
            mean_hat,
            se_hat,
            label: label.into(),
            sample_size: None,
        };
        summary.validate()?;
        Ok(summary)
    }

    /// The vague pseudo-study `(mu0, s0)`.
    pub fn unit_info(mean: f64, sd: f64) -> Result<Self> {
        Self::new(mean, sd, "unit-info")
    }

    pub fn with_sample_size(mut self, n: f64) -> Self {
        self.sample_size = Some(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean_hat.is_finite() {
            return Err(RbsbError::domain(format!(
                "study '{}': estimate must be finite, got {}",
                self.label, self.mean_hat
            )));
        }
        check_sd(self.se_hat, &format!("study '{}'", self.label))?;
        if let Some(n) = self.sample_size {
            if !(n.is_finite() && n >= 0.0) {
                return Err(RbsbError::domain(format!(
                    "study '{}': sample size must be finite and non-negative, got {n}",
                    self.label
                )));
            }
        }
        Ok(())
    }

    pub fn precision(&self) -> f64 {
        1.0 / (self.se_hat * self.se_hat)
    }
}

/// A Normal distribution produced by precision-weighted pooling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledNormal {
    pub mean: f64,
    pub sd: f64,
    pub precision: f64,
}

impl PooledNormal {
    pub fn from_precision(mean: f64, precision: f64) -> Self {
        Self {
            mean,
            sd: precision.sqrt().recip(),
            precision,
        }
    }

    pub fn from_summary(s: &StudySummary) -> Self {
        Self {
            mean: s.mean_hat,
            sd: s.se_hat,
            precision: s.precision(),
        }
    }

    pub fn variance(&self) -> f64 {
        self.sd * self.sd
    }

    /// Conjugate update of this Normal with one more study.
    pub fn update(&self, obs: &StudySummary) -> Self {
        let tau = obs.precision();
        let precision = self.precision + tau;
        let mean = (self.precision * self.mean + tau * obs.mean_hat) / precision;
        Self::from_precision(mean, precision)
    }

    /// Combine two independent pooled results that each carry their own
    /// information (no shared prior).
    pub fn combine(&self, other: &Self) -> Self {
        let precision = self.precision + other.precision;
        let mean = (self.precision * self.mean + other.precision * other.mean) / precision;
        Self::from_precision(mean, precision)
    }
}

/// Normal density φ(x; mean, sd).
pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> Result<f64> {
    check_sd(sd, "normal_pdf")?;
    Ok(normal_ln_pdf_unchecked(x, mean, sd).exp())
}

#[inline]
pub(crate) fn normal_ln_pdf_unchecked(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

/// Natural log of φ(x; mean, sd).
pub fn normal_ln_pdf(x: f64, mean: f64, sd: f64) -> Result<f64> {
    check_sd(sd, "normal_ln_pdf")?;
    Ok(normal_ln_pdf_unchecked(x, mean, sd))
}

/// Pr(X > threshold) for X ~ N(mean, sd), evaluated through erfc so that
/// both tails keep full relative accuracy.
pub fn normal_upper_tail(threshold: f64, mean: f64, sd: f64) -> Result<f64> {
    check_sd(sd, "normal_upper_tail")?;
    Ok(upper_tail_unchecked(threshold, mean, sd))
}

#[inline]
pub(crate) fn upper_tail_unchecked(threshold: f64, mean: f64, sd: f64) -> f64 {
    0.5 * erfc((threshold - mean) / sd * FRAC_1_SQRT_2)
}

/// Pr(X <= x) for X ~ N(mean, sd).
#[inline]
pub(crate) fn cdf_unchecked(x: f64, mean: f64, sd: f64) -> f64 {
    0.5 * erfc((mean - x) / sd * FRAC_1_SQRT_2)
}

/// Precision-weighted pooling of `prior` with every study in `studies`.
/// The prior enters exactly once; an empty list returns the prior itself.
pub fn pool(prior: &StudySummary, studies: &[StudySummary]) -> Result<PooledNormal> {
    prior.validate()?;
    for s in studies {
        s.validate()?;
    }
    Ok(pool_unchecked(prior, studies.iter()))
}

pub(crate) fn pool_unchecked<'a>(
    prior: &StudySummary,
    studies: impl Iterator<Item = &'a StudySummary>,
) -> PooledNormal {
    let tau0 = prior.precision();
    let (precision, weighted) = studies.fold((tau0, tau0 * prior.mean_hat), |(p, w), s| {
        let tau = s.precision();
        (p + tau, w + tau * s.mean_hat)
    });
    PooledNormal::from_precision(weighted / precision, precision)
}
