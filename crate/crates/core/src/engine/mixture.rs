use serde::{Deserialize, Serialize};

use super::paths::{PathRange, VAGUE_RANGE};
use super::Direction;
use crate::error::{RbsbError, Result};
use crate::gaussian::{cdf_unchecked, normal_ln_pdf_unchecked, upper_tail_unchecked, PooledNormal};

/// Tolerance on the sum of mixture weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

/// Absolute tolerance for quantiles found by bisection.
const QUANTILE_TOL: f64 = 1e-13;

/// One Normal component attached to a contiguous study range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub start: usize,
    pub end: usize,
    pub pooled: PooledNormal,
    pub weight: f64,
}

impl PathComponent {
    pub fn new(range: PathRange, pooled: PooledNormal, weight: f64) -> Self {
        Self {
            start: range.0,
            end: range.1,
            pooled,
            weight,
        }
    }

    pub fn range(&self) -> PathRange {
        (self.start, self.end)
    }

    pub fn is_vague(&self) -> bool {
        self.range() == VAGUE_RANGE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureKind {
    Prior,
    Posterior,
}

/// Finite Normal mixture with normalised weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureDistribution {
    pub components: Vec<PathComponent>,
    pub kind: MixtureKind,
}

impl MixtureDistribution {
    pub fn new(components: Vec<PathComponent>, kind: MixtureKind) -> Result<Self> {
        if components.is_empty() {
            return Err(RbsbError::domain("mixture needs at least one component"));
        }
        for c in &components {
            if !(c.weight.is_finite() && (0.0..=1.0 + WEIGHT_SUM_TOL).contains(&c.weight)) {
                return Err(RbsbError::domain(format!(
                    "component {:?} has weight {} outside [0, 1]",
                    c.range(),
                    c.weight
                )));
            }
            crate::gaussian::check_sd(c.pooled.sd, "mixture component")?;
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(RbsbError::domain(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        for (i, a) in components.iter().enumerate() {
            if components[i + 1..].iter().any(|b| b.range() == a.range()) {
                return Err(RbsbError::domain(format!(
                    "duplicate mixture component range {:?}",
                    a.range()
                )));
            }
        }
        Ok(Self { components, kind })
    }

    /// Single Normal as a one-component mixture.
    pub fn single(range: PathRange, pooled: PooledNormal, kind: MixtureKind) -> Self {
        Self {
            components: vec![PathComponent::new(range, pooled, 1.0)],
            kind,
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    /// Components carrying non-zero weight.
    pub fn pruned(&self) -> Self {
        Self {
            components: self
                .components
                .iter()
                .copied()
                .filter(|c| c.weight > 0.0)
                .collect(),
            kind: self.kind,
        }
    }

    pub fn component(&self, range: PathRange) -> Option<&PathComponent> {
        self.components.iter().find(|c| c.range() == range)
    }

    pub fn mean(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.pooled.mean)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        // centred form avoids cancellation in E[X^2] - m^2
        self.components
            .iter()
            .map(|c| {
                let d = c.pooled.mean - m;
                c.weight * (c.pooled.variance() + d * d)
            })
            .sum()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        log_sum_exp(self.components.iter().filter(|c| c.weight > 0.0).map(|c| {
            c.weight.ln() + normal_ln_pdf_unchecked(x, c.pooled.mean, c.pooled.sd)
        }))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * cdf_unchecked(x, c.pooled.mean, c.pooled.sd))
            .sum()
    }

    /// Pr(X > threshold), summed per component in the upper-tail form.
    pub fn upper_tail(&self, threshold: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * upper_tail_unchecked(threshold, c.pooled.mean, c.pooled.sd))
            .sum()
    }

    /// Support bracket wide enough to contain every quantile of interest.
    pub(crate) fn bracket(&self, width_sds: f64) -> (f64, f64) {
        self.components
            .iter()
            .filter(|c| c.weight > 0.0)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (
                    lo.min(c.pooled.mean - width_sds * c.pooled.sd),
                    hi.max(c.pooled.mean + width_sds * c.pooled.sd),
                )
            })
    }

    /// Quantile by bisection on the mixture CDF.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(RbsbError::domain(format!(
                "quantile level must lie in (0, 1), got {p}"
            )));
        }
        let (mut lo, mut hi) = self.bracket(40.0);
        for _ in 0..400 {
            if hi - lo <= QUANTILE_TOL * hi.abs().max(lo.abs()).max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5).expect("0.5 is a valid level")
    }

    /// Equal-tailed credible interval at the given coverage.
    pub fn credible_interval(&self, level: f64) -> Result<(f64, f64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(RbsbError::domain(format!(
                "credible level must lie in (0, 1), got {level}"
            )));
        }
        let tail = 0.5 * (1.0 - level);
        Ok((self.quantile(tail)?, self.quantile(1.0 - tail)?))
    }

    /// Posterior probability that the effect beats zero in the beneficial
    /// direction. Lower-is-better is handled by reflecting the sign.
    pub fn success_probability(&self, direction: Direction) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let mean = direction.orient(c.pooled.mean);
                c.weight * upper_tail_unchecked(0.0, mean, c.pooled.sd)
            })
            .sum()
    }
}

pub(crate) fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}
