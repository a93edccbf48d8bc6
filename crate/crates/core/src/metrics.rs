//! Per-stage evaluation quantities: effective sample size, ESS%, bias and
//! the rejection indicator.
//!
//! ESS is expressed in units of one observation, where one observation
//! carries `unit_variance` (normally `s0^2`, the information in the
//! unit-information prior).

use serde::{Deserialize, Serialize};

use crate::engine::{EssMethod, MixtureDistribution};
use crate::error::{RbsbError, Result};
use crate::quadrature::composite;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Outcome metrics for one design at one stage of one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageMetrics {
    pub stage: usize,
    pub rejected: bool,
    pub bias_sample: f64,
    pub ess: f64,
    pub ess_pct: f64,
}

fn check_unit_variance(unit_variance: f64) -> Result<()> {
    if unit_variance.is_finite() && unit_variance > 0.0 {
        Ok(())
    } else {
        Err(RbsbError::domain(format!(
            "unit variance must be positive, got {unit_variance}"
        )))
    }
}

/// Variance-ratio ESS: `unit_variance / Var(mix)`.
pub fn ess_moment(mix: &MixtureDistribution, unit_variance: f64) -> Result<f64> {
    check_unit_variance(unit_variance)?;
    let var = mix.variance();
    if var.is_nan() || var <= 0.0 {
        return Err(RbsbError::domain("ess_moment: mixture has zero variance"));
    }
    Ok(unit_variance / var)
}

/// Expected-local-information-ratio ESS.
///
/// For a location family with density `p` this is `unit_variance` times
/// `E_p[-(log p)'']`, which integrates by parts to `∫ p'(x)^2 / p(x) dx`.
/// A single Normal component gives `unit_variance / s^2` exactly.
pub fn ess_elir(mix: &MixtureDistribution, unit_variance: f64) -> Result<f64> {
    check_unit_variance(unit_variance)?;
    let live: Vec<_> = mix
        .components
        .iter()
        .filter(|c| c.weight > 1e-300)
        .map(|c| (c.weight.ln(), c.pooled.mean, c.pooled.sd))
        .collect();
    match live.as_slice() {
        [] => return Err(RbsbError::domain("ess_elir: mixture has no mass")),
        [(_, _, sd)] => return Ok(unit_variance / (sd * sd)),
        _ => {}
    }

    const OFFSETS: [f64; 11] = [-12.0, -7.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 7.0, 12.0];
    let mut breaks: Vec<f64> = live
        .iter()
        .flat_map(|&(_, m, s)| OFFSETS.iter().map(move |o| m + o * s))
        .collect();
    breaks.sort_by(f64::total_cmp);
    let min_sd = live.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-3 * min_sd);
    // the integrand peaks sharply between separated components
    let breaks = refine(&breaks, min_sd);

    let mut ln_terms = vec![0.0; live.len()];
    let info = composite(&breaks, |x| {
        let mut max = f64::NEG_INFINITY;
        for (t, &(lw, m, s)) in ln_terms.iter_mut().zip(&live) {
            let z = (x - m) / s;
            *t = lw - 0.5 * z * z - s.ln();
            max = max.max(*t);
        }
        // p = e^max * sum r_k, score = p'/p
        let mut sum = 0.0;
        let mut slope = 0.0;
        for (t, &(_, m, s)) in ln_terms.iter().zip(&live) {
            let r = (t - max).exp();
            sum += r;
            slope -= r * (x - m) / (s * s);
        }
        let score = slope / sum;
        let density = (max + sum.ln() - LN_SQRT_2PI).exp();
        density * score * score
    });
    if !(info.is_finite() && info > 0.0) {
        return Err(RbsbError::Numeric(format!(
            "ess_elir: information integral evaluated to {info}"
        )));
    }
    Ok(unit_variance * info)
}

/// Split every interval longer than `max_width` into equal pieces.
fn refine(breaks: &[f64], max_width: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(breaks.len() * 2);
    for w in breaks.windows(2) {
        let pieces = ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / pieces as f64;
        out.extend((0..pieces).map(|i| w[0] + i as f64 * h));
    }
    out.extend(breaks.last());
    out
}

pub fn ess(mix: &MixtureDistribution, unit_variance: f64, method: EssMethod) -> Result<f64> {
    match method {
        EssMethod::Elir => ess_elir(mix, unit_variance),
        EssMethod::Moment => ess_moment(mix, unit_variance),
    }
}

/// Share of posterior information attributable to borrowing,
/// `(ess - n_own) / ess`. Negative values are reported as they are.
pub fn ess_pct(ess: f64, n_own: f64) -> Result<f64> {
    if !(ess.is_finite() && ess > 0.0) {
        return Err(RbsbError::domain(format!("ess_pct: ESS must be positive, got {ess}")));
    }
    Ok((ess - n_own) / ess)
}

/// Posterior median minus the true effect.
pub fn bias_sample(mix: &MixtureDistribution, true_mu: f64) -> f64 {
    mix.median() - true_mu
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{MixtureKind, PathComponent};
    use crate::gaussian::PooledNormal;

    fn comp(range: (usize, usize), mean: f64, sd: f64, w: f64) -> PathComponent {
        PathComponent::new(range, PooledNormal::from_precision(mean, 1.0 / (sd * sd)), w)
    }

    fn single(mean: f64, sd: f64) -> MixtureDistribution {
        MixtureDistribution::single((1, 1), PooledNormal::from_precision(mean, 1.0 / (sd * sd)), MixtureKind::Posterior)
    }

    #[test]
    fn unit_prior_is_one_observation() {
        let m = single(0.0, 2.0);
        assert!((ess_moment(&m, 4.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((ess_elir(&m, 4.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn moment_ess_of_symmetric_pair() {
        let m = MixtureDistribution::new(
            vec![comp((1, 2), 1.0, 1.0, 0.5), comp((2, 2), -1.0, 1.0, 0.5)],
            MixtureKind::Posterior,
        )
        .unwrap();
        assert!((ess_moment(&m, 1.0).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn elir_of_identical_components_is_exact() {
        let m = MixtureDistribution::new(
            vec![comp((1, 2), 0.3, 0.2, 0.3), comp((2, 2), 0.3, 0.2, 0.7)],
            MixtureKind::Posterior,
        )
        .unwrap();
        assert!((ess_elir(&m, 1.0).unwrap() - 25.0).abs() < 1e-9);
    }

    #[test]
    fn elir_bounded_by_component_information() {
        // Fisher information of a mixture sits between moment ESS and the
        // largest component information.
        let m = MixtureDistribution::new(
            vec![comp((1, 2), 0.0, 0.1, 0.6), comp((2, 2), 0.4, 0.3, 0.4)],
            MixtureKind::Posterior,
        )
        .unwrap();
        let e = ess_elir(&m, 1.0).unwrap();
        assert!(e > ess_moment(&m, 1.0).unwrap());
        assert!(e < 100.0);
    }

    #[test]
    fn ess_pct_values() {
        assert!((ess_pct(163.0, 162.0).unwrap() - 0.006_134_969).abs() < 1e-8);
        assert_eq!(ess_pct(50.0, 50.0).unwrap(), 0.0);
        assert!((ess_pct(154.0, 40.0).unwrap() - 0.740_259_74).abs() < 1e-8);
        assert_eq!(ess_pct(7.0, 0.0).unwrap(), 1.0);
        assert!(ess_pct(0.0, 1.0).is_err());
        assert!(ess_pct(-3.0, 1.0).is_err());
        assert!(ess_pct(10.0, 20.0).unwrap() < 0.0);
    }

    #[test]
    fn bias_at_truth_is_zero() {
        assert!(bias_sample(&single(0.37, 0.2), 0.37).abs() < 1e-12);
        let m = MixtureDistribution::new(
            vec![comp((1, 2), 1.5, 0.1, 0.5), comp((2, 2), 0.5, 0.1, 0.5)],
            MixtureKind::Posterior,
        )
        .unwrap();
        assert!(bias_sample(&m, 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_variance_rejected() {
        assert!(ess_moment(&single(0.0, 1.0), 0.0).is_err());
    }
}
