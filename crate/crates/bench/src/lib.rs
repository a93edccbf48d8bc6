//! Shared fixtures for the benchmarks.

use rbsb_core::{
    Direction, MixtureDistribution, MixtureKind, PathComponent, PooledNormal, ProgrammeSpec,
    StudySummary,
};

pub fn programme(stages: usize) -> ProgrammeSpec {
    ProgrammeSpec::constant_weight(
        stages,
        0.5,
        StudySummary::unit_info(0.0, 2.0).expect("valid"),
        0.975,
        Direction::HigherIsBetter,
    )
    .expect("valid")
}

/// Concordant estimates with slowly drifting means.
pub fn studies(stages: usize) -> Vec<StudySummary> {
    (0..stages)
        .map(|j| {
            let se = if j == 0 { 0.158 } else { 0.258 };
            StudySummary::new(0.5 - 0.05 * j as f64, se, format!("s{}", j + 1)).expect("valid")
        })
        .collect()
}

/// A `k`-component posterior-like mixture with overlapping components.
pub fn mixture(k: usize) -> MixtureDistribution {
    let components = (0..k)
        .map(|i| {
            let sd = 0.1 + 0.05 * i as f64;
            PathComponent::new((i + 1, k), PooledNormal::from_precision(0.4 - 0.1 * i as f64, 1.0 / (sd * sd)), 1.0 / k as f64)
        })
        .collect();
    MixtureDistribution::new(components, MixtureKind::Posterior).expect("valid")
}
