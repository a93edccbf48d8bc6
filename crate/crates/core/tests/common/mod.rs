//! Independent numerical oracles for the integration tests. Nothing here
//! calls into the library's own density, tail or quadrature code.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbsb_core::{MixtureDistribution, MixtureKind, PathComponent, PooledNormal};

pub fn phi(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

pub fn mixture_pdf(mix: &MixtureDistribution, x: f64) -> f64 {
    mix.components
        .iter()
        .map(|c| c.weight * phi(x, c.pooled.mean, c.pooled.sd))
        .sum()
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
        + adaptive(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson integration with Richardson correction.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(&f, a, fa, b, fb);
    adaptive(&f, a, fa, b, fb, whole, m, fm, tol, 60)
}

/// Integrate over `[a, b]` after splitting at every component's
/// mean +/- {0, 1, 3, 6} sd so the adaptive rule sees each bump.
pub fn integrate_mixture(mix: &MixtureDistribution, f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut cuts = vec![a, b];
    for c in &mix.components {
        for k in [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0] {
            let x = c.pooled.mean + k * c.pooled.sd;
            if x > a && x < b {
                cuts.push(x);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).map(|w| integrate(&f, w[0], w[1], tol)).sum()
}

pub fn support(mix: &MixtureDistribution, sds: f64) -> (f64, f64) {
    mix.components.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
        (lo.min(c.pooled.mean - sds * c.pooled.sd), hi.max(c.pooled.mean + sds * c.pooled.sd))
    })
}

/// Pr(X > 0) by quadrature of the mixture density.
pub fn upper_tail_quadrature(mix: &MixtureDistribution) -> f64 {
    let (_, hi) = support(mix, 40.0);
    integrate_mixture(mix, |x| mixture_pdf(mix, x), 0.0, hi.max(0.0), 1e-14)
}

pub fn cdf_quadrature(mix: &MixtureDistribution, x: f64) -> f64 {
    let (lo, _) = support(mix, 40.0);
    integrate_mixture(mix, |t| mixture_pdf(mix, t), lo.min(x), x, 1e-14)
}

/// `unit_variance * ∫ p'(x)^2 / p(x) dx` with p' by differentiating each
/// component analytically.
pub fn elir_quadrature(mix: &MixtureDistribution, unit_variance: f64) -> f64 {
    let (lo, hi) = support(mix, 14.0);
    let f = |x: f64| {
        let (mut p, mut dp) = (0.0, 0.0);
        for c in &mix.components {
            let v = c.weight * phi(x, c.pooled.mean, c.pooled.sd);
            p += v;
            dp -= v * (x - c.pooled.mean) / (c.pooled.sd * c.pooled.sd);
        }
        if p > 0.0 { dp * dp / p } else { 0.0 }
    };
    unit_variance * integrate_mixture(mix, f, lo, hi, 1e-12)
}

/// Random mixture with `k` components and distinct ranges.
pub fn random_mixture(rng: &mut impl Rng, k: usize) -> MixtureDistribution {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let components = raw
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mean = rng.random_range(-3.0..3.0);
            let sd: f64 = rng.random_range(0.05..2.0);
            PathComponent::new((i + 1, k), PooledNormal::from_precision(mean, 1.0 / (sd * sd)), w / total)
        })
        .collect();
    MixtureDistribution::new(components, MixtureKind::Posterior).expect("valid mixture")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Path weights by brute force: enumerate every contiguous path ending
/// at `j` and multiply out its factors directly.
pub fn brute_force_path_weights(wstar: &[f64]) -> Vec<f64> {
    let j = wstar.len();
    (1..=j)
        .map(|i| {
            let mut w = 1.0 - wstar[i - 1];
            for l in i + 1..=j {
                w *= wstar[l - 1];
            }
            w
        })
        .collect()
}

/// Posterior by direct Bayes on a fine grid: prior density times the
/// Normal likelihood of every observation, renormalised.
pub fn grid_posterior_median(prior: impl Fn(f64) -> f64, lik: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 400_000;
    let h = (hi - lo) / n as f64;
    let vals: Vec<f64> = (0..=n).map(|i| {
        let x = lo + i as f64 * h;
        prior(x) * lik(x)
    }).collect();
    let total: f64 = vals.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum();
    let mut acc = 0.0;
    for (i, w) in vals.windows(2).enumerate() {
        let step = 0.5 * (w[0] + w[1]) * h;
        if acc + step >= 0.5 * total {
            let frac = (0.5 * total - acc) / step;
            return lo + (i as f64 + frac) * h;
        }
        acc += step;
    }
    hi
}
