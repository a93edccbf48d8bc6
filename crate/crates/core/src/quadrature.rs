//! Composite Gauss-Legendre integration over caller-supplied breakpoints.

// 10-point Gauss-Legendre nodes and weights on [-1, 1] (positive half).
const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_22,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_87,
    0.269_266_719_309_996_35,
    0.219_086_362_515_982_04,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_14,
];

/// Integrate `f` over `[a, b]` with one 10-point Gauss-Legendre panel.
pub(crate) fn gauss_legendre(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(&x, w)| w * (f(mid - half * x) + f(mid + half * x)))
        .sum::<f64>()
        * half
}

/// Sum of Gauss-Legendre panels between consecutive sorted breakpoints.
pub(crate) fn composite(breaks: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_legendre(w[0], w[1], &mut f))
        .sum()
}
