use crate::error::{RbsbError, Result};

/// Contiguous study range `(start, end)`, 1-based and inclusive. The vague
/// prior component uses the reserved range `(0, 0)`.
pub type PathRange = (usize, usize);

pub const VAGUE_RANGE: PathRange = (0, 0);

/// All adjacent-only paths ending at study `j`, longest first:
/// `[(1, j), (2, j), ..., (j, j)]`.
pub fn enumerate_paths(j: usize) -> Result<Vec<PathRange>> {
    if j < 1 {
        return Err(RbsbError::domain("enumerate_paths: stage index must be >= 1"));
    }
    Ok((1..=j).map(|i| (i, j)).collect())
}

/// Path weights for the paths ending at stage `j = wstar_history.len()`,
/// in the same order as [`enumerate_paths`].
///
/// The weight of `(i, j)` is `(1 - w*_i) * prod_{l=i+1..j} w*_l`. With
/// `w*_1 = 0` these telescope to one.
pub fn path_weights(wstar_history: &[f64]) -> Result<Vec<f64>> {
    let Some(&first) = wstar_history.first() else {
        return Err(RbsbError::domain("path_weights: empty w* history"));
    };
    if let Some((idx, w)) = wstar_history
        .iter()
        .enumerate()
        .find(|(_, w)| !(0.0..=1.0).contains(*w))
    {
        return Err(RbsbError::domain(format!(
            "path_weights: w*_{} = {w} is outside [0, 1]",
            idx + 1
        )));
    }
    if first != 0.0 {
        return Err(RbsbError::domain(format!(
            "path_weights: w*_1 must be 0, got {first}"
        )));
    }

    let j = wstar_history.len();
    let mut weights = vec![0.0; j];
    // suffix = prod_{l=i+1..j} w*_l, built from the back
    let mut suffix = 1.0;
    for i in (0..j).rev() {
        weights[i] = (1.0 - wstar_history[i]) * suffix;
        suffix *= wstar_history[i];
    }
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_stage() {
        assert_eq!(enumerate_paths(1).unwrap(), vec![(1, 1)]);
        assert_eq!(path_weights(&[0.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn three_study_paths() {
        assert_eq!(enumerate_paths(3).unwrap(), vec![(1, 3), (2, 3), (3, 3)]);
    }

    #[test]
    fn five_study_paths_match_brute_force() {
        let mut brute = Vec::new();
        for start in 1..=5 {
            for end in start..=5 {
                if end == 5 {
                    brute.push((start, end));
                }
            }
        }
        brute.sort_by_key(|&(s, e)| std::cmp::Reverse(e - s));
        let got = enumerate_paths(5).unwrap();
        assert_eq!(got, brute);
        assert!(got.iter().all(|&(s, e)| s <= 5 && e == 5));
    }

    #[test]
    fn zero_stage_is_an_error() {
        assert!(enumerate_paths(0).is_err());
    }

    #[test]
    fn case_study_weights() {
        let w = path_weights(&[0.0, 0.86]).unwrap();
        assert!((w[0] - 0.86).abs() < 1e-15);
        assert!((w[1] - 0.14).abs() < 1e-15);

        let w = path_weights(&[0.0, 0.856, 0.88]).unwrap();
        assert!((w[0] - 0.75).abs() < 0.005);
        assert!((w[1] - 0.13).abs() < 0.005);
        assert!((w[2] - 0.12).abs() < 0.005);
    }

    #[test]
    fn rejects_out_of_range_entries() {
        assert!(path_weights(&[0.0, 1.2]).is_err());
        assert!(path_weights(&[0.0, -0.1]).is_err());
        assert!(path_weights(&[0.0, f64::NAN]).is_err());
        assert!(path_weights(&[0.3]).is_err());
        assert!(path_weights(&[]).is_err());
    }

    proptest! {
        #[test]
        fn weights_telescope_to_one(tail in proptest::collection::vec(0.0f64..=1.0, 0..20)) {
            let mut h = vec![0.0];
            h.extend(tail);
            let w = path_weights(&h).unwrap();
            let total: f64 = w.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|x| (0.0..=1.0).contains(x)));
        }

        #[test]
        fn full_path_weight_never_increases(tail in proptest::collection::vec(0.0f64..=1.0, 1..15)) {
            let mut h = vec![0.0];
            h.extend(tail);
            for j in 2..=h.len() {
                let before = path_weights(&h[..j - 1]).unwrap()[0];
                let after = path_weights(&h[..j]).unwrap()[0];
                // the (1, j) path is the (1, j-1) path scaled by w*_j
                prop_assert!((after - before * h[j - 1]).abs() < 1e-15);
                prop_assert!(after <= before + 1e-15);
            }
        }
    }
}
