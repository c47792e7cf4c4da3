//! Recovery and estimation metrics.

use alloc::string::String;

use crate::error::{bail, Result};
use crate::graph::EdgeSet;
use crate::matrix::BlockMatrix;

/// F1 over unordered node pairs; 0 when precision or recall is undefined
/// or both are zero.
pub fn f1_score(est: &EdgeSet, truth: &EdgeSet) -> f64 {
    if est.is_empty() || truth.is_empty() {
        return 0.0;
    }
    let tp = est.intersection_len(truth) as f64;
    let precision = tp / est.len() as f64;
    let recall = tp / truth.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Size of the symmetric difference.
pub fn hamming(est: &EdgeSet, truth: &EdgeSet) -> usize {
    est.symmetric_difference_len(truth)
}

/// `‖Ω̂ − Ω*‖_F / ‖Ω*‖_F`.
pub fn frob_error(omega_hat: &BlockMatrix, omega_star: &BlockMatrix) -> Result<f64> {
    if !omega_hat.same_structure(omega_star) {
        bail!(Shape, "estimate and truth differ in structure");
    }
    let denom = omega_star.matrix().frobenius_norm();
    if denom == 0.0 {
        bail!(InvalidInput, "reference matrix has zero Frobenius norm");
    }
    Ok((omega_hat.matrix() - omega_star.matrix()).frobenius_norm() / denom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub penalty: String,
    pub lambda: f64,
    pub n: usize,
    pub seed: u64,
    pub f1: f64,
    pub hamming: usize,
    pub frob_error: f64,
    pub elapsed_seconds: f64,
}

impl MetricsRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(
        penalty: &str,
        lambda: f64,
        n: usize,
        seed: u64,
        est_edges: &EdgeSet,
        omega_hat: &BlockMatrix,
        truth_edges: &EdgeSet,
        omega_star: &BlockMatrix,
        elapsed_seconds: f64,
    ) -> Result<Self> {
        Ok(MetricsRecord {
            penalty: String::from(penalty),
            lambda,
            n,
            seed,
            f1: f1_score(est_edges, truth_edges),
            hamming: hamming(est_edges, truth_edges),
            frob_error: frob_error(omega_hat, omega_star)?,
            elapsed_seconds,
        })
    }
}

/// Mean and sample standard deviation (n − 1 denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, libm::sqrt(ss / (n - 1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use proptest::prelude::*;
    use std::vec::Vec;

    fn es(p: usize, pairs: &[(usize, usize)]) -> EdgeSet {
        EdgeSet::from_pairs(p, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn f1_examples() {
        let t = es(4, &[(0, 1), (1, 2)]);
        assert_eq!(f1_score(&t, &t), 1.0);
        assert_eq!(f1_score(&EdgeSet::new(4), &t), 0.0);
        assert!((f1_score(&es(4, &[(0, 1)]), &t) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1_score(&es(4, &[(2, 3)]), &t), 0.0);
    }

    #[test]
    fn hamming_examples() {
        let a = es(6, &[(0, 1), (2, 3)]);
        assert_eq!(hamming(&a, &a), 0);
        assert_eq!(hamming(&a, &es(6, &[(0, 2), (1, 3), (4, 5)])), 5);
        assert_eq!(hamming(&a, &es(6, &[(0, 1), (4, 5)])), 2);
    }

    #[test]
    fn frob_examples() {
        let s = BlockMatrix::symmetric(Matrix::from_rows(&[[2.0, 0.3], [0.3, 1.0]]).unwrap(), 2, 1).unwrap();
        assert_eq!(frob_error(&s, &s).unwrap(), 0.0);
        let twice = BlockMatrix::symmetric(s.matrix().scaled(2.0), 2, 1).unwrap();
        assert!((frob_error(&twice, &s).unwrap() - 1.0).abs() < 1e-15);
        assert!((frob_error(&BlockMatrix::zeros(2, 1), &s).unwrap() - 1.0).abs() < 1e-15);
        assert!(frob_error(&s, &BlockMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn mean_std_sample() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - libm::sqrt(5.0 / 3.0)).abs() < 1e-15);
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
    }

    fn edge_set(p: usize) -> impl Strategy<Value = EdgeSet> {
        proptest::collection::vec((0..p, 0..p), 0..20).prop_map(move |pairs| {
            EdgeSet::from_pairs(p, pairs.into_iter().filter(|(a, b)| a != b)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn f1_swap_symmetry(a in edge_set(8), b in edge_set(8)) {
            let swapped = (f1_score(&a, &b) - f1_score(&b, &a)).abs() < 1e-15;
            if a.len() == b.len() {
                prop_assert!(swapped);
            }
            prop_assert!((0.0..=1.0).contains(&f1_score(&a, &b)));
        }

        #[test]
        fn hamming_is_a_metric(a in edge_set(8), b in edge_set(8), c in edge_set(8)) {
            prop_assert_eq!(hamming(&a, &b), hamming(&b, &a));
            prop_assert!(hamming(&a, &c) <= hamming(&a, &b) + hamming(&b, &c));
        }

        #[test]
        fn relabeling_invariance(a in edge_set(6), b in edge_set(6), perm in Just(Vec::from([3usize, 0, 5, 1, 4, 2]))) {
            let (pa, pb) = (a.permute(&perm).unwrap(), b.permute(&perm).unwrap());
            prop_assert_eq!(f1_score(&a, &b), f1_score(&pa, &pb));
            prop_assert_eq!(hamming(&a, &b), hamming(&pa, &pb));
        }
    }
}
