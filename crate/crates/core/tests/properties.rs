use proptest::prelude::*;

use sparsecomb::bench::{derive_seed, rre};
use sparsecomb::convex::{bp_solve, comb_bp_solve, verify_kkt, PathSolverConfig};
use sparsecomb::dictgen::{coherence, cross_coherence, gaussian_dictionary, one_sided_coherence};
use sparsecomb::greedy::{comb_omp_solve, omp_solve, CombOmpOptions, StoppingCriteria};
use sparsecomb::imaging::GrayImage;
use sparsecomb::linalg::{dot, lsi_solve, nnls_solve, DenseMatrix};
use sparsecomb::oracle::for_each_colex;
use sparsecomb::CombinedDictionary;

fn signal(m: usize, seed: u64) -> Vec<f64> {
    gaussian_dictionary(m, 1, seed).unwrap().atom(0).iter().map(|v| 3.0 * v).collect()
}

fn combined(m: usize, kx: usize, kd: usize, seed: u64) -> CombinedDictionary {
    CombinedDictionary::new(gaussian_dictionary(m, kx + kd, seed).unwrap(), kx).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omp_residual_is_orthogonal_to_support(seed in any::<u64>(), m in 6usize..20, k in 8usize..30) {
        let g = gaussian_dictionary(m, k, seed).unwrap();
        let y = signal(m, seed ^ 1);
        let s = omp_solve(&g, &y, &StoppingCriteria::new(m / 2, 1e-9).unwrap()).unwrap();
        let r: Vec<f64> = {
            let fit = g.matrix().mul_vec(&s.delta);
            y.iter().zip(&fit).map(|(a, b)| a - b).collect()
        };
        for i in s.support() {
            prop_assert!(dot(g.atom(i), &r).abs() < 1e-9);
        }
    }

    #[test]
    fn comb_omp_constrained_keeps_x_nonneg(seed in any::<u64>(), kx in 1usize..12, kd in 1usize..12) {
        let g = combined(10, kx, kd, seed);
        let y = signal(10, seed ^ 2);
        let opts = CombOmpOptions { constrained_update: true, debias: true };
        let s = comb_omp_solve(&g, &y, &StoppingCriteria::for_rows(10), opts).unwrap();
        prop_assert!(s.delta[..kx].iter().all(|&v| v >= 0.0));
        prop_assert!(s.support_x.iter().all(|&i| i < kx));
        prop_assert!(s.support_d.iter().all(|&i| i >= kx));
    }

    #[test]
    fn comb_bp_keeps_x_nonneg_and_is_certified(seed in any::<u64>(), kx in 0usize..10, kd in 1usize..10) {
        let g = combined(8, kx, kd, seed);
        let y = signal(8, seed ^ 3);
        let s = comb_bp_solve(&g, &y, &PathSolverConfig::default()).unwrap();
        prop_assert!(s.delta[..kx].iter().all(|&v| v >= 0.0));
        prop_assert!(verify_kkt(&g, &y, &s.delta, 1e-6).unwrap().certified);
    }

    #[test]
    fn bp_is_sign_symmetric(seed in any::<u64>(), k in 6usize..16) {
        let g = gaussian_dictionary(6, k, seed).unwrap();
        let y = signal(6, seed ^ 4);
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let cfg = PathSolverConfig::default();
        let a = bp_solve(&g, &y, &cfg).unwrap();
        let b = bp_solve(&g, &neg, &cfg).unwrap();
        for (p, q) in a.delta.iter().zip(&b.delta) {
            prop_assert!((p + q).abs() < 1e-8);
        }
    }

    #[test]
    fn nnls_satisfies_kkt(seed in any::<u64>(), m in 4usize..12, k in 2usize..12) {
        let a = gaussian_dictionary(m, k, seed).unwrap().matrix().clone();
        let b = signal(m, seed ^ 5);
        let x = nnls_solve(&a, &b, 1e-10).unwrap().solution;
        let fit = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&fit).map(|(p, q)| p - q).collect();
        let w = a.tr_mul_vec(&r);
        for (xi, wi) in x.iter().zip(&w) {
            prop_assert!(*xi >= 0.0);
            prop_assert!(*wi <= 1e-8);
            if *xi > 0.0 {
                prop_assert!(wi.abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn lsi_constrains_only_leading_columns(seed in any::<u64>(), nn in 0usize..4) {
        let a = gaussian_dictionary(10, 5, seed).unwrap().matrix().clone();
        let b = signal(10, seed ^ 6);
        let x = lsi_solve(&a, &b, nn).unwrap().solution;
        prop_assert!(x[..nn].iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn coherence_bounds(seed in any::<u64>(), m in 3usize..10, k in 2usize..10) {
        let a = gaussian_dictionary(m, k, seed).unwrap();
        let mu = coherence(a.matrix()).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&mu));
        prop_assert!((one_sided_coherence(a.matrix()).unwrap() - mu).abs() < 1e-12);
        let mu_g = cross_coherence(a.matrix(), a.matrix()).unwrap();
        prop_assert!((mu_g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rre_basics(v in proptest::collection::vec(-5.0f64..5.0, 1..20)) {
        prop_assume!(v.iter().any(|x| *x != 0.0));
        prop_assert_eq!(rre(&v, &v).unwrap(), 0.0);
        prop_assert!((rre(&vec![0.0; v.len()], &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn colex_enumerates_every_subset_once(n in 0usize..9, s in 0usize..5) {
        let mut seen = std::collections::BTreeSet::new();
        for_each_colex(n, s, |c| {
            assert!(c.windows(2).all(|w| w[0] < w[1]));
            seen.insert(c.to_vec());
            true
        });
        let expected = if s > n { 0 } else { (0..s).fold(1usize, |acc, i| acc * (n - i) / (i + 1)) };
        prop_assert_eq!(seen.len(), expected);
    }

    #[test]
    fn pgm_round_trip(w8 in 1usize..4, h8 in 1usize..4, seed in any::<u64>()) {
        let (w, h) = (8 * w8, 8 * h8);
        let pixels: Vec<f64> = (0..w * h).map(|i| (derive_seed(seed, &[i as u64]) % 256) as f64).collect();
        let img = GrayImage::new(w, h, pixels).unwrap();
        let back = GrayImage::decode_pgm(&img.encode_pgm()).unwrap();
        prop_assert_eq!(back, img);
    }

    #[test]
    fn matrix_layouts_agree(rows in 1usize..6, cols in 1usize..6) {
        let data: Vec<f64> = (0..rows * cols).map(|i| i as f64).collect();
        let a = DenseMatrix::from_row_major(rows, cols, &data).unwrap();
        prop_assert_eq!(a.to_row_major(), data);
        prop_assert_eq!(a.transpose().transpose(), a);
    }
}
