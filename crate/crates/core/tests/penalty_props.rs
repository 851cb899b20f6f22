mod common;

use gbtopt::penalty::{min_convex_over_box, MinimizerOptions};
use gbtopt::synthetic::random_training_data;
use gbtopt::{fit_pca, Mixture, PenaltyModel};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn model(seed: u64, max_lambda: f64) -> (ChaCha8Rng, PenaltyModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4);
    let lambda = rng.random_range(0.0..max_lambda);
    let pen = random_penalty(&mut rng, n, lambda, 0.0, 10.0);
    (rng, pen)
}

fn sub_box(rng: &mut ChaCha8Rng, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    lo.iter()
        .zip(hi)
        .map(|(&a, &b)| {
            let p = rng.random_range(a..=b);
            let q = rng.random_range(a..=b);
            (p.min(q), p.max(q))
        })
        .unzip()
}

proptest! {
    #[test]
    fn penalty_is_convex(seed in any::<u64>()) {
        let (mut rng, pen) = model(seed, 10.0);
        let n = pen.n();
        for _ in 0..10 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            for t in [0.25, 0.5, 0.75] {
                let m: Vec<f64> = x.iter().zip(&y).map(|(a, b)| t * a + (1.0 - t) * b).collect();
                prop_assert!(pen.eval(&m) <= t * pen.eval(&x) + (1.0 - t) * pen.eval(&y) + 1e-9);
            }
        }
    }

    #[test]
    fn shrinking_the_box_never_lowers_the_minimum(seed in any::<u64>()) {
        let (mut rng, pen) = model(seed, 100.0);
        let n = pen.n();
        let opts = MinimizerOptions::default();
        let (lo1, hi1) = sub_box(&mut rng, &vec![0.0; n], &vec![10.0; n]);
        let (lo2, hi2) = sub_box(&mut rng, &lo1, &hi1);
        let outer = min_convex_over_box(&pen, &lo1, &hi1, &opts).unwrap();
        let inner = min_convex_over_box(&pen, &lo2, &hi2, &opts).unwrap();
        prop_assert!(inner.value >= outer.value - 2e-8, "{} < {}", inner.value, outer.value);
    }

    #[test]
    fn minimizer_matches_face_enumeration(seed in any::<u64>()) {
        let (mut rng, pen) = model(seed, 1000.0);
        let n = pen.n();
        let (lo, hi) = sub_box(&mut rng, &vec![0.0; n], &vec![10.0; n]);
        let q = Quadratic::probe(n, |x| pen.eval(x));
        let (_, x) = box_qp_min(&q, &lo, &hi);
        let want = pen.eval(&x);
        let got = min_convex_over_box(&pen, &lo, &hi, &MinimizerOptions::default()).unwrap();
        let tol = 1e-7 * (1.0 + want.abs());
        prop_assert!((got.value - want).abs() <= tol, "minimizer {} vs faces {}", got.value, want);
        prop_assert!(got.lower_bound <= want + 1e-12 * (1.0 + want.abs()));
        for i in 0..n {
            prop_assert!(lo[i] <= got.x[i] && got.x[i] <= hi[i]);
        }
    }

    #[test]
    fn lambda_scales_only_the_subspace_term(seed in any::<u64>(), c in 0.0f64..20.0) {
        let (mut rng, pen) = model(seed, 10.0);
        let n = pen.n();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let mix = pen.mixture().map_or(0.0, |m: &Mixture| {
            (m.target - m.indices.iter().map(|&i| x[i]).sum::<f64>()).powi(2)
        });
        let scaled = pen.with_lambda(c * pen.lambda()).unwrap().eval(&x);
        let want = c * (pen.eval(&x) - mix) + mix;
        prop_assert!((scaled - want).abs() <= 1e-12 * want.abs().max(1.0) * 10.0, "{scaled} vs {want}");
    }

    #[test]
    fn full_rank_pca_reconstructs_the_data(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=6);
        let data = random_training_data(n, 30, 0.0, 10.0, seed);
        let pca = fit_pca(&data, n).unwrap();
        let pen = PenaltyModel::from_pca(&pca, 1.0, None).unwrap();
        for row in &data {
            let z = pca.standardize(row);
            let back = pen.project(&z);
            for (a, b) in z.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }
        for col in &pca.loadings {
            let big = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            prop_assert!(big > 0.0, "largest entry of a loading is negative");
        }
    }
}
