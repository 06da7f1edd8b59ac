use cvest::data::{check_compatibility, load_paired, load_surrogate, write_paired, write_surrogate, PairedDataset, Schema, SurrogateDataset};
use cvest::estimator::{
    beta_opt, cv_estimate, cv_variance_theoretical, mc_estimate, min_paired_samples, rho_squared, run_cv_pipeline,
    variance_quadratic, Beta, MomentSummary,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6f64..1e6,
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        Just(0.1),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
    ]
}

fn paired_strategy() -> impl Strategy<Value = PairedDataset> {
    (2usize..12, 0usize..4, 0usize..3).prop_flat_map(|(n, d, m)| {
        (
            prop::collection::vec(finite(), n),
            prop::collection::vec(finite(), n * d),
            prop::collection::vec(finite(), n * m),
        )
            .prop_map(move |(f, g, phi)| PairedDataset::from_parts(None, f, g, phi, d, m).unwrap())
    })
}

/// Correlated Gaussian data with a nonzero target mean.
fn gaussian_data(rng: &mut ChaCha8Rng, n: usize, k: usize, d: usize) -> (PairedDataset, SurrogateDataset) {
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut g = Vec::with_capacity(n * d);
    let mut f = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let noise: f64 = rng.sample(StandardNormal);
        f.push(5.0 + row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + noise);
        g.extend(row);
    }
    let pool: Vec<f64> = (0..k * d).map(|_| rng.sample(StandardNormal)).collect();
    (
        PairedDataset::from_columns(f, g, d).unwrap(),
        SurrogateDataset::from_parts(None, k, pool, Vec::new(), d, 0).unwrap(),
    )
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_and_jsonl_round_trip_bit_for_bit(data in paired_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        for name in ["p.csv", "p.jsonl"] {
            let path = dir.path().join(name);
            write_paired(&path, &data).unwrap();
            let back = load_paired(&path, &Schema::default()).unwrap();
            prop_assert_eq!(back.len(), data.len());
            let bits = |xs: &[f64]| xs.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(back.f()), bits(data.f()));
            prop_assert_eq!(bits(back.g()), bits(data.g()));
            prop_assert_eq!(bits(back.phi()), bits(data.phi()));
        }
    }

    #[test]
    fn surrogate_round_trip_preserves_order(data in paired_strategy()) {
        prop_assume!(data.d() > 0);
        let pool = data.to_surrogate();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_surrogate(&path, &pool).unwrap();
        let back = load_surrogate(&path, &Schema::default()).unwrap();
        for i in 0..pool.len() {
            prop_assert_eq!(back.g_row(i), pool.g_row(i));
            prop_assert_eq!(back.scenario_id(i), pool.scenario_id(i));
        }
    }

    #[test]
    fn compatibility_is_symmetric_in_d(d1 in 0usize..4, d2 in 0usize..4, m in 0usize..3, used in any::<bool>()) {
        let a = PairedDataset::from_parts(None, vec![0.0; 2], vec![0.0; 2 * d1], vec![0.0; 2 * m], d1, m).unwrap();
        let b = SurrogateDataset::from_parts(None, 2, vec![0.0; 2 * d2], vec![0.0; 2 * m], d2, m).unwrap();
        let a_swapped = PairedDataset::from_parts(None, vec![0.0; 2], vec![0.0; 2 * d2], vec![0.0; 2 * m], d2, m).unwrap();
        let b_swapped = SurrogateDataset::from_parts(None, 2, vec![0.0; 2 * d1], vec![0.0; 2 * m], d1, m).unwrap();
        prop_assert_eq!(
            check_compatibility(&a, &b, used).is_ok(),
            check_compatibility(&a_swapped, &b_swapped, used).is_ok()
        );
        prop_assert_eq!(check_compatibility(&a, &b, used).is_ok(), d1 == d2);
    }

    #[test]
    fn zero_coefficient_collapses_to_sample_mean(seed in any::<u64>(), n in 2usize..40, k in 0usize..40, d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (paired, pool) = gaussian_data(&mut rng, n, k, d);
        let cv = cv_estimate(&paired, &pool, &Beta::zeros(d)).unwrap();
        prop_assert_eq!(cv.to_bits(), mc_estimate(paired.f()).unwrap().mu_hat.to_bits());
    }

    #[test]
    fn theoretical_variance_is_dominated_and_monotone(
        var_f in 1e-3f64..1e3,
        rho_sq in 0.0f64..=1.0,
        drho in 0.0f64..=1.0,
        n in 1usize..1000,
        k in 0usize..10_000,
        dk in 0usize..1000,
    ) {
        let v = cv_variance_theoretical(var_f, rho_sq, n, k);
        let mc = var_f / n as f64;
        prop_assert!(v <= mc);
        if rho_sq * k as f64 == 0.0 {
            prop_assert_eq!(v, mc);
        } else {
            prop_assert!(v < mc);
        }
        prop_assert!(cv_variance_theoretical(var_f, rho_sq, n, k + dk) <= v);
        let rho_hi = (rho_sq + drho).min(1.0);
        prop_assert!(cv_variance_theoretical(var_f, rho_hi, n, k) <= v);
    }

    #[test]
    fn planner_is_monotone_and_bounded(
        n_r in 1usize..5000,
        k in 0usize..20_000,
        dk in 0usize..1000,
        rho_sq in 0.0f64..=1.0,
        drho in 0.0f64..=1.0,
    ) {
        let tol = 1e-9 * n_r as f64;
        let n_min = min_paired_samples(n_r, k, rho_sq);
        prop_assert!(n_min <= n_r as f64 + tol);
        prop_assert!(n_min >= (n_r as f64 - k as f64).max(0.0) - tol);
        prop_assert!(min_paired_samples(n_r, k + dk, rho_sq) <= n_min + tol);
        prop_assert!(min_paired_samples(n_r, k, (rho_sq + drho).min(1.0)) <= n_min + tol);
    }

    #[test]
    fn optimal_coefficient_minimizes_the_quadratic(seed in any::<u64>(), d in 1usize..5, k in 1usize..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (paired, _) = gaussian_data(&mut rng, 40, 0, d);
        let m = MomentSummary::from_columns(paired.f(), paired.g(), d).unwrap();
        let best = beta_opt(&m, k).unwrap();
        let q_best = variance_quadratic(&m, &best, m.n, k);
        for _ in 0..100 {
            let scale = 10f64.powf(rng.gen_range(-3.0..0.0));
            let eps: Vec<f64> = (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
            let moved = Beta(best.0.iter().zip(&eps).map(|(b, e)| b + e).collect());
            prop_assert!(q_best <= variance_quadratic(&m, &moved, m.n, k));
        }
    }

    #[test]
    fn estimate_is_affine_invariant(seed in any::<u64>(), d in prop::sample::select(vec![1usize, 2, 5])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (paired, pool) = gaussian_data(&mut rng, 60, 200, d);
        // Diagonally dominant, hence invertible.
        let a: Vec<f64> = (0..d * d)
            .map(|i| if i % (d + 1) == 0 { 3.0 + rng.gen_range(0.0..1.0) } else { rng.gen_range(-0.5..0.5) })
            .collect();
        let shift: Vec<f64> = (0..d).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let map = |g: &[f64]| -> Vec<f64> {
            g.chunks(d)
                .flat_map(|row| (0..d).map(|r| shift[r] + (0..d).map(|c| a[r * d + c] * row[c]).sum::<f64>()).collect::<Vec<_>>())
                .collect()
        };
        let paired_t = paired.with_surrogates(map(paired.g()), d).unwrap();
        let pool_t = pool.with_surrogates(map(pool.g()), d).unwrap();
        let before = run_cv_pipeline(&paired, &pool, None).unwrap().mu_hat;
        let after = run_cv_pipeline(&paired_t, &pool_t, None).unwrap().mu_hat;
        prop_assert!((before - after).abs() <= 1e-8 * before.abs(), "{} vs {}", before, after);
    }

    #[test]
    fn scalar_rho_sq_is_squared_pearson(seed in any::<u64>(), n in 3usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (paired, _) = gaussian_data(&mut rng, n, 0, 1);
        let m = MomentSummary::from_columns(paired.f(), paired.g(), 1).unwrap();
        let r = pearson(paired.f(), paired.g());
        prop_assert!((rho_squared(&m).unwrap() - r * r).abs() < 1e-12);
    }
}
