use aoi_core::dynamic::*;
use aoi_core::fbl::harmonic_capacity;
use aoi_core::selector::{expected_aoi_broadcast, expected_aoi_unicast};
use aoi_core::AoiError;
use aoi_testkit::rel_diff;
use proptest::prelude::*;

fn annulus(beta: f64, pop: f64) -> DynamicConfig {
    DynamicConfig {
        ue_intensity: 0.0,
        inner_radius: 1.0,
        outer_radius: 20.0,
        pathloss_exp: 2.2,
        ref_snr: 1.0,
        overhead: 10.0,
        common_bits: 1000.0,
        individual_bits: beta * 1000.0,
        rate_backoff: None,
    }
    .with_outer_snr(10.0)
    .with_mean_population(pop)
}

#[test]
fn population_is_poisson_with_the_right_mean() {
    let cfg = annulus(0.0, 10.0);
    let counts: Vec<f64> = (0..100_000u64)
        .map(|s| sample_realization(&cfg, s).unwrap().len() as f64)
        .collect();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(rel_diff(mean, 10.0) < 0.01, "{mean}");
    assert!(rel_diff(var, 10.0) < 0.03, "{var}");
}

#[test]
fn distances_are_uniform_in_area() {
    let cfg = annulus(0.0, 100_000.0);
    let d = sample_realization(&cfg, 42).unwrap();
    let (a, b) = (1.0, 400.0);
    let mean_sq = d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64;
    assert!(rel_diff(mean_sq, (a + b) / 2.0) < 0.01);
    assert!(d.iter().all(|&x| (1.0..=20.0).contains(&x)));

    // Pearson χ² on d² over 20 equal-area bins; 43.82 is the 0.999 quantile at 19 dof.
    let bins = 20;
    let mut hist = vec![0usize; bins];
    for x in &d {
        let u = (x * x - a) / (b - a);
        hist[((u * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expect = d.len() as f64 / bins as f64;
    let chi2: f64 = hist.iter().map(|&o| (o as f64 - expect).powi(2) / expect).sum();
    assert!(chi2 < 43.82, "χ² = {chi2}");
}

#[test]
fn mean_inverse_capacity_matches_harmonic_capacity() {
    let cfg = annulus(0.0, 1e6);
    let d = sample_realization(&cfg, 7).unwrap();
    let mc = d.iter().map(|&x| 1.0 / cfg.approx_capacity_at(x)).sum::<f64>() / d.len() as f64;
    let exact = 1.0 / harmonic_capacity(&cfg).unwrap();
    assert!(rel_diff(mc, exact) < 0.005, "{mc} vs {exact}");
}

#[test]
fn estimate_matches_closed_forms_within_ten_percent() {
    for beta in [0.0, 0.5, 1.5] {
        let cfg = annulus(beta, 10.0);
        let b = expected_aoi_monte_carlo(&cfg, Scheme::Broadcast, 10_000, 3).unwrap();
        let u = expected_aoi_monte_carlo(&cfg, Scheme::Unicast, 10_000, 3).unwrap();
        assert!(rel_diff(b.mean, expected_aoi_broadcast(&cfg).unwrap()) < 0.1);
        assert!(rel_diff(u.mean, expected_aoi_unicast(&cfg).unwrap()) < 0.1);
        assert!(b.per_ue.is_empty() && u.per_ue.is_empty());
    }
}

#[test]
fn ci_shrinks_like_inverse_root_n() {
    let cfg = annulus(0.3, 10.0);
    let a = expected_aoi_monte_carlo(&cfg, Scheme::Unicast, 4_096, 11).unwrap();
    let b = expected_aoi_monte_carlo(&cfg, Scheme::Unicast, 16_384, 11).unwrap();
    let ratio = b.ci_half_width / a.ci_half_width;
    assert!((0.43..=0.57).contains(&ratio), "ratio {ratio}");
    assert_eq!(b.replications, 16_384);
}

#[test]
fn estimate_is_deterministic() {
    let cfg = annulus(0.3, 10.0);
    let a = expected_aoi_monte_carlo(&cfg, Scheme::Unicast, 3_000, 5).unwrap();
    let b = expected_aoi_monte_carlo(&cfg, Scheme::Unicast, 3_000, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rejects_too_few_realizations() {
    assert!(expected_aoi_monte_carlo(&annulus(0.0, 10.0), Scheme::Broadcast, 99, 1).is_err());
}

#[test]
fn empty_cells_count_as_zero() {
    // Λ = 1e-3: almost every draw is empty.
    let est = expected_aoi_monte_carlo(&annulus(0.0, 1e-3), Scheme::Broadcast, 2_000, 1).unwrap();
    assert!(est.mean < 0.01 * expected_aoi_broadcast(&annulus(0.0, 1e3)).unwrap());
}

#[test]
fn unicast_beyond_unit_snr_is_rejected() {
    let cfg = annulus(0.0, 10.0).with_outer_snr(0.5);
    assert!(matches!(
        realization_aoi(&cfg, &[20.0], Scheme::Unicast),
        Err(AoiError::BeyondDecodableRange { .. })
    ));
}

#[test]
fn backoff_costs_age() {
    let mut cfg = annulus(0.2, 10.0);
    let d = [3.0, 8.0, 15.0];
    let ideal = realization_aoi(&cfg, &d, Scheme::Unicast).unwrap();
    cfg.rate_backoff = Some(0.8);
    let coded = realization_aoi(&cfg, &d, Scheme::Unicast).unwrap();
    assert!(coded > ideal);
    assert!(realization_aoi(&cfg, &d, Scheme::Broadcast).unwrap() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn broadcast_is_affine_in_population(n in 1usize..30, beta in 0.0f64..3.0) {
        let cfg = annulus(beta, 10.0);
        let d = vec![10.0; n];
        let d1 = vec![10.0; n + 1];
        let step = realization_aoi(&cfg, &d1, Scheme::Broadcast).unwrap() - realization_aoi(&cfg, &d, Scheme::Broadcast).unwrap();
        let slope = 1.5 * cfg.individual_bits / cfg.outer_capacity();
        prop_assert!((step - slope).abs() <= 1e-9 * slope.max(1.0));
    }

    #[test]
    fn unicast_ignores_order_and_grows_with_distance(
        d in prop::collection::vec(1.0f64..20.0, 1..12),
        pick in any::<prop::sample::Index>(),
        bump in 0.01f64..5.0,
    ) {
        let cfg = annulus(0.4, 10.0);
        let base = realization_aoi(&cfg, &d, Scheme::Unicast).unwrap();
        let mut rev = d.clone();
        rev.reverse();
        prop_assert!(rel_diff(base, realization_aoi(&cfg, &rev, Scheme::Unicast).unwrap()) < 1e-12);
        let mut far = d.clone();
        let i = pick.index(d.len());
        far[i] = (far[i] + bump).min(20.0);
        prop_assume!(far[i] > d[i]);
        prop_assert!(realization_aoi(&cfg, &far, Scheme::Unicast).unwrap() > base);
    }
}
