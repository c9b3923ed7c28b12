use omega_shift_web::{constant_curves, shift_histogram, small_factor_profile, MAX_X};

#[test]
fn histogram_is_a_distribution() {
    let h = shift_histogram(200_000, 2, 50).unwrap();
    let mass: f64 = h.weighted.iter().sum();
    assert!((mass - 1.0).abs() < 1e-12);
    assert!(h.gaussian.iter().all(|&g| (0.0..=1.0).contains(&g)));
    assert!(h.ks_distance > 0.0 && h.ks_distance <= 1.0);
    assert_eq!(h.moments.len(), 4);
    let mean: f64 = h.weighted.iter().enumerate().map(|(a, p)| a as f64 * p).sum();
    assert!((mean - h.mean).abs() < 1e-9);
}

#[test]
fn profile_tracks_direct_counts() {
    let p = small_factor_profile(1_000_000, 2, 100).unwrap();
    assert_eq!(p.direct.len(), p.predicted.len());
    assert!(p.pearson > 0.5 && p.pearson <= 1.0);
    assert!(small_factor_profile(1_000, 2, 2).is_err());
}

#[test]
fn constant_curves_start_at_one() {
    let c = constant_curves(2.0, 8).unwrap();
    assert_eq!(c.r.len(), 9);
    assert!((c.a_r[0] - 1.0).abs() < 1e-12 && (c.c_r[0] - 1.0).abs() < 1e-12);
    // A_1 = 6/π² up to truncation
    assert!((c.a_r[4] - 6.0 / std::f64::consts::PI.powi(2)).abs() < 1e-5);
    assert!(constant_curves(-1.0, 8).is_err());
}

#[test]
fn rejects_oversized_requests() {
    assert!(shift_histogram(MAX_X + 1, 2, 10).is_err());
    assert!(shift_histogram(10, 2, 3).is_err());
}
