use num_complex::Complex64;
use omega_shift::genfun::{convolution_check, extract_coefficients, f_z_direct, f_z_value, GzSpec};
use omega_shift::stats::{ShiftCount, ShiftProfile};
use omega_shift::{build_omega_table, OmegaTable, SieveConfig};
use proptest::prelude::*;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn convolution_identity(n in 1u64..=1_000_000, z in complex(), w in 2u64..200) {
        let (lhs, rhs) = convolution_check(n, &GzSpec::new(w, z)).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn f_z_multiplicative(a in 1u64..=1_000, b in 1u64..=1_000, z in complex(), w in 2u64..50) {
        prop_assume!(gcd(a, b) == 1);
        let spec = GzSpec::new(w, z);
        let prod = f_z_direct(a, &spec).unwrap() * f_z_direct(b, &spec).unwrap();
        let joint = f_z_direct(a * b, &spec).unwrap();
        prop_assert!((prod - joint).norm() < 1e-12);
        prop_assert!((f_z_value(a * b, &spec).unwrap() - joint).norm() < 1e-12);
    }

    #[test]
    fn thresholded_counts_monotone(x in 100u64..20_000, w in 2u64..100, k in 1u32..4,
                                   ys in proptest::collection::vec(-4.0f64..4.0, 2..8)) {
        let t = build_omega_table(&SieveConfig::new(x, w.min(x))).unwrap();
        let p = ShiftProfile::build(&t, x);
        let mut ys = ys;
        ys.sort_by(f64::total_cmp);
        let vals: Vec<u128> = ys.iter().map(|&y| p.s_k_y(k, y, ShiftCount::All)).collect();
        prop_assert!(vals.windows(2).all(|v| v[0] <= v[1]));
        prop_assert!(vals.iter().all(|&v| v <= p.s_k(k)));
        let by_ell: u128 = (0..16).map(|ell| p.s_k_ell(k, ell)).sum();
        prop_assert_eq!(by_ell, p.s_k(k));
        let d = p.ks_distance(k);
        prop_assert!(d.is_nan() || (0.0..=1.0).contains(&d));
    }

    #[test]
    fn extraction_equals_direct_counting(x in 50u64..30_000, w in 2u64..300, k in 1u32..5) {
        let t = build_omega_table(&SieveConfig::new(x, w.min(x))).unwrap();
        let p = ShiftProfile::build(&t, x);
        prop_assume!(p.pi_k(k) > 0);
        let cv = extract_coefficients(&t, k, x).unwrap();
        for (ell, &c) in cv.coefficients.iter().enumerate() {
            let want = p.s_k_ell(k, ell) as f64;
            prop_assert!((c - want).abs() <= 1e-6 * want.max(1.0));
        }
    }

    #[test]
    fn cache_round_trip(x in 3u64..5_000, w in 2u64..5_000) {
        let w = w.min(x);
        let t = build_omega_table(&SieveConfig::new(x, w)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.bin");
        t.write_cache(&path).unwrap();
        prop_assert_eq!(OmegaTable::read_cache(&path, x, w).unwrap(), t);
    }
}

#[test]
fn weighted_mass_over_all_k() {
    let x = 50_000;
    let t = build_omega_table(&SieveConfig::new(x, 10)).unwrap();
    let p = ShiftProfile::build(&t, x);
    let total: u128 = (0..16).map(|k| p.s_k(k)).sum();
    let direct: u128 = (2..=x).map(|n| 1u128 << t.omega(n - 1)).sum();
    assert_eq!(total, direct);
}
