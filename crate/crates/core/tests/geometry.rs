use proptest::prelude::*;
use tricorn_core::geometry::*;
use tricorn_core::{Complex64 as C, Error};

#[test]
fn chebyshev_cloud_is_the_segment() {
    let cloud = sample_julia(C::new(-2.0, 0.0), 20_000, 7).unwrap();
    assert_eq!(cloud.len(), 20_000);
    assert!(cloud.points.iter().all(|z| z.im.abs() < 1e-6 && z.re.abs() <= 2.0 + 1e-6));
    let lo = cloud.points.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let hi = cloud.points.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    assert!(lo < -1.99 && hi > 1.99);
}

#[test]
fn zero_cloud_is_the_circle() {
    let cloud = sample_julia(C::new(0.0, 0.0), 20_000, 1).unwrap();
    assert!(cloud.points.iter().all(|z| (z.norm() - 1.0).abs() < 1e-6));
}

#[test]
fn clouds_are_invariant_and_bounded() {
    for c in [C::new(-1.0, 0.0), C::new(0.1, 0.3), C::new(-1.754_877_666_246_692_7, 0.0)] {
        let cloud = sample_julia(c, 20_000, 3).unwrap();
        assert!(forward_invariance(&cloud, 100, 1e-6) >= 0.99, "{c}");
        assert!(cloud.membership_fraction(100, 1000) >= 0.99, "{c}");
    }
}

#[test]
fn sampling_is_deterministic() {
    let a = sample_julia(C::new(-0.5, 0.4), 10_000, 42).unwrap();
    let b = sample_julia(C::new(-0.5, 0.4), 10_000, 42).unwrap();
    let d = sample_julia(C::new(-0.5, 0.4), 10_000, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.points, d.points);
    assert!(sample_julia(C::new(0.0, 0.0), MAX_CLOUD + 1, 0).is_err());
}

#[test]
fn cloud_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cloud.bin");
    let cloud = sample_julia(C::new(-0.12, 0.75), 5000, 9).unwrap();
    cloud.write(&path).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 16 * 5000);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cloud.bin.json")).unwrap()).unwrap();
    assert_eq!(side["count"], 5000);
    assert_eq!(side["seed"], 9);
    assert_eq!(side["method"], "inverse_iteration");
    assert_eq!(PointCloud::read(&path).unwrap(), cloud);
}

#[test]
fn hausdorff_examples() {
    let zero = [C::new(0.0, 0.0)];
    let pair = [C::new(3.0, 0.0), C::new(0.0, 4.0)];
    assert_eq!(hausdorff_points(&zero, &pair).unwrap(), 4.0);
    assert_eq!(hausdorff_points(&pair, &zero).unwrap(), 4.0);
    let cloud = sample_julia(C::new(-1.0, 0.0), 5000, 2).unwrap();
    assert_eq!(hausdorff_distance(&cloud, &cloud).unwrap(), 0.0);
    assert!(hausdorff_points(&[], &zero).is_err());
}

/// Plain O(n m) sup-inf.
fn brute_hausdorff(a: &[C], b: &[C]) -> f64 {
    let one = |x: &[C], y: &[C]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

fn points() -> impl Strategy<Value = Vec<C>> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0).prop_map(|(x, y)| C::new(x, y)), 1..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hausdorff_matches_brute_force(a in points(), b in points()) {
        let d = hausdorff_points(&a, &b).unwrap();
        prop_assert!((d - brute_hausdorff(&a, &b)).abs() < 1e-12);
        prop_assert_eq!(d, hausdorff_points(&b, &a).unwrap());
    }

    #[test]
    fn hausdorff_triangle_inequality(a in points(), b in points(), c in points()) {
        let ab = hausdorff_points(&a, &b).unwrap();
        let bc = hausdorff_points(&b, &c).unwrap();
        let ac = hausdorff_points(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn deviation_is_at_most_half_a_step(x in -5.0f64..5.0, y in -5.0f64..5.0, m in 0usize..5) {
        let q = std::f64::consts::PI / 2f64.powi(m as i32);
        prop_assert!(argument_deviation(C::new(x, y), m) <= 0.5 * q + 1e-12);
    }
}

#[test]
fn hausdorff_on_nearby_julia_sets() {
    let a = sample_julia(C::new(-2.0, 0.0), 20_000, 5).unwrap();
    let b = sample_julia(C::new(-2.0 + 1e-4, 0.0), 20_000, 5).unwrap();
    let far = sample_julia(C::new(-1.0, 0.0), 20_000, 5).unwrap();
    let near = hausdorff_distance(&a, &b).unwrap();
    assert!(near < hausdorff_distance(&a, &far).unwrap());
}

#[test]
fn rl_fit_has_square_root_slope() {
    let fit = rl_scaling_fit(&default_rl_radii(), 20_000, 11).unwrap();
    assert!((0.4..=0.6).contains(&fit.slope), "{fit:?}");
    assert!(fit.r2 >= 0.95, "{fit:?}");
    for w in fit.points.windows(2) {
        assert!(w[1].h >= 0.9 * w[0].h, "{w:?}");
    }
    assert!(fit.points[0].h < 1e-2);
    assert!(rl_scaling_fit(&[1e-7, 1e-3], 1000, 0).is_err());
    assert!(matches!(rl_scaling_fit(&[1e-3], 1000, 0), Err(Error::IllConditioned(_))));
}

#[test]
fn bands_shrink_with_n() {
    for m in 0..=4 {
        for n in 0..=6 {
            let b = BandSpec::new(n, m);
            assert!(b.r_lo < b.r_hi && b.r_hi / b.r_lo <= 32.0);
            assert!(BandSpec::new(n + 1, m).r_hi <= b.r_hi);
        }
    }
}

#[test]
fn chebyshev_points_are_quantized_for_m_zero() {
    let band = BandSpec { n: 0, m: 0, r_lo: 0.0, r_hi: 2.0 };
    let rep = argument_quantization_at(C::new(-2.0, 0.0), band, 5000, 4).unwrap();
    assert!(rep.max_dev < 1e-6);
}

#[test]
fn argument_deviation_decays_in_n() {
    let reps: Vec<_> = (3..=5).map(|n| argument_quantization(n, 2, 4_000_000, 17).unwrap()).collect();
    assert!(reps[1].max_dev < reps[0].max_dev);
    assert!(reps[2].max_dev < reps[1].max_dev);
    let q = std::f64::consts::PI / 4.0;
    assert!(reps[1].max_dev <= 0.5 * q && reps[2].max_dev <= 0.5 * q);
    assert_eq!(reps[2].histogram.iter().sum::<usize>(), reps[2].in_band);
    assert!(argument_quantization(7, 2, 1000, 0).is_err());
    assert!(argument_quantization(3, 5, 1000, 0).is_err());
}

#[test]
fn koenigs_interval_endpoints() {
    let rep = koenigs_interval_check(1e-3).unwrap();
    assert!((rep.lo - 4.0 / 9.0).abs() < 1e-8, "{rep:?}");
    assert!((rep.hi - 16.0 / 9.0).abs() < 1e-8, "{rep:?}");
    assert!(rep.lo <= 1.0 && 1.0 <= rep.hi);
    assert!(koenigs_interval_check(1e-2).is_err());
}

#[test]
fn checks_reject_a_cloud_of_another_parameter() {
    let mut cloud = sample_julia(C::new(0.1, 0.3), 20_000, 8).unwrap();
    cloud.c += 0.3;
    assert!(forward_invariance(&cloud, 10, 1e-6) < 0.5);
    assert!(cloud.membership_fraction(100, 1000) < 0.5);
}
