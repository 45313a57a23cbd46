use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use trendsym::scan::{scan, scan_with_threshold, GridSpec};
use trendsym::{tn_shifted, Error};

/// Normal-ish samples rounded to multiples of 2^-10, so that shifts by
/// dyadic amounts and negation are exact.
fn dyadic_sample(rng: &mut ChaCha8Rng, n: usize, loc: f64) -> Vec<f64> {
    let d = Normal::new(loc, 1.0).unwrap();
    (0..n).map(|_| (d.sample(rng) * 1024.0).round() / 1024.0).collect()
}

#[test]
fn shift_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let n = rng.gen_range(30..300);
        let loc = rng.gen_range(-0.5..0.5);
        let x = dyadic_sample(&mut rng, n, loc);
        let d = rng.gen_range(-64i32..64) as f64 / 16.0;
        let shifted: Vec<f64> = x.iter().map(|v| v + d).collect();
        let (a, b) = match (scan(&x, 0.05, &GridSpec::default()), scan(&shifted, 0.05, &GridSpec::default())) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(_), Err(_)) => continue,
            other => panic!("{other:?}"),
        };
        let tol = 1e-12 * (1.0 + d.abs());
        assert!((a.c_min + d - b.c_min).abs() <= tol, "{} {}", a.c_min + d, b.c_min);
        assert!((a.c_max + d - b.c_max).abs() <= tol, "{} {}", a.c_max + d, b.c_max);
        assert!((a.c_star + d - b.c_star).abs() <= tol, "{} {}", a.c_star + d, b.c_star);
        assert_eq!(a.tn_at_c_star, b.tn_at_c_star);
    }
}

#[test]
fn mirror_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..20 {
        let n = rng.gen_range(30..300);
        let loc = rng.gen_range(-0.5..0.5);
        let x = dyadic_sample(&mut rng, n, loc);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let (a, b) = match (scan(&x, 0.05, &GridSpec::default()), scan(&neg, 0.05, &GridSpec::default())) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(_), Err(_)) => continue,
            other => panic!("{other:?}"),
        };
        assert_eq!(a.c_min, -b.c_max);
        assert_eq!(a.c_max, -b.c_min);
        assert_eq!(a.c_star, -b.c_star);
        assert_eq!(a.tn_at_c_star, b.tn_at_c_star);
        assert_eq!(a.zero_symmetric, b.zero_symmetric);
    }
}

#[test]
fn larger_alpha_gives_nested_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let alphas = [0.01, 0.05, 0.1, 0.25];
    for _ in 0..10 {
        let x = dyadic_sample(&mut rng, 200, 0.2);
        let results: Vec<_> = alphas.iter().map(|&a| scan(&x, a, &GridSpec::default())).collect();
        for w in results.windows(2) {
            match (&w[0], &w[1]) {
                (Ok(wide), Ok(narrow)) => {
                    assert!(wide.c_min <= narrow.c_min && narrow.c_max <= wide.c_max);
                }
                (_, Err(Error::NoSymmetryPoint { .. })) => {}
                other => panic!("{other:?}"),
            }
        }
    }
}

#[test]
fn minimum_never_exceeds_value_at_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for i in 0..40 {
        let loc = if i % 2 == 0 { 0.0 } else { rng.gen_range(-0.3..0.3) };
        let n = rng.gen_range(20..400);
        let x = dyadic_sample(&mut rng, n, loc);
        let Ok(r) = scan(&x, 0.05, &GridSpec::default()) else { continue };
        let at_zero = r.tn_at_zero.expect("defined for continuous data");
        assert!(r.tn_at_c_star <= at_zero);
        assert_eq!(r.zero_symmetric, at_zero < r.threshold);
        if r.zero_symmetric {
            assert!(r.c_min <= 0.0 && 0.0 <= r.c_max);
        }
        assert_eq!(tn_shifted(&x, r.c_star).unwrap().statistic, r.tn_at_c_star);
    }
}

#[test]
fn shifted_mirror_sample_is_centred_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let half: Vec<f64> = (0..100).map(|_| rng.gen_range(1..4000) as f64 / 1024.0).collect();
    let delta = 0.375;
    let x: Vec<f64> = half.iter().flat_map(|v| [delta + v, delta - v]).collect();
    let r = scan(&x, 0.05, &GridSpec::default()).unwrap();
    assert_eq!(r.c_star, delta);
    assert_eq!(r.tn_at_c_star, 0.0);
}

#[test]
fn c_star_close_to_true_centre_for_large_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let d = Normal::new(0.37, 1.0).unwrap();
    let x: Vec<f64> = (0..5000).map(|_| d.sample(&mut rng)).collect();
    let r = scan(&x, 0.05, &GridSpec::default()).unwrap();
    assert!(r.c_min < 0.37 && 0.37 < r.c_max);
    assert!((r.c_star - 0.37).abs() < 3.0 / 5000f64.sqrt(), "{}", r.c_star);
    assert!(!r.zero_symmetric);
    assert!(!r.truncated);
}

#[test]
fn tiny_threshold_leaves_nothing_plausible() {
    let x: Vec<f64> = (1..=50).map(|i| (i * i) as f64).collect();
    assert!(matches!(
        scan_with_threshold(&x, 0.05, 1e-9, &GridSpec::default()),
        Err(Error::NoSymmetryPoint { .. })
    ));
}

#[test]
fn curve_reports_grid_and_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let x = dyadic_sample(&mut rng, 100, 0.0);
    let r = scan(&x, 0.05, &GridSpec::default()).unwrap();
    assert_eq!(r.curve.c_grid.len(), 2001);
    assert_eq!(r.curve.threshold, 2.983);
    assert!(r.curve.c_grid.windows(2).all(|w| w[0] < w[1]));
    let csv = r.curve.to_csv();
    assert_eq!(csv.lines().count(), 2002);
}
