use std::f64::consts::{FRAC_PI_2, PI, TAU};

use levy_omt::estimators::{
    center_exit_angles, count_arc_hits, estimate_arc_first_hit, estimate_open_set_hit, inscribed_arc, ArcSpec,
    EstimateReport,
};
use levy_omt::stats::{chi_square_sf, gamma_p, gamma_q, two_sample_angle_test};
use levy_omt::{CircleSpec, Complex, Exec, SamplerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

fn unit() -> CircleSpec {
    CircleSpec::new(c(0.0, 0.0), 1.0).unwrap()
}

fn arc(t1: f64, t2: f64) -> ArcSpec {
    ArcSpec::new(c(0.0, 0.0), 0.5, t1, t2).unwrap()
}

fn cfg() -> SamplerConfig {
    SamplerConfig::for_radius(0.5)
}

#[test]
fn incomplete_gamma_matches_statrs() {
    for a in [0.5, 1.0, 2.5, 11.5, 17.5, 40.0] {
        for x in [1e-3, 0.3, 1.0, 5.0, 12.0, 25.0, 60.0, 150.0] {
            let p = statrs::function::gamma::gamma_lr(a, x);
            let q = statrs::function::gamma::gamma_ur(a, x);
            assert!((gamma_p(a, x) - p).abs() <= 1e-10, "P({a},{x})");
            assert!((gamma_q(a, x) - q).abs() <= 1e-10 * q.max(1e-10), "Q({a},{x}): {} vs {q}", gamma_q(a, x));
        }
    }
    for df in [7usize, 23, 35] {
        let dist = ChiSquared::new(df as f64).unwrap();
        for stat in [0.5, 5.0, 20.0, 40.0, 80.0] {
            let expected = dist.sf(stat);
            assert!((chi_square_sf(stat, df) - expected).abs() <= 1e-10 * expected.max(1e-10));
        }
    }
}

#[test]
fn full_arc_is_certain() {
    let rep = estimate_arc_first_hit(unit(), arc(0.0, TAU), 2_000, &cfg(), 1, Exec::Parallel).unwrap();
    assert_eq!(rep.hits, rep.n);
    assert_eq!(rep.p_hat, 1.0);
    assert_eq!(rep.passed, Some(true));
}

#[test]
fn half_and_quarter_arcs() {
    let half = estimate_arc_first_hit(unit(), arc(0.0, PI), 100_000, &cfg(), 2, Exec::Parallel).unwrap();
    assert!((0.485..=0.515).contains(&half.p_hat), "{half:?}");
    assert_eq!(half.reference, Some(0.5));
    assert_eq!(half.passed, Some(true));
    let quarter = estimate_arc_first_hit(unit(), arc(0.0, FRAC_PI_2), 100_000, &cfg(), 3, Exec::Parallel).unwrap();
    assert!((0.237..=0.263).contains(&quarter.p_hat), "{quarter:?}");
    assert_eq!(quarter.passed, Some(true));
}

#[test]
fn geometry_errors() {
    let big = ArcSpec::new(c(0.0, 0.0), 1.0, 0.0, PI).unwrap();
    assert!(estimate_arc_first_hit(unit(), big, 10, &cfg(), 0, Exec::Sequential).is_err());
    let off = ArcSpec::new(c(0.1, 0.0), 0.5, 0.0, PI).unwrap();
    assert!(estimate_arc_first_hit(unit(), off, 10, &cfg(), 0, Exec::Sequential).is_err());
    assert!(ArcSpec::new(c(0.0, 0.0), 0.5, 1.0, 1.0).is_err());
    assert!(ArcSpec::new(c(0.0, 0.0), 0.5, 0.0, TAU + 1e-9).is_err());
    assert!(ArcSpec::new(c(0.0, 0.0), -0.5, 0.0, 1.0).is_err());
}

#[test]
fn rotation_equivariance() {
    let n = 20_000;
    let base = arc(0.3, 1.4);
    for (k, phi) in [0.7, 2.0, 4.5, -1.0].into_iter().enumerate() {
        let rotated = base.rotated(phi);
        assert_eq!(rotated.reference_probability(), base.reference_probability());
        let a = estimate_arc_first_hit(unit(), base, n, &cfg(), 10 + k as u64, Exec::Parallel).unwrap();
        let b = estimate_arc_first_hit(unit(), rotated, n, &cfg(), 20 + k as u64, Exec::Parallel).unwrap();
        let se = (a.standard_error().powi(2) + b.standard_error().powi(2)).sqrt();
        assert!((a.p_hat - b.p_hat).abs() <= 3.0 * se, "phi {phi}: {} vs {}", a.p_hat, b.p_hat);
    }
}

#[test]
fn additivity_on_a_shared_path_set() {
    let inner = CircleSpec::new(c(0.0, 0.0), 0.5).unwrap();
    let angles = center_exit_angles(inner, 5_000, &cfg(), 5, Exec::Parallel).unwrap();
    let (a, b) = (arc(0.2, 1.1), arc(1.1, 2.9));
    let union_open = arc(0.2, 2.9);
    let on_seam = angles.iter().filter(|&&t| t == 1.1).count() as u64;
    assert_eq!(count_arc_hits(&angles, &a) + count_arc_hits(&angles, &b) + on_seam, count_arc_hits(&angles, &union_open));
    let n = angles.len() as f64;
    let p = |x: &ArcSpec| count_arc_hits(&angles, x) as f64 / n;
    assert!((p(&a) + p(&b) - p(&union_open)).abs() <= on_seam as f64 / n + 1e-15);
}

#[test]
fn open_set_examples() {
    let start = c(0.0, 0.0);
    let all = estimate_open_set_hit(unit(), start, |z: Complex| z.norm() < 0.01, 500, &cfg(), 6, Exec::Parallel).unwrap();
    assert_eq!(all.p_hat, 1.0);
    assert_eq!(all.reference, None);
    assert_eq!(all.passed, Some(true));
    let none = estimate_open_set_hit(unit(), start, |_| false, 500, &cfg(), 6, Exec::Parallel).unwrap();
    assert_eq!(none.p_hat, 0.0);
    assert_eq!(none.passed, Some(false));
}

#[test]
fn small_disk_hit_dominates_inscribed_arc() {
    let v = (c(0.5, 0.0), 0.1);
    let cfg = SamplerConfig::for_radius(1.0);
    let rep = estimate_open_set_hit(unit(), c(0.0, 0.0), |z: Complex| (z - v.0).norm() < v.1, 10_000, &cfg, 7, Exec::Parallel)
        .unwrap();
    assert!(rep.hits > 0);
    // Paths crossing the arc of |z| = 0.5 inside V enter V.
    let window = inscribed_arc(c(0.0, 0.0), 0.5, v.0, v.1).unwrap();
    let bound = window.reference_probability();
    assert!(bound > 0.0);
    assert!(rep.ci_high >= bound, "{rep:?} vs lower bound {bound}");
}

#[test]
fn monotone_in_the_set() {
    let cfg = SamplerConfig::for_radius(1.0);
    let start = c(0.0, 0.0);
    let mut prev = 0;
    for rho in [0.02, 0.05, 0.1, 0.2, 0.4] {
        let rep = estimate_open_set_hit(unit(), start, move |z: Complex| (z - c(0.5, 0.2)).norm() < rho, 2_000, &cfg, 8, Exec::Parallel)
            .unwrap();
        assert!(rep.hits >= prev);
        prev = rep.hits;
    }
}

#[test]
fn two_sample_test_calibration() {
    let mut passes = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..10_000).map(|_| rng.random_range(0.0..TAU)).collect();
        let b: Vec<f64> = (0..10_000).map(|_| rng.random_range(0.0..TAU)).collect();
        if two_sample_angle_test(&a, &b, 24).unwrap().p_value > 1e-3 {
            passes += 1;
        }
    }
    assert!(passes >= 99, "{passes}/100");
}

#[test]
fn report_json_is_flat() {
    let rep = EstimateReport::from_counts(50, 100, Some(0.5));
    let json = serde_json::to_string(&rep).unwrap();
    let keys = ["n", "hits", "p_hat", "ci_low", "ci_high", "reference", "passed"];
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    let obj = value.as_object().unwrap();
    assert_eq!(obj.len(), keys.len());
    for k in keys {
        assert!(obj.contains_key(k), "{k}");
        assert!(!obj[k].is_object() && !obj[k].is_array());
    }
    assert!(rep.ci_low <= rep.p_hat && rep.p_hat <= rep.ci_high);
}
