use levy_omt::bm::sample_path_until_exit;
use levy_omt::invariance::{crossing_angles, invariance_check, DEFAULT_ALPHA, DEFAULT_BINS};
use levy_omt::omt::{DomainSpec, OmtConfig};
use levy_omt::stats::two_sample_angle_test;
use levy_omt::time_change::{clock_inverse, compute_clock, first_crossing, map_path, ImageStep};
use levy_omt::{AnalyticFn, BmPath, CircleSpec, Complex, RngStream, SamplerConfig};

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

fn f(src: &str) -> AnalyticFn {
    src.parse().unwrap()
}

fn paths(n: u64, seed: u64) -> Vec<BmPath> {
    let circle = CircleSpec::new(c(0.0, 0.0), 1.0).unwrap();
    let cfg = SamplerConfig::with_step(1e-3, 1.0);
    (0..n)
        .map(|i| sample_path_until_exit(c(0.1, 0.2), circle, &cfg, RngStream::new(seed, i)).unwrap())
        .collect()
}

#[test]
fn clock_is_nondecreasing_and_inverts_at_knots() {
    for src in ["z", "3*z", "z^2", "z^3", "exp(z)", "z^3-3*z", "exp(z^2)*z"] {
        let g = f(src);
        for p in paths(20, 1) {
            let clock = compute_clock(&p, &g).unwrap();
            assert_eq!(clock.sigma[0], 0.0);
            assert!(clock.sigma.windows(2).all(|w| w[0] <= w[1]), "{src}");
            for k in 1..clock.sigma.len() {
                if clock.sigma[k] > clock.sigma[k - 1] {
                    let t = clock_inverse(&clock, clock.sigma[k]).unwrap();
                    assert!((t - clock.times[k]).abs() <= 1e-12, "{src}: knot {k}");
                }
            }
            assert_eq!(clock_inverse(&clock, 0.0).unwrap(), 0.0);
            assert!(clock_inverse(&clock, clock.end() * (1.0 + 1e-9)).is_err());
            assert!(clock_inverse(&clock, -1e-300).is_err());
        }
    }
}

#[test]
fn exact_linear_clocks() {
    for p in paths(10, 2) {
        let id = compute_clock(&p, &f("z")).unwrap();
        for (s, t) in id.sigma.iter().zip(&p.times) {
            assert!((s - t).abs() <= 1e-12);
        }
        let nine = compute_clock(&p, &f("3*z")).unwrap();
        for (s, t) in nine.sigma.iter().zip(&p.times) {
            assert!((s - 9.0 * t).abs() <= 1e-12 * (9.0 * t).max(1e-300));
        }
    }
}

#[test]
fn linear_map_is_scaled_resampled_path() {
    let cc = c(1.5, -2.0);
    let g = f("(1.5-2i)*z");
    let scale = cc.norm_sqr();
    for p in paths(10, 3) {
        let img = map_path(&p, &g, ImageStep::Fixed(7e-4)).unwrap();
        assert_eq!(img.points[0], g.eval(p.points[0]).unwrap());
        assert_eq!(img.terminal_point, g.eval(p.exit_point()).unwrap());
        for (s, w) in img.image_times.iter().zip(&img.points) {
            // B at t = s/|c|², interpolated linearly.
            let t = s / scale;
            let k = p.times.partition_point(|&x| x < t).max(1);
            let (t0, t1) = (p.times[k - 1], p.times[k]);
            let b = p.points[k - 1] + (p.points[k] - p.points[k - 1]) * ((t - t0) / (t1 - t0));
            assert!((w - cc * b).norm() <= 1e-9, "s = {s}");
        }
    }
}

#[test]
fn identity_and_scaling_images() {
    let circle = CircleSpec::new(c(0.0, 0.0), 1.0).unwrap();
    let cfg = SamplerConfig::for_radius(1.0);
    for i in 0..10 {
        let p = sample_path_until_exit(c(0.0, 0.0), circle, &cfg, RngStream::new(4, i)).unwrap();
        let id = map_path(&p, &f("z"), ImageStep::default()).unwrap();
        assert_eq!(id.terminal_point, p.exit_point());
        let two = map_path(&p, &f("2*z"), ImageStep::default()).unwrap();
        assert!((two.terminal_point.norm() - 2.0).abs() < 1e-9);
        assert!((two.terminal_image_time - 4.0 * p.exit_time()).abs() <= 1e-12 * p.exit_time());
    }
}

#[test]
fn degenerate_clock_is_reported() {
    let p = BmPath {
        times: vec![0.0, 1.0],
        points: vec![c(0.0, 0.0), c(0.0, 0.0)],
    };
    assert!(map_path(&p, &f("z^2"), ImageStep::default()).is_err());
}

#[test]
fn crossing_of_image_paths_lies_on_circle() {
    let g = f("z^2+z");
    for p in paths(50, 5) {
        let img = map_path(&p, &g, ImageStep::default()).unwrap();
        let v = img.points[0];
        let m = 0.3;
        if let Some(x) = first_crossing(&img, v, m) {
            assert!(((x.point - v).norm() - m).abs() < 1e-9);
            assert!(x.image_time <= img.terminal_image_time);
            assert!(img.points[..=x.segment].iter().all(|w| (w - v).norm() < m));
        }
    }
}

fn config(src: &str, a: Complex, w_radius: f64, n: u64, seed: u64) -> OmtConfig {
    OmtConfig::new(f(src), a, DomainSpec::new(a, w_radius).unwrap(), n, 8, seed)
}

#[test]
fn image_crossings_match_direct_brownian_motion() {
    for (src, a, seed) in [("z^2", c(1.0, 0.0), 101), ("exp(z)", c(0.0, 0.0), 102), ("z^3-3*z", c(0.0, 0.0), 103)] {
        let cfg = config(src, a, 1.0, 10_000, seed);
        let rep = invariance_check(&cfg, None, DEFAULT_BINS, DEFAULT_ALPHA).unwrap();
        assert_eq!(rep.image_dropped, 0, "{src}");
        assert!(rep.passed, "{src}: {rep:?}");
    }
}

#[test]
fn refinement_leaves_crossing_law_unchanged() {
    let coarse = config("z^2", c(1.0, 0.0), 1.0, 10_000, 201);
    let mut fine = config("z^2", c(1.0, 0.0), 1.0, 10_000, 202);
    let r = 0.5;
    let base = SamplerConfig::for_radius(r);
    fine.sampler = Some(SamplerConfig::with_step(base.step_dt / 2.0, r));
    fine.image_step = ImageStep::Subdivisions(2 * levy_omt::time_change::DEFAULT_IMAGE_SUBDIVISIONS);
    let (setup, a) = crossing_angles(&coarse, None).unwrap();
    assert_eq!(setup.r, r);
    let (_, b) = crossing_angles(&fine, None).unwrap();
    let chi = two_sample_angle_test(&a.image, &b.image, DEFAULT_BINS).unwrap();
    assert!(chi.p_value > DEFAULT_ALPHA, "{chi:?}");
}
