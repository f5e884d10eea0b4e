use aroc_core::aroc::*;
use aroc_core::data::{Dataset, Sample, Schema};
use aroc_core::ddp::{cond_cdf, FitDiagnostics, FitResult, GibbsConfig, PosteriorDraw, PriorSpec};
use aroc_core::randkit::{sample_normal, std_normal_cdf, std_normal_pdf, std_normal_quantile, RngStream};
use aroc_core::splines::{Design, ModelSpec};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn schema() -> Schema {
    Schema::new(["x"]).unwrap()
}

/// A fit whose every draw is the given intercept-only mixture.
fn fixed_fit(weights: &[f64], means: &[f64], sds: &[f64], draws: usize) -> FitResult {
    let train = Sample::new(vec![0.0, 1.0], vec![vec![0.0, 1.0]]).unwrap();
    let design = Design::fit(&ModelSpec::intercept_only(), &schema(), &train).unwrap();
    let draw = PosteriorDraw {
        weights: weights.to_vec(),
        betas: means.iter().map(|m| DVector::from_element(1, *m)).collect(),
        sigma2: sds.iter().map(|s| s * s).collect(),
        m: DVector::zeros(1),
        sinv: DMatrix::identity(1, 1),
        allocations: None,
    };
    FitResult {
        draws: vec![draw; draws],
        design,
        prior: PriorSpec::standard(1, weights.len()),
        config: GibbsConfig::new(2, 1),
        scale: 1.0,
        diagnostics: FitDiagnostics::default(),
    }
}

fn diseased(y: Vec<f64>) -> Sample {
    let n = y.len();
    Sample::new(y, vec![vec![0.0; n]]).unwrap()
}

#[test]
fn placement_at_component_mean_is_half() {
    let fit = fixed_fit(&[1.0], &[2.0], &[0.7], 3);
    let u = placement_values(&fit, &diseased(vec![2.0])).unwrap();
    for s in 0..3 {
        assert!((u.row(s)[0] - 0.5).abs() < 1e-15);
    }
}

#[test]
fn placement_tails() {
    let fit = fixed_fit(&[1.0], &[0.0], &[1.0], 1);
    let u = placement_values(&fit, &diseased(vec![10.0, -10.0])).unwrap();
    assert!(u.row(0)[0] < 1e-20 && u.row(0)[0] >= 0.0);
    assert!(u.row(0)[1] > 1.0 - 1e-15 && u.row(0)[1] <= 1.0);
}

#[test]
fn two_component_placement_matches_quadrature() {
    let (w, m, s) = ([0.3, 0.7], [-1.0, 1.5], [0.5, 1.2]);
    let fit = fixed_fit(&w, &m, &s, 1);
    // oracle: Simpson integral of the mixture density from y to far right
    let density = |y: f64| {
        (0..2)
            .map(|l| w[l] * std_normal_pdf((y - m[l]) / s[l]) / s[l])
            .sum::<f64>()
    };
    let upper_tail = |y: f64| {
        let hi = 20.0;
        let n = 20_000;
        let h = (hi - y) / n as f64;
        let mut acc = density(y) + density(hi);
        for i in 1..n {
            acc += density(y + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    let ys = vec![-2.0, -0.3, 0.4, 1.1, 3.0];
    let u = placement_values(&fit, &diseased(ys.clone())).unwrap();
    for (j, y) in ys.iter().enumerate() {
        assert!((u.row(0)[j] - upper_tail(*y)).abs() < 1e-10, "y = {y}");
    }
}

#[test]
fn thresholds_match_grid_scan() {
    let mut rng = RngStream::new(11, 0);
    for _ in 0..20 {
        let k = rng.random_range(1..5);
        let mut w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        let m: Vec<f64> = (0..k).map(|_| sample_normal(&mut rng, 0.0, 3.0).unwrap()).collect();
        let s: Vec<f64> = (0..k).map(|_| 0.2 + rng.random::<f64>()).collect();
        let fit = fixed_fit(&w, &m, &s, 1);
        let z = fit.design.row(&[0.0]).unwrap();
        for t in [0.05, 0.3, 0.7] {
            let c = threshold_draws(&fit, &[0.0], t).unwrap()[0];
            // scan: first grid point where the survival function drops to t
            let (lo, hi) = (-30.0, 30.0);
            let n = 600_000;
            let step = (hi - lo) / n as f64;
            let scan = (0..=n)
                .map(|i| lo + step * i as f64)
                .find(|&y| 1.0 - cond_cdf(&fit.draws[0], y, &z) <= t)
                .unwrap();
            assert!((c - scan).abs() <= step, "t = {t}: {c} vs {scan}");
        }
    }
}

#[test]
fn single_component_threshold_is_normal_quantile() {
    let fit = fixed_fit(&[1.0], &[1.5], &[0.4], 2);
    for t in [0.01, 0.1, 0.5, 0.9] {
        let c = threshold_draws(&fit, &[0.0], t).unwrap();
        let expect = 1.5 + 0.4 * std_normal_quantile(1.0 - t).unwrap();
        assert!((c[0] - expect).abs() < 1e-9);
    }
    let est = covariate_threshold(&fit, &[0.0], 0.2, 0.95).unwrap();
    assert_eq!(est.lower, est.upper);
}

#[test]
fn thresholds_decrease_in_fpf() {
    let fit = fixed_fit(&[0.4, 0.6], &[0.0, 2.0], &[1.0, 0.3], 1);
    let cs: Vec<f64> = (1..100)
        .map(|i| threshold_draws(&fit, &[0.0], i as f64 / 100.0).unwrap()[0])
        .collect();
    assert!(cs.windows(2).all(|p| p[1] < p[0]));
}

#[test]
fn known_model_recovers_binormal_curve() {
    // nondiseased N(0, 1) known exactly; diseased N(1, 1)
    let fit = fixed_fit(&[1.0], &[0.0], &[1.0], 200);
    let mut rng = RngStream::new(12, 0);
    let y: Vec<f64> = (0..20_000)
        .map(|_| sample_normal(&mut rng, 1.0, 1.0).unwrap())
        .collect();
    let u = placement_values(&fit, &diseased(y)).unwrap();
    let grid = fpf_grid(101);
    let est = bb_aroc(&u, &grid, &BootstrapOptions::default(), &mut rng).unwrap();
    for (k, t) in grid.iter().enumerate() {
        let truth = if *t <= 0.0 || *t >= 1.0 {
            *t
        } else {
            std_normal_cdf(1.0 + std_normal_quantile(*t).unwrap())
        };
        assert!((est.curve.mean[k] - truth).abs() < 0.015, "t = {t}");
    }
    assert!((est.aauc.mean - std_normal_cdf(1.0 / 2f64.sqrt())).abs() < 0.01);
}

#[test]
fn placement_rejects_empty_sample() {
    let fit = fixed_fit(&[1.0], &[0.0], &[1.0], 1);
    let d = Dataset::new(schema(), diseased(vec![0.0]), diseased(vec![0.0])).unwrap();
    assert!(placement_values(&fit, d.diseased()).is_ok());
    let empty = Sample::new(vec![], vec![vec![]]).unwrap();
    assert!(placement_values(&fit, &empty).is_err());
}
