//! Falsification search for the statistic's Lipschitz constant, a small
//! size/power study for the dependence test, and a Campbell cross-check for
//! the density estimator's sampling bounds.

use rand::Rng;
use steinpp::density::{estimator_consistency_bound, mc_density_experiment, KernelSpec};
use steinpp::geometry::{window_j_t, SpaceConfig};
use steinpp::lrdtest::{calibrate_critical_value, default_lipschitz_ld, nn_statistic, TestConfig};
use steinpp::metrics::{d1, PointPattern};
use steinpp::models::{sample_with, ClusterCountDist, DensitySpec, ProcessModel};
use steinpp::rng::{replicate_stream, stream};

#[test]
fn nn_statistic_lipschitz_falsification_search() {
    // |U(a) - U(b)| <= L_D d1(a, b) for equal cardinalities with the default
    // constant (1 + kissing number). A violation would be a counterexample
    // to the default constant, so it fails loudly with the witness printed.
    let mut rng = stream(555);
    let l_d = default_lipschitz_ld(2);
    let mut worst = 0.0f64;
    for trial in 0..100_000 {
        let n = rng.gen_range(2..=20usize);
        let near = rng.gen_bool(0.5);
        let a: Vec<Vec<f64>> =
            (0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let b: Vec<Vec<f64>> = if near {
            // Perturbations of a, where the bound is tightest.
            a.iter()
                .map(|p| {
                    vec![
                        p[0] + rng.gen_range(-0.1..0.1),
                        p[1] + rng.gen_range(-0.1..0.1),
                    ]
                })
                .collect()
        } else {
            (0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect()
        };
        let pa = PointPattern::new(a).unwrap();
        let pb = PointPattern::new(b).unwrap();
        let du = (nn_statistic(&pa) - nn_statistic(&pb)).abs();
        let dd = d1(&pa, &pb).unwrap();
        if dd > 0.0 {
            worst = worst.max(du / dd);
        }
        assert!(
            du <= l_d * dd + 1e-9,
            "trial {trial}: counterexample with ratio {} (patterns {:?} / {:?})",
            du / dd,
            pa,
            pb
        );
    }
    println!("largest observed Lipschitz ratio: {worst:.3} (constant {l_d})");
}

#[test]
fn test_size_and_power_at_small_scale() {
    let space = SpaceConfig::lebesgue(1, 1).unwrap();
    let t = 64.0;
    let cfg = TestConfig {
        alpha: 0.05,
        smooth_slope: 50.0,
        lipschitz_ld: default_lipschitz_ld(2),
        epsilon: 0.0,
        null_ell: 3.0,
        space,
        t,
        w_of_t: t,
        replicates: 600,
        seed: 808,
    };
    let cal = calibrate_critical_value(&cfg).unwrap();

    let window = window_j_t(&space, t, t);
    let null = ProcessModel::HomogeneousPoisson { ell: 3.0 };
    let alt = ProcessModel::ClusterBounded {
        parent_rate: 0.6,
        count_dist: ClusterCountDist::Constant { n: 5 },
        radius: 0.002,
    };
    let eval_n = 500u64;
    let mut null_rejects = 0;
    let mut alt_rejects = 0;
    for rep in 0..eval_n {
        let mut rng = replicate_stream(809, rep);
        let pat = sample_with(&null, &space, &window, &mut rng).unwrap();
        if cal.run(&pat).unwrap().reject {
            null_rejects += 1;
        }
        let mut rng = replicate_stream(810, rep);
        let pat = sample_with(&alt, &space, &window, &mut rng).unwrap();
        if cal.run(&pat).unwrap().reject {
            alt_rejects += 1;
        }
    }
    let size = null_rejects as f64 / eval_n as f64;
    let power = alt_rejects as f64 / eval_n as f64;
    println!("size {size:.3}, power {power:.3}");
    assert!(size <= 0.05 + 3.0 * (0.05f64 * 0.95 / eval_n as f64).sqrt());
    assert!(power > size + 0.1, "clustered alternative must reject more often");
}

#[test]
fn steep_ramp_makes_the_null_rate_approach_alpha() {
    // With a very steep ramp and no approximation budget the calibrated
    // threshold is essentially the alpha-quantile of the null statistic, so
    // fresh nulls reject at rate alpha up to Monte Carlo noise.
    let space = SpaceConfig::lebesgue(1, 1).unwrap();
    let t = 32.0;
    let cfg = TestConfig {
        alpha: 0.2,
        smooth_slope: 2000.0,
        lipschitz_ld: default_lipschitz_ld(2),
        epsilon: 0.0,
        null_ell: 3.0,
        space,
        t,
        w_of_t: t,
        replicates: 1500,
        seed: 321,
    };
    let cal = calibrate_critical_value(&cfg).unwrap();
    let window = window_j_t(&space, t, t);
    let null = ProcessModel::HomogeneousPoisson { ell: 3.0 };
    let eval_n = 1500u64;
    let mut rejects = 0;
    for rep in 0..eval_n {
        let mut rng = replicate_stream(322, rep);
        let pat = sample_with(&null, &space, &window, &mut rng).unwrap();
        if cal.run(&pat).unwrap().reject {
            rejects += 1;
        }
    }
    let rate = rejects as f64 / eval_n as f64;
    let tol = 4.0 * (0.2f64 * 0.8 / eval_n as f64).sqrt();
    assert!((rate - 0.2).abs() <= tol, "null rate {rate} vs alpha 0.2 (tol {tol})");
}

#[test]
fn density_estimator_sampling_moments_respect_the_bounds() {
    let space = SpaceConfig::lebesgue(1, 1).unwrap();
    let density = DensitySpec::separable_quadratic(1.0, 0.5);
    let model = ProcessModel::InhomogeneousPoisson { density: density.clone() };
    let kernel = KernelSpec::uniform(1);
    let (t, w) = (1024.0, 32.0);
    let rep = mc_density_experiment(&model, &space, &kernel, t, w, 2000, 99).unwrap();

    let kappa = 1.0 + 0.5 * (1.0f64 / w).powi(2);
    let bound = estimator_consistency_bound(0.0, &kernel, kappa, &density, &space, t, w).unwrap();
    assert!(
        rep.sd <= bound.sd_term * 1.05,
        "sd {} above certified {}",
        rep.sd,
        bound.sd_term
    );
    // Exact bias case: quadratic density, flat kernel.
    let exact_bias = 0.5 / (3.0 * w * w);
    assert!(
        (rep.mean - rep.true_value - exact_bias).abs() <= 3.0 * rep.se_mean,
        "bias {} vs exact {}",
        rep.mean - rep.true_value,
        exact_bias
    );
    assert!((exact_bias - bound.bias_term).abs() < 1e-15);
    // The distance to the point mass is at most sd + bias up to MC noise.
    assert!(rep.dbw_to_truth <= bound.sd_term + bound.bias_term + 3.0 * rep.se_mean);
}
