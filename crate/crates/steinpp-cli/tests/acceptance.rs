//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities. Run with `cargo test --test acceptance --
//! --nocapture` to see the lines.

use rand::Rng;
use steinpp::bounds::{
    evaluate, rate_exponent, rate_exponent_with_params, rational_to_f64, BoundInputs, Rational64,
    RateFamilies, TheoremKind,
};
use steinpp::density::{estimator_gap_bound, mc_density_experiment, poisson_tail_weight, KernelSpec};
use steinpp::geometry::{window_j_t, SpaceConfig, StretchSchedule};
use steinpp::lrdtest::{calibrate_critical_value, default_lipschitz_ld, TestConfig};
use steinpp::metrics::{
    d0, d1, empirical_d2, empirical_dbw, exact_dtv_pmf, PointPattern, RealSample,
};
use steinpp::models::{
    sample_with, AlphaCheck, BetaCheck, ClusterCountDist, ConditionCertificate, DensitySpec,
    MixingKind, ProcessModel,
};
use steinpp::numeric::{loglog_slope, poisson_pmf_table};
use steinpp::rng::{replicate_stream, stage_seed, stream};
use steinpp::stein::{
    indicator_sum_bound, poisson_tv_bound, stats_by_enumeration, DependencyGraphSpec, JointPmf,
};

use steinpp_cli::config::{
    load_config, BoundSection, CountSection, ExperimentConfig, ExperimentKind, GridSection,
    LrdSection, ModelSection, Mu2Section, ScheduleSection, SpaceSection,
};
use steinpp_cli::output::rows_to_csv;
use steinpp_cli::pipeline::run_experiment;

fn space11() -> SpaceConfig {
    SpaceConfig::lebesgue(1, 1).unwrap()
}

fn base_config(kind: ExperimentKind, seed: u64, replicates: u64, ts: &[f64]) -> ExperimentConfig {
    ExperimentConfig {
        kind,
        seed,
        out_dir: None,
        replicates,
        space: SpaceSection { d1: 1, d2: 1, mu2: Mu2Section::Lebesgue },
        schedule: ScheduleSection { k: 1.0, delta: 1.0 },
        grid: GridSection { t_values: ts.to_vec(), m_values: None, h_values: None },
        bound: None,
        model: None,
        certificate: None,
        density_exp: None,
        lrd: None,
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: exact-oracle metric suite.
// ---------------------------------------------------------------------------

fn permute(idx: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == idx.len() {
        visit(idx);
        return;
    }
    for i in k..idx.len() {
        idx.swap(k, i);
        permute(idx, k + 1, visit);
        idx.swap(k, i);
    }
}

fn random_pattern(rng: &mut steinpp::rng::Stream, n: usize, dim: usize) -> PointPattern {
    PointPattern::new(
        (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-1.2..1.2)).collect()).collect(),
    )
    .unwrap()
}

/// Sliding-window grid DP over f-values; exact on supports drawn from
/// (1/8)Z since every polytope vertex then lies on the grid.
fn dbw_dense_grid(support: &[f64], coeff: &[f64], steps: usize) -> f64 {
    let g = 1.0 / steps as f64;
    let mut v: Vec<f64> = (0..=steps).map(|k| coeff[0] * (-0.5 + k as f64 * g)).collect();
    for i in 1..support.len() {
        let radius = ((support[i] - support[i - 1]) / g).floor() as usize;
        let mut out = vec![0.0; steps + 1];
        let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
        let mut right = 0usize;
        for k in 0..=steps {
            let hi = (k + radius).min(steps);
            while right <= hi {
                while deque.back().is_some_and(|&b| v[b] <= v[right]) {
                    deque.pop_back();
                }
                deque.push_back(right);
                right += 1;
            }
            while deque.front().is_some_and(|&f| f + radius < k) {
                deque.pop_front();
            }
            out[k] = v[*deque.front().unwrap()] + coeff[i] * (-0.5 + k as f64 * g);
        }
        v = out;
    }
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0)
}

#[test]
fn criterion_01_exact_oracle_metric_suite() {
    let mut rng = stream(9001);

    // Matching distance vs permutation enumeration, 500 pairs.
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.gen_range(0..=7usize);
        let dim = rng.gen_range(1..=3usize);
        let a = random_pattern(&mut rng, n, dim);
        let b = random_pattern(&mut rng, n, dim);
        let fast = d1(&a, &b).unwrap();
        let mut best = if n == 0 { 0.0 } else { f64::INFINITY };
        let mut idx: Vec<usize> = (0..n).collect();
        permute(&mut idx, 0, &mut |perm| {
            let total: f64 =
                (0..n).map(|i| d0(&a.points()[i], &b.points()[perm[i]]).unwrap()).sum();
            best = best.min(total / n.max(1) as f64);
        });
        worst = worst.max((fast - best.min(1.0)).abs());
        assert!((fast - best.min(1.0)).abs() <= 1e-12);
    }

    // Transport distance vs enumeration over all 24 bijections at N = 4.
    let mut worst_d2 = 0.0f64;
    for _ in 0..50 {
        let a: Vec<PointPattern> = (0..4)
            .map(|_| {
                let n = rng.gen_range(0..4);
                random_pattern(&mut rng, n, 2)
            })
            .collect();
        let b: Vec<PointPattern> = (0..4)
            .map(|_| {
                let n = rng.gen_range(0..4);
                random_pattern(&mut rng, n, 2)
            })
            .collect();
        let fast = empirical_d2(&a, &b).unwrap();
        let mut best = f64::INFINITY;
        let mut idx: Vec<usize> = (0..4).collect();
        permute(&mut idx, 0, &mut |perm| {
            let total: f64 = (0..4).map(|i| d1(&a[i], &b[perm[i]]).unwrap()).sum();
            best = best.min(total / 4.0);
        });
        worst_d2 = worst_d2.max((fast - best).abs());
        assert!((fast - best).abs() <= 1e-12);
    }

    // Bounded Lipschitz distance vs a dense grid search on supports <= 6.
    let mut worst_dbw = 0.0f64;
    for _ in 0..60 {
        let na = rng.gen_range(1..=3usize);
        let nb = rng.gen_range(1..=3usize);
        let draw = |rng: &mut steinpp::rng::Stream| rng.gen_range(-24i64..=24) as f64 / 8.0;
        let a = RealSample::new((0..na).map(|_| draw(&mut rng)).collect()).unwrap();
        let b = RealSample::new((0..nb).map(|_| draw(&mut rng)).collect()).unwrap();
        let fast = empirical_dbw(&a, &b);

        let mut weighted: Vec<(f64, f64)> = a
            .values()
            .iter()
            .map(|&x| (x, 1.0 / na as f64))
            .chain(b.values().iter().map(|&x| (x, -1.0 / nb as f64)))
            .collect();
        weighted.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut support = Vec::new();
        let mut coeff: Vec<f64> = Vec::new();
        for (x, w) in weighted {
            if support.last() == Some(&x) {
                *coeff.last_mut().unwrap() += w;
            } else {
                support.push(x);
                coeff.push(w);
            }
        }
        if support.len() <= 1 {
            assert_eq!(fast, 0.0);
            continue;
        }
        let dense = dbw_dense_grid(&support, &coeff, 8192);
        worst_dbw = worst_dbw.max((fast - dense).abs());
        assert!((fast - dense).abs() <= 1e-6);
    }
    println!(
        "criterion 01: PASS - d1 vs enumeration max err {worst:.2e}, d2 vs bijections max err {worst_d2:.2e}, dbw vs dense grid max err {worst_dbw:.2e}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: Poisson-vs-Poisson total variation domination.
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_poisson_tv_domination() {
    let grid = [0.25, 0.5, 1.0, 2.0, 5.0, 10.0];
    let mut worst_gap = f64::NEG_INFINITY;
    for &lam in &grid {
        for &mu in &grid {
            let (p, _) = poisson_pmf_table(lam, 1e-13);
            let (q, _) = poisson_pmf_table(mu, 1e-13);
            let exact = exact_dtv_pmf(&p, &q).unwrap();
            let bound = poisson_tv_bound(lam, mu).unwrap();
            let total = exact.value + exact.tail_error;
            assert!(
                total <= bound + 1e-10,
                "lambda={lam} mu={mu}: exact {total} above bound {bound}"
            );
            worst_gap = worst_gap.max(total - bound);
        }
    }
    println!("criterion 02: PASS - 36 parameter pairs dominated, max(exact - bound) = {worst_gap:.3e}");
}

// ---------------------------------------------------------------------------
// Criterion 3: indicator-sum bound domination on enumerable joints.
// ---------------------------------------------------------------------------

fn block_joint(
    rng: &mut steinpp::rng::Stream,
    n: usize,
    max_block: usize,
) -> (JointPmf, Vec<Vec<usize>>) {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut i = 0;
    while i < n {
        let size = rng.gen_range(1..=max_block.min(n - i));
        blocks.push((i..i + size).collect());
        i += size;
    }
    let mut block_pmfs: Vec<Vec<f64>> = Vec::new();
    for b in &blocks {
        let mut w: Vec<f64> = (0..1usize << b.len())
            .map(|mask| rng.gen_range(0.0..1.0f64) * (0.3f64).powi(mask.count_ones() as i32))
            .collect();
        let total: f64 = w.iter().sum();
        for x in &mut w {
            *x /= total;
        }
        block_pmfs.push(w);
    }
    let mut probs = vec![0.0f64; 1 << n];
    for (mask, slot) in probs.iter_mut().enumerate() {
        let mut p = 1.0;
        for (b, pmf) in blocks.iter().zip(&block_pmfs) {
            let mut sub = 0usize;
            for (pos, &idx) in b.iter().enumerate() {
                if mask >> idx & 1 == 1 {
                    sub |= 1 << pos;
                }
            }
            p *= pmf[sub];
        }
        *slot = p;
    }
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    (JointPmf::new(n, probs).unwrap(), blocks)
}

#[test]
fn criterion_03_indicator_sum_domination() {
    let mut rng = stream(9003);
    let mut worst_margin = f64::INFINITY;
    let mut checked = 0;
    while checked < 200 {
        let n = rng.gen_range(8..=14usize);
        let (joint, blocks) = block_joint(&mut rng, n, 3);
        // Random strong-neighbour graphs: correct blocks, enlarged blocks,
        // thinned blocks, or no neighbours at all.
        let mut strong = vec![Vec::new(); n];
        let policy = checked % 4;
        for b in &blocks {
            for &i in b {
                for &j in b {
                    if i != j && !(policy == 2 && rng.gen_bool(0.4)) && policy != 3 {
                        strong[i].push(j);
                    }
                }
            }
        }
        if policy == 1 {
            for (i, s) in strong.iter_mut().enumerate() {
                let extra = rng.gen_range(0..n);
                if extra != i && !s.contains(&extra) {
                    s.push(extra);
                }
            }
        }
        let graph = DependencyGraphSpec::new(n, strong).unwrap();
        let stats = stats_by_enumeration(&joint, &graph).unwrap();
        if stats.lambda() <= 0.0 {
            continue;
        }
        let bound = indicator_sum_bound(&stats).unwrap();
        let exact = joint.count_dtv_to_poisson(stats.lambda());
        assert!(
            exact <= bound + 1e-10,
            "joint {checked} (n={n}, policy {policy}): exact {exact} above bound {bound}"
        );
        worst_margin = worst_margin.min(bound - exact);
        checked += 1;
    }
    println!("criterion 03: PASS - 200 joints dominated, smallest bound margin {worst_margin:.3e}");
}

// ---------------------------------------------------------------------------
// Criterion 4: count total variation domination at desk scale.
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_count_tv_domination_desk_scale() {
    let mut config =
        base_config(ExperimentKind::DominationCounts, 20260810, 10_000, &[16.0, 64.0, 256.0]);
    config.model = Some(ModelSection::ClusterBounded {
        parent_rate: 2.0,
        radius: 0.5,
        count: CountSection::UniformRange { lo: 1, hi: 3 },
    });
    let outcome = run_experiment(&config, "acceptance").unwrap();
    assert_eq!(outcome.summary.pass, Some(true), "notes: {:?}", outcome.summary.notes);
    for row in &outcome.rows {
        let dtv = row.empirical.unwrap();
        let se = row.mc_se.unwrap();
        assert!(row.total >= dtv - 3.0 * se, "T={}: {} vs {}", row.t, row.total, dtv);
    }
    println!(
        "criterion 04: PASS - {}",
        outcome.summary.notes.join(" | ")
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: rate reproduction for the reference families.
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_rate_reproduction() {
    let fam = RateFamilies {
        alpha_r: Rational64::new(1, 1),
        beta_decay: Rational64::new(2, 1),
        w_delta: Rational64::new(1, 1),
    };
    let mut max_dev = 0.0f64;
    for d1_dims in 1..=4usize {
        assert_eq!(
            rate_exponent(&fam, MixingKind::Beta, d1_dims, 1),
            Rational64::new(-1, 3)
        );
        assert_eq!(
            rate_exponent(&fam, MixingKind::Phi, d1_dims, 1),
            Rational64::new(-2, 3)
        );
        assert_eq!(
            rate_exponent(&fam, MixingKind::Rho, d1_dims, 1),
            Rational64::new(-3, d1_dims as i64 + 6)
        );

        for (kind, theorem) in [
            (MixingKind::Rho, TheoremKind::PrincipalSharp),
            (MixingKind::Beta, TheoremKind::BetaMixing),
            (MixingKind::Phi, TheoremKind::PhiMixing),
        ] {
            let (z, q, x) = rate_exponent_with_params(&fam, kind, d1_dims, 1);
            let expected = rational_to_f64(z);
            let cert = ConditionCertificate::new(
                1.0,
                1.0,
                AlphaCheck::power(1.0, 1.0).unwrap(),
                BetaCheck::PowerU { c: 1.0, b: 2.0 },
                kind,
            )
            .unwrap();
            let ts: Vec<f64> = (6..=16).map(|k| 2f64.powi(k)).collect();
            let totals: Vec<f64> = ts
                .iter()
                .map(|&t| {
                    let inputs = BoundInputs {
                        space: SpaceConfig::lebesgue(d1_dims, 1).unwrap(),
                        schedule: StretchSchedule::identity(),
                        t,
                        h: t.powf(rational_to_f64(q)).max(1.0),
                        m: t.powf(rational_to_f64(x)).round() as u64,
                        certificate: cert.clone(),
                        theorem,
                        regularity: None,
                    };
                    evaluate(&inputs).unwrap().total
                })
                .collect();
            let slope = loglog_slope(&ts, &totals);
            let dev = (slope - expected).abs();
            max_dev = max_dev.max(dev);
            assert!(dev <= 0.1, "D1={d1_dims} {kind:?}: slope {slope} vs exponent {expected}");
        }
    }
    println!("criterion 05: PASS - exact exponents reproduced for D1 in 1..=4; max slope deviation {max_dev:.3}");
}

// ---------------------------------------------------------------------------
// Criterion 6: empirical process-distance slope check.
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_process_distance_slope() {
    let mut config =
        base_config(ExperimentKind::DominationD2Slope, 77, 200, &[16.0, 64.0, 256.0]);
    config.model = Some(ModelSection::ClusterBounded {
        parent_rate: 4.0 / 3.0,
        radius: 0.005,
        count: CountSection::Constant { n: 3 },
    });
    let outcome = run_experiment(&config, "acceptance").unwrap();
    assert_eq!(outcome.summary.pass, Some(true), "notes: {:?}", outcome.summary.notes);
    let empirical: Vec<f64> = outcome.rows.iter().map(|r| r.empirical.unwrap()).collect();
    assert!(empirical.windows(2).all(|w| w[1] < w[0]), "must decrease: {empirical:?}");
    println!("criterion 06: PASS - {}", outcome.summary.notes.join(" | "));
}

// ---------------------------------------------------------------------------
// Criterion 7: density estimator sampling bounds.
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_density_bounds() {
    let space = space11();
    let (t, w, b_coef) = (4096.0, 64.0, 0.5);
    let density = DensitySpec::separable_quadratic(1.0, b_coef);
    let model = ProcessModel::InhomogeneousPoisson { density: density.clone() };
    let kernel = KernelSpec::uniform(1);
    let report = mc_density_experiment(&model, &space, &kernel, t, w, 2000, 505).unwrap();

    // kappa = sup p over the current window.
    let kappa = density.sup_on(1.0 / w, 1);
    let sd_limit = 0.5 * kappa.sqrt() * (w / t).sqrt() * 1.05;
    assert!(report.sd <= sd_limit, "sd {} above {}", report.sd, sd_limit);

    // Exact-bias case: zero Taylor remainder for the quadratic density.
    let exact_bias = b_coef / (3.0 * w * w);
    let bias = (report.mean - report.true_value).abs();
    let bias_limit = exact_bias * 1.05 + 3.0 * report.se_mean;
    assert!(bias <= bias_limit, "bias {bias} above {bias_limit}");
    println!(
        "criterion 07: PASS - sd {:.5} <= {:.5}, |bias| {:.2e} <= {:.2e}",
        report.sd, sd_limit, bias, bias_limit
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: estimator-gap bound consistency in the truncation level.
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_estimator_gap_consistency() {
    // The tail weight at kappa = 1, nu = 1, M = 3 is 2 (1/6) e^{-1}. The
    // criterion's printed decimal 0.1226264538 garbles the 8th place of
    // that value (0.12262648039...); the formula is held to 1e-9 and the
    // printed decimal to its actual distance.
    let delta = poisson_tail_weight(1.0, 1.0, 3);
    let formula = 2.0 * (1.0 / 6.0) * (-1.0f64).exp();
    assert!((delta - formula).abs() <= 1e-9);
    assert!((delta - 0.1226264538).abs() <= 3e-8);

    // Tail weight decreasing in M beyond the mean (factorial recursion
    // oracle), and the assembled bound nonincreasing over 20 steps from
    // ceil(3 nu) for a Lipschitz kernel with no transport part.
    let nu = 1.0f64;
    let space = space11();
    let kernel = KernelSpec::triangular(1);
    let start = (3.0 * nu).ceil() as u64;
    let mut prev_delta = f64::INFINITY;
    let mut prev_bound = f64::INFINITY;
    let mut ratio = 0.0f64;
    for m in start..=(start + 20) {
        let d = poisson_tail_weight(1.0, nu, m);
        // Oracle: factorial recursion delta(M+1) = delta(M) * nu / (M+1).
        if m > start {
            let rec = prev_delta * nu / m as f64;
            assert!((d - rec).abs() <= 1e-12 * rec.max(1e-300));
        }
        assert!(d <= prev_delta);
        let bound = estimator_gap_bound(0.0, &kernel, m, 1.0, nu, &space, 64.0, 8.0).unwrap();
        assert!(bound.total <= prev_bound + 1e-15, "M={m}");
        assert!(bound.truncation_adequate);
        if prev_delta.is_finite() {
            ratio = ratio.max(d / prev_delta);
        }
        prev_delta = d;
        prev_bound = bound.total;
    }
    println!(
        "criterion 08: PASS - tail weight {delta:.10} (formula {formula:.10}), bound nonincreasing over 20 truncation steps (max step ratio {ratio:.3})"
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: dependence-test size and power.
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_lrd_size_and_power() {
    let space = space11();
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
        replicates: 2000,
        seed: stage_seed(909, "calibrate"),
    };
    let calibrated = calibrate_critical_value(&cfg).unwrap();

    let window = window_j_t(&space, t, t);
    let null = ProcessModel::HomogeneousPoisson { ell: 3.0 };
    let alt = ProcessModel::ClusterBounded {
        parent_rate: 0.6,
        count_dist: ClusterCountDist::Constant { n: 5 },
        radius: 0.002,
    };
    let eval_n = 2000u64;
    let rate = |model: &ProcessModel, stage: &str| -> f64 {
        let mut rejects = 0u64;
        for rep in 0..eval_n {
            let mut rng = replicate_stream(stage_seed(909, stage), rep);
            let pat = sample_with(model, &space, &window, &mut rng).unwrap();
            if calibrated.run(&pat).unwrap().reject {
                rejects += 1;
            }
        }
        rejects as f64 / eval_n as f64
    };
    let size = rate(&null, "null-eval");
    let power = rate(&alt, "alt-eval");
    let size_limit = 0.05 + 3.0 * (0.05f64 * 0.95 / eval_n as f64).sqrt();
    assert!(size <= size_limit, "size {size} above {size_limit}");
    assert!(power >= size + 0.2, "power {power} vs size {size}");
    println!(
        "criterion 09: PASS - size {size:.4} (limit {size_limit:.4}), power {power:.4} (mean cluster size 5)"
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: byte-identical sweep output.
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_sweep_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("exp.toml");
    std::fs::write(
        &config_path,
        r#"
kind = "domination_counts"
seed = 4242
replicates = 2000

[space]
d1 = 1
d2 = 1
mu2 = "lebesgue"

[schedule]
k = 1.0
delta = 1.0

[grid]
t_values = [16.0, 64.0]

[model.cluster_bounded]
parent_rate = 2.0
radius = 0.5
count = { uniform_range = { lo = 1, hi = 3 } }
"#,
    )
    .unwrap();
    let (config, hash1) = load_config(&config_path).unwrap();
    let (config2, hash2) = load_config(&config_path).unwrap();
    assert_eq!(hash1, hash2);

    let csv1 = rows_to_csv(&run_experiment(&config, &hash1).unwrap().rows);
    let csv2 = rows_to_csv(&run_experiment(&config2, &hash2).unwrap().rows);
    assert_eq!(csv1.as_bytes(), csv2.as_bytes(), "CSV bytes must be identical");
    assert!(csv1.lines().count() >= 3);
    println!(
        "criterion 10: PASS - two runs produced byte-identical CSVs ({} bytes, config hash {})",
        csv1.len(),
        &hash1[..12]
    );
}

// ---------------------------------------------------------------------------
// Cross-check used by several criteria: the acceptance configs above really
// exercise the documented pipelines (kept here so that a regression in the
// config plumbing fails the acceptance target, not only unit tests).
// ---------------------------------------------------------------------------

#[test]
fn acceptance_configs_remain_valid() {
    let mut c4 = base_config(ExperimentKind::DominationCounts, 1, 1000, &[16.0]);
    c4.model = Some(ModelSection::ClusterBounded {
        parent_rate: 2.0,
        radius: 0.5,
        count: CountSection::UniformRange { lo: 1, hi: 3 },
    });
    c4.validate().unwrap();

    let mut c9 = base_config(ExperimentKind::LrdSizePower, 1, 1000, &[64.0]);
    c9.lrd = Some(LrdSection {
        alpha: 0.05,
        slope: 50.0,
        lipschitz_ld: None,
        epsilon: 0.0,
        null_ell: 3.0,
        eval_replicates: 1000,
        power_margin: 0.2,
        alternative: Some(ModelSection::ClusterBounded {
            parent_rate: 0.6,
            radius: 0.002,
            count: CountSection::Constant { n: 5 },
        }),
    });
    c9.validate().unwrap();

    let mut sweep = base_config(ExperimentKind::BoundSweep, 1, 1, &[16.0, 64.0]);
    sweep.bound = Some(BoundSection { theorem: "principal-sharp".into() });
    sweep.model = Some(ModelSection::HomogeneousPoisson { ell: 1.0 });
    sweep.validate().unwrap();
    let outcome = run_experiment(&sweep, "x").unwrap();
    assert_eq!(outcome.rows.len(), 2);
    // The ideal Poisson certificate has zero mixing decay: slope notes exist
    // but no exact exponent is claimed.
    assert!(outcome.summary.pass.is_none());
}
