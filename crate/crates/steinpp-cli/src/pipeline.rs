//! The experiment pipelines: bound sweeps, domination studies, the density
//! experiment, the dependence-test size/power study and model validation.
//!
//! Every Monte Carlo stage derives its own seed from the master seed and a
//! stage name, and fans replicates out over one counter stream each, so the
//! produced rows are independent of the execution schedule.

use rayon::prelude::*;

use steinpp::bounds::{
    auto_h_grid, auto_m_grid, evaluate, optimize_parameters, rate_exponent_with_params,
    rational_to_f64, BoundInputs, BoundReport, RateFamilies, TheoremKind,
};
use steinpp::geometry::{window_j, window_j_t, SpaceConfig, StretchSchedule, Window};
use steinpp::lrdtest::{calibrate_critical_value, default_lipschitz_ld, TestConfig};
use steinpp::metrics::{empirical_d2, empirical_dtv, CountSample, PointPattern};
use steinpp::models::{
    expectation_measure, mean_density, sample_with, verify_orderliness, AlphaCheck, BetaCheck,
    ConditionCertificate, MixingKind, ProcessModel,
};
use steinpp::numeric::loglog_slope;
use steinpp::rng::{replicate_stream, stage_seed};

use crate::config::{build_model, ExperimentConfig, ExperimentKind, KernelSection};
use crate::output::{ResultRow, Summary};
use crate::HarnessError;

pub struct ExperimentOutcome {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

pub fn run_experiment(
    config: &ExperimentConfig,
    config_hash: &str,
) -> Result<ExperimentOutcome, HarnessError> {
    config.validate()?;
    let start = std::time::Instant::now();
    let (rows, pass, notes) = match config.kind {
        ExperimentKind::BoundSweep => bound_sweep(config)?,
        ExperimentKind::DominationCounts => domination_counts(config)?,
        ExperimentKind::DominationD2Slope => domination_d2_slope(config)?,
        ExperimentKind::DensityExperiment => density_experiment(config)?,
        ExperimentKind::LrdSizePower => lrd_size_power(config)?,
        ExperimentKind::ValidateModel => validate_model(config)?,
    };
    let summary = Summary {
        experiment: config.kind.label().to_string(),
        config_hash: config_hash.to_string(),
        seed: config.seed,
        rows: rows.len(),
        pass,
        notes,
        wall_time_ms: start.elapsed().as_millis(),
    };
    Ok(ExperimentOutcome { rows, summary })
}

type PipelineResult = Result<(Vec<ResultRow>, Option<bool>, Vec<String>), HarnessError>;

/// Rational approximation with small denominator, for mapping configured
/// float exponents onto the exact rate program.
fn small_rational(x: f64) -> Option<steinpp::bounds::Rational64> {
    for denom in 1..=64i64 {
        let numer = (x * denom as f64).round();
        if (numer / denom as f64 - x).abs() < 1e-9 && numer.abs() < 1_000_000.0 {
            return Some(steinpp::bounds::Rational64::new(numer as i64, denom));
        }
    }
    None
}

/// Power-law families of a certificate, when it has them.
fn rate_families(
    cert: &ConditionCertificate,
    schedule: &StretchSchedule,
) -> Option<RateFamilies> {
    let alpha_r = match cert.alpha_check {
        AlphaCheck::Power { c, r } => {
            if c == 0.0 {
                return None;
            }
            small_rational(r)?
        }
    };
    let beta_decay = match cert.beta_check {
        BetaCheck::PowerU { c, b } | BetaCheck::OnePlusPower { c, b } => {
            if c == 0.0 {
                return None;
            }
            small_rational(b)?
        }
        _ => return None,
    };
    let w_delta = small_rational(schedule.exponent())?;
    Some(RateFamilies { alpha_r, beta_decay, w_delta })
}

/// Parameter grids for one `T`: the configured grids, or the documented auto
/// policy (`m` doubling up to the compressed grid extent, `h` in
/// `{1, sqrt C, T, T^{3/2}}`) sharpened with the exact-rate optimizers when
/// the certificate has power-law families.
fn parameter_grids(
    config: &ExperimentConfig,
    cert: &ConditionCertificate,
    space: &SpaceConfig,
    schedule: &StretchSchedule,
    theorem: TheoremKind,
    t: f64,
) -> (Vec<u64>, Vec<f64>) {
    let mut m_grid = config.grid.m_values.clone().unwrap_or_else(|| auto_m_grid(t, space));
    let mut h_grid = config.grid.h_values.clone().unwrap_or_else(|| auto_h_grid(t));
    if config.grid.m_values.is_none() || config.grid.h_values.is_none() {
        if let Some(fam) = rate_families(cert, schedule) {
            let (_, q, x) = rate_exponent_with_params(
                &fam,
                theorem.required_mixing(),
                space.d1_dims(),
                space.d2_dims(),
            );
            if config.grid.m_values.is_none() {
                m_grid.push(t.powf(rational_to_f64(x)).round() as u64);
            }
            if config.grid.h_values.is_none() {
                h_grid.push(t.powf(rational_to_f64(q)).max(1.0));
            }
        }
    }
    m_grid.sort_unstable();
    m_grid.dedup();
    h_grid.sort_by(f64::total_cmp);
    h_grid.dedup();
    (m_grid, h_grid)
}

/// Optimizes the bound at one `T` and emits an audited row: the row's total
/// is recomputed from its recorded inputs before it is accepted.
fn optimized_bound_row(
    experiment: &str,
    config: &ExperimentConfig,
    cert: &ConditionCertificate,
    theorem: TheoremKind,
    t: f64,
) -> Result<(BoundReport, ResultRow), HarnessError> {
    let space = config.space()?;
    let schedule = config.schedule()?;
    let (m_grid, h_grid) = parameter_grids(config, cert, &space, &schedule, theorem, t);
    let base = BoundInputs {
        space,
        schedule,
        t,
        h: 1.0,
        m: 0,
        certificate: cert.clone(),
        theorem,
        regularity: config.regularity(),
    };
    let (_, _, report) = optimize_parameters(&base, &m_grid, &h_grid)?;

    // Self-audit: recompute from the recorded inputs.
    let mut check = base.clone();
    check.m = report.m;
    check.h = report.h;
    let recomputed = evaluate(&check)?;
    let agree = if report.total.is_finite() {
        (recomputed.total - report.total).abs() <= 1e-12 * report.total.max(1.0)
    } else {
        recomputed.total.is_infinite()
    };
    if !agree {
        return Err(HarnessError::Schema(format!(
            "self-audit failed at T = {t}: {} vs {}",
            report.total, recomputed.total
        )));
    }
    let row = ResultRow::from_bound(experiment, &report, config.seed);
    Ok((report, row))
}

fn bound_sweep(config: &ExperimentConfig) -> PipelineResult {
    let cert = config.certificate()?;
    let theorem = config.theorem()?;
    let mut rows = Vec::new();
    let mut totals = Vec::new();
    for &t in &config.grid.t_values {
        let (report, row) = optimized_bound_row("bound_sweep", config, &cert, theorem, t)?;
        totals.push(report.total);
        rows.push(row);
    }
    let mut notes = Vec::new();
    let mut pass = None;
    if totals.len() >= 2 && totals.iter().all(|v| v.is_finite() && *v > 0.0) {
        let slope = loglog_slope(&config.grid.t_values, &totals);
        notes.push(format!("fitted log-log slope {slope:.4}"));
        if let Some(fam) = rate_families(&cert, &config.schedule()?) {
            let space = config.space()?;
            let (z, _, _) = rate_exponent_with_params(
                &fam,
                theorem.required_mixing(),
                space.d1_dims(),
                space.d2_dims(),
            );
            let expected = rational_to_f64(z);
            notes.push(format!("exact rate exponent {expected:.4}"));
            pass = Some((slope - expected).abs() <= 0.1);
        }
    }
    Ok((rows, pass, notes))
}

/// Normal-approximation standard error of the plug-in total variation
/// estimate between two empirical pmfs (delta method on the signed sums).
fn dtv_standard_error(a: &CountSample, b: &CountSample) -> f64 {
    use std::collections::BTreeMap;
    let pmf = |s: &CountSample| -> BTreeMap<u64, f64> {
        let mut m = BTreeMap::new();
        let w = 1.0 / s.counts().len() as f64;
        for &c in s.counts() {
            *m.entry(c).or_insert(0.0) += w;
        }
        m
    };
    let pa = pmf(a);
    let pb = pmf(b);
    let keys: std::collections::BTreeSet<u64> =
        pa.keys().chain(pb.keys()).copied().collect();
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    for k in keys {
        let p = pa.get(&k).copied().unwrap_or(0.0);
        let q = pb.get(&k).copied().unwrap_or(0.0);
        let s = if p >= q { 1.0 } else { -1.0 };
        sum_a += s * p;
        sum_b += s * q;
    }
    let na = a.counts().len() as f64;
    let nb = b.counts().len() as f64;
    0.5 * ((1.0 - sum_a * sum_a) / na + (1.0 - sum_b * sum_b) / nb).sqrt()
}

fn sample_counts(
    model: &ProcessModel,
    space: &SpaceConfig,
    window: &Window,
    n: u64,
    seed: u64,
) -> Result<CountSample, HarnessError> {
    let counts: Result<Vec<u64>, _> = (0..n)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_stream(seed, rep);
            sample_with(model, space, window, &mut rng).map(|p| p.len() as u64)
        })
        .collect();
    Ok(CountSample::new(counts?))
}

fn poisson_count_sample(nu: f64, n: u64, seed: u64) -> CountSample {
    let counts: Vec<u64> = (0..n)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_stream(seed, rep);
            steinpp::models::poisson_draw(&mut rng, nu)
        })
        .collect();
    CountSample::new(counts)
}

fn domination_counts(config: &ExperimentConfig) -> PipelineResult {
    let model = config.model()?;
    let space = config.space()?;
    let schedule = config.schedule()?;
    let cert = config.certificate()?;
    let theorem = if config.bound.is_some() { config.theorem()? } else { TheoremKind::CountTv };

    let mut rows = Vec::new();
    let mut all_pass = true;
    let mut notes = Vec::new();
    for &t in &config.grid.t_values {
        let (report, mut row) = optimized_bound_row("domination_counts", config, &cert, theorem, t)?;
        let window = window_j_t(&space, schedule.eval(t), t);
        let model_counts = sample_counts(
            &model,
            &space,
            &window,
            config.replicates,
            stage_seed(config.seed, &format!("model-counts-{t}")),
        )?;
        let nu = expectation_measure(&model, &space, &window)?;
        let poisson_counts = poisson_count_sample(
            nu,
            config.replicates,
            stage_seed(config.seed, &format!("poisson-counts-{t}")),
        );
        let dtv = empirical_dtv(&model_counts, &poisson_counts);
        let se = dtv_standard_error(&model_counts, &poisson_counts);
        row.empirical = Some(dtv);
        row.mc_se = Some(se);
        let dominated = report.total >= dtv - 3.0 * se;
        if !dominated {
            all_pass = false;
        }
        notes.push(format!(
            "T={t}: bound {:.4e} vs empirical count tv {:.4e} (se {:.1e}) -> {}",
            report.total,
            dtv,
            se,
            if dominated { "dominated" } else { "VIOLATED" }
        ));
        rows.push(row);
    }
    Ok((rows, Some(all_pass), notes))
}

fn transformed_cloud(
    model: &ProcessModel,
    space: &SpaceConfig,
    window: &Window,
    w_of_t: f64,
    t: f64,
    n: u64,
    seed: u64,
) -> Result<Vec<PointPattern>, HarnessError> {
    let j = window_j(space);
    let cloud: Result<Vec<PointPattern>, HarnessError> = (0..n)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_stream(seed, rep);
            let pat = sample_with(model, space, window, &mut rng)?;
            let image = pat.transformed(space, w_of_t, t)?;
            Ok(image.restricted(&j))
        })
        .collect();
    cloud
}

fn domination_d2_slope(config: &ExperimentConfig) -> PipelineResult {
    let model = config.model()?;
    let space = config.space()?;
    let schedule = config.schedule()?;
    let cert = config.certificate()?;
    let theorem = if config.bound.is_some() {
        config.theorem()?
    } else if cert.mixing_kind == MixingKind::Phi {
        TheoremKind::PhiMixing
    } else {
        TheoremKind::PrincipalSharp
    };
    let ell = mean_density(&model, &space).ok_or_else(|| {
        HarnessError::Schema("this experiment needs a constant-density model".into())
    })?;
    let reference = ProcessModel::HomogeneousPoisson { ell };

    let mut rows = Vec::new();
    let mut empirical = Vec::new();
    let mut clamped_totals = Vec::new();
    for &t in &config.grid.t_values {
        let (report, mut row) =
            optimized_bound_row("domination_d2_slope", config, &cert, theorem, t)?;
        let w = schedule.eval(t);
        let window = window_j_t(&space, w, t);
        let a = transformed_cloud(
            &model,
            &space,
            &window,
            w,
            t,
            config.replicates,
            stage_seed(config.seed, &format!("d2-model-{t}")),
        )?;
        let b = transformed_cloud(
            &reference,
            &space,
            &window,
            w,
            t,
            config.replicates,
            stage_seed(config.seed, &format!("d2-poisson-{t}")),
        )?;
        let d2 = empirical_d2(&a, &b)?;
        row.empirical = Some(d2);
        empirical.push(d2);
        clamped_totals.push(report.total_clamped);
        rows.push(row);
    }

    let mut notes = Vec::new();
    let decreasing = empirical.windows(2).all(|w| w[1] < w[0]);
    notes.push(format!("empirical process distances {empirical:?}"));
    let mut pass = Some(decreasing);
    if empirical.len() >= 2 && empirical.iter().all(|v| *v > 0.0) {
        let emp_slope = loglog_slope(&config.grid.t_values, &empirical);
        let bound_slope = loglog_slope(&config.grid.t_values, &clamped_totals);
        notes.push(format!(
            "empirical slope {emp_slope:.3}, clamped bound slope {bound_slope:.3}"
        ));
        pass = Some(decreasing && emp_slope <= bound_slope + 0.15);
    }
    Ok((rows, pass, notes))
}

fn density_experiment(config: &ExperimentConfig) -> PipelineResult {
    use steinpp::density::{
        estimator_consistency_bound, estimator_gap_bound, mc_density_experiment, KernelSpec,
    };
    let model = config.model()?;
    let space = config.space()?;
    let schedule = config.schedule()?;
    let section = config.density_exp.as_ref().expect("validated");
    let kernel = match section.kernel {
        KernelSection::Uniform => KernelSpec::uniform(space.d1_dims()),
        KernelSection::Triangular => KernelSpec::triangular(space.d1_dims()),
    };
    kernel.validate(stage_seed(config.seed, "kernel-validate"))?;
    let cert = config.certificate()?;
    let density = match &model {
        ProcessModel::HomogeneousPoisson { ell } => {
            steinpp::models::DensitySpec::constant(*ell)
        }
        ProcessModel::InhomogeneousPoisson { density } => density.clone(),
        _ => return Err(HarnessError::Schema("density experiment needs a Poisson model".into())),
    };

    let mut rows = Vec::new();
    let mut all_pass = true;
    let mut notes = Vec::new();
    for &t in &config.grid.t_values {
        let w = schedule.eval(t);
        let report = mc_density_experiment(
            &model,
            &space,
            &kernel,
            t,
            w,
            config.replicates,
            stage_seed(config.seed, &format!("density-{t}")),
        )?;
        let (d2_report, _) =
            optimized_bound_row("density_experiment", config, &cert, TheoremKind::PrincipalSharp, t)?;
        let window = window_j_t(&space, w, t);
        let nu = expectation_measure(&model, &space, &window)?;
        let big_m = if section.big_m == 0 {
            (3.0 * nu).ceil().max(1.0) as u64
        } else {
            section.big_m
        };
        // Per-window density supremum: the sampling bounds hold with the
        // supremum over the current window, which is sharper than the
        // uniform certificate constant.
        let s_half = (1.0 / w).powf(1.0 / space.d1_dims() as f64);
        let kappa_t = density.sup_on(s_half, space.d1_dims());
        let gap = estimator_gap_bound(
            d2_report.total_clamped,
            &kernel,
            big_m,
            kappa_t,
            nu,
            &space,
            t,
            w,
        )?;
        let bound =
            estimator_consistency_bound(gap.total, &kernel, kappa_t, &density, &space, t, w)?;

        let sd_ok = report.sd <= bound.sd_term * 1.05;
        let bias = (report.mean - report.true_value).abs();
        let bias_ok = bias <= bound.bias_term * 1.05 + 3.0 * report.se_mean;
        if !(sd_ok && bias_ok) {
            all_pass = false;
        }
        notes.push(format!(
            "T={t} w={w}: sd {:.4e} <= 1.05 * {:.4e}: {sd_ok}; |bias| {:.4e} <= 1.05 * {:.4e} + 3se: {bias_ok}; dbw to truth {:.4e} (bound {:.4e})",
            report.sd, bound.sd_term, bias, bound.bias_term, report.dbw_to_truth, bound.total
        ));
        let mut row = ResultRow::plain("density_experiment", t, "density-consistency", config.seed);
        row.h = w;
        row.m = big_m;
        row.total = bound.total;
        row.total_clamped = bound.total.min(1.0);
        row.empirical = Some(report.dbw_to_truth);
        row.mc_se = Some(report.se_mean);
        rows.push(row);
    }
    Ok((rows, Some(all_pass), notes))
}

fn lrd_size_power(config: &ExperimentConfig) -> PipelineResult {
    let space = config.space()?;
    let schedule = config.schedule()?;
    let lrd = config.lrd.as_ref().expect("validated");
    let image_dim = space.total_dims();
    let lipschitz = lrd.lipschitz_ld.unwrap_or_else(|| default_lipschitz_ld(image_dim));

    let mut rows = Vec::new();
    let mut all_pass = true;
    let mut notes = Vec::new();
    for &t in &config.grid.t_values {
        let w = schedule.eval(t);
        let test_config = TestConfig {
            alpha: lrd.alpha,
            smooth_slope: lrd.slope,
            lipschitz_ld: lipschitz,
            epsilon: lrd.epsilon,
            null_ell: lrd.null_ell,
            space,
            t,
            w_of_t: w,
            replicates: config.replicates,
            seed: stage_seed(config.seed, &format!("lrd-calibrate-{t}")),
        };
        let calibrated = calibrate_critical_value(&test_config)?;

        let window = window_j_t(&space, w, t);
        let null_model = ProcessModel::HomogeneousPoisson { ell: lrd.null_ell };
        let reject_rate = |model: &ProcessModel, stage: &str| -> Result<f64, HarnessError> {
            let rejects: Result<Vec<bool>, HarnessError> = (0..lrd.eval_replicates)
                .into_par_iter()
                .map(|rep| {
                    let mut rng =
                        replicate_stream(stage_seed(config.seed, stage), rep);
                    let pat = sample_with(model, &space, &window, &mut rng)?;
                    Ok(calibrated.run(&pat)?.reject)
                })
                .collect();
            let rejects = rejects?;
            Ok(rejects.iter().filter(|r| **r).count() as f64 / rejects.len() as f64)
        };
        let size = reject_rate(&null_model, &format!("lrd-null-eval-{t}"))?;
        let size_limit = lrd.alpha
            + 3.0 * (lrd.alpha * (1.0 - lrd.alpha) / lrd.eval_replicates as f64).sqrt();
        let size_ok = size <= size_limit;

        let mut row = ResultRow::plain("lrd_size_power", t, "lrd-size", config.seed);
        row.total = calibrated.t_alpha;
        row.empirical = Some(size);
        row.mc_se =
            Some((lrd.alpha * (1.0 - lrd.alpha) / lrd.eval_replicates as f64).sqrt());
        rows.push(row);

        let mut power_note = String::new();
        let mut power_ok = true;
        if let Some(alt_section) = &lrd.alternative {
            let alt = build_model(alt_section);
            alt.validate(&space).map_err(|e| HarnessError::Schema(format!("lrd.alternative: {e}")))?;
            let power = reject_rate(&alt, &format!("lrd-alt-eval-{t}"))?;
            power_ok = power >= size + lrd.power_margin;
            let mut row = ResultRow::plain("lrd_size_power", t, "lrd-power", config.seed);
            row.total = calibrated.t_alpha;
            row.empirical = Some(power);
            rows.push(row);
            power_note = format!(", power {power:.4} (margin {:.2})", lrd.power_margin);
        }
        if !(size_ok && power_ok) {
            all_pass = false;
        }
        notes.push(format!(
            "T={t}: critical value {:.5}, size {size:.4} (limit {size_limit:.4}){power_note}",
            calibrated.t_alpha
        ));
    }
    Ok((rows, Some(all_pass), notes))
}

fn validate_model(config: &ExperimentConfig) -> PipelineResult {
    let model = config.model()?;
    let space = config.space()?;
    let schedule = config.schedule()?;
    let cert = config.certificate()?;

    let mut rows = Vec::new();
    let mut all_pass = true;
    let mut notes = Vec::new();
    for &t in &config.grid.t_values {
        let w = schedule.eval(t);
        let window = window_j_t(&space, w, t);
        // Nested sub-rectangles of the window, from thin slivers to the
        // whole window, all anchored at its centre.
        let mut rects = Vec::new();
        for frac in [0.05, 0.2, 0.5, 1.0] {
            let lo: Vec<f64> = window.lo.iter().map(|x| x * frac).collect();
            let hi: Vec<f64> = window.hi.iter().map(|x| x * frac).collect();
            rects.push(Window::new(lo, hi));
        }
        let report = verify_orderliness(
            &model,
            &space,
            &cert,
            &rects,
            config.replicates,
            stage_seed(config.seed, &format!("orderliness-{t}")),
        )?;
        if !report.all_pass() {
            all_pass = false;
        }
        for (i, orow) in report.rows.iter().enumerate() {
            let mut row = ResultRow::plain("validate_model", t, "orderliness", config.seed);
            row.m = i as u64;
            row.total = orow.ceiling;
            row.total_clamped = orow.ceiling.min(1.0);
            row.empirical = Some(orow.estimate);
            row.mc_se = Some(orow.standard_error);
            rows.push(row);
        }
        notes.push(format!(
            "T={t}: {} rectangles, worst ratio {:.3}",
            report.rows.len(),
            report
                .rows
                .iter()
                .map(|r| if r.ratio.is_finite() { r.ratio } else { 0.0 })
                .fold(0.0f64, f64::max)
        ));
    }
    // Certificate sanity recorded alongside: decay is monotone and the
    // orderliness function vanishes at zero by construction.
    let beta_monotone = (0..50).all(|i| {
        let u0 = i as f64 * 0.3;
        cert.beta(u0) + 1e-12 >= cert.beta(u0 + 0.3)
    });
    notes.push(format!(
        "certificate: alpha(0) = {}, beta monotone on [0, 15]: {}, tail strong enough: {}",
        cert.alpha(0.0),
        beta_monotone,
        cert.beta_check.tail_strong_enough(space.d2_dims())
    ));
    if !beta_monotone || cert.alpha(0.0) != 0.0 {
        all_pass = false;
    }
    Ok((rows, Some(all_pass), notes))
}

/// Simulates `replicates` patterns per `T` and writes them as pattern files.
pub fn simulate_patterns(
    config: &ExperimentConfig,
    dir: &std::path::Path,
) -> Result<usize, HarnessError> {
    let model = config.model()?;
    let space = config.space()?;
    let schedule = config.schedule()?;
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = 0;
    for &t in &config.grid.t_values {
        let w = schedule.eval(t);
        let window = window_j_t(&space, w, t);
        let header = crate::patterns::PatternHeader {
            d1: space.d1_dims(),
            d2: space.d2_dims(),
            t,
            w,
        };
        for rep in 0..config.replicates {
            let mut rng =
                replicate_stream(stage_seed(config.seed, &format!("simulate-{t}")), rep);
            let pattern = sample_with(&model, &space, &window, &mut rng)?;
            let path = dir.join(format!("pattern_t{t}_r{rep:05}.txt"));
            crate::patterns::save_pattern(&path, &header, &pattern)?;
            written += 1;
        }
    }
    Ok(written)
}

/// Single-shot bound evaluation for the `bound` subcommand.
pub fn single_bound(
    config: &ExperimentConfig,
    theorem_override: Option<&str>,
) -> Result<BoundReport, HarnessError> {
    let cert = config.certificate()?;
    let theorem = match theorem_override {
        Some(label) => TheoremKind::from_label(label)
            .ok_or_else(|| HarnessError::Schema(format!("unknown theorem label '{label}'")))?,
        None => config.theorem()?,
    };
    let t = *config.grid.t_values.first().expect("validated nonempty");
    let (report, _) = optimized_bound_row("bound", config, &cert, theorem, t)?;
    if !report.total.is_finite() {
        return Err(HarnessError::InfeasibleBound);
    }
    Ok(report)
}
