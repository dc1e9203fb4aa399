//! Nearest-neighbour test for long range dependence.
//!
//! The statistic is the average capped nearest-neighbour distance of the
//! transformed pattern; aggregation shortens it, so the test rejects below a
//! critical value. Calibration smooths the rejection indicator with a
//! Lipschitz ramp and solves for the critical value against simulated
//! Poisson nulls, budgeting for the process-approximation error through the
//! transport bound `epsilon`.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{window_j, window_j_t, SpaceConfig};
use crate::metrics::PointPattern;
use crate::models::{sample_with, ModelError, ProcessModel};
use crate::rng::replicate_stream;

#[derive(Debug, Error, PartialEq)]
pub enum LrdError {
    #[error("invalid test configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("infeasible: alpha - slope * L_D * epsilon = {0} is not positive")]
    Infeasible(f64),
    #[error("calibration target {0} lies outside the reachable range")]
    TargetOutOfRange(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Test parameters. `epsilon` is the transport-bound budget for the
/// distance between the observed process and the Poisson null.
#[derive(Debug, Clone)]
pub struct TestConfig {
    pub alpha: f64,
    /// Slope of the Lipschitz ramp replacing the rejection indicator.
    pub smooth_slope: f64,
    /// Lipschitz constant of the statistic with respect to the matching
    /// distance; see [`default_lipschitz_ld`].
    pub lipschitz_ld: f64,
    /// Process-approximation budget (a transport bound total, or 0 to test
    /// directly against the simulated null).
    pub epsilon: f64,
    /// Null intensity.
    pub null_ell: f64,
    pub space: SpaceConfig,
    pub t: f64,
    pub w_of_t: f64,
    pub replicates: u64,
    pub seed: u64,
}

impl TestConfig {
    fn validate(&self) -> Result<(), LrdError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(LrdError::InvalidConfig("alpha must lie in (0, 1)"));
        }
        if !(self.smooth_slope > 0.0) {
            return Err(LrdError::InvalidConfig("smoothing slope must be positive"));
        }
        if !(self.lipschitz_ld > 0.0) {
            return Err(LrdError::InvalidConfig("Lipschitz constant must be positive"));
        }
        if self.epsilon < 0.0 {
            return Err(LrdError::InvalidConfig("epsilon must be nonnegative"));
        }
        if self.replicates < 2 {
            return Err(LrdError::InvalidConfig("need at least two calibration replicates"));
        }
        Ok(())
    }
}

/// Average nearest-neighbour distance under the capped metric; 1 for empty
/// and singleton patterns (no clustering evidence, and any constant in
/// [0, 1] preserves the Lipschitz property across cardinalities).
pub fn nn_statistic(pattern: &PointPattern) -> f64 {
    let pts = pattern.points();
    let n = pts.len();
    if n < 2 {
        return 1.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        let mut nearest = f64::INFINITY;
        for j in 0..n {
            if i == j {
                continue;
            }
            let d: f64 = pts[i]
                .iter()
                .zip(&pts[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            nearest = nearest.min(d);
        }
        total += nearest.min(1.0);
    }
    total / n as f64
}

/// Lipschitz ramp approximating the indicator of `(-inf, t]`: 1 below `t`,
/// 0 above `t + 1/slope`, linear in between.
pub fn smooth_indicator(t: f64, slope: f64, x: f64) -> f64 {
    debug_assert!(slope > 0.0);
    if x <= t {
        1.0
    } else if x >= t + 1.0 / slope {
        0.0
    } else {
        1.0 - slope * (x - t)
    }
}

/// Default Lipschitz constant for the statistic in image dimension `d`:
/// moving each point by `c_i` changes its nearest-neighbour distance by at
/// most `c_i + c_{j*}`, and a point serves as nearest neighbour of at most
/// the kissing number of points, so `1 + kissing(d)` works.
pub fn default_lipschitz_ld(d: usize) -> f64 {
    const KISSING: [u64; 8] = [2, 6, 12, 24, 40, 72, 126, 240];
    assert!((1..=KISSING.len()).contains(&d), "dimension out of table range");
    1.0 + KISSING[d - 1] as f64
}

/// Result of one test run.
#[derive(Debug, Clone)]
pub struct TestResult {
    pub statistic: f64,
    pub t_alpha: f64,
    pub reject: bool,
    /// Empirical bound on `alpha - P[reject]`, the test's size deficit.
    pub size_deficit_bound: f64,
}

/// A calibrated test: the critical value plus the null statistics it was
/// solved against.
#[derive(Debug, Clone)]
pub struct CalibratedTest {
    pub config: TestConfig,
    pub t_alpha: f64,
    null_stats: Vec<f64>,
}

impl CalibratedTest {
    pub fn null_stats(&self) -> &[f64] {
        &self.null_stats
    }

    /// Mean of the smoothed indicator over the calibration nulls.
    pub fn smoothed_mean(&self, t: f64) -> f64 {
        let slope = self.config.smooth_slope;
        self.null_stats.iter().map(|&u| smooth_indicator(t, slope, u)).sum::<f64>()
            / self.null_stats.len() as f64
    }

    /// The test statistic of an observed pattern given in pre-image
    /// coordinates: restrict to the window, transform, take the average
    /// nearest-neighbour distance.
    pub fn transformed_statistic(&self, observed: &PointPattern) -> Result<f64, LrdError> {
        Ok(transformed_nn(&self.config, observed))
    }

    /// Runs the calibrated one-sided test (reject for small statistics,
    /// the aggregation direction).
    pub fn run(&self, observed: &PointPattern) -> Result<TestResult, LrdError> {
        let statistic = transformed_nn(&self.config, observed);
        let cfg = &self.config;
        let deficit = self.smoothed_mean(self.t_alpha)
            - self.smoothed_mean(self.t_alpha - 1.0 / cfg.smooth_slope)
            + 2.0 * cfg.smooth_slope * cfg.lipschitz_ld * cfg.epsilon;
        Ok(TestResult {
            statistic,
            t_alpha: self.t_alpha,
            reject: statistic < self.t_alpha,
            size_deficit_bound: deficit,
        })
    }
}

fn transformed_nn(cfg: &TestConfig, observed: &PointPattern) -> f64 {
    let window = window_j_t(&cfg.space, cfg.w_of_t, cfg.t);
    let restricted = observed.restricted(&window);
    let image = restricted
        .transformed(&cfg.space, cfg.w_of_t, cfg.t)
        .expect("restricted pattern has finite coordinates");
    let j = window_j(&cfg.space);
    nn_statistic(&image.restricted(&j))
}

/// Simulates Poisson nulls, then solves the monotone calibration equation
/// `mean f_{t}(U) = alpha - slope * L_D * epsilon` for the critical value by
/// bisection. The same null sample is used across the whole bisection, so
/// the solved equation is deterministic.
pub fn calibrate_critical_value(config: &TestConfig) -> Result<CalibratedTest, LrdError> {
    config.validate()?;
    let target = config.alpha - config.smooth_slope * config.lipschitz_ld * config.epsilon;
    if target <= 0.0 {
        return Err(LrdError::Infeasible(target));
    }

    let model = ProcessModel::HomogeneousPoisson { ell: config.null_ell };
    let window = window_j_t(&config.space, config.w_of_t, config.t);
    let space = config.space;
    let null_stats: Vec<f64> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_stream(config.seed, rep);
            let pat = sample_with(&model, &space, &window, &mut rng).expect("valid model");
            let image = pat
                .transformed(&space, config.w_of_t, config.t)
                .expect("finite coordinates");
            nn_statistic(&image.restricted(&window_j(&space)))
        })
        .collect();

    let slope = config.smooth_slope;
    let mean_at = |t: f64| -> f64 {
        null_stats.iter().map(|&u| smooth_indicator(t, slope, u)).sum::<f64>()
            / null_stats.len() as f64
    };
    let min_u = null_stats.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_u = null_stats.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = min_u - 1.0 / slope - 1e-9;
    let mut hi = max_u + 1e-9;
    if target >= mean_at(hi) {
        return Err(LrdError::TargetOutOfRange(target));
    }
    // mean_at is nondecreasing and continuous; bisect to 1e-9.
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_alpha = 0.5 * (lo + hi);
    Ok(CalibratedTest { config: config.clone(), t_alpha, null_stats })
}
