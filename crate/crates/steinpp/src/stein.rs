//! Local Stein-type Poisson approximation bounds.
//!
//! Indicators `(I_i)` over a finite index set are split, for each `i`, into
//! strong neighbours `Gamma_i^s` and the weak remainder `Gamma_i^w`. With
//! `Z_i` the strong-neighbour sum, the bounds below control
//!
//! * the total variation distance between `L(W)`, `W = sum I_i`, and a
//!   Poisson law ([`indicator_sum_bound`]);
//! * the transport distance between the indicator point process and a
//!   discrete Poisson process with matching intensity
//!   ([`indicator_process_bound`]), which ignores the point locations;
//! * the total variation distance between two Poisson laws
//!   ([`poisson_tv_bound`]).
//!
//! [`stats_by_enumeration`] computes the exact inputs for any explicit joint
//! law on up to 20 indicators; [`stats_by_mc`] estimates them for grid
//! indicator processes by simulation.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{GridSpec, SpaceConfig};
use crate::models::{sample_with, ModelError, ProcessModel};
use crate::rng::replicate_stream;

#[derive(Debug, Error, PartialEq)]
pub enum SteinError {
    #[error("total indicator intensity must be positive")]
    NonpositiveIntensity,
    #[error("Poisson parameters must be positive")]
    NonpositiveParameter,
    #[error("stats vectors must share a common positive length")]
    LengthMismatch,
    #[error("stats entries must be nonnegative and finite")]
    NegativeEntry,
    #[error("joint pmf must have 2^n entries for n <= {max}, got n = {got}")]
    BadJointSize { got: usize, max: usize },
    #[error("joint pmf sums to {0}, expected 1")]
    JointNotNormalized(f64),
    #[error("strong neighbourhood of {0} contains itself or an invalid index")]
    BadGraph(usize),
    #[error("Monte Carlo size must be at least {0}")]
    TooFewReplicates(u64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `max(ln x, 0)`, natural logarithm.
pub fn log_plus(x: f64) -> f64 {
    x.ln().max(0.0)
}

/// Partition of each index's complement into strong and weak neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyGraphSpec {
    index_count: usize,
    strong: Vec<Vec<usize>>,
}

impl DependencyGraphSpec {
    pub fn new(index_count: usize, strong: Vec<Vec<usize>>) -> Result<Self, SteinError> {
        if strong.len() != index_count {
            return Err(SteinError::LengthMismatch);
        }
        for (i, nbrs) in strong.iter().enumerate() {
            if nbrs.iter().any(|&j| j == i || j >= index_count) {
                return Err(SteinError::BadGraph(i));
            }
        }
        Ok(Self { index_count, strong })
    }

    /// Graph with no strong neighbours (independence assumption).
    pub fn independent(index_count: usize) -> Self {
        Self { index_count, strong: vec![Vec::new(); index_count] }
    }

    /// Strong neighbourhood of a grid cell: every cell whose compressed-axis
    /// multi-index is within sup-distance `m`, regardless of the stretched
    /// index.
    pub fn from_grid(grid: &GridSpec, m: u64) -> Self {
        let cells: Vec<(Vec<usize>, Vec<usize>)> = grid.cell_indices().collect();
        let n = cells.len();
        let mut strong = vec![Vec::new(); n];
        for (a, (_, la)) in cells.iter().enumerate() {
            for (b, (_, lb)) in cells.iter().enumerate() {
                if a == b {
                    continue;
                }
                let dist = la
                    .iter()
                    .zip(lb)
                    .map(|(x, y)| (*x as i64 - *y as i64).unsigned_abs())
                    .max()
                    .unwrap_or(0);
                if dist <= m {
                    strong[a].push(b);
                }
            }
        }
        Self { index_count: n, strong }
    }

    pub fn index_count(&self) -> usize {
        self.index_count
    }

    pub fn strong(&self, i: usize) -> &[usize] {
        &self.strong[i]
    }
}

/// Per-index inputs for the local bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorStats {
    /// Success probabilities `p_i = E I_i`.
    pub p: Vec<f64>,
    /// `E Z_i`, the expected strong-neighbour sum.
    pub ez: Vec<f64>,
    /// `E(I_i Z_i)`.
    pub eiz: Vec<f64>,
    /// Weak-dependence defects `e_i`.
    pub e: Vec<f64>,
}

impl IndicatorStats {
    pub fn new(p: Vec<f64>, ez: Vec<f64>, eiz: Vec<f64>, e: Vec<f64>) -> Result<Self, SteinError> {
        let n = p.len();
        if n == 0 || ez.len() != n || eiz.len() != n || e.len() != n {
            return Err(SteinError::LengthMismatch);
        }
        for v in p.iter().chain(&ez).chain(&eiz).chain(&e) {
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(SteinError::NegativeEntry);
            }
        }
        Ok(Self { p, ez, eiz, e })
    }

    /// Total intensity `lambda = sum p_i`.
    pub fn lambda(&self) -> f64 {
        self.p.iter().sum()
    }

    fn main_sum(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.p.len() {
            // Indices with p_i = 0 contribute nothing and are skipped.
            if self.p[i] == 0.0 {
                continue;
            }
            s += self.p[i] * self.p[i] + self.p[i] * self.ez[i] + self.eiz[i];
        }
        s
    }

    fn defect_sum(&self) -> f64 {
        (0..self.p.len()).filter(|&i| self.p[i] > 0.0).map(|i| self.e[i]).sum()
    }
}

/// Total variation bound for the indicator sum against `Po(lambda)`:
/// `min(1, 1/lambda) * sum(p^2 + p EZ + E(IZ)) + min(1, 1/sqrt(lambda)) * sum(e)`.
pub fn indicator_sum_bound(stats: &IndicatorStats) -> Result<f64, SteinError> {
    let lambda = stats.lambda();
    if lambda <= 0.0 {
        return Err(SteinError::NonpositiveIntensity);
    }
    let first = (1.0f64).min(1.0 / lambda);
    let second = (1.0f64).min(1.0 / lambda.sqrt());
    Ok(first * stats.main_sum() + second * stats.defect_sum())
}

/// Transport bound for the indicator point process against the discrete
/// Poisson process with the same intensity; independent of the point
/// locations.
pub fn indicator_process_bound(stats: &IndicatorStats) -> Result<f64, SteinError> {
    let lambda = stats.lambda();
    if lambda <= 0.0 {
        return Err(SteinError::NonpositiveIntensity);
    }
    let first = (1.0f64).min(2.0 / lambda * (1.0 + 2.0 * log_plus(lambda / 2.0)));
    let second = (1.0f64).min(1.65 / lambda.sqrt());
    Ok(first * stats.main_sum() + second * stats.defect_sum())
}

/// `d_TV(Po(lambda), Po(mu)) <= min(1, 1/sqrt(lambda), 1/sqrt(mu)) |lambda - mu|`.
pub fn poisson_tv_bound(lambda: f64, mu: f64) -> Result<f64, SteinError> {
    if lambda <= 0.0 || mu <= 0.0 {
        return Err(SteinError::NonpositiveParameter);
    }
    let factor = 1.0f64.min(1.0 / lambda.sqrt()).min(1.0 / mu.sqrt());
    Ok(factor * (lambda - mu).abs())
}

/// Explicit joint law of `n <= 20` indicators, indexed by bitmask.
#[derive(Debug, Clone)]
pub struct JointPmf {
    n: usize,
    probs: Vec<f64>,
}

impl JointPmf {
    pub const MAX_INDICATORS: usize = 20;

    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self, SteinError> {
        if n == 0 || n > Self::MAX_INDICATORS || probs.len() != 1usize << n {
            return Err(SteinError::BadJointSize { got: n, max: Self::MAX_INDICATORS });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 || probs.iter().any(|p| *p < 0.0) {
            return Err(SteinError::JointNotNormalized(total));
        }
        Ok(Self { n, probs })
    }

    /// Product law of independent indicators with the given probabilities.
    pub fn independent(p: &[f64]) -> Result<Self, SteinError> {
        let n = p.len();
        if n == 0 || n > Self::MAX_INDICATORS {
            return Err(SteinError::BadJointSize { got: n, max: Self::MAX_INDICATORS });
        }
        let mut probs = vec![0.0; 1 << n];
        for (mask, slot) in probs.iter_mut().enumerate() {
            let mut w = 1.0;
            for (i, pi) in p.iter().enumerate() {
                w *= if mask >> i & 1 == 1 { *pi } else { 1.0 - *pi };
            }
            *slot = w;
        }
        Self::new(n, probs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Exact pmf of `W = sum I_i` on `{0, ..., n}`.
    pub fn count_pmf(&self) -> Vec<f64> {
        let mut pmf = vec![0.0; self.n + 1];
        for (mask, w) in self.probs.iter().enumerate() {
            pmf[mask.count_ones() as usize] += w;
        }
        pmf
    }

    /// Exact total variation between `L(W)` and `Po(lambda)`.
    pub fn count_dtv_to_poisson(&self, lambda: f64) -> f64 {
        let pmf = self.count_pmf();
        let mut l1 = 0.0;
        let mut poisson_mass = 0.0;
        for (k, pw) in pmf.iter().enumerate() {
            let po = crate::numeric::poisson_pmf(lambda, k as u64);
            poisson_mass += po;
            l1 += (pw - po).abs();
        }
        // Poisson mass beyond n has no counterpart in L(W).
        l1 += (1.0 - poisson_mass).max(0.0);
        0.5 * l1
    }
}

/// Exact per-index inputs for an explicit joint law.
///
/// `e_i` is computed in both equivalent forms, as the mean absolute
/// deviation of `E(I_i | weak indicators)` from `p_i` and as twice the
/// largest covariance with a weak-sigma-field event; a disagreement beyond
/// 1e-12 is a bug, so it panics.
pub fn stats_by_enumeration(
    joint: &JointPmf,
    graph: &DependencyGraphSpec,
) -> Result<IndicatorStats, SteinError> {
    let n = joint.n();
    if graph.index_count() != n {
        return Err(SteinError::LengthMismatch);
    }
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };

    let mut strong_mask = vec![0u32; n];
    for i in 0..n {
        for &j in graph.strong(i) {
            strong_mask[i] |= 1 << j;
        }
    }

    let mut p = vec![0.0; n];
    let mut ez = vec![0.0; n];
    let mut eiz = vec![0.0; n];
    for (mask, &w) in joint.probs().iter().enumerate() {
        let mask = mask as u32;
        let mut bits = mask;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            p[i] += w;
            eiz[i] += w * (mask & strong_mask[i]).count_ones() as f64;
        }
    }
    for i in 0..n {
        ez[i] = graph.strong(i).iter().map(|&j| p[j]).sum();
    }

    let mut e = vec![0.0; n];
    for i in 0..n {
        let weak_mask = full & !(1u32 << i) & !strong_mask[i];
        // Project the joint law onto the weak configuration.
        let mut table: HashMap<u32, (f64, f64)> = HashMap::new();
        for (mask, &w) in joint.probs().iter().enumerate() {
            let mask = mask as u32;
            let entry = table.entry(mask & weak_mask).or_insert((0.0, 0.0));
            entry.0 += w;
            if mask >> i & 1 == 1 {
                entry.1 += w;
            }
        }
        let mut abs_sum = 0.0;
        let mut pos = 0.0;
        let mut neg = 0.0;
        for (pw, piw) in table.values() {
            let delta = piw - p[i] * pw;
            abs_sum += delta.abs();
            if delta > 0.0 {
                pos += delta;
            } else {
                neg -= delta;
            }
        }
        let cov_form = 2.0 * pos.max(neg);
        assert!(
            (abs_sum - cov_form).abs() <= 1e-12,
            "the two defect forms must agree: {abs_sum} vs {cov_form}"
        );
        e[i] = abs_sum;
    }

    IndicatorStats::new(p, ez, eiz, e)
}

/// Monte Carlo estimates of the per-index inputs for the grid indicator
/// process of a model, with standard errors. The defects `e_i` are not
/// estimated here; bound assembly takes them from the mixing certificate.
#[derive(Debug, Clone)]
pub struct McIndicatorStats {
    pub stats: IndicatorStats,
    pub p_se: Vec<f64>,
    pub eiz_se: Vec<f64>,
}

pub fn stats_by_mc(
    model: &ProcessModel,
    space: &SpaceConfig,
    grid: &GridSpec,
    graph: &DependencyGraphSpec,
    mc_n: u64,
    seed: u64,
) -> Result<McIndicatorStats, SteinError> {
    if mc_n < 1000 {
        return Err(SteinError::TooFewReplicates(1000));
    }
    let n = grid.total_cells() as usize;
    if graph.index_count() != n {
        return Err(SteinError::LengthMismatch);
    }
    let window = grid.window();

    struct Acc {
        ind: Vec<f64>,
        iz: Vec<f64>,
        iz2: Vec<f64>,
    }
    let zero = || Acc { ind: vec![0.0; n], iz: vec![0.0; n], iz2: vec![0.0; n] };
    let acc = (0..mc_n)
        .into_par_iter()
        .fold(zero, |mut acc, rep| {
            let mut rng = replicate_stream(seed, rep);
            let pat = sample_with(model, space, &window, &mut rng).expect("valid model");
            let mut indicator = vec![0u8; n];
            for point in pat.points() {
                if let Ok((k, l)) = grid.cell_of(point) {
                    indicator[grid.flat_index(&k, &l)] = 1;
                }
            }
            for i in 0..n {
                if indicator[i] == 0 {
                    continue;
                }
                acc.ind[i] += 1.0;
                let z: f64 =
                    graph.strong(i).iter().map(|&j| f64::from(indicator[j])).sum();
                acc.iz[i] += z;
                acc.iz2[i] += z * z;
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            for i in 0..n {
                a.ind[i] += b.ind[i];
                a.iz[i] += b.iz[i];
                a.iz2[i] += b.iz2[i];
            }
            a
        });

    let m = mc_n as f64;
    let mut p = vec![0.0; n];
    let mut eiz = vec![0.0; n];
    let mut p_se = vec![0.0; n];
    let mut eiz_se = vec![0.0; n];
    for i in 0..n {
        p[i] = acc.ind[i] / m;
        eiz[i] = acc.iz[i] / m;
        p_se[i] = (p[i] * (1.0 - p[i]) / m).sqrt();
        let var = (acc.iz2[i] / m - eiz[i] * eiz[i]).max(0.0);
        eiz_se[i] = (var / m).sqrt();
    }
    let mut ez = vec![0.0; n];
    for i in 0..n {
        ez[i] = graph.strong(i).iter().map(|&j| p[j]).sum();
    }
    let stats = IndicatorStats::new(p, ez, eiz, vec![0.0; n])?;
    Ok(McIndicatorStats { stats, p_se, eiz_se })
}
