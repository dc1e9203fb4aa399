//! Distances between points, patterns and samples.
//!
//! * `d0` — Euclidean distance capped at 1, the base metric;
//! * `d1` — normalized optimal-matching distance between patterns of equal
//!   cardinality (1 across cardinalities), via an exact assignment solve;
//! * `empirical_d2` — transport distance between two equally sized clouds of
//!   patterns with `d1` ground cost, an estimator of the process distance;
//! * `empirical_dtv` — total variation between two empirical count pmfs;
//! * `empirical_dbw` — exact supremum over 1-Lipschitz functions bounded by
//!   1/2, solved as the chain linear program on the merged support;
//! * `exact_dtv_pmf` — total variation between explicit pmfs on the
//!   nonnegative integers, with quantified truncation error.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::assignment::solve_assignment;
use crate::geometry::{self, GeometryError, SpaceConfig, Window};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("points have mismatched dimensions")]
    DimensionMismatch,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("sample lists must be nonempty and equally sized")]
    BadSampleSizes,
    #[error("pmf does not sum to 1 within tolerance (off by {0:.3e})")]
    PmfNotNormalized(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A finite multiset of points of common dimension; order is irrelevant to
/// every metric in this module.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    points: Vec<Vec<f64>>,
}

impl PointPattern {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, MetricsError> {
        if let Some(first) = points.first() {
            let d = first.len();
            for p in &points {
                if p.len() != d {
                    return Err(MetricsError::DimensionMismatch);
                }
                if p.iter().any(|x| !x.is_finite()) {
                    return Err(MetricsError::NonFinite);
                }
            }
        }
        Ok(Self { points })
    }

    pub fn empty() -> Self {
        Self { points: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(|p| p.len())
    }

    /// The sub-pattern inside `window` (boundary included).
    pub fn restricted(&self, window: &Window) -> PointPattern {
        PointPattern {
            points: self.points.iter().filter(|p| window.contains(p)).cloned().collect(),
        }
    }

    /// Image of the pattern under the stretch/compress transform.
    pub fn transformed(
        &self,
        space: &SpaceConfig,
        w_of_t: f64,
        t: f64,
    ) -> Result<PointPattern, MetricsError> {
        let points = self
            .points
            .iter()
            .map(|p| geometry::apply_transform(space, w_of_t, t, p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PointPattern { points })
    }

    /// Union of two patterns as multisets.
    pub fn superpose(&self, other: &PointPattern) -> Result<PointPattern, MetricsError> {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        PointPattern::new(points)
    }
}

/// Euclidean distance capped at 1.
pub fn d0(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::DimensionMismatch);
    }
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sq.sqrt().min(1.0))
}

/// Optimal-matching distance between patterns: 1 if the cardinalities differ,
/// 0 if both are empty, otherwise the minimum over pairings of the average
/// capped distance of matched points.
pub fn d1(a: &PointPattern, b: &PointPattern) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Ok(1.0);
    }
    let n = a.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut cost = Vec::with_capacity(n * n);
    for p in a.points() {
        for q in b.points() {
            cost.push(d0(p, q)?);
        }
    }
    let (_, total) = solve_assignment(&cost, n);
    Ok((total / n as f64).min(1.0))
}

/// Transport distance between two equally sized clouds of patterns with `d1`
/// ground cost: the minimizing average cost over bijections. A consistent,
/// upward-biased-for-finite-N estimator of the process distance.
pub fn empirical_d2(a: &[PointPattern], b: &[PointPattern]) -> Result<f64, MetricsError> {
    if a.is_empty() || a.len() != b.len() {
        return Err(MetricsError::BadSampleSizes);
    }
    let n = a.len();
    let mut cost = Vec::with_capacity(n * n);
    for p in a {
        for q in b {
            cost.push(d1(p, q)?);
        }
    }
    let (_, total) = solve_assignment(&cost, n);
    Ok((total / n as f64).min(1.0))
}

/// Realizations of a nonnegative-integer random variable.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSample {
    counts: Vec<u64>,
}

impl CountSample {
    pub fn new(counts: Vec<u64>) -> Self {
        assert!(!counts.is_empty(), "count sample must be nonempty");
        Self { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    fn pmf(&self) -> BTreeMap<u64, f64> {
        let mut pmf = BTreeMap::new();
        let w = 1.0 / self.counts.len() as f64;
        for &c in &self.counts {
            *pmf.entry(c).or_insert(0.0) += w;
        }
        pmf
    }
}

/// Total variation distance between the empirical pmfs of two count samples:
/// half the L1 distance, which equals the supremum over subsets of the
/// mass difference.
pub fn empirical_dtv(a: &CountSample, b: &CountSample) -> f64 {
    let pa = a.pmf();
    let pb = b.pmf();
    let mut l1 = 0.0;
    for (k, p) in &pa {
        l1 += (p - pb.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, q) in &pb {
        if !pa.contains_key(k) {
            l1 += q;
        }
    }
    0.5 * l1
}

/// Realizations of a real random variable.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSample {
    values: Vec<f64>,
}

impl RealSample {
    pub fn new(values: Vec<f64>) -> Result<Self, MetricsError> {
        if values.is_empty() {
            return Err(MetricsError::BadSampleSizes);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MetricsError::NonFinite);
        }
        Ok(Self { values })
    }

    pub fn point_mass(v: f64) -> Self {
        Self { values: vec![v] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Bounded-Wasserstein distance between the empirical distributions: the
/// exact value of `sup { mean_a f - mean_b f }` over 1-Lipschitz `f` with
/// `|f| <= 1/2`.
///
/// On the sorted merged support the Lipschitz constraints between consecutive
/// points imply all pairwise ones, so the supremum is the optimum of a chain
/// linear program; it is solved exactly by dynamic programming over concave
/// piecewise-linear value functions.
pub fn empirical_dbw(a: &RealSample, b: &RealSample) -> f64 {
    // Merged support with signed weights mean_a - mean_b.
    let mut weighted: Vec<(f64, f64)> = Vec::with_capacity(a.values.len() + b.values.len());
    let wa = 1.0 / a.values.len() as f64;
    let wb = 1.0 / b.values.len() as f64;
    for &x in &a.values {
        weighted.push((x, wa));
    }
    for &x in &b.values {
        weighted.push((x, -wb));
    }
    weighted.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut support: Vec<f64> = Vec::new();
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
        return 0.0;
    }

    let mut value = ConcavePl::linear(coeff[0]);
    for i in 1..support.len() {
        value.spread(support[i] - support[i - 1]);
        value.add_linear(coeff[i]);
    }
    value.max_value().max(0.0)
}

/// Concave piecewise-linear function on `[-1/2, 1/2]`, stored as its
/// breakpoint graph.
struct ConcavePl {
    pts: Vec<(f64, f64)>,
}

impl ConcavePl {
    const LO: f64 = -0.5;
    const HI: f64 = 0.5;

    fn linear(c: f64) -> Self {
        Self { pts: vec![(Self::LO, c * Self::LO), (Self::HI, c * Self::HI)] }
    }

    fn add_linear(&mut self, c: f64) {
        for (x, y) in &mut self.pts {
            *y += c * *x;
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let pts = &self.pts;
        if x <= pts[0].0 {
            return pts[0].1;
        }
        for w in pts.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if x <= x1 {
                if x1 == x0 {
                    return y0.max(y1);
                }
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
        pts.last().unwrap().1
    }

    /// Replaces the function by its sliding-window maximum of radius `d`,
    /// re-clipped to `[-1/2, 1/2]`: the increasing branch shifts left, the
    /// decreasing branch shifts right, joined by a plateau at the maximum.
    fn spread(&mut self, d: f64) {
        debug_assert!(d >= 0.0);
        let arg_max = self
            .pts
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .unwrap();
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(self.pts.len() + 2);
        for (i, &(x, y)) in self.pts.iter().enumerate() {
            match i.cmp(&arg_max) {
                std::cmp::Ordering::Less => out.push((x - d, y)),
                std::cmp::Ordering::Equal => {
                    out.push((x - d, y));
                    out.push((x + d, y));
                }
                std::cmp::Ordering::Greater => out.push((x + d, y)),
            }
        }
        self.pts = out;
        self.clip();
    }

    fn clip(&mut self) {
        let lo_y = self.eval(Self::LO);
        let hi_y = self.eval(Self::HI);
        let mut out = vec![(Self::LO, lo_y)];
        out.extend(
            self.pts
                .iter()
                .copied()
                .filter(|&(x, _)| x > Self::LO && x < Self::HI),
        );
        out.push((Self::HI, hi_y));
        self.pts = out;
    }

    fn max_value(&self) -> f64 {
        self.pts.iter().map(|&(_, y)| y).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Exact total variation between two truncated pmfs on the nonnegative
/// integers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtvPmf {
    /// Half the L1 distance over the truncated support.
    pub value: f64,
    /// Mass left out by truncation; add it to get a certified upper bound.
    pub tail_error: f64,
}

/// Half the L1 distance of two explicit pmfs, with the truncation tails
/// reported as a separate error bound. Both pmfs must sum to 1 within 1e-10.
pub fn exact_dtv_pmf(p: &[f64], q: &[f64]) -> Result<DtvPmf, MetricsError> {
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    let off = (1.0 - sp).abs().max((1.0 - sq).abs());
    if off > 1e-10 {
        return Err(MetricsError::PmfNotNormalized(off));
    }
    let len = p.len().max(q.len());
    let mut l1 = 0.0;
    for k in 0..len {
        let a = p.get(k).copied().unwrap_or(0.0);
        let b = q.get(k).copied().unwrap_or(0.0);
        l1 += (a - b).abs();
    }
    Ok(DtvPmf {
        value: 0.5 * l1,
        tail_error: (1.0 - sp).max(0.0) + (1.0 - sq).max(0.0),
    })
}
