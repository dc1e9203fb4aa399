//! Point process models with machine-checkable condition certificates.
//!
//! Each model carries a [`ConditionCertificate`] recording a density envelope
//! `[iota, kappa]`, an orderliness function `alpha_check`, and a mixing decay
//! `beta_check` with its mixing kind. The certificates feed the bound
//! assembly; [`verify_orderliness`] cross-checks the orderliness part by
//! Monte Carlo.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{lattice_site_range, Mu2Kind, SpaceConfig, StretchSchedule, Window};
use crate::metrics::PointPattern;
use crate::numeric::{self, unit_ball_volume};
use crate::rng::{replicate_stream, Stream};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("model requires the {0:?} reference measure")]
    WrongMeasure(Mu2Kind),
    #[error("window is unbounded or degenerate")]
    BadWindow,
    #[error("density exceeds its rejection envelope at a sampled point")]
    EnvelopeViolation,
    #[error("certificate incompatible with required mixing kind {required:?} (have {have:?})")]
    IncompatibleMixing { required: MixingKind, have: MixingKind },
    #[error("certificate invalid: {0}")]
    InvalidCertificate(&'static str),
    #[error("Monte Carlo size must be at least {0}")]
    TooFewReplicates(u64),
}

/// Mixing coefficient family. `Phi` is the strongest of the three; `Beta`
/// and `Rho` are mutually incomparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingKind {
    Beta,
    Rho,
    Phi,
}

/// Orderliness function family: `alpha(v) = c v^r` with `c >= 0`, `r > 0`.
/// Continuous with `alpha(0) = 0` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaCheck {
    Power { c: f64, r: f64 },
}

impl AlphaCheck {
    pub fn power(c: f64, r: f64) -> Result<Self, ModelError> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(ModelError::InvalidParameter("alpha coefficient must be >= 0"));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(ModelError::InvalidParameter("alpha exponent must be > 0"));
        }
        Ok(AlphaCheck::Power { c, r })
    }

    pub fn zero() -> Self {
        AlphaCheck::Power { c: 0.0, r: 1.0 }
    }

    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            AlphaCheck::Power { c, r } => {
                if v <= 0.0 {
                    0.0
                } else {
                    c * v.powf(r)
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, AlphaCheck::Power { c, .. } if *c == 0.0)
    }
}

/// Mixing decay family. Evaluations are capped at 1, since every mixing
/// coefficient is bounded by 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaCheck {
    /// Identically zero (independent increments).
    Zero,
    /// `c u^{-b}` for `u > 0`; 1 at `u = 0`.
    PowerU { c: f64, b: f64 },
    /// `c (1 + u)^{-b}`.
    OnePlusPower { c: f64, b: f64 },
    /// `c` below `u0`, zero from `u0` on (finite dependence range).
    FiniteRange { c: f64, u0: f64 },
    /// `c gamma^{floor(u)}` (decay measured in whole lattice steps).
    Geometric { c: f64, gamma: f64 },
}

impl BetaCheck {
    pub fn eval(&self, u: f64) -> f64 {
        let raw = match *self {
            BetaCheck::Zero => 0.0,
            BetaCheck::PowerU { c, b } => {
                if u <= 0.0 {
                    return 1.0;
                }
                c * u.powf(-b)
            }
            BetaCheck::OnePlusPower { c, b } => c * (1.0 + u).powf(-b),
            BetaCheck::FiniteRange { c, u0 } => {
                if u < u0 {
                    c
                } else {
                    0.0
                }
            }
            BetaCheck::Geometric { c, gamma } => c * gamma.powf(u.floor()),
        };
        raw.min(1.0)
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            BetaCheck::Zero => true,
            BetaCheck::PowerU { c, .. }
            | BetaCheck::OnePlusPower { c, .. }
            | BetaCheck::FiniteRange { c, .. }
            | BetaCheck::Geometric { c, .. } => c == 0.0,
        }
    }

    /// Whether the family decays strictly faster than `u^{-D2/2}`, the
    /// minimal strength the mixing condition asks for. Recorded, not
    /// enforced.
    pub fn tail_strong_enough(&self, d2_dims: usize) -> bool {
        let need = d2_dims as f64 / 2.0;
        match *self {
            BetaCheck::Zero | BetaCheck::FiniteRange { .. } => true,
            BetaCheck::Geometric { gamma, .. } => gamma < 1.0,
            BetaCheck::PowerU { b, .. } | BetaCheck::OnePlusPower { b, .. } => b > need,
        }
    }
}

/// Witnesses for the density, orderliness and mixing conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCertificate {
    pub kappa: f64,
    pub iota: f64,
    pub alpha_check: AlphaCheck,
    pub beta_check: BetaCheck,
    pub mixing_kind: MixingKind,
}

impl ConditionCertificate {
    pub fn new(
        kappa: f64,
        iota: f64,
        alpha_check: AlphaCheck,
        beta_check: BetaCheck,
        mixing_kind: MixingKind,
    ) -> Result<Self, ModelError> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(ModelError::InvalidCertificate("kappa must be finite and >= 0"));
        }
        if !(iota >= 0.0 && iota <= kappa) {
            return Err(ModelError::InvalidCertificate("iota must lie in [0, kappa]"));
        }
        Ok(Self { kappa, iota, alpha_check, beta_check, mixing_kind })
    }

    pub fn alpha(&self, v: f64) -> f64 {
        self.alpha_check.eval(v)
    }

    pub fn beta(&self, u: f64) -> f64 {
        self.beta_check.eval(u)
    }

    /// Mixing decay usable under `required`. A phi certificate serves
    /// directly for beta (`beta <= phi`) and for rho via
    /// `rho <= 2 sqrt(phi)`, capped at 1.
    pub fn mixing_decay(&self, required: MixingKind, u: f64) -> Result<f64, ModelError> {
        if self.mixing_kind == required {
            return Ok(self.beta(u));
        }
        match (self.mixing_kind, required) {
            (MixingKind::Phi, MixingKind::Beta) => Ok(self.beta(u)),
            (MixingKind::Phi, MixingKind::Rho) => Ok((2.0 * self.beta(u).sqrt()).min(1.0)),
            (have, required) => Err(ModelError::IncompatibleMixing { required, have }),
        }
    }

    /// Whether `required` can be served at all by this certificate.
    pub fn supports(&self, required: MixingKind) -> bool {
        self.mixing_kind == required || self.mixing_kind == MixingKind::Phi
    }
}

/// Density regularity parameters `|p(s) - p(0)| <= L |s|^z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub l: f64,
    pub z: f64,
}

/// Intensity density, constant in the compressed directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityForm {
    Constant { ell: f64 },
    /// `p(s) = a + b |s|^2` on the stretched coordinates, `b >= 0`.
    SeparableQuadratic { a: f64, b: f64 },
    /// Piecewise-linear table on the first stretched coordinate.
    CustomTable { xs: Vec<f64>, ps: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub form: DensityForm,
    pub regularity: Option<Regularity>,
    pub smooth2: bool,
}

impl DensitySpec {
    pub fn constant(ell: f64) -> Self {
        Self {
            form: DensityForm::Constant { ell },
            regularity: Some(Regularity { l: 0.0, z: 1.0 }),
            smooth2: true,
        }
    }

    pub fn separable_quadratic(a: f64, b: f64) -> Self {
        Self {
            form: DensityForm::SeparableQuadratic { a, b },
            regularity: Some(Regularity { l: b, z: 2.0 }),
            smooth2: true,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match &self.form {
            DensityForm::Constant { ell } => {
                if !(*ell >= 0.0 && ell.is_finite()) {
                    return Err(ModelError::InvalidParameter("constant density must be >= 0"));
                }
            }
            DensityForm::SeparableQuadratic { a, b } => {
                if !(*a >= 0.0 && *b >= 0.0) {
                    return Err(ModelError::InvalidParameter(
                        "quadratic density needs a >= 0, b >= 0",
                    ));
                }
            }
            DensityForm::CustomTable { xs, ps } => {
                if xs.len() < 2 || xs.len() != ps.len() {
                    return Err(ModelError::InvalidParameter("table needs matching knots"));
                }
                if xs.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(ModelError::InvalidParameter("table knots must increase"));
                }
                if ps.iter().any(|p| *p < 0.0) {
                    return Err(ModelError::InvalidParameter("table values must be >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Density value at the stretched coordinates `s`.
    pub fn eval(&self, s: &[f64]) -> f64 {
        match &self.form {
            DensityForm::Constant { ell } => *ell,
            DensityForm::SeparableQuadratic { a, b } => {
                a + b * s.iter().map(|x| x * x).sum::<f64>()
            }
            DensityForm::CustomTable { xs, ps } => {
                let x = s[0];
                if x <= xs[0] {
                    return ps[0];
                }
                for i in 1..xs.len() {
                    if x <= xs[i] {
                        let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
                        return ps[i - 1] + t * (ps[i] - ps[i - 1]);
                    }
                }
                *ps.last().unwrap()
            }
        }
    }

    pub fn at_zero(&self, d1_dims: usize) -> f64 {
        self.eval(&vec![0.0; d1_dims])
    }

    /// Supremum over `[-s_half, s_half]^{D1}`.
    pub fn sup_on(&self, s_half: f64, d1_dims: usize) -> f64 {
        match &self.form {
            DensityForm::Constant { ell } => *ell,
            DensityForm::SeparableQuadratic { a, b } => {
                a + b * d1_dims as f64 * s_half * s_half
            }
            DensityForm::CustomTable { xs, ps } => xs
                .iter()
                .zip(ps)
                .filter(|(x, _)| x.abs() <= s_half + 1e-12)
                .map(|(_, p)| *p)
                .fold(self.eval(&[s_half]).max(self.eval(&[-s_half])), f64::max),
        }
    }

    /// Infimum over `[-s_half, s_half]^{D1}`.
    pub fn inf_on(&self, s_half: f64, d1_dims: usize) -> f64 {
        match &self.form {
            DensityForm::Constant { ell } => *ell,
            DensityForm::SeparableQuadratic { a, .. } => *a,
            DensityForm::CustomTable { xs, ps } => {
                let _ = d1_dims;
                xs.iter()
                    .zip(ps)
                    .filter(|(x, _)| x.abs() <= s_half + 1e-12)
                    .map(|(_, p)| *p)
                    .fold(self.eval(&[s_half]).min(self.eval(&[-s_half])), f64::min)
            }
        }
    }

    /// Integral of the density over a window under `mu`; the density only
    /// depends on the stretched coordinates.
    pub fn integral_over(&self, space: &SpaceConfig, window: &Window) -> f64 {
        let d1 = space.d1_dims();
        let mut mu2_part = 1.0;
        for s in d1..space.total_dims() {
            mu2_part *= match space.mu2_kind() {
                Mu2Kind::Lebesgue => window.hi[s] - window.lo[s],
                Mu2Kind::Counting => {
                    let (_, count) = lattice_site_range(window.lo[s], window.hi[s]);
                    count as f64
                }
            };
        }
        let s_lo = &window.lo[..d1];
        let s_hi = &window.hi[..d1];
        let s_vol: f64 = (0..d1).map(|r| s_hi[r] - s_lo[r]).product();
        let s_integral = match &self.form {
            DensityForm::Constant { ell } => ell * s_vol,
            DensityForm::SeparableQuadratic { a, b } => {
                // int (a + b sum s_r^2) = a vol + b sum_r (hi^3-lo^3)/3 * rest
                let mut quad = 0.0;
                for r in 0..d1 {
                    let cube = (s_hi[r].powi(3) - s_lo[r].powi(3)) / 3.0;
                    let rest: f64 = (0..d1)
                        .filter(|q| *q != r)
                        .map(|q| s_hi[q] - s_lo[q])
                        .product();
                    quad += cube * rest;
                }
                a * s_vol + b * quad
            }
            DensityForm::CustomTable { xs, .. } => {
                // Trapezoid integral of the 1-d table over [lo, hi].
                debug_assert_eq!(d1, 1);
                let (lo, hi) = (s_lo[0], s_hi[0]);
                let mut total = 0.0;
                let mut knots: Vec<f64> = vec![lo];
                knots.extend(xs.iter().copied().filter(|x| *x > lo && *x < hi));
                knots.push(hi);
                for w in knots.windows(2) {
                    total += 0.5 * (self.eval(&[w[0]]) + self.eval(&[w[1]])) * (w[1] - w[0]);
                }
                total
            }
        };
        s_integral * mu2_part
    }

    /// Checks the declared regularity witness `|p(s) - p(0)| <= L |s|^z` on
    /// a random sample of the box `[-s_half, s_half]^{D1}`. Returns `None`
    /// when no witness is declared.
    pub fn regularity_holds_on(
        &self,
        s_half: f64,
        d1_dims: usize,
        samples: u32,
        seed: u64,
    ) -> Option<bool> {
        let reg = self.regularity?;
        let p0 = self.at_zero(d1_dims);
        let mut rng = replicate_stream(seed, 0);
        for _ in 0..samples {
            let s: Vec<f64> = (0..d1_dims).map(|_| rng.gen_range(-s_half..s_half)).collect();
            let norm: f64 = s.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (self.eval(&s) - p0).abs() > reg.l * norm.powf(reg.z) * (1.0 + 1e-9) + 1e-12 {
                return Some(false);
            }
        }
        Some(true)
    }

    /// Laplacian at the origin, available for twice-differentiable forms.
    pub fn laplacian_at_zero(&self, d1_dims: usize) -> Option<f64> {
        match &self.form {
            DensityForm::Constant { .. } => Some(0.0),
            DensityForm::SeparableQuadratic { b, .. } => Some(2.0 * b * d1_dims as f64),
            DensityForm::CustomTable { .. } => None,
        }
    }
}

/// Offspring count distribution of a cluster, bounded almost surely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClusterCountDist {
    Constant { n: u64 },
    UniformRange { lo: u64, hi: u64 },
}

impl ClusterCountDist {
    pub fn max(&self) -> u64 {
        match *self {
            ClusterCountDist::Constant { n } => n,
            ClusterCountDist::UniformRange { hi, .. } => hi,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ClusterCountDist::Constant { n } => n as f64,
            ClusterCountDist::UniformRange { lo, hi } => (lo + hi) as f64 / 2.0,
        }
    }

    /// `E[S(S-1)]`.
    pub fn second_factorial_moment(&self) -> f64 {
        match *self {
            ClusterCountDist::Constant { n } => (n * n.saturating_sub(1)) as f64,
            ClusterCountDist::UniformRange { lo, hi } => {
                let count = (hi - lo + 1) as f64;
                (lo..=hi).map(|s| (s * s.saturating_sub(1)) as f64).sum::<f64>() / count
            }
        }
    }

    fn sample(&self, rng: &mut Stream) -> u64 {
        match *self {
            ClusterCountDist::Constant { n } => n,
            ClusterCountDist::UniformRange { lo, hi } => rng.gen_range(lo..=hi),
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        if let ClusterCountDist::UniformRange { lo, hi } = self {
            if lo > hi {
                return Err(ModelError::InvalidParameter("cluster count range inverted"));
            }
        }
        Ok(())
    }
}

/// The process classes with built-in certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessModel {
    HomogeneousPoisson {
        ell: f64,
    },
    InhomogeneousPoisson {
        density: DensitySpec,
    },
    /// Parent Poisson process with bounded offspring counts placed uniformly
    /// in a ball of radius `radius` around the parent. Lebesgue measure only.
    ClusterBounded {
        parent_rate: f64,
        count_dist: ClusterCountDist,
        radius: f64,
    },
    /// Poisson counts on lattice sites whose rates are modulated by
    /// independent stationary Markov chains, one per compressed axis.
    /// Counting measure only.
    MarkovModulated {
        transition: Vec<Vec<f64>>,
        rates: Vec<f64>,
    },
}

impl ProcessModel {
    pub fn validate(&self, space: &SpaceConfig) -> Result<(), ModelError> {
        match self {
            ProcessModel::HomogeneousPoisson { ell } => {
                if !(*ell >= 0.0 && ell.is_finite()) {
                    return Err(ModelError::InvalidParameter("intensity must be >= 0"));
                }
            }
            ProcessModel::InhomogeneousPoisson { density } => density.validate()?,
            ProcessModel::ClusterBounded { parent_rate, count_dist, radius } => {
                if space.mu2_kind() != Mu2Kind::Lebesgue {
                    return Err(ModelError::WrongMeasure(Mu2Kind::Lebesgue));
                }
                if !(*parent_rate >= 0.0 && parent_rate.is_finite()) {
                    return Err(ModelError::InvalidParameter("parent rate must be >= 0"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(ModelError::InvalidParameter("cluster radius must be > 0"));
                }
                count_dist.validate()?;
            }
            ProcessModel::MarkovModulated { transition, rates } => {
                if space.mu2_kind() != Mu2Kind::Counting {
                    return Err(ModelError::WrongMeasure(Mu2Kind::Counting));
                }
                let s = rates.len();
                if s == 0 || transition.len() != s {
                    return Err(ModelError::InvalidParameter("rate/transition size mismatch"));
                }
                for row in transition {
                    if row.len() != s {
                        return Err(ModelError::InvalidParameter("transition must be square"));
                    }
                    if row.iter().any(|p| *p < 0.0) {
                        return Err(ModelError::InvalidParameter("negative transition entry"));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > 1e-9 {
                        return Err(ModelError::InvalidParameter("transition rows must sum to 1"));
                    }
                }
                if rates.iter().any(|r| *r < 0.0 || !r.is_finite()) {
                    return Err(ModelError::InvalidParameter("rates must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }
}

/// Poisson count with the given mean, drawn from the stream (0 for a
/// nonpositive mean).
pub fn poisson_draw(rng: &mut Stream, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean).expect("positive mean").sample(rng);
    draw as u64
}

fn uniform_in(rng: &mut Stream, window: &Window) -> Vec<f64> {
    window
        .lo
        .iter()
        .zip(&window.hi)
        .map(|(a, b)| if a == b { *a } else { rng.gen_range(*a..*b) })
        .collect()
}

/// Uniform point in the `dim`-ball of radius `r` (Gaussian direction and a
/// radial transform).
fn uniform_in_ball(rng: &mut Stream, dim: usize, r: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let norm: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; dim];
    }
    let u: f64 = rng.gen_range(0.0f64..1.0);
    let radial = r * u.powf(1.0 / dim as f64) / norm;
    for x in &mut g {
        *x *= radial;
    }
    g
}

/// Positions of lattice sites `m + 1/2` in `[lo, hi)` along one axis.
fn site_positions(lo: f64, hi: f64) -> Vec<f64> {
    let (start, count) = lattice_site_range(lo, hi);
    (0..count).map(|i| (start + i as i64) as f64 + 0.5).collect()
}

fn stationary_distribution(transition: &[Vec<f64>]) -> Vec<f64> {
    // Solve pi P = pi, sum pi = 1 by Gaussian elimination on (P^T - I)
    // with the last equation replaced by the normalization.
    let s = transition.len();
    let mut a = vec![vec![0.0f64; s + 1]; s];
    for i in 0..s {
        for j in 0..s {
            a[i][j] = transition[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..s {
        a[s - 1][j] = 1.0;
    }
    a[s - 1][s] = 1.0;
    // Elimination with partial pivoting.
    for col in 0..s {
        let pivot = (col..s)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        if p.abs() < 1e-14 {
            continue;
        }
        for row in 0..s {
            if row != col {
                let f = a[row][col] / p;
                for k in col..=s {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    (0..s).map(|i| (a[i][s] / a[i][i]).max(0.0)).collect()
}

/// Dobrushin contraction coefficient: the maximal total variation distance
/// between rows of the transition matrix.
pub fn dobrushin_coefficient(transition: &[Vec<f64>]) -> f64 {
    let s = transition.len();
    let mut worst = 0.0f64;
    for i in 0..s {
        for j in 0..s {
            let tv: f64 = 0.5
                * transition[i]
                    .iter()
                    .zip(&transition[j])
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
            worst = worst.max(tv);
        }
    }
    worst
}

fn sample_from_state(rng: &mut Stream, pmf: &[f64]) -> usize {
    let u: f64 = rng.gen_range(0.0f64..1.0);
    let mut cum = 0.0;
    for (i, p) in pmf.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    pmf.len() - 1
}

/// Draws one realization of the model restricted to `window`, consuming the
/// given stream. Deterministic given the stream state.
pub fn sample_with(
    model: &ProcessModel,
    space: &SpaceConfig,
    window: &Window,
    rng: &mut Stream,
) -> Result<PointPattern, ModelError> {
    model.validate(space)?;
    if window.dims() != space.total_dims()
        || window.lo.iter().any(|x| !x.is_finite())
        || window.hi.iter().any(|x| !x.is_finite())
    {
        return Err(ModelError::BadWindow);
    }
    let d1 = space.d1_dims();
    match model {
        ProcessModel::HomogeneousPoisson { ell } => {
            let total = ell * window.mu_volume(space);
            let n = poisson_draw(rng, total);
            let points = (0..n).map(|_| sample_uniform_location(rng, space, window)).collect();
            Ok(PointPattern::new(points).expect("finite coordinates"))
        }
        ProcessModel::InhomogeneousPoisson { density } => {
            let total = density.integral_over(space, window);
            let n = poisson_draw(rng, total);
            let s_half_max = window.lo[..d1]
                .iter()
                .chain(&window.hi[..d1])
                .fold(0.0f64, |m, x| m.max(x.abs()));
            let envelope = density.sup_on(s_half_max, d1);
            let mut points = Vec::with_capacity(n as usize);
            for _ in 0..n {
                loop {
                    let p = sample_uniform_location(rng, space, window);
                    let val = density.eval(&p[..d1]);
                    if val > envelope * (1.0 + 1e-12) {
                        return Err(ModelError::EnvelopeViolation);
                    }
                    if envelope == 0.0 {
                        break;
                    }
                    let u: f64 = rng.gen_range(0.0f64..1.0);
                    if u * envelope < val {
                        points.push(p);
                        break;
                    }
                }
            }
            Ok(PointPattern::new(points).expect("finite coordinates"))
        }
        ProcessModel::ClusterBounded { parent_rate, count_dist, radius } => {
            let parent_window = window.inflate(*radius);
            let vol: f64 = parent_window
                .lo
                .iter()
                .zip(&parent_window.hi)
                .map(|(a, b)| b - a)
                .product();
            let n_parents = poisson_draw(rng, parent_rate * vol);
            let dim = space.total_dims();
            let mut points = Vec::new();
            for _ in 0..n_parents {
                let parent = uniform_in(rng, &parent_window);
                let size = count_dist.sample(rng);
                for _ in 0..size {
                    let offset = uniform_in_ball(rng, dim, *radius);
                    let p: Vec<f64> =
                        parent.iter().zip(&offset).map(|(a, b)| a + b).collect();
                    if window.contains(&p) {
                        points.push(p);
                    }
                }
            }
            Ok(PointPattern::new(points).expect("finite coordinates"))
        }
        ProcessModel::MarkovModulated { transition, rates } => {
            let pi = stationary_distribution(transition);
            let d2 = space.d2_dims();
            // Independent stationary chains along each compressed axis.
            let mut axis_states: Vec<Vec<usize>> = Vec::with_capacity(d2);
            let mut axis_sites: Vec<Vec<f64>> = Vec::with_capacity(d2);
            for axis in 0..d2 {
                let sites = site_positions(window.lo[d1 + axis], window.hi[d1 + axis]);
                let mut states = Vec::with_capacity(sites.len());
                let mut state = sample_from_state(rng, &pi);
                for i in 0..sites.len() {
                    if i > 0 {
                        state = sample_from_state(rng, &transition[state]);
                    }
                    states.push(state);
                }
                axis_states.push(states);
                axis_sites.push(sites);
            }
            let slab_vol: f64 = (0..d1).map(|r| window.hi[r] - window.lo[r]).product();
            let slab = Window::new(window.lo[..d1].to_vec(), window.hi[..d1].to_vec());
            let mut points = Vec::new();
            let counts_per_axis: Vec<usize> = axis_sites.iter().map(|s| s.len()).collect();
            if counts_per_axis.contains(&0) {
                return Ok(PointPattern::empty());
            }
            let mut index = vec![0usize; d2];
            loop {
                let rate: f64 = (0..d2).map(|a| rates[axis_states[a][index[a]]]).product();
                let n = poisson_draw(rng, rate * slab_vol);
                for _ in 0..n {
                    let mut p = uniform_in(rng, &slab);
                    for a in 0..d2 {
                        p.push(axis_sites[a][index[a]]);
                    }
                    points.push(p);
                }
                // mixed-radix increment
                let mut a = d2;
                loop {
                    if a == 0 {
                        break;
                    }
                    a -= 1;
                    index[a] += 1;
                    if index[a] < counts_per_axis[a] {
                        break;
                    }
                    index[a] = 0;
                    if a == 0 {
                        return Ok(PointPattern::new(points).expect("finite coordinates"));
                    }
                }
            }
        }
    }
}

fn sample_uniform_location(rng: &mut Stream, space: &SpaceConfig, window: &Window) -> Vec<f64> {
    let d1 = space.d1_dims();
    let mut p = Vec::with_capacity(space.total_dims());
    for r in 0..d1 {
        let (a, b) = (window.lo[r], window.hi[r]);
        p.push(if a == b { a } else { rng.gen_range(a..b) });
    }
    for s in d1..space.total_dims() {
        match space.mu2_kind() {
            Mu2Kind::Lebesgue => {
                let (a, b) = (window.lo[s], window.hi[s]);
                p.push(if a == b { a } else { rng.gen_range(a..b) });
            }
            Mu2Kind::Counting => {
                let sites = site_positions(window.lo[s], window.hi[s]);
                p.push(sites[rng.gen_range(0..sites.len())]);
            }
        }
    }
    p
}

/// Draws one realization from the replicate stream `(seed, 0)`.
pub fn sample(
    model: &ProcessModel,
    space: &SpaceConfig,
    window: &Window,
    seed: u64,
) -> Result<PointPattern, ModelError> {
    sample_with(model, space, window, &mut replicate_stream(seed, 0))
}

/// Expectation measure of the window: `E xi(window)`.
pub fn expectation_measure(
    model: &ProcessModel,
    space: &SpaceConfig,
    window: &Window,
) -> Result<f64, ModelError> {
    model.validate(space)?;
    Ok(match model {
        ProcessModel::HomogeneousPoisson { ell } => ell * window.mu_volume(space),
        ProcessModel::InhomogeneousPoisson { density } => density.integral_over(space, window),
        ProcessModel::ClusterBounded { parent_rate, count_dist, .. } => {
            parent_rate * count_dist.mean() * window.mu_volume(space)
        }
        ProcessModel::MarkovModulated { transition, rates } => {
            let pi = stationary_distribution(transition);
            let mean_rate: f64 = pi.iter().zip(rates).map(|(p, r)| p * r).sum();
            mean_rate.powi(space.d2_dims() as i32) * window.mu_volume(space)
        }
    })
}

/// Constant density of the model's expectation measure, where constant.
pub fn mean_density(model: &ProcessModel, space: &SpaceConfig) -> Option<f64> {
    match model {
        ProcessModel::HomogeneousPoisson { ell } => Some(*ell),
        ProcessModel::InhomogeneousPoisson { .. } => None,
        ProcessModel::ClusterBounded { parent_rate, count_dist, .. } => {
            Some(parent_rate * count_dist.mean())
        }
        ProcessModel::MarkovModulated { transition, rates } => {
            let pi = stationary_distribution(transition);
            let mean_rate: f64 = pi.iter().zip(rates).map(|(p, r)| p * r).sum();
            Some(mean_rate.powi(space.d2_dims() as i32))
        }
    }
}

/// Builds the condition certificate for a model over the window family
/// generated by `schedule` (the `T = 1` window is extremal for density
/// envelopes, since windows shrink in the stretched directions as `T` grows).
pub fn certificate_for(
    model: &ProcessModel,
    space: &SpaceConfig,
    schedule: &StretchSchedule,
) -> Result<ConditionCertificate, ModelError> {
    model.validate(space)?;
    let d1 = space.d1_dims();
    let s_half_max = (1.0 / schedule.eval(1.0)).powf(1.0 / d1 as f64);
    match model {
        ProcessModel::HomogeneousPoisson { ell } => ConditionCertificate::new(
            *ell,
            *ell,
            AlphaCheck::power(2.0 * ell * ell, 1.0)?,
            BetaCheck::Zero,
            MixingKind::Phi,
        ),
        ProcessModel::InhomogeneousPoisson { density } => {
            let kappa = density.sup_on(s_half_max, d1);
            let iota = density.inf_on(s_half_max, d1);
            ConditionCertificate::new(
                kappa,
                iota,
                AlphaCheck::power(2.0 * kappa * kappa, 1.0)?,
                BetaCheck::Zero,
                MixingKind::Phi,
            )
        }
        ProcessModel::ClusterBounded { parent_rate, count_dist, radius } => {
            let dim = space.total_dims();
            let mean = parent_rate * count_dist.mean();
            // Second-moment density of the cluster process is bounded by
            // mean^2 + parent_rate E[S(S-1)] sup(f*f) with f the uniform
            // ball density, so sup(f*f) <= 1/vol(ball). A factor-2 safety
            // margin guards the inflation step from measure v to volume;
            // verify_orderliness cross-checks the result empirically.
            let ball_vol = unit_ball_volume(dim) * radius.powi(dim as i32);
            let pair_density =
                mean * mean + parent_rate * count_dist.second_factorial_moment() / ball_vol;
            let c_alpha = 2.0 * (2.0 * pair_density);
            ConditionCertificate::new(
                mean,
                mean,
                AlphaCheck::power(c_alpha, 1.0)?,
                BetaCheck::FiniteRange { c: 1.0, u0: 2.0 * radius },
                MixingKind::Phi,
            )
        }
        ProcessModel::MarkovModulated { transition, rates } => {
            let pi = stationary_distribution(transition);
            let mean_rate: f64 = pi.iter().zip(rates).map(|(p, r)| p * r).sum();
            let d2 = space.d2_dims();
            let dens = mean_rate.powi(d2 as i32);
            let max_rate = rates.iter().fold(0.0f64, |m, r| m.max(*r));
            let delta = dobrushin_coefficient(transition);
            ConditionCertificate::new(
                dens,
                dens,
                AlphaCheck::power(2.0 * max_rate.powi(2 * d2 as i32), 1.0)?,
                BetaCheck::Geometric { c: d2 as f64, gamma: delta },
                MixingKind::Phi,
            )
        }
    }
}

/// One rectangle's worth of orderliness evidence.
#[derive(Debug, Clone)]
pub struct OrderlinessRow {
    /// The inflated-measure gauge `v` of the rectangle.
    pub v: f64,
    /// The certified ceiling `v * alpha(v)`.
    pub ceiling: f64,
    /// Monte Carlo estimate of `E[(xi(C))^2 1{xi(C) >= 2}]`.
    pub estimate: f64,
    pub standard_error: f64,
    /// `estimate / ceiling` (infinite when the ceiling is 0 but the
    /// estimate is not).
    pub ratio: f64,
    /// True when even the 3-sigma lower confidence bound exceeds the ceiling.
    pub violated: bool,
}

#[derive(Debug, Clone)]
pub struct OrderlinessReport {
    pub rows: Vec<OrderlinessRow>,
}

impl OrderlinessReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| !r.violated)
    }
}

/// Orderliness gauge `v(C) = mu1([a,b]) mu2([c, d+1])` for a rectangle.
pub fn condition2_gauge(space: &SpaceConfig, rect: &Window) -> f64 {
    let d1 = space.d1_dims();
    let mut v = 1.0;
    for r in 0..d1 {
        v *= rect.hi[r] - rect.lo[r];
    }
    for s in d1..space.total_dims() {
        v *= match space.mu2_kind() {
            Mu2Kind::Lebesgue => rect.hi[s] + 1.0 - rect.lo[s],
            Mu2Kind::Counting => {
                let (_, count) = lattice_site_range(rect.lo[s], rect.hi[s] + 1.0);
                count as f64
            }
        };
    }
    v
}

/// Estimates `E[(xi(C))^2 1{xi(C) >= 2}]` on each rectangle and compares it
/// against the certificate's ceiling `v alpha(v)`.
pub fn verify_orderliness(
    model: &ProcessModel,
    space: &SpaceConfig,
    certificate: &ConditionCertificate,
    rects: &[Window],
    mc_n: u64,
    seed: u64,
) -> Result<OrderlinessReport, ModelError> {
    if mc_n < 1000 {
        return Err(ModelError::TooFewReplicates(1000));
    }
    use rayon::prelude::*;
    let mut rows = Vec::with_capacity(rects.len());
    for (ri, rect) in rects.iter().enumerate() {
        let stats: Vec<f64> = (0..mc_n)
            .into_par_iter()
            .map(|rep| {
                let mut rng = replicate_stream(seed.wrapping_add(ri as u64), rep);
                let pat = sample_with(model, space, rect, &mut rng).expect("valid model");
                let n = pat.len() as f64;
                if n >= 2.0 {
                    n * n
                } else {
                    0.0
                }
            })
            .collect();
        let estimate = numeric::mean(&stats);
        let se = numeric::standard_error(&stats);
        let v = condition2_gauge(space, rect);
        let ceiling = v * certificate.alpha(v);
        let lower = estimate - 3.0 * se;
        let ratio = if ceiling > 0.0 {
            estimate / ceiling
        } else if estimate == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(OrderlinessRow {
            v,
            ceiling,
            estimate,
            standard_error: se,
            ratio,
            violated: lower > ceiling,
        });
    }
    Ok(OrderlinessReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::window_j_t;

    fn space11() -> SpaceConfig {
        SpaceConfig::lebesgue(1, 1).unwrap()
    }

    fn unit_window(d: usize) -> Window {
        Window::new(vec![0.0; d], vec![1.0; d])
    }

    #[test]
    fn zero_intensity_gives_empty_patterns() {
        let sp = space11();
        let model = ProcessModel::HomogeneousPoisson { ell: 0.0 };
        let pat = sample(&model, &sp, &unit_window(2), 1).unwrap();
        assert!(pat.is_empty());
    }

    #[test]
    fn sampling_is_deterministic_in_the_seed() {
        let sp = space11();
        let model = ProcessModel::ClusterBounded {
            parent_rate: 1.5,
            count_dist: ClusterCountDist::UniformRange { lo: 1, hi: 3 },
            radius: 0.4,
        };
        let w = unit_window(2);
        let a = sample(&model, &sp, &w, 9).unwrap();
        let b = sample(&model, &sp, &w, 9).unwrap();
        assert_eq!(a, b);
        let c = sample(&model, &sp, &w, 10).unwrap();
        // Overwhelmingly likely to differ.
        assert!(a != c || a.is_empty());
    }

    #[test]
    fn poisson_mean_count_matches() {
        let sp = space11();
        let model = ProcessModel::HomogeneousPoisson { ell: 2.0 };
        let w = unit_window(2);
        let n = 10_000u64;
        let counts: Vec<f64> =
            (0..n).map(|r| {
                let mut rng = replicate_stream(5, r);
                sample_with(&model, &sp, &w, &mut rng).unwrap().len() as f64
            }).collect();
        let mean = numeric::mean(&counts);
        let tol = 3.0 * (2.0f64 / n as f64).sqrt();
        assert!((mean - 2.0).abs() < tol, "mean {mean} outside {tol}");
    }

    #[test]
    fn expectation_measure_closed_forms() {
        let sp = space11();
        let w = unit_window(2);
        let m = ProcessModel::HomogeneousPoisson { ell: 3.0 };
        assert!((expectation_measure(&m, &sp, &w).unwrap() - 3.0).abs() < 1e-12);

        let quad = ProcessModel::InhomogeneousPoisson {
            density: DensitySpec::separable_quadratic(1.0, 1.0),
        };
        // int_0^1 (1 + s^2) ds = 4/3 over a unit compressed slab
        assert!((expectation_measure(&quad, &sp, &w).unwrap() - 4.0 / 3.0).abs() < 1e-12);

        let cl = ProcessModel::ClusterBounded {
            parent_rate: 2.0,
            count_dist: ClusterCountDist::Constant { n: 3 },
            radius: 0.5,
        };
        assert!((expectation_measure(&cl, &sp, &w).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn markov_modulated_certificate_and_sampling() {
        let sp = SpaceConfig::new(1, 1, Mu2Kind::Counting).unwrap();
        let model = ProcessModel::MarkovModulated {
            transition: vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            rates: vec![1.0, 3.0],
        };
        let cert = certificate_for(&model, &sp, &StretchSchedule::identity()).unwrap();
        // Symmetric chain: stationary (1/2, 1/2), mean rate 2.
        assert!((cert.kappa - 2.0).abs() < 1e-12);
        assert!((dobrushin_coefficient(&[vec![0.9, 0.1], vec![0.1, 0.9]]) - 0.8).abs() < 1e-12);
        assert!((cert.beta(0.0) - 1.0).abs() < 1e-12);
        assert!((cert.beta(1.0) - 0.8).abs() < 1e-12);
        assert!((cert.beta(2.5) - 0.64).abs() < 1e-12);

        let w = window_j_t(&sp, 2.0, 4.0);
        let mc = 4000u64;
        let counts: Vec<f64> = (0..mc)
            .map(|r| {
                let mut rng = replicate_stream(3, r);
                sample_with(&model, &sp, &w, &mut rng).unwrap().len() as f64
            })
            .collect();
        let expect = expectation_measure(&model, &sp, &w).unwrap();
        let se = numeric::standard_error(&counts);
        assert!(
            (numeric::mean(&counts) - expect).abs() < 4.0 * se + 1e-9,
            "mean {} vs {}",
            numeric::mean(&counts),
            expect
        );
    }

    #[test]
    fn regularity_witness_verification() {
        let good = DensitySpec::separable_quadratic(1.0, 0.5);
        assert_eq!(good.regularity_holds_on(1.0, 2, 500, 3), Some(true));

        // Claiming a Lipschitz witness (z = 1) with too small a constant for
        // the quadratic growth over a wide box must be caught.
        let mut lying = DensitySpec::separable_quadratic(1.0, 2.0);
        lying.regularity = Some(Regularity { l: 0.1, z: 2.0 });
        assert_eq!(lying.regularity_holds_on(1.0, 1, 500, 4), Some(false));

        let mut silent = DensitySpec::constant(1.0);
        silent.regularity = None;
        assert_eq!(silent.regularity_holds_on(1.0, 1, 10, 5), None);
    }

    #[test]
    fn cluster_certificate_has_finite_range() {
        let sp = space11();
        let model = ProcessModel::ClusterBounded {
            parent_rate: 1.0,
            count_dist: ClusterCountDist::Constant { n: 2 },
            radius: 0.5,
        };
        let cert = certificate_for(&model, &sp, &StretchSchedule::identity()).unwrap();
        assert_eq!(cert.beta(1.0), 0.0);
        assert_eq!(cert.beta(0.99), 1.0);
        assert_eq!(cert.mixing_kind, MixingKind::Phi);
    }

    #[test]
    fn certificate_mixing_conversions() {
        let cert = ConditionCertificate::new(
            1.0,
            1.0,
            AlphaCheck::zero(),
            BetaCheck::Geometric { c: 1.0, gamma: 0.25 },
            MixingKind::Phi,
        )
        .unwrap();
        assert!((cert.mixing_decay(MixingKind::Phi, 2.0).unwrap() - 0.0625).abs() < 1e-15);
        assert!((cert.mixing_decay(MixingKind::Beta, 2.0).unwrap() - 0.0625).abs() < 1e-15);
        // rho via 2 sqrt(phi)
        assert!((cert.mixing_decay(MixingKind::Rho, 2.0).unwrap() - 0.5).abs() < 1e-15);

        let beta_only = ConditionCertificate::new(
            1.0,
            1.0,
            AlphaCheck::zero(),
            BetaCheck::Zero,
            MixingKind::Beta,
        )
        .unwrap();
        assert!(beta_only.mixing_decay(MixingKind::Rho, 1.0).is_err());
    }

    #[test]
    fn orderliness_holds_for_poisson_and_flags_bad_certificates() {
        let sp = space11();
        let model = ProcessModel::HomogeneousPoisson { ell: 1.0 };
        let cert = certificate_for(&model, &sp, &StretchSchedule::identity()).unwrap();
        let rect = Window::new(vec![0.0, 0.0], vec![0.05, 1.0]);
        let report =
            verify_orderliness(&model, &sp, &cert, std::slice::from_ref(&rect), 4000, 7).unwrap();
        assert!(report.all_pass());

        // Closed form E[N^2 1{N>=2}] = lam^2 + lam(1 - e^{-lam}) with lam = 0.05.
        let lam = 0.05f64;
        let closed = lam * lam + lam * (1.0 - (-lam).exp());
        let row = &report.rows[0];
        assert!((row.estimate - closed).abs() < 4.0 * row.standard_error + 1e-6);

        // Deliberately wrong certificate alpha(v) = v^3 must be flagged:
        // the ceiling v * v^3 is far below the closed-form moment.
        let wrong = ConditionCertificate::new(
            1.0,
            1.0,
            AlphaCheck::power(1.0, 3.0).unwrap(),
            BetaCheck::Zero,
            MixingKind::Phi,
        )
        .unwrap();
        let report = verify_orderliness(&model, &sp, &wrong, &[rect], 20_000, 8).unwrap();
        assert!(!report.all_pass());
    }

    #[test]
    fn zero_model_trivially_orderly() {
        let sp = space11();
        let model = ProcessModel::HomogeneousPoisson { ell: 0.0 };
        let cert = certificate_for(&model, &sp, &StretchSchedule::identity()).unwrap();
        let rect = Window::new(vec![0.0, 0.0], vec![0.5, 2.0]);
        let report = verify_orderliness(&model, &sp, &cert, &[rect], 1000, 1).unwrap();
        assert!(report.all_pass());
        assert_eq!(report.rows[0].estimate, 0.0);
    }

    #[test]
    fn disjoint_poisson_boxes_are_uncorrelated() {
        let sp = space11();
        let model = ProcessModel::HomogeneousPoisson { ell: 4.0 };
        let w = Window::new(vec![0.0, 0.0], vec![1.0, 2.0]);
        let a = Window::new(vec![0.0, 0.0], vec![1.0, 1.0]);
        let b = Window::new(vec![0.0, 1.0], vec![1.0, 2.0]);
        let mc = 4000u64;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for rep in 0..mc {
            let mut rng = replicate_stream(21, rep);
            let pat = sample_with(&model, &sp, &w, &mut rng).unwrap();
            xs.push(pat.restricted(&a).len() as f64);
            ys.push(pat.restricted(&b).len() as f64);
        }
        let corr = numeric::correlation(&xs, &ys).abs();
        assert!(corr < 3.0 / (mc as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn cluster_slabs_beyond_range_are_independent() {
        let sp = space11();
        let model = ProcessModel::ClusterBounded {
            parent_rate: 3.0,
            count_dist: ClusterCountDist::UniformRange { lo: 1, hi: 4 },
            radius: 0.3,
        };
        let w = Window::new(vec![0.0, 0.0], vec![1.0, 3.0]);
        // Slabs separated by more than 2R = 0.6 in the compressed axis.
        let a = Window::new(vec![0.0, 0.0], vec![1.0, 1.0]);
        let b = Window::new(vec![0.0, 2.0], vec![1.0, 3.0]);
        let mc = 4000u64;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for rep in 0..mc {
            let mut rng = replicate_stream(22, rep);
            let pat = sample_with(&model, &sp, &w, &mut rng).unwrap();
            xs.push(pat.restricted(&a).len() as f64);
            ys.push(pat.restricted(&b).len() as f64);
        }
        let corr = numeric::correlation(&xs, &ys).abs();
        assert!(corr < 3.0 / (mc as f64).sqrt(), "corr {corr}");
    }
}
