//! Assembly of the explicit distance bounds from a condition certificate.
//!
//! Every bound is a sum of labelled nonnegative terms; the report keeps the
//! per-term breakdown so sweeps can show which term dominates where. The
//! available assemblies:
//!
//! * [`TheoremKind::PrincipalSharp`] — the term-by-term transport bound with
//!   intensity-damped Stein factors;
//! * [`TheoremKind::PrincipalRough`] — the rougher variant with uniform
//!   constants (infinite when the intensity slack blows up);
//! * [`TheoremKind::BetaMixing`] / [`TheoremKind::PhiMixing`] — the same
//!   chassis with the mixing term re-derived for beta / phi coefficients,
//!   trading the `sqrt(T h)` growth for `sqrt(w T)` resp. `sqrt(T/w)`;
//! * [`TheoremKind::CountTv`] — total variation between window counts (no
//!   discretization-move terms, no log factors);
//! * [`TheoremKind::VolumePreserving`] — transport bound for the
//!   volume-preserving transform on the enlarged window;
//! * [`TheoremKind::FixedIntensity`] — approximation by the fixed Poisson
//!   process with the density frozen at the origin (adds a density-gap term).
//!
//! [`rate_exponent`] computes the exact asymptotic decay exponent of the
//! bound totals for power-law certificate families by minimizing the
//! per-term exponents over the discretization parameters, and
//! [`optimize_parameters`] does the finite-`T` analogue on value grids.

pub use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ceil_snapped, SpaceConfig, StretchSchedule};
use crate::models::{ConditionCertificate, MixingKind, ModelError, Regularity};
use crate::numeric::unit_ball_volume;
use crate::stein::log_plus;

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error("argument must be positive")]
    NonpositiveArgument,
    #[error("T, h must satisfy T >= 1, h >= 1 and w(T) >= 1")]
    BadParameters,
    #[error("certificate lower density bound iota must be positive for this bound")]
    IotaRequired,
    #[error("fixed-intensity bound requires density regularity parameters")]
    RegularityRequired,
    #[error("empty optimization grid")]
    EmptyGrid,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `1 + max(ln x, 0)`, natural logarithm.
pub fn log_up(x: f64) -> Result<f64, BoundError> {
    if x <= 0.0 {
        return Err(BoundError::NonpositiveArgument);
    }
    Ok(1.0 + log_plus(x))
}

/// Which bound to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremKind {
    PrincipalSharp,
    PrincipalRough,
    BetaMixing,
    PhiMixing,
    CountTv,
    VolumePreserving,
    FixedIntensity,
}

impl TheoremKind {
    pub fn label(&self) -> &'static str {
        match self {
            TheoremKind::PrincipalSharp => "principal-sharp",
            TheoremKind::PrincipalRough => "principal-rough",
            TheoremKind::BetaMixing => "beta-mixing",
            TheoremKind::PhiMixing => "phi-mixing",
            TheoremKind::CountTv => "count-tv",
            TheoremKind::VolumePreserving => "volume-preserving",
            TheoremKind::FixedIntensity => "fixed-intensity",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Some(match s {
            "principal-sharp" => TheoremKind::PrincipalSharp,
            "principal-rough" => TheoremKind::PrincipalRough,
            "beta-mixing" => TheoremKind::BetaMixing,
            "phi-mixing" => TheoremKind::PhiMixing,
            "count-tv" => TheoremKind::CountTv,
            "volume-preserving" => TheoremKind::VolumePreserving,
            "fixed-intensity" => TheoremKind::FixedIntensity,
            _ => return None,
        })
    }

    /// Mixing kind the assembly consumes; certificates of stronger kinds are
    /// converted by [`ConditionCertificate::mixing_decay`].
    pub fn required_mixing(&self) -> MixingKind {
        match self {
            TheoremKind::BetaMixing => MixingKind::Beta,
            TheoremKind::PhiMixing => MixingKind::Phi,
            _ => MixingKind::Rho,
        }
    }
}

/// Everything needed to evaluate one bound at one parameter point.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    pub space: SpaceConfig,
    pub schedule: StretchSchedule,
    pub t: f64,
    pub h: f64,
    pub m: u64,
    pub certificate: ConditionCertificate,
    pub theorem: TheoremKind,
    /// Density regularity `(L, z)`, needed by the fixed-intensity bound.
    pub regularity: Option<Regularity>,
}

/// Auxiliary quantities the bound evaluation passed through.
#[derive(Debug, Clone, Copy)]
pub struct BoundAuxiliaries {
    /// Intensity slack `epsilon(T)` (infinite when the orderliness correction
    /// eats the whole lower density bound).
    pub epsilon: f64,
    /// Lower bound on the total indicator intensity.
    pub lambda_lower: f64,
    /// Evaluated stretch `w(T)`.
    pub w_of_t: f64,
    /// Upper bound `kappa * 2^D T / w` on the window expectation.
    pub nu_upper: f64,
    /// The damped main Stein factor (`min` of 1 and the slack-corrected
    /// logarithmic factor) used by the sharp assemblies.
    pub stein_factor: f64,
}

/// A per-term breakdown of one bound.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub theorem: TheoremKind,
    pub t: f64,
    pub h: f64,
    pub m: u64,
    pub terms: Vec<(&'static str, f64)>,
    /// Raw sum of the terms; may exceed 1.
    pub total: f64,
    /// `min(total, 1)` — every target distance is bounded by 1.
    pub total_clamped: f64,
    pub aux: BoundAuxiliaries,
}

impl BoundReport {
    pub fn term(&self, label: &str) -> f64 {
        self.terms
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, v)| *v)
            .unwrap_or(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

/// Per-cell gap between expected count and hit probability:
/// `2^{D2-2} (wh)^{-1} alpha(2^{D2}/(wh))`.
pub fn cell_gap_bound(cert: &ConditionCertificate, space: &SpaceConfig, w: f64, h: f64) -> f64 {
    let d2 = space.d2_dims() as i32;
    let wh = w * h;
    2f64.powi(d2 - 2) / wh * cert.alpha(2f64.powi(d2) / wh)
}

/// Intensity slack `epsilon(T)`: the relative loss in the lower intensity
/// bound caused by the orderliness correction. Infinite when the correction
/// exceeds the density floor.
pub fn lambda_slack(
    cert: &ConditionCertificate,
    space: &SpaceConfig,
    w: f64,
    h: f64,
) -> Result<f64, BoundError> {
    if cert.iota <= 0.0 {
        return Err(BoundError::IotaRequired);
    }
    Ok(lambda_slack_lenient(cert, space, w, h))
}

fn lambda_slack_lenient(cert: &ConditionCertificate, space: &SpaceConfig, w: f64, h: f64) -> f64 {
    let d = space.total_dims() as i32;
    let d2 = space.d2_dims() as i32;
    if cert.iota <= 0.0 {
        return f64::INFINITY;
    }
    let correction = 2f64.powi(d + d2 - 2) / cert.iota * cert.alpha(2f64.powi(d2) / (w * h));
    if correction < 1.0 {
        1.0 / (1.0 - correction) - 1.0
    } else {
        f64::INFINITY
    }
}

/// Lower bound `2^D (T/w) (iota - 2^{D+D2-2} alpha(2^{D2}/(wh))) v 0` on the
/// total indicator intensity.
pub fn lambda_lower_bound(
    cert: &ConditionCertificate,
    space: &SpaceConfig,
    t: f64,
    w: f64,
    h: f64,
) -> f64 {
    let d = space.total_dims() as i32;
    let d2 = space.d2_dims() as i32;
    let inner = cert.iota - 2f64.powi(d + d2 - 2) * cert.alpha(2f64.powi(d2) / (w * h));
    (2f64.powi(d) * (t / w) * inner).max(0.0)
}

/// Product that treats a zero decay factor as killing the term even when the
/// other factor is infinite; the term is zero for every finite slack.
fn damp(factor: f64, term: f64) -> f64 {
    if term == 0.0 {
        0.0
    } else {
        factor * term
    }
}

/// Evaluates the selected bound. Totals are reported unclamped with a
/// separate clamped field.
pub fn evaluate(inputs: &BoundInputs) -> Result<BoundReport, BoundError> {
    let space = &inputs.space;
    let cert = &inputs.certificate;
    let t = inputs.t;
    let h = inputs.h;
    let m = inputs.m;
    let w = inputs.schedule.eval(t);
    if t < 1.0 || h < 1.0 || w < 1.0 {
        return Err(BoundError::BadParameters);
    }

    let d1 = space.d1_dims() as f64;
    let d2 = space.d2_dims() as f64;
    let di = space.total_dims() as i32;
    let d1i = space.d1_dims() as i32;
    let d2i = space.d2_dims() as i32;
    let kappa = cert.kappa;
    let iota = cert.iota;
    let mf = m as f64;

    let eps = lambda_slack_lenient(cert, space, w, h);
    let lambda_low = lambda_lower_bound(cert, space, t, w, h);
    let nu_upper = kappa * 2f64.powi(di) * t / w;

    // Orderliness evaluations shared by the assemblies.
    let alpha_cells = cert.alpha(2f64.powi(d2i) / (w * h));
    let two_m1 = (2.0 * mf + 1.0).powf(d2);
    let alpha_sections = cert.alpha(2f64.powi(di) * two_m1 / w);

    // Mixing decay at the buffer width m, under the kind this assembly needs;
    // beyond the grid extent the weak field is empty and the defect vanishes.
    let n2 = ceil_snapped(t.powf(1.0 / d2)) as u64 - 1;
    let beta_m = if m > 2 * n2 + 1 {
        0.0
    } else {
        cert.mixing_decay(inputs.theorem.required_mixing(), mf)?
    };

    // Stein factors. The damped main factor uses the intensity slack; with
    // infinite slack both collapse to 1.
    let log_arg = 2f64.powi(di - 1) * kappa * t / w;
    let log_up_val = log_up(log_arg)?;
    let main_factor_sharp = if iota > 0.0 {
        1.0f64.min(2.0 * (1.0 + eps) * w / (2f64.powi(di) * iota * t) * (1.0 + 2.0 * log_plus(log_arg)))
    } else {
        1.0
    };
    let defect_factor_sharp = if iota > 0.0 {
        1.0f64.min(1.65 * (1.0 + eps).sqrt() * (w / (2f64.powi(di) * iota * t)).sqrt())
    } else {
        1.0
    };
    let aux = BoundAuxiliaries {
        epsilon: eps,
        lambda_lower: lambda_low,
        w_of_t: w,
        nu_upper,
        stein_factor: main_factor_sharp,
    };

    let move_d1 = d1.sqrt() / h.powf(1.0 / d1);
    let move_d2 = d2.sqrt() / t.powf(1.0 / d2);

    let strong_sharp = main_factor_sharp * 2f64.powi(2 * di + 2 * d1i) * kappa * kappa * t * two_m1
        / (w * w);
    let cells_full = 2f64.powi(2 * di + d2i - 1) * (t / w) * alpha_cells;
    let sections_sharp = damp(
        main_factor_sharp,
        2f64.powi(di + d2i) * (t.powf(1.0 / d2) + mf + 1.0).powf(d2) / w * alpha_sections,
    );
    let mixing_sharp = damp(
        defect_factor_sharp,
        2f64.powi(2 * di) * kappa.sqrt() * (h / w).sqrt() * t * beta_m,
    );

    let mut terms: Vec<(&'static str, f64)> = Vec::new();
    match inputs.theorem {
        TheoremKind::PrincipalSharp => {
            terms.push(("discretization_d1", move_d1));
            terms.push(("discretization_d2", move_d2));
            terms.push(("strong_neighborhood", strong_sharp));
            terms.push(("orderliness_cells", cells_full));
            terms.push(("orderliness_sections", sections_sharp));
            terms.push(("mixing", mixing_sharp));
        }
        TheoremKind::PrincipalRough => {
            if iota <= 0.0 {
                return Err(BoundError::IotaRequired);
            }
            let strong = 2f64.powi(di + 2 * d1i + 2) * kappa * kappa / iota * (1.0 + eps)
                * log_up_val
                * two_m1
                / w;
            let sections = damp(
                2f64.powi(d2i + 2) * 5f64.powi(d2i) / iota * (1.0 + eps) * log_up_val,
                alpha_sections,
            );
            let mixing = damp(
                2f64.powf(1.5 * di as f64 + 1.0) * (kappa / iota).sqrt() * (1.0 + eps).sqrt(),
                (t * h).sqrt() * beta_m,
            );
            terms.push(("discretization_d1", move_d1));
            terms.push(("discretization_d2", move_d2));
            terms.push(("strong_neighborhood", strong));
            terms.push(("orderliness_cells", cells_full));
            terms.push(("orderliness_sections", sections));
            terms.push(("mixing", mixing));
        }
        TheoremKind::BetaMixing => {
            // Per-column defect sums give 2 beta(m) plus an orderliness part
            // alpha(2^D/w); the column count is bounded by 2^{2 D2} T.
            let columns = 2f64.powi(2 * d2i) * t;
            let mixing = damp(defect_factor_sharp, columns * 2.0 * beta_m);
            let alpha_col = cert.alpha(2f64.powi(di) / w);
            let mixing_orderliness = if m > 2 * n2 + 1 {
                0.0
            } else {
                damp(defect_factor_sharp, columns * 2f64.powi(di + 1) / w * alpha_col)
            };
            terms.push(("discretization_d1", move_d1));
            terms.push(("discretization_d2", move_d2));
            terms.push(("strong_neighborhood", strong_sharp));
            terms.push(("orderliness_cells", cells_full));
            terms.push(("orderliness_sections", sections_sharp));
            terms.push(("mixing", mixing));
            terms.push(("mixing_orderliness", mixing_orderliness));
        }
        TheoremKind::PhiMixing => {
            // Each defect is bounded by 2 beta(m) kappa / (h w); summed over
            // at most 4^D T h cells.
            let mixing = damp(
                defect_factor_sharp,
                2f64.powi(2 * di + 1) * kappa * (t / w) * beta_m,
            );
            terms.push(("discretization_d1", move_d1));
            terms.push(("discretization_d2", move_d2));
            terms.push(("strong_neighborhood", strong_sharp));
            terms.push(("orderliness_cells", cells_full));
            terms.push(("orderliness_sections", sections_sharp));
            terms.push(("mixing", mixing));
        }
        TheoremKind::CountTv => {
            let cells_xi = 2f64.powi(2 * di + d2i - 2) * (t / w) * alpha_cells;
            let poisson_factor = if iota > 0.0 {
                1.0f64.min(2f64.powf(-(di as f64) / 2.0) * (w / (iota * t)).sqrt())
            } else {
                1.0
            };
            let cells_poisson = damp(poisson_factor, cells_xi);
            let main_factor = if lambda_low > 0.0 { 1.0f64.min(1.0 / lambda_low) } else { 1.0 };
            let defect_factor =
                if lambda_low > 0.0 { 1.0f64.min(1.0 / lambda_low.sqrt()) } else { 1.0 };
            let strong =
                main_factor * 2f64.powi(2 * di + 2 * d1i) * kappa * kappa * t * two_m1 / (w * w);
            let sections = damp(
                main_factor,
                2f64.powi(di + d2i) * (t.powf(1.0 / d2) + mf + 1.0).powf(d2) / w * alpha_sections,
            );
            let mixing = damp(
                defect_factor,
                2f64.powi(2 * di) * kappa.sqrt() * (h / w).sqrt() * t * beta_m,
            );
            terms.push(("orderliness_cells", cells_xi));
            terms.push(("orderliness_cells_poisson", cells_poisson));
            terms.push(("strong_neighborhood", strong));
            terms.push(("orderliness_sections", sections));
            terms.push(("mixing", mixing));
        }
        TheoremKind::VolumePreserving => {
            let stretch = (t / w).powf(1.0 / d1);
            terms.push(("discretization_d1", stretch * move_d1));
            terms.push(("discretization_d2", move_d2));
            terms.push(("strong_neighborhood", strong_sharp));
            terms.push(("orderliness_cells", cells_full));
            terms.push(("orderliness_sections", sections_sharp));
            terms.push(("mixing", mixing_sharp));
        }
        TheoremKind::FixedIntensity => {
            let reg = inputs.regularity.ok_or(BoundError::RegularityRequired)?;
            let stretch = (t / w).powf(1.0 / d1);
            let tau = unit_ball_volume(space.d1_dims());
            let gap = 2f64.powf((reg.z + d1 + 2.0 * d2) / 2.0) * (d1 / (reg.z + d1))
                * reg.l
                * tau
                * t
                / w.powf(1.0 + reg.z / d1);
            terms.push(("discretization_d1", stretch * move_d1));
            terms.push(("discretization_d2", move_d2));
            terms.push(("strong_neighborhood", strong_sharp));
            terms.push(("orderliness_cells", cells_full));
            terms.push(("orderliness_sections", sections_sharp));
            terms.push(("mixing", mixing_sharp));
            terms.push(("fixed_intensity_gap", gap));
        }
    }

    let total: f64 = terms.iter().map(|(_, v)| *v).sum();
    Ok(BoundReport {
        theorem: inputs.theorem,
        t,
        h,
        m,
        terms,
        total,
        total_clamped: total.min(1.0),
        aux,
    })
}

/// Exhaustive grid minimization of the selected bound's total over `(m, h)`,
/// tie-breaking toward smaller `m`, then smaller `h`.
pub fn optimize_parameters(
    base: &BoundInputs,
    m_grid: &[u64],
    h_grid: &[f64],
) -> Result<(u64, f64, BoundReport), BoundError> {
    if m_grid.is_empty() || h_grid.is_empty() {
        return Err(BoundError::EmptyGrid);
    }
    let mut best: Option<(u64, f64, BoundReport)> = None;
    let mut ms = m_grid.to_vec();
    ms.sort_unstable();
    ms.dedup();
    let mut hs = h_grid.to_vec();
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    for &m in &ms {
        for &h in &hs {
            let mut inputs = base.clone();
            inputs.m = m;
            inputs.h = h;
            let report = evaluate(&inputs)?;
            let better = match &best {
                None => true,
                Some((_, _, b)) => report.total < b.total,
            };
            if better {
                best = Some((m, h, report));
            }
        }
    }
    Ok(best.expect("nonempty grids"))
}

/// The `m` grid used by sweeps: 0, 1 and doubling values up to the grid
/// extent in the compressed directions.
pub fn auto_m_grid(t: f64, space: &SpaceConfig) -> Vec<u64> {
    let cap = ceil_snapped(t.powf(1.0 / space.d2_dims() as f64)) as u64;
    let mut grid = vec![0u64, 1];
    let mut v = 2u64;
    while v < cap {
        grid.push(v);
        v *= 2;
    }
    grid.push(cap);
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// The `h` grid used by sweeps: `1, sqrt(T), T, T^{3/2}`.
pub fn auto_h_grid(t: f64) -> Vec<f64> {
    let mut grid = vec![1.0, t.sqrt(), t, t.powf(1.5)];
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Which vanishing criterion to check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvergenceWhich {
    /// Transport bound on the fixed window.
    Principal,
    /// Transport bound for the volume-preserving transform.
    VolumePreserving,
    /// Fixed-intensity approximation; needs the regularity exponent.
    FixedIntensity { z: f64, d1_dims: usize },
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub holds: bool,
    /// The mixing strength `1 + s` must exceed this value.
    pub threshold: f64,
    /// Human-readable description of the binding constraint.
    pub binding: String,
}

/// Checks the sufficient conditions for the bound totals to vanish as
/// `T -> infinity`, for `w(T) >= k T^delta`, `alpha(v) = O(v^r)` and
/// `beta(u) = O(u^{-(1+s) D2 / 2})`.
pub fn convergence_check(
    delta: f64,
    r: f64,
    s_plus_one: f64,
    which: ConvergenceWhich,
) -> ConvergenceReport {
    assert!(delta > 0.0 && delta <= 1.0, "delta must lie in (0, 1]");
    assert!(r > 0.0, "orderliness exponent must be positive");
    let product = (1.0 - delta) / delta * (1.0 + r) / r;
    let threshold = match which {
        ConvergenceWhich::Principal => product.max(1.0 / delta),
        ConvergenceWhich::VolumePreserving | ConvergenceWhich::FixedIntensity { .. } => {
            product.max((2.0 - delta) / delta)
        }
    };
    let mut holds = s_plus_one > threshold;
    let mut binding = if product >= threshold {
        "orderliness/stretch trade-off".to_string()
    } else {
        "direct mixing strength".to_string()
    };
    if let ConvergenceWhich::FixedIntensity { z, d1_dims } = which {
        let z_needed = (1.0 - delta) / delta * d1_dims as f64;
        if z <= z_needed {
            holds = false;
            binding = format!("regularity exponent must exceed {z_needed}");
        }
    }
    ConvergenceReport { holds, threshold, binding }
}

/// Power-law certificate families for the exact rate computation:
/// `alpha(v) = c v^r`, `beta(u) ~ u^{-b}`, `w(T) = k T^delta`.
#[derive(Debug, Clone, Copy)]
pub struct RateFamilies {
    pub alpha_r: Rational64,
    pub beta_decay: Rational64,
    pub w_delta: Rational64,
}

/// A term exponent `a + bq * q + cx * x` as a linear function of the
/// discretization exponents (`h = T^q`, `m = T^x`).
#[derive(Debug, Clone, Copy)]
struct LinExp {
    a: Rational64,
    bq: Rational64,
    cx: Rational64,
}

/// Exact asymptotic exponent of the bound total in `T` after optimizing the
/// discretization parameters, for the given mixing kind. Logarithmic factors
/// are sub-polynomial and ignored.
pub fn rate_exponent(
    families: &RateFamilies,
    kind: MixingKind,
    d1_dims: usize,
    d2_dims: usize,
) -> Rational64 {
    rate_exponent_with_params(families, kind, d1_dims, d2_dims).0
}

/// As [`rate_exponent`], additionally returning the optimizing exponents
/// `(q, x)` with `h = T^q` and `m = T^x`.
pub fn rate_exponent_with_params(
    families: &RateFamilies,
    kind: MixingKind,
    d1_dims: usize,
    d2_dims: usize,
) -> (Rational64, Rational64, Rational64) {
    let r = families.alpha_r;
    let b = families.beta_decay;
    let delta = families.w_delta;
    let one = Rational64::one();
    let d1 = Rational64::from_integer(d1_dims as i64);
    let d2 = Rational64::from_integer(d2_dims as i64);
    let half = Rational64::new(1, 2);

    let mut terms = vec![
        // discretization moves
        LinExp { a: Rational64::zero(), bq: -one / d1, cx: Rational64::zero() },
        LinExp { a: -one / d2, bq: Rational64::zero(), cx: Rational64::zero() },
        // strong neighbourhood: m^{D2} / w and 1 / w
        LinExp { a: -delta, bq: Rational64::zero(), cx: d2 },
        LinExp { a: -delta, bq: Rational64::zero(), cx: Rational64::zero() },
        // per-cell orderliness: (T/w) alpha(2^{D2} / (w h))
        LinExp { a: one - delta - r * delta, bq: -r, cx: Rational64::zero() },
        // section orderliness: alpha(2^D (2m+1)^{D2} / w)
        LinExp { a: -r * delta, bq: Rational64::zero(), cx: r * d2 },
    ];
    match kind {
        MixingKind::Rho => {
            // sqrt(T h) beta(m)
            terms.push(LinExp { a: half, bq: half, cx: -b });
        }
        MixingKind::Beta => {
            // sqrt(T/w) alpha(2^D / w) and sqrt(w T) beta(m)
            terms.push(LinExp {
                a: (one - delta) * half - r * delta,
                bq: Rational64::zero(),
                cx: Rational64::zero(),
            });
            terms.push(LinExp { a: (one + delta) * half, bq: Rational64::zero(), cx: -b });
        }
        MixingKind::Phi => {
            // sqrt(T/w) beta(m)
            terms.push(LinExp { a: (one - delta) * half, bq: Rational64::zero(), cx: -b });
        }
    }
    minimize_max_exponent(&terms)
}

/// Minimizes `max_t (a_t + bq_t q + cx_t x)` over `q, x >= 0` exactly, by
/// enumerating basic solutions of the associated linear program. Returns the
/// optimum and one pair of minimizers.
fn minimize_max_exponent(terms: &[LinExp]) -> (Rational64, Rational64, Rational64) {
    // Constraints in (z, q, x): z - bq q - cx x >= a for each term, plus the
    // box 0 <= q, x <= BIG. The optimum of the LP is attained at a basic
    // point; enumerate all 3-subsets of tight constraints.
    let big = Rational64::from_integer(1000);
    struct Row {
        // cz z + cq q + cx x = rhs when tight
        cz: Rational64,
        cq: Rational64,
        cx: Rational64,
        rhs: Rational64,
    }
    let mut rows: Vec<Row> = terms
        .iter()
        .map(|t| Row { cz: Rational64::one(), cq: -t.bq, cx: -t.cx, rhs: t.a })
        .collect();
    let zero = Rational64::zero();
    let one = Rational64::one();
    rows.push(Row { cz: zero, cq: one, cx: zero, rhs: zero }); // q = 0
    rows.push(Row { cz: zero, cq: zero, cx: one, rhs: zero }); // x = 0
    rows.push(Row { cz: zero, cq: one, cx: zero, rhs: big }); // q = BIG
    rows.push(Row { cz: zero, cq: zero, cx: one, rhs: big }); // x = BIG

    let feasible = |z: Rational64, q: Rational64, x: Rational64| -> bool {
        if q < zero || x < zero || q > big || x > big {
            return false;
        }
        terms.iter().all(|t| z >= t.a + t.bq * q + t.cx * x)
    };

    let n = rows.len();
    let mut best: Option<(Rational64, Rational64, Rational64)> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let m = [
                    [rows[i].cz, rows[i].cq, rows[i].cx, rows[i].rhs],
                    [rows[j].cz, rows[j].cq, rows[j].cx, rows[j].rhs],
                    [rows[k].cz, rows[k].cq, rows[k].cx, rows[k].rhs],
                ];
                if let Some((z, q, x)) = solve3(&m) {
                    if feasible(z, q, x) && best.is_none_or(|(b, _, _)| z < b) {
                        best = Some((z, q, x));
                    }
                }
            }
        }
    }
    best.expect("the exponent program is always feasible")
}

/// Solves a 3x3 rational linear system given as rows `[a, b, c | d]`.
fn solve3(m: &[[Rational64; 4]; 3]) -> Option<(Rational64, Rational64, Rational64)> {
    let det = |a: &[[Rational64; 3]; 3]| -> Rational64 {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let base = [
        [m[0][0], m[0][1], m[0][2]],
        [m[1][0], m[1][1], m[1][2]],
        [m[2][0], m[2][1], m[2][2]],
    ];
    let d = det(&base);
    if d.is_zero() {
        return None;
    }
    let mut cols = Vec::with_capacity(3);
    for c in 0..3 {
        let mut a = base;
        for r in 0..3 {
            a[r][c] = m[r][3];
        }
        cols.push(det(&a) / d);
    }
    Some((cols[0], cols[1], cols[2]))
}

/// Exponent as a float, for slope comparisons.
pub fn rational_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Per-term comparison of two reports sharing labels; used by the logged
/// (non-asserted) rough-vs-sharp and count-vs-transport comparisons.
pub fn compare_reports<'a>(
    a: &'a BoundReport,
    b: &'a BoundReport,
) -> Vec<(&'static str, f64, f64)> {
    let mut out = Vec::new();
    for (label, va) in &a.terms {
        let vb = b.term(label);
        out.push((*label, *va, vb));
    }
    for (label, vb) in &b.terms {
        if a.terms.iter().all(|(l, _)| l != label) {
            out.push((*label, 0.0, *vb));
        }
    }
    out
}
