//! Strict experiment configuration: a single TOML file with nested tables.
//! Unknown keys are rejected everywhere; fields that drive the mathematics
//! have no silent defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use steinpp::bounds::TheoremKind;
use steinpp::geometry::{Mu2Kind, SpaceConfig, StretchSchedule};
use steinpp::models::{
    AlphaCheck, BetaCheck, ClusterCountDist, ConditionCertificate, DensitySpec, MixingKind,
    ProcessModel,
};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    BoundSweep,
    DominationCounts,
    DominationD2Slope,
    DensityExperiment,
    LrdSizePower,
    ValidateModel,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::BoundSweep => "bound_sweep",
            ExperimentKind::DominationCounts => "domination_counts",
            ExperimentKind::DominationD2Slope => "domination_d2_slope",
            ExperimentKind::DensityExperiment => "density_experiment",
            ExperimentKind::LrdSizePower => "lrd_size_power",
            ExperimentKind::ValidateModel => "validate_model",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub d1: usize,
    pub d2: usize,
    pub mu2: Mu2Section,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mu2Section {
    Lebesgue,
    Counting,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub k: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub t_values: Vec<f64>,
    /// Buffer-width grid; omit for the documented auto policy.
    pub m_values: Option<Vec<u64>>,
    /// Discretization-depth grid; omit for the documented auto policy.
    pub h_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    pub theorem: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum CountSection {
    Constant { n: u64 },
    UniformRange { lo: u64, hi: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ModelSection {
    HomogeneousPoisson { ell: f64 },
    /// Poisson process with density `a + b |s|^2` in the stretched
    /// coordinates, constant in the compressed ones.
    QuadraticPoisson { a: f64, b: f64 },
    ClusterBounded { parent_rate: f64, radius: f64, count: CountSection },
    MarkovModulated { transition: Vec<Vec<f64>>, rates: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum AlphaSection {
    Power { c: f64, r: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum BetaSection {
    Zero {},
    PowerU { c: f64, b: f64 },
    OnePlusPower { c: f64, b: f64 },
    FiniteRange { c: f64, u0: f64 },
    Geometric { c: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingSection {
    Beta,
    Rho,
    Phi,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSection {
    pub kappa: f64,
    pub iota: f64,
    pub alpha: AlphaSection,
    pub beta: BetaSection,
    pub mixing: MixingSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub kernel: KernelSection,
    /// Truncation level for the estimator gap bound; 0 selects
    /// `ceil(3 nu(J_T))`.
    pub big_m: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSection {
    Uniform,
    Triangular,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrdSection {
    pub alpha: f64,
    pub slope: f64,
    /// Statistic Lipschitz constant; omit for the derived default
    /// (1 + kissing number of the image dimension).
    pub lipschitz_ld: Option<f64>,
    pub epsilon: f64,
    pub null_ell: f64,
    pub eval_replicates: u64,
    /// Required power surplus over the null rejection rate.
    pub power_margin: f64,
    pub alternative: Option<ModelSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub replicates: u64,
    pub space: SpaceSection,
    pub schedule: ScheduleSection,
    pub grid: GridSection,
    pub bound: Option<BoundSection>,
    pub model: Option<ModelSection>,
    pub certificate: Option<CertificateSection>,
    pub density_exp: Option<DensitySection>,
    pub lrd: Option<LrdSection>,
}

impl ExperimentConfig {
    pub fn space(&self) -> Result<SpaceConfig, HarnessError> {
        let mu2 = match self.space.mu2 {
            Mu2Section::Lebesgue => Mu2Kind::Lebesgue,
            Mu2Section::Counting => Mu2Kind::Counting,
        };
        SpaceConfig::new(self.space.d1, self.space.d2, mu2)
            .map_err(|e| HarnessError::Schema(format!("space: {e}")))
    }

    pub fn schedule(&self) -> Result<StretchSchedule, HarnessError> {
        StretchSchedule::new(self.schedule.k, self.schedule.delta)
            .map_err(|e| HarnessError::Schema(format!("schedule: {e}")))
    }

    pub fn model(&self) -> Result<ProcessModel, HarnessError> {
        let section = self
            .model
            .as_ref()
            .ok_or_else(|| HarnessError::Schema("this experiment requires a [model]".into()))?;
        Ok(build_model(section))
    }

    /// Density regularity witness of the configured model, when it has one;
    /// required by the fixed-intensity bound.
    pub fn regularity(&self) -> Option<steinpp::models::Regularity> {
        match self.model.as_ref()? {
            ModelSection::HomogeneousPoisson { .. } => {
                Some(steinpp::models::Regularity { l: 0.0, z: 1.0 })
            }
            ModelSection::QuadraticPoisson { b, .. } => {
                Some(steinpp::models::Regularity { l: *b, z: 2.0 })
            }
            _ => None,
        }
    }

    pub fn theorem(&self) -> Result<TheoremKind, HarnessError> {
        let section = self
            .bound
            .as_ref()
            .ok_or_else(|| HarnessError::Schema("this experiment requires [bound].theorem".into()))?;
        TheoremKind::from_label(&section.theorem).ok_or_else(|| {
            HarnessError::Schema(format!("unknown theorem label '{}'", section.theorem))
        })
    }

    /// Certificate: explicit section if present, otherwise derived from the
    /// model.
    pub fn certificate(&self) -> Result<ConditionCertificate, HarnessError> {
        if let Some(c) = &self.certificate {
            let alpha = match c.alpha {
                AlphaSection::Power { c, r } => AlphaCheck::power(c, r)
                    .map_err(|e| HarnessError::Schema(format!("certificate.alpha: {e}")))?,
            };
            let beta = match c.beta {
                BetaSection::Zero {} => BetaCheck::Zero,
                BetaSection::PowerU { c, b } => BetaCheck::PowerU { c, b },
                BetaSection::OnePlusPower { c, b } => BetaCheck::OnePlusPower { c, b },
                BetaSection::FiniteRange { c, u0 } => BetaCheck::FiniteRange { c, u0 },
                BetaSection::Geometric { c, gamma } => BetaCheck::Geometric { c, gamma },
            };
            let mixing = match c.mixing {
                MixingSection::Beta => MixingKind::Beta,
                MixingSection::Rho => MixingKind::Rho,
                MixingSection::Phi => MixingKind::Phi,
            };
            return ConditionCertificate::new(c.kappa, c.iota, alpha, beta, mixing)
                .map_err(|e| HarnessError::Schema(format!("certificate: {e}")));
        }
        let model = self.model()?;
        Ok(steinpp::models::certificate_for(&model, &self.space()?, &self.schedule()?)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.grid.t_values.is_empty() {
            return Err(HarnessError::Schema("grid.t_values must be nonempty".into()));
        }
        if !self.grid.t_values.windows(2).all(|w| w[1] > w[0]) {
            return Err(HarnessError::Schema("grid.t_values must be strictly increasing".into()));
        }
        let space = self.space()?;
        for &t in &self.grid.t_values {
            if !space.admits_t(t) {
                return Err(HarnessError::Schema(format!(
                    "T = {t} is not admissible under the counting reference measure"
                )));
            }
        }
        let schedule = self.schedule()?;
        for &t in &self.grid.t_values {
            if schedule.eval(t) < 1.0 {
                return Err(HarnessError::Schema(format!(
                    "w(T) = {} < 1 at T = {t}",
                    schedule.eval(t)
                )));
            }
        }
        if !schedule.check_linear_growth(&self.grid.t_values) {
            return Err(HarnessError::Schema("w(T) must stay O(T) on the grid".into()));
        }
        if let Some(m) = &self.model {
            build_model(m)
                .validate(&space)
                .map_err(|e| HarnessError::Schema(format!("model: {e}")))?;
        }
        match self.kind {
            ExperimentKind::BoundSweep => {
                self.theorem()?;
                self.certificate()?;
            }
            ExperimentKind::DominationCounts | ExperimentKind::DominationD2Slope => {
                self.model()?;
                if self.replicates == 0 {
                    return Err(HarnessError::Schema("replicates must be positive".into()));
                }
            }
            ExperimentKind::DensityExperiment => {
                self.model()?;
                if self.density_exp.is_none() {
                    return Err(HarnessError::Schema("missing [density_exp] section".into()));
                }
            }
            ExperimentKind::LrdSizePower => {
                let lrd = self
                    .lrd
                    .as_ref()
                    .ok_or_else(|| HarnessError::Schema("missing [lrd] section".into()))?;
                if !(lrd.alpha > 0.0 && lrd.alpha < 1.0) {
                    return Err(HarnessError::Schema("lrd.alpha must lie in (0,1)".into()));
                }
            }
            ExperimentKind::ValidateModel => {
                self.model()?;
            }
        }
        Ok(())
    }
}

pub fn build_model(section: &ModelSection) -> ProcessModel {
    match section {
        ModelSection::HomogeneousPoisson { ell } => ProcessModel::HomogeneousPoisson { ell: *ell },
        ModelSection::QuadraticPoisson { a, b } => ProcessModel::InhomogeneousPoisson {
            density: DensitySpec::separable_quadratic(*a, *b),
        },
        ModelSection::ClusterBounded { parent_rate, radius, count } => {
            ProcessModel::ClusterBounded {
                parent_rate: *parent_rate,
                count_dist: match count {
                    CountSection::Constant { n } => ClusterCountDist::Constant { n: *n },
                    CountSection::UniformRange { lo, hi } => {
                        ClusterCountDist::UniformRange { lo: *lo, hi: *hi }
                    }
                },
                radius: *radius,
            }
        }
        ModelSection::MarkovModulated { transition, rates } => ProcessModel::MarkovModulated {
            transition: transition.clone(),
            rates: rates.clone(),
        },
    }
}

/// Canonical bytes for hashing: line endings normalized to `\n`.
fn canonical_bytes(raw: &str) -> Vec<u8> {
    raw.replace("\r\n", "\n").into_bytes()
}

/// SHA-256 of the canonicalized config text.
pub fn config_hash(raw: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical_bytes(raw));
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Loads, parses and validates a config file; returns the config and the
/// hash of its canonical bytes.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, String), HarnessError> {
    let raw = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let config: ExperimentConfig =
        toml::from_str(&raw).map_err(|e| HarnessError::Schema(e.to_string()))?;
    config.validate()?;
    Ok((config, config_hash(&raw)))
}

/// Round-trips a config back to TOML (used by `simulate` to persist the
/// effective configuration).
pub fn to_toml(config: &ExperimentConfig) -> String {
    toml::to_string_pretty(config).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
kind = "bound_sweep"
seed = 7
replicates = 100

[space]
d1 = 1
d2 = 1
mu2 = "lebesgue"

[schedule]
k = 1.0
delta = 1.0

[grid]
t_values = [16.0, 64.0]

[bound]
theorem = "principal-sharp"

[certificate]
kappa = 1.0
iota = 1.0
alpha = { power = { c = 1.0, r = 1.0 } }
beta = { power_u = { c = 1.0, b = 2.0 } }
mixing = "rho"
"#;

    #[test]
    fn good_config_parses_and_validates() {
        let config: ExperimentConfig = toml::from_str(GOOD).unwrap();
        config.validate().unwrap();
        assert_eq!(config.kind.label(), "bound_sweep");
        assert!(config.certificate().is_ok());
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let bad = GOOD.replace("seed = 7", "seed = 7\nwibble = 3");
        let err = toml::from_str::<ExperimentConfig>(&bad).unwrap_err().to_string();
        assert!(err.contains("wibble"), "error must name the key: {err}");
    }

    #[test]
    fn empty_t_grid_is_a_schema_error() {
        let bad = GOOD.replace("t_values = [16.0, 64.0]", "t_values = []");
        let config: ExperimentConfig = toml::from_str(&bad).unwrap();
        assert!(matches!(config.validate(), Err(HarnessError::Schema(_))));
    }

    #[test]
    fn decreasing_t_grid_is_a_schema_error() {
        let bad = GOOD.replace("t_values = [16.0, 64.0]", "t_values = [64.0, 16.0]");
        let config: ExperimentConfig = toml::from_str(&bad).unwrap();
        assert!(matches!(config.validate(), Err(HarnessError::Schema(_))));
    }

    #[test]
    fn toml_round_trip_is_identity() {
        let config: ExperimentConfig = toml::from_str(GOOD).unwrap();
        let text = to_toml(&config);
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        let again = to_toml(&back);
        assert_eq!(text, again);
    }

    #[test]
    fn hash_is_stable_under_line_ending_normalization() {
        let crlf = GOOD.replace('\n', "\r\n");
        assert_eq!(config_hash(GOOD), config_hash(&crlf));

        // Oracle: independent digest of the canonical bytes.
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(GOOD.as_bytes());
        let expect: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(config_hash(GOOD), expect);
    }
}
