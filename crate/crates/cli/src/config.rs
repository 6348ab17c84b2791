use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use solenoid::circle::{golden_mean, DEFAULT_SCHEDULE_RANGE};
use solenoid::forms::{bump, BoxRegion, Monomial, Phase, SmoothFunction, TrigPoly};
use solenoid::levelset::{CertificateConfig, ScalarFieldBundle};
use solenoid::surgery::ApproximateConfig;
use solenoid::suspension::RealizeConfig;

use crate::CliError;

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// One term `coeff * prod_j phi_j(x_j)` of a trigonometric polynomial on
/// `T^2`, e.g. `{"coeff": 0.1, "freqs": [[1, "sin"], [1, "sin"]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: f64,
    pub freqs: Vec<(u32, Phase)>,
}

pub fn trig_function(terms: &[Term]) -> Result<SmoothFunction, CliError> {
    let mut p = TrigPoly::zero(2);
    for t in terms {
        if t.freqs.len() > 2 {
            return Err(CliError::Config(format!("terms on T^2 take at most two factors, got {}", t.freqs.len())));
        }
        if !t.coeff.is_finite() {
            return Err(CliError::Config(format!("non-finite coefficient {}", t.coeff)));
        }
        p = p.add(&TrigPoly::monomial(2, Monomial::new(&t.freqs), t.coeff));
    }
    Ok(p.into())
}

fn sin_sin(coeff: f64) -> Vec<Term> {
    vec![Term { coeff, freqs: vec![(1, Phase::Sin), (1, Phase::Sin)] }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportBox {
    pub center: [f64; 2],
    pub half: [f64; 2],
    /// Width of the cutoff transition outside the box.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenjoyConfig {
    pub rho: f64,
    pub schedule_range: usize,
    pub schedule_total: f64,
    /// Gaps resolved by the transversal carrying the invariant measure.
    pub measure_depth: usize,
    pub rotation_iterations: usize,
    pub ue_starts: usize,
    pub ue_iterations: usize,
    pub rho_tolerance: f64,
    pub semiconjugacy_tolerance: f64,
    pub invariance_tolerance: f64,
    pub ue_tolerance: f64,
}

impl Default for DenjoyConfig {
    fn default() -> Self {
        Self {
            rho: golden_mean(),
            schedule_range: DEFAULT_SCHEDULE_RANGE,
            schedule_total: 0.5,
            measure_depth: 64,
            rotation_iterations: 100_000,
            ue_starts: 100,
            ue_iterations: 100_000,
            rho_tolerance: 1e-4,
            semiconjugacy_tolerance: 1e-12,
            invariance_tolerance: 1e-12,
            ue_tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RealizeRunConfig {
    pub class: Vec<f64>,
    pub degree: u32,
    pub realize: RealizeConfig,
    pub class_tolerance: f64,
}

impl Default for RealizeRunConfig {
    fn default() -> Self {
        Self { class: vec![0.3, 0.7], degree: 2, realize: RealizeConfig::default(), class_tolerance: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeafLimitConfig {
    pub class: Vec<f64>,
    pub degree: u32,
    pub realize: RealizeConfig,
    /// Numbers of returns to the transversal.
    pub returns: Vec<usize>,
    /// Start point on the transversal; the middle band when absent.
    pub start: Option<f64>,
    pub distance_tolerance: f64,
    /// Required ratio of the first to the last distance.
    pub min_decrease: f64,
}

impl Default for LeafLimitConfig {
    fn default() -> Self {
        Self {
            class: vec![0.3, 0.7],
            degree: 2,
            realize: RealizeConfig::default(),
            returns: vec![10, 100, 1000],
            start: None,
            distance_tolerance: 0.01,
            min_decrease: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelsetConfig {
    pub field: Vec<Term>,
    /// Cutoff applied to `field`; the field is used as is when absent.
    pub support: Option<SupportBox>,
    pub degree: u32,
    pub certificate: CertificateConfig,
}

impl Default for LevelsetConfig {
    fn default() -> Self {
        Self {
            field: sin_sin(0.1),
            support: Some(SupportBox { center: [0.5, 0.5], half: [0.25, 0.25], margin: 0.2 }),
            degree: 2,
            certificate: CertificateConfig::default(),
        }
    }
}

impl LevelsetConfig {
    pub fn scalar_field(&self) -> Result<ScalarFieldBundle, CliError> {
        let mut f = trig_function(&self.field)?;
        if let Some(b) = &self.support {
            let region = BoxRegion::new(2, [b.center[0], b.center[1], 0.0], [b.half[0], b.half[1], 0.0])?;
            f = bump(&region, b.margin)?.mul(&f);
        }
        Ok(ScalarFieldBundle::new(f)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproximateRunConfig {
    pub class: Vec<f64>,
    /// Primitive `beta` of the exact part.
    pub beta: Vec<Term>,
    pub eps: f64,
    pub degree: u32,
    pub approximate: ApproximateConfig,
}

impl Default for ApproximateRunConfig {
    fn default() -> Self {
        Self { class: vec![0.3, 0.7], beta: sin_sin(0.1), eps: 0.05, degree: 2, approximate: ApproximateConfig::default() }
    }
}
