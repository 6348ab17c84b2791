//! Level-set solenoids of a scalar field on `T^2`: contour tracing,
//! exclusion of near-critical values, Cantor value measures and the error
//! certificate comparing `dF ^ .` with the level-set current.

pub mod certificate;
pub mod contour;
pub mod family;
pub mod field;

pub use certificate::{
    cantor_weights, lebesgue_weights, lemma_alpha_certificate, lemma_alpha_certificate_on, Budget, CantorWeights, Certificate,
    CertificateConfig, CertificateGrids, CertificateReport,
};
pub use contour::{contour_trace, contour_trace_many, Contour};
pub use family::{ContourFamily, LevelAtom};
pub use field::{exclusion_set, CriticalRegion, FieldGrid, ScalarFieldBundle, DEFAULT_EXCLUSION_RES};
