//! Transversal surgery of solenoids, chunking of level-set solenoids, and
//! the pipeline approximating a closed current by one uniquely ergodic
//! solenoid.

pub mod chunk;
pub mod glue;
pub mod pipeline;

pub use chunk::{chunk, SolenoidHandle};
pub use glue::{sup_d_bounds, surgery, GluedPiece, GluedSolenoid, SurgeryOutcome, SurgeryPlan, Tube};
pub use pipeline::{
    approximate_current, decompose_exact, reconstruction_defect, ApproximateConfig, Approximation, ApproximationReport,
    TargetCurrent,
};
