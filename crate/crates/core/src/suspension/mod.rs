//! Suspension solenoids immersed in `T^n`, their Ruelle-Sullivan currents,
//! realization of homology classes, and long leaves.

pub mod geometry;
pub mod leaf;
pub mod solenoid;

pub use geometry::{CoreModel, Cycle};
pub use leaf::{default_start, leaf_current, leaf_limit_csv, leaf_limit_experiment, leaf_segment, LeafLimitRow, LeafSegment};
pub use solenoid::{
    homology_class, realize_class, rs_current, rs_pair, Embedding, HolonomyDocument, RealizeConfig, SolenoidDocument,
    SuspensionSolenoid,
};
