//! Circle dynamics: Denjoy counterexamples, Cantor transversals, invariant
//! measures and the holonomy algebra used by the solenoid constructions.
//!
//! The circle is `R/Z` with coordinates in `[0, 1)`. Denjoy maps are built
//! from a finite gap schedule; the induced transversal at depth `N` is the
//! union of closed arcs ("bands") left after removing the gaps `|n| <= N`.

mod denjoy;
mod holonomy;
mod rotation;
mod transport;
mod transversal;

pub use denjoy::{Code, DenjoyDocument, DenjoyMap, GapSchedule, DEFAULT_SCHEDULE_RANGE};
pub use holonomy::{birkhoff_average, birkhoff_spread, standard_observables, BirkhoffReport, HolonomySystem, Observable};
pub use rotation::{rotation_number_estimate, CircleMap, IdentityMap, RigidRotation, RotationNumber, DEFAULT_CF_DEPTH};
pub use transport::{compose_holonomy, transport_map, ComposedHolonomy, TransportMap};
pub use transversal::{
    invariance_defect, invariant_measure, partition_by_mass, Band, CantorTransversal, Partition, TransversalMeasure,
};

/// Golden-mean rotation number `(sqrt(5) - 1) / 2`.
pub fn golden_mean() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}
