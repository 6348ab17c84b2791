//! Differential forms on flat tori `T^n`, `n <= 3`, quadrature, and the
//! finite test-form dictionary through which currents are observed.

pub mod current;
pub mod dictionary;
pub mod function;
pub mod kform;
pub mod quadrature;
pub mod trig;

/// Point of `T^n` in unwrapped coordinates; unused axes are zero.
pub type Point = [f64; 3];

pub use current::{weak_distance, CurrentVector};
pub use dictionary::{build_dictionary, default_degree, DictEntry, Dictionary, EntryFlag, TrigForm};
pub use function::{bump, partition_of_unity, quadrant_cover, BoxRegion, SmoothFunction, Support};
pub use kform::{exterior_derivative, wedge, KForm};
pub use quadrature::{integrate_torus, line_integral, torus_mean, Curve, ParamCurve, Polyline, Segment, DEFAULT_CURVE_RES};
pub use trig::{Monomial, Phase, TrigPoly, TrigTable};
