//! Uniquely ergodic measured solenoids on flat tori.
//!
//! The crate builds Denjoy circle maps with wandering Cantor sets, suspends
//! them into 1-solenoids immersed in `T^2`/`T^3`, evaluates their
//! Ruelle-Sullivan currents against a finite dictionary of trigonometric test
//! forms, and assembles solenoids whose currents approximate any closed
//! current of the form "homology class + exact part".
//!
//! Modules, bottom-up:
//!
//! * [`circle`]: Denjoy maps, Cantor transversals, invariant measures,
//!   holonomy systems, transport maps.
//! * [`forms`]: smooth functions, differential forms, quadrature, the test
//!   dictionary and current vectors.
//! * [`suspension`]: suspension solenoids, the Ruelle-Sullivan pairing,
//!   realization of homology classes and long-leaf currents.
//! * [`levelset`]: contour solenoids approximating `dF`.
//! * [`surgery`]: chunking, gluing and the end-to-end density pipeline.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is on and plain iterators otherwise. Results are
//! bit-identical either way.

pub mod circle;
pub mod error;
pub mod forms;
pub mod levelset;
pub mod num;
pub mod par;
pub mod surgery;
pub mod suspension;

pub use error::{Error, Result};
