//! Analysis of constant-coefficient first-order PDE systems with
//! differential constraints.
//!
//! Given the principal symbol of a system with more equations than
//! unknowns, this crate computes the Geroch (constraint-generating)
//! fields, builds reductions and the evolution symbol, classifies the
//! Kronecker structure of the characteristic matrix pencil, runs the
//! canonical-angle test for strong hyperbolicity, and assembles and
//! hyperbolizes the subsidiary system that propagates the constraints.
//!
//! The [`catalog`] module generates the two standard worked systems
//! (Maxwell electrodynamics and the first-order wave equation, for
//! constant lapse and shift) plus a weakly hyperbolic negative control;
//! [`report`] drives the whole pipeline and produces serializable,
//! reproducible reports.

pub mod catalog;
pub mod error;
pub mod geroch;
pub mod io;
pub mod linalg;
pub mod pencil;
pub mod reduction;
pub mod report;
pub mod sample;
pub mod subsidiary;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Foliation, GramForm, PrincipalSymbol, WaveCovector};
