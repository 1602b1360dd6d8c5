//! Weighted volumes of toric polarized Fano fibrations.
//!
//! The crate computes Duistermaat–Heckman measures from graded weight tables,
//! the weighted volume `W(ξ) = ∫ e^{-⟨x, ξ⟩} dx` over a moment polyhedron with
//! its gradient and Hessian, Newton minimization over the open Reeb cone,
//! Futaki invariants of product test configurations, normalized volumes of
//! toric germs, and semigroup growth toward Okounkov-body volumes.

pub mod divdiff;
pub mod error;
pub mod fixtures;
pub mod futaki;
pub mod germs;
pub mod linalg;
pub mod minimize;
pub mod okounkov;
pub mod polyhedra;
pub mod rational;
pub mod weights;
pub mod wvol;

pub use error::{FwvError, Result};
