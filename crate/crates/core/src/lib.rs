//! Shear-deformed endomorphisms of the two-torus.
//!
//! The crate builds maps of the form `E ∘ v ∘ h_t` (a linear covering `E`
//! composed with two area-preserving shears), enumerates their preimages
//! exactly, evaluates closed-form lower bounds on the backward expansion
//! functional `I(x, u; f)`, and checks those bounds against direct
//! numerical computation.

pub mod certificate;
pub mod cli;
pub mod config;
pub mod endo;
pub mod error;
pub mod invariants;
pub mod lab;
pub mod lattice;
pub mod mat;
pub mod pipeline;
pub mod report;
pub mod shear;
pub mod torus;
pub mod trig;

pub use error::{Error, Result};
