//! Transverse stability of small periodic waves of the b-KP equation.
//!
//! The crate builds the wave (Stokes expansion or Newton refinement), assembles the
//! truncated Floquet-Bloch operator, computes its spectrum and compares the outcome
//! with closed-form thresholds and reduced 2x2 models.

pub mod bloch;
pub mod criteria;
pub mod error;
pub mod linalg;
pub mod orchestrate;
pub mod params;
pub mod reduced;
pub mod spectrum;
pub mod wave;

pub use error::{Error, Result};
pub use params::{BlochSpec, PhysicalParams, Sigma};
