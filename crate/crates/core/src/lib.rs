//! Microscopic and macroscopic models of a one-dimensional melting and
//! freezing front.
//!
//! The crate couples three pieces:
//!
//! * [`lattice`] and [`engine`]: an exclusion process on two half-lattices
//!   whose particles annihilate at a moving interface, simulated exactly in
//!   continuous time under diffusive scaling;
//! * [`coupling`]: a labelled coupling of the boundary-frame process with its
//!   non-translating comparison process, used to check the death-count
//!   domination inequality along every trajectory;
//! * [`stefan`]: an explicit enthalpy solver for the two-phase Cauchy-Stefan
//!   problem, the absorbed heat equation and its image solution;
//!
//! and a [`harness`] that runs convergence, dissipation and coupling studies
//! and writes CSV, SVG and summary files.

pub mod coupling;
pub mod engine;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod stefan;

pub use error::{Error, Result};
pub use lattice::{Configuration, Event, FrameConfig, ModelParams, ProcessKind, TwoPhaseConfig};
