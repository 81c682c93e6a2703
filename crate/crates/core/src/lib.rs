//! Bullseye spaces and the sequences that control them.
//!
//! A bi-infinite bit sequence `a` decides which concentric circles of a
//! bullseye space are joined by short bridges. Asymptotic cones of the space
//! correspond to limits of `a` read along a scaling sequence, which is what
//! [`cone`] computes on finite windows with certificates.

mod wire;

pub mod cli;
pub mod cone;
pub mod constructions;
pub mod density;
pub mod geometry;
pub mod limits;
pub mod scaling;
pub mod seqcore;

pub use cone::{cone, iterate_cone, ConeError, ConeResult};
pub use scaling::{default_schedule, ScalingSet};
pub use seqcore::{BitSequence, Descriptor};
pub use wire::RationalJson;
