//! Learning-to-rank for ensemble dialogue systems.
//!
//! Rankers score a candidate system response against the recent
//! conversation. They are trained from raw transcripts using either
//! per-dialogue user ratings or dialogue length as the target, and are
//! evaluated on their ability to pick responses that drew explicit positive
//! feedback from users.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod nn;
pub mod rankers;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
