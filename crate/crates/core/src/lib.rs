//! Barycentric straightening in the symmetric space `SL(m, R) / SO(m)`.
//!
//! The crate is organized bottom-up: [`linalg`] helpers, [`lie`] data for
//! `sl(m)` and abstract root systems, the SPD model in [`spd`], the convex
//! functional and straightening map in [`barycenter`], combinatorial frame
//! selection in [`matching`], and quadratic-form lemmas in [`forms`].

pub mod barycenter;
pub mod certificate;
pub mod error;
pub mod forms;
pub mod lie;
pub mod linalg;
pub mod matching;
pub mod spd;

pub use error::{Error, Result};
