//! Mixture matrix completion.
//!
//! A data matrix whose every observed entry comes from exactly one of `K`
//! low-rank matrices is untangled back into those matrices. The crate
//! covers the whole workflow:
//!
//! - [`model`]: matrices, masks, mixtures and their text formats;
//! - [`synth`]: Gaussian mixtures, sampling patterns and perturbed bases;
//! - [`patterns`]: combinatorial identifiability checks on sampling masks;
//! - [`lrmc`]: single-matrix completion backends;
//! - [`ammc`]: the alternating cluster/complete recovery algorithm;
//! - [`harness`]: experiment drivers, scoring and image mixing.

pub mod ammc;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod lrmc;
pub mod model;
pub mod patterns;
pub mod rng;
pub mod synth;

pub use error::{MmcError, Result};
pub use model::{AssignmentMasks, DenseMatrix, LowRankFactorization, Mask, MixtureProblem, ObservedMixture};
