//! Quaternion matrix completion for color image and video inpainting.
//!
//! A color pixel `(R, G, B)` is encoded as the pure quaternion `R·i + G·j + B·k`,
//! so an image is a quaternion matrix and a video a stack of them. Missing and
//! corrupted pixels are recovered by robust low-rank completion, either on the
//! whole image ([`solver::solve`]) or on groups of similar patches
//! ([`patch::inpaint_nss`], [`video::inpaint_tnss`]).

pub mod error;
pub mod imaging;
pub mod mask;
pub mod patch;
pub mod qmatrix;
pub mod qsvd;
pub mod quaternion;
pub mod solver;
pub mod tol;
pub mod video;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use mask::ObservationMask;
pub use qmatrix::{abs_q, shrink_q, sign_q, NormKind, QMatrix, RealMatrix};
pub use qsvd::{accumulation_energy, approx_q, delta_rank, energy_at_fraction, lemma_r, qsvd, singular_values, QSvdResult};
pub use quaternion::{qmul, Quaternion};
pub use solver::{default_lambda, project, solve, svt, AdmmState, QmcResult, SolverConfig};
