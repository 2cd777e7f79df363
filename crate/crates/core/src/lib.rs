//! Rotation-preconditioned octahedral triplet quantization of attention keys.
//!
//! A key `k` is split into its norm and unit direction, the direction is
//! rotated by a seeded sign-flipped Walsh-Hadamard transform, and the
//! rotated vector is cut into triplets. Each triplet is stored as a norm
//! index and two octahedral-coordinate indices, chosen jointly to minimize
//! the triplet's squared error. Scores against a rotated query factorize
//! over triplets, and an optional one-bit sign sketch of the residual
//! corrects the inner-product bias.
//!
//! Modules, bottom up:
//!
//! * [`rotation`]: the orthogonal preconditioner.
//! * [`octahedral`]: sphere ↔ square fold.
//! * [`marginals`]: source densities and samplers.
//! * [`lloydmax`]: scalar codebook training and persistence.
//! * [`codec`]: encoder, decoder, scoring, packing, attention.
//! * [`baselines`]: per-coordinate and polar comparison codecs.
//! * [`bench`]: metrics, experiment drivers and the CLI.

pub mod baselines;
pub mod bench;
pub mod codec;
mod error;
pub mod lloydmax;
pub mod marginals;
pub mod octahedral;
pub mod quadrature;
pub mod rng;
pub mod rotation;

pub use error::{Error, Result};
