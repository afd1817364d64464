//! Serial automorphism ensemble decoding of polar codes with aggressively
//! quantized SC component decoders, a PUF fuzzy-commitment pipeline around
//! it, and the Monte Carlo harness that measures block error rates.

pub mod aed;
pub mod bch;
pub mod error;
pub mod gf2;
pub mod perm;
pub mod plot;
pub mod polar;
pub mod puf;
pub mod sc;
pub mod sim;

pub use aed::{ae_decode, greedy_select, AeDecoder, AedResult};
pub use error::{Error, Result};
pub use gf2::{BitMatrix, BitVector};
pub use perm::{AffineMap, Architecture, EnsembleSpec, Permutation};
pub use polar::CodeSpec;
pub use sc::{DecodeTree, NodeKind, PlanOptions, QuantPlan, ScDecoder};
