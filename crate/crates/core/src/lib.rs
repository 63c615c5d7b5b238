//! Democratic and near-democratic embeddings for fixed-length vector
//! quantization under a hard bit budget, and the distributed optimizers
//! built on them.
//!
//! The crate is organized bottom-up:
//!
//! * [`frames`]: Parseval frames and their Kashin constants.
//! * [`embeddings`]: ℓ∞-minimal (LP or iterative) and ℓ₂-minimal embeddings.
//! * [`quantizers`]: rate-R source coders with a bit-exact payload format.
//! * [`compressors`]: sparsifiers and dithering, optionally wrapped in an
//!   embedding.
//! * [`optim`]: DGD-DEF, DQ-PSGD, baselines and the matching bound formulas.
//! * [`harness`]: bit-budgeted channel, datasets, and experiment drivers that
//!   emit CSV.

pub mod compressors;
pub mod embeddings;
pub mod error;
pub mod frames;
pub mod harness;
pub mod linalg;
pub mod lp;
pub mod optim;
pub mod quantizers;
pub mod rng;

pub use embeddings::{Embedding, EmbeddingMode};
pub use error::{Error, Result};
pub use frames::{Frame, FrameDescriptor, FrameKind, KashinParams};
