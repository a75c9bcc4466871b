//! Word embeddings from part-of-speech tagged text.
//!
//! Trains CBOW and skip-gram baselines plus a weighted CBOW variant whose
//! context words are scaled by learned relevance weights indexed by signed
//! position and the (context tag, center tag) pair, all optimized jointly
//! with negative sampling. Ships with the matching evaluation tools: word
//! analogies (3CosMul), word similarity (Spearman), and POS cluster purity
//! (k-means over the vector space).
//!
//! Everything numeric is generic over the scalar type; train in `f32`, check
//! gradients in `f64`.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod hogwild;
pub mod io;
pub mod model;
pub mod negative;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Single-precision model, the training default.
pub type ModelF32 = model::EmbeddingModel<f32>;
/// Double-precision model, used by gradient oracles.
pub type ModelF64 = model::EmbeddingModel<f64>;
/// Single-precision relevance weights.
pub type PhiF32 = model::RelevanceTensor<f32>;
/// Double-precision relevance weights.
pub type PhiF64 = model::RelevanceTensor<f64>;
