//! Toolkit for the non-neural half of a multilingual ASR pseudo-labelling
//! pipeline: backoff N-gram language models with modified Kneser-Ney
//! smoothing, lexicon-constrained CTC beam decoding with LM shallow fusion,
//! Nigerian Pidgin text normalization, pseudo-label filtering and data
//! mixing, audio segmentation/augmentation, and WER/LID evaluation.
//!
//! Acoustic models are out of scope: the decoder consumes precomputed
//! per-frame emission matrices, and segment merging consumes precomputed
//! speaker embeddings.

pub mod audio;
pub mod config;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod lm;
pub mod manifest;
pub mod pipeline;
pub mod textnorm;

pub use error::{Error, Result};
