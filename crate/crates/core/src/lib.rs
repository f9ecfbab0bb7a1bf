//! Lossless model-based coding: sender and receiver share a learned grammar,
//! so only a compact encoding of each message crosses the wire.
//!
//! The pipeline:
//!
//! 1. [`induction::learn`] builds a grammar G from a corpus without
//!    supervision, by minimum-description-length search.
//! 2. [`codec::encode`] aligns a message D against G
//!    ([`derivation::best_derivation`]) and emits the code E; decoding E with
//!    the same G reproduces D exactly.
//! 3. [`wire`] defines the grammar and encoding file formats and the
//!    framed session protocol that moves encodings from Alice to Bob.
//! 4. [`baseline`] is a self-contained LZSS compressor playing the part of
//!    an ordinary compression method for volume comparisons.
//!
//! Grammars are immutable after construction and safe to share across
//! threads; encode and decode are pure functions.

mod bits;

pub mod baseline;
pub mod codec;
pub mod derivation;
pub mod induction;
pub mod model;
pub mod wire;

pub use codec::{decode, encode, encode_literal, Encoding, Token};
pub use derivation::{best_derivation, render, score, AlignmentScore, Derivation, DeriveParams};
pub use induction::{description_length, learn, Corpus, LearnParams, LearnResult};
pub use model::{Bits, CostMode, Grammar, Message, PatternSpec};
