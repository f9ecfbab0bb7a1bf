//! File formats and the transmission protocol.
//!
//! - `SPG1`: canonical grammar text format (also the fingerprint preimage)
//! - `SPE1`: binary encoding files
//! - length-prefixed frames carrying a sender/receiver session over any
//!   reliable byte stream
//!
//! The grammar travels out of band as a file; sessions only carry encodings,
//! gated by fingerprint equality.

mod encoding_bin;
mod frame;
mod grammar_text;
mod pipe;
mod session;

pub use encoding_bin::{read_encoding, write_encoding, ENCODING_MAGIC};
pub use frame::{read_frame, write_frame, Frame, MAX_FRAME_PAYLOAD};
pub use grammar_text::{digest_grammar, parse_grammar, serialize_grammar, GRAMMAR_MAGIC};
pub use pipe::{duplex, PipeEnd};
pub use session::{
    run_receiver, run_sender, SessionReport, ERR_BAD_PAYLOAD, ERR_FINGERPRINT_MISMATCH,
    ERR_PROTOCOL, PROTOCOL_VERSION,
};

use crate::codec::CodecError;
use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("syntax error on line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("input out of canonical order on line {line}")]
    UnsortedInput { line: usize },
    #[error("bad magic bytes")]
    BadMagic,
    #[error("input ended before the declared content")]
    TruncatedStream,
    #[error("content remains after the declared token stream")]
    TrailingTokens,
    #[error("grammar fingerprint mismatch")]
    FingerprintMismatch,
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("channel closed unexpectedly")]
    ChannelClosed,
    #[error("peer reported error {code}: {msg}")]
    Remote { code: u8, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
