//! The in-repo ordinary-compression baseline: a greedy LZSS over a 32 KiB
//! window, bit-exact and dependency-free so comparisons are reproducible.
//!
//! Blob layout (`SPB1`): 4-byte magic, 64-bit little-endian plaintext length,
//! then flag-coded tokens packed most-significant-bit-first and zero-padded
//! to a byte boundary:
//!
//! - `0` + 8-bit literal byte
//! - `1` + 15-bit offset (1-based distance, so at most 32767 back) +
//!   8-bit length code (`length - 3`, for lengths 3..=258)

use std::collections::HashMap;

use crate::model::{Bits, Message};
use crate::bits::{BitReader, BitWriter};

pub const BASELINE_MAGIC: &[u8; 4] = b"SPB1";

const MIN_MATCH: usize = 3;
const MAX_MATCH: usize = 258;
const MAX_DISTANCE: usize = 32767; // largest value of the 15-bit 1-based offset
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BaselineError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("bitstream ended before the declared plaintext length")]
    TruncatedStream,
    #[error("match offset of {offset} points before the start of the output")]
    OffsetOutOfRange { offset: usize },
    #[error("content remains after the declared plaintext")]
    TrailingBytes,
    #[error("token stream overruns the declared plaintext length")]
    DeclaredLengthMismatch,
}

/// One decoded LZ token, exposed for format introspection and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LzToken {
    Literal(u8),
    Match { distance: u16, len: u16 },
}

fn key3(data: &[u8], i: usize) -> u32 {
    (data[i] as u32) << 16 | (data[i + 1] as u32) << 8 | data[i + 2] as u32
}

/// Greedy longest-match LZSS compression. Deterministic: the longest match
/// wins and ties prefer the smallest distance.
pub fn lz_compress(data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + data.len() / 2);
    out.extend_from_slice(BASELINE_MAGIC);
    out.extend_from_slice(&(data.len() as u64).to_le_bytes());

    let mut writer = BitWriter::new();
    let mut chains: HashMap<u32, Vec<usize>> = HashMap::new();
    let mut i = 0;
    while i < data.len() {
        let mut best_len = 0usize;
        let mut best_dist = 0usize;
        if i + MIN_MATCH <= data.len() {
            if let Some(chain) = chains.get(&key3(data, i)) {
                let limit = MAX_MATCH.min(data.len() - i);
                for &j in chain.iter().rev() {
                    let dist = i - j;
                    if dist > MAX_DISTANCE {
                        break; // chain is position-ordered; older entries are farther
                    }
                    let mut len = 0;
                    while len < limit && data[j + len] == data[i + len] {
                        len += 1;
                    }
                    if len > best_len {
                        best_len = len;
                        best_dist = dist;
                        if best_len == limit {
                            break;
                        }
                    }
                }
            }
        }
        if best_len >= MIN_MATCH {
            writer.push_bits(1, 1);
            writer.push_bits(best_dist as u64, 15);
            writer.push_bits((best_len - MIN_MATCH) as u64, 8);
            for k in i..i + best_len {
                if k + MIN_MATCH <= data.len() {
                    chains.entry(key3(data, k)).or_default().push(k);
                }
            }
            i += best_len;
        } else {
            writer.push_bits(0, 1);
            writer.push_bits(data[i] as u64, 8);
            if i + MIN_MATCH <= data.len() {
                chains.entry(key3(data, i)).or_default().push(i);
            }
            i += 1;
        }
    }
    out.extend_from_slice(&writer.finish());
    out
}

fn parse_header(blob: &[u8]) -> Result<usize, BaselineError> {
    if blob.len() < 4 || &blob[..4] != BASELINE_MAGIC {
        return Err(BaselineError::BadMagic);
    }
    if blob.len() < HEADER_LEN {
        return Err(BaselineError::TruncatedStream);
    }
    Ok(u64::from_le_bytes(blob[4..12].try_into().unwrap()) as usize)
}

/// Exact inverse of [`lz_compress`].
pub fn lz_decompress(blob: &[u8]) -> Result<Vec<u8>, BaselineError> {
    let plaintext_len = parse_header(blob)?;
    let mut reader = BitReader::new(&blob[HEADER_LEN..]);
    let mut out: Vec<u8> = Vec::with_capacity(plaintext_len);
    while out.len() < plaintext_len {
        let flag = reader.read_bits(1).ok_or(BaselineError::TruncatedStream)?;
        if flag == 0 {
            let byte = reader.read_bits(8).ok_or(BaselineError::TruncatedStream)?;
            out.push(byte as u8);
        } else {
            let offset = reader.read_bits(15).ok_or(BaselineError::TruncatedStream)? as usize;
            let code = reader.read_bits(8).ok_or(BaselineError::TruncatedStream)? as usize;
            let len = code + MIN_MATCH;
            if offset == 0 || offset > out.len() {
                return Err(BaselineError::OffsetOutOfRange { offset });
            }
            if out.len() + len > plaintext_len {
                return Err(BaselineError::DeclaredLengthMismatch);
            }
            for _ in 0..len {
                let byte = out[out.len() - offset];
                out.push(byte);
            }
        }
    }
    if !reader.only_zero_padding_left() {
        return Err(BaselineError::TrailingBytes);
    }
    Ok(out)
}

/// Parses the token stream of a blob without materializing the plaintext
/// beyond what offset validation requires.
pub fn parse_tokens(blob: &[u8]) -> Result<Vec<LzToken>, BaselineError> {
    let plaintext_len = parse_header(blob)?;
    let mut reader = BitReader::new(&blob[HEADER_LEN..]);
    let mut tokens = Vec::new();
    let mut produced = 0usize;
    while produced < plaintext_len {
        let flag = reader.read_bits(1).ok_or(BaselineError::TruncatedStream)?;
        if flag == 0 {
            let byte = reader.read_bits(8).ok_or(BaselineError::TruncatedStream)?;
            tokens.push(LzToken::Literal(byte as u8));
            produced += 1;
        } else {
            let offset = reader.read_bits(15).ok_or(BaselineError::TruncatedStream)? as usize;
            let code = reader.read_bits(8).ok_or(BaselineError::TruncatedStream)? as usize;
            if offset == 0 || offset > produced {
                return Err(BaselineError::OffsetOutOfRange { offset });
            }
            let len = code + MIN_MATCH;
            if produced + len > plaintext_len {
                return Err(BaselineError::DeclaredLengthMismatch);
            }
            tokens.push(LzToken::Match {
                distance: offset as u16,
                len: len as u16,
            });
            produced += len;
        }
    }
    Ok(tokens)
}

/// Bits the baseline needs for one message: 8 x the compressed size of the
/// message's canonical text (tokens joined by single spaces, newline
/// terminated; the empty message is the empty text).
pub fn baseline_bits(message: &Message) -> Bits {
    (8 * lz_compress(message.to_text().as_bytes()).len()) as Bits
}
