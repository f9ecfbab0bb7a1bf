//! Length-prefixed session frames.
//!
//! Frame layout: 32-bit big-endian payload length, 1-byte type, payload.
//!
//! | type | name      | payload                                        |
//! |------|-----------|------------------------------------------------|
//! | 1    | HELLO     | version (1 byte) + grammar fingerprint (32)    |
//! | 2    | HELLO_ACK | version (1 byte) + grammar fingerprint (32)    |
//! | 3    | DATA      | sequence number (u64 BE) + SPE1 encoding bytes |
//! | 4    | DATA_ACK  | sequence number (u64 BE)                       |
//! | 5    | ERR       | code (1 byte) + UTF-8 message                  |

use std::io::{Read, Write};

use crate::model::Fingerprint;

use super::WireError;

/// Upper bound on accepted payload sizes; larger lengths are treated as a
/// protocol violation rather than an allocation request.
pub const MAX_FRAME_PAYLOAD: u32 = 16 * 1024 * 1024;

const TYPE_HELLO: u8 = 1;
const TYPE_HELLO_ACK: u8 = 2;
const TYPE_DATA: u8 = 3;
const TYPE_DATA_ACK: u8 = 4;
const TYPE_ERR: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    Hello { version: u8, fingerprint: Fingerprint },
    HelloAck { version: u8, fingerprint: Fingerprint },
    Data { seq: u64, encoding: Vec<u8> },
    DataAck { seq: u64 },
    Err { code: u8, msg: String },
}

impl Frame {
    fn type_byte(&self) -> u8 {
        match self {
            Frame::Hello { .. } => TYPE_HELLO,
            Frame::HelloAck { .. } => TYPE_HELLO_ACK,
            Frame::Data { .. } => TYPE_DATA,
            Frame::DataAck { .. } => TYPE_DATA_ACK,
            Frame::Err { .. } => TYPE_ERR,
        }
    }

    fn payload(&self) -> Vec<u8> {
        match self {
            Frame::Hello {
                version,
                fingerprint,
            }
            | Frame::HelloAck {
                version,
                fingerprint,
            } => {
                let mut p = Vec::with_capacity(33);
                p.push(*version);
                p.extend_from_slice(fingerprint);
                p
            }
            Frame::Data { seq, encoding } => {
                let mut p = Vec::with_capacity(8 + encoding.len());
                p.extend_from_slice(&seq.to_be_bytes());
                p.extend_from_slice(encoding);
                p
            }
            Frame::DataAck { seq } => seq.to_be_bytes().to_vec(),
            Frame::Err { code, msg } => {
                let mut p = Vec::with_capacity(1 + msg.len());
                p.push(*code);
                p.extend_from_slice(msg.as_bytes());
                p
            }
        }
    }

    /// Total bytes this frame occupies on the wire.
    pub fn wire_len(&self) -> u64 {
        let payload_len = match self {
            Frame::Hello { .. } | Frame::HelloAck { .. } => 33,
            Frame::Data { encoding, .. } => 8 + encoding.len(),
            Frame::DataAck { .. } => 8,
            Frame::Err { msg, .. } => 1 + msg.len(),
        };
        5 + payload_len as u64
    }
}

/// Writes one frame; returns the bytes put on the wire.
pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> Result<u64, WireError> {
    let payload = frame.payload();
    if payload.len() > MAX_FRAME_PAYLOAD as usize {
        return Err(WireError::ProtocolViolation("frame payload too large".into()));
    }
    w.write_all(&(payload.len() as u32).to_be_bytes())?;
    w.write_all(&[frame.type_byte()])?;
    w.write_all(&payload)?;
    w.flush()?;
    Ok(5 + payload.len() as u64)
}

/// Reads one frame. `Ok(None)` means the stream ended cleanly before a new
/// frame; an EOF inside a frame is [`WireError::ChannelClosed`]. Every other
/// malformed input yields a located protocol error, never a panic.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<(Frame, u64)>, WireError> {
    let mut len_buf = [0u8; 4];
    match read_exact_or_eof(r, &mut len_buf)? {
        ReadOutcome::CleanEof => return Ok(None),
        ReadOutcome::Partial => return Err(WireError::ChannelClosed),
        ReadOutcome::Full => {}
    }
    let len = u32::from_be_bytes(len_buf);
    if len > MAX_FRAME_PAYLOAD {
        return Err(WireError::ProtocolViolation(format!(
            "declared payload of {len} bytes exceeds the limit"
        )));
    }
    let mut type_buf = [0u8; 1];
    r.read_exact(&mut type_buf)
        .map_err(|_| WireError::ChannelClosed)?;
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload)
        .map_err(|_| WireError::ChannelClosed)?;
    let wire_len = 5 + len as u64;

    let frame = match type_buf[0] {
        TYPE_HELLO | TYPE_HELLO_ACK => {
            if payload.len() != 33 {
                return Err(WireError::ProtocolViolation(
                    "hello payload must be 33 bytes".into(),
                ));
            }
            let version = payload[0];
            let mut fingerprint = [0u8; 32];
            fingerprint.copy_from_slice(&payload[1..]);
            if type_buf[0] == TYPE_HELLO {
                Frame::Hello {
                    version,
                    fingerprint,
                }
            } else {
                Frame::HelloAck {
                    version,
                    fingerprint,
                }
            }
        }
        TYPE_DATA => {
            if payload.len() < 8 {
                return Err(WireError::ProtocolViolation(
                    "data payload shorter than its sequence number".into(),
                ));
            }
            let seq = u64::from_be_bytes(payload[..8].try_into().unwrap());
            Frame::Data {
                seq,
                encoding: payload[8..].to_vec(),
            }
        }
        TYPE_DATA_ACK => {
            if payload.len() != 8 {
                return Err(WireError::ProtocolViolation(
                    "ack payload must be 8 bytes".into(),
                ));
            }
            Frame::DataAck {
                seq: u64::from_be_bytes(payload[..8].try_into().unwrap()),
            }
        }
        TYPE_ERR => {
            if payload.is_empty() {
                return Err(WireError::ProtocolViolation("empty error payload".into()));
            }
            let msg = String::from_utf8_lossy(&payload[1..]).into_owned();
            Frame::Err {
                code: payload[0],
                msg,
            }
        }
        other => {
            return Err(WireError::ProtocolViolation(format!(
                "unknown frame type {other}"
            )));
        }
    };
    Ok(Some((frame, wire_len)))
}

enum ReadOutcome {
    Full,
    Partial,
    CleanEof,
}

fn read_exact_or_eof<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<ReadOutcome, WireError> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => {
                return Ok(if filled == 0 {
                    ReadOutcome::CleanEof
                } else {
                    ReadOutcome::Partial
                });
            }
            Ok(n) => filled += n,
            Err(ref e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(WireError::Io(e)),
        }
    }
    Ok(ReadOutcome::Full)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hello_frame_is_38_bytes() {
        let frame = Frame::Hello {
            version: 1,
            fingerprint: [7u8; 32],
        };
        let mut buf = Vec::new();
        let n = write_frame(&mut buf, &frame).unwrap();
        assert_eq!(n, 38);
        assert_eq!(buf.len(), 38);
        assert_eq!(frame.wire_len(), 38);
        let (back, n2) = read_frame(&mut buf.as_slice()).unwrap().unwrap();
        assert_eq!(back, frame);
        assert_eq!(n2, 38);
    }

    #[test]
    fn roundtrip_all_frame_kinds() {
        let frames = [
            Frame::Hello {
                version: 1,
                fingerprint: [1; 32],
            },
            Frame::HelloAck {
                version: 1,
                fingerprint: [2; 32],
            },
            Frame::Data {
                seq: 42,
                encoding: vec![1, 2, 3],
            },
            Frame::DataAck { seq: 42 },
            Frame::Err {
                code: 1,
                msg: "mismatch".into(),
            },
        ];
        let mut buf = Vec::new();
        let mut total = 0;
        for f in &frames {
            total += write_frame(&mut buf, f).unwrap();
        }
        assert_eq!(total, buf.len() as u64);
        let mut cursor = buf.as_slice();
        for f in &frames {
            let (back, _) = read_frame(&mut cursor).unwrap().unwrap();
            assert_eq!(&back, f);
        }
        assert!(read_frame(&mut cursor).unwrap().is_none());
    }

    #[test]
    fn unknown_type_is_protocol_error() {
        let mut buf = Vec::new();
        buf.extend_from_slice(&1u32.to_be_bytes());
        buf.push(99);
        buf.push(0);
        match read_frame(&mut buf.as_slice()) {
            Err(WireError::ProtocolViolation(_)) => {}
            other => panic!("expected ProtocolViolation, got {other:?}"),
        }
    }

    #[test]
    fn mid_frame_eof_is_channel_closed() {
        let frame = Frame::DataAck { seq: 7 };
        let mut buf = Vec::new();
        write_frame(&mut buf, &frame).unwrap();
        for cut in 1..buf.len() {
            match read_frame(&mut &buf[..cut]) {
                Err(WireError::ChannelClosed) => {}
                other => panic!("cut {cut}: expected ChannelClosed, got {other:?}"),
            }
        }
    }

    #[test]
    fn oversized_length_rejected_without_allocation() {
        let mut buf = Vec::new();
        buf.extend_from_slice(&u32::MAX.to_be_bytes());
        buf.push(TYPE_DATA);
        match read_frame(&mut buf.as_slice()) {
            Err(WireError::ProtocolViolation(_)) => {}
            other => panic!("expected ProtocolViolation, got {other:?}"),
        }
    }
}
