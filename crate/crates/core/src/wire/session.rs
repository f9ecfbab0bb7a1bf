//! The Alice-to-Bob session: HELLO negotiation gated by grammar fingerprint
//! equality, then one acknowledged DATA frame per message.
//!
//! The grammar itself never crosses the channel; only encodings do. Both
//! sides assume a reliable ordered byte stream (an in-memory pipe or a TCP
//! connection) and account for every byte they put on or take off the wire.

use std::io::{Read, Write};

use crate::codec::{decode, encode, Encoding};
use crate::derivation::DeriveParams;
use crate::model::{Grammar, Message};

use super::frame::{read_frame, write_frame, Frame};
use super::{read_encoding, write_encoding, WireError};

pub const PROTOCOL_VERSION: u8 = 1;

pub const ERR_FINGERPRINT_MISMATCH: u8 = 1;
pub const ERR_PROTOCOL: u8 = 2;
pub const ERR_BAD_PAYLOAD: u8 = 3;

/// Byte and frame accounting for one session endpoint.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionReport {
    pub frames_sent: u64,
    pub frames_received: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub messages: u64,
    /// On-the-wire size of each message's encoding file, in order.
    pub encoding_bytes: Vec<u64>,
}

/// Streams `messages` over `channel`: HELLO, then one acknowledged DATA frame
/// per message. Returns the sender-side accounting.
pub fn run_sender<C: Read + Write>(
    channel: &mut C,
    grammar: &Grammar,
    messages: &[Message],
) -> Result<SessionReport, WireError> {
    let mut report = SessionReport::default();
    send(
        channel,
        &mut report,
        &Frame::Hello {
            version: PROTOCOL_VERSION,
            fingerprint: *grammar.fingerprint(),
        },
    )?;
    match recv(channel, &mut report)? {
        Frame::HelloAck {
            version,
            fingerprint,
        } => {
            if version != PROTOCOL_VERSION {
                return Err(WireError::ProtocolViolation(format!(
                    "receiver speaks protocol version {version}"
                )));
            }
            if &fingerprint != grammar.fingerprint() {
                return Err(WireError::FingerprintMismatch);
            }
        }
        Frame::Err { code, msg } => return Err(WireError::Remote { code, msg }),
        _ => {
            return Err(WireError::ProtocolViolation(
                "expected HELLO_ACK after HELLO".into(),
            ))
        }
    }

    let params = DeriveParams::default();
    for (seq, message) in messages.iter().enumerate() {
        let encoding: Encoding = encode(message, grammar, &params);
        let bytes = write_encoding(&encoding, grammar)?;
        report.encoding_bytes.push(bytes.len() as u64);
        send(
            channel,
            &mut report,
            &Frame::Data {
                seq: seq as u64,
                encoding: bytes,
            },
        )?;
        match recv(channel, &mut report)? {
            Frame::DataAck { seq: acked } if acked == seq as u64 => {}
            Frame::Err { code, msg } => return Err(WireError::Remote { code, msg }),
            _ => {
                return Err(WireError::ProtocolViolation(
                    "expected matching DATA_ACK".into(),
                ))
            }
        }
        report.messages += 1;
    }
    Ok(report)
}

/// Receives one session: verifies the fingerprint, decodes each DATA frame,
/// and returns the messages in sequence order with receiver-side accounting.
///
/// On fingerprint mismatch the receiver reports ERR code 1 to the peer and
/// returns an error without delivering any message.
pub fn run_receiver<C: Read + Write>(
    channel: &mut C,
    grammar: &Grammar,
) -> Result<(Vec<Message>, SessionReport), WireError> {
    let mut report = SessionReport::default();
    match recv_opt(channel, &mut report)? {
        Some(Frame::Hello {
            version,
            fingerprint,
        }) => {
            if version != PROTOCOL_VERSION {
                fail(
                    channel,
                    &mut report,
                    ERR_PROTOCOL,
                    &format!("unsupported protocol version {version}"),
                )?;
                return Err(WireError::ProtocolViolation(format!(
                    "unsupported protocol version {version}"
                )));
            }
            if &fingerprint != grammar.fingerprint() {
                fail(
                    channel,
                    &mut report,
                    ERR_FINGERPRINT_MISMATCH,
                    "grammar fingerprint mismatch",
                )?;
                return Err(WireError::FingerprintMismatch);
            }
        }
        Some(Frame::Err { code, msg }) => return Err(WireError::Remote { code, msg }),
        Some(_) => {
            fail(channel, &mut report, ERR_PROTOCOL, "expected HELLO first")?;
            return Err(WireError::ProtocolViolation("expected HELLO first".into()));
        }
        None => return Err(WireError::ChannelClosed),
    }
    send(
        channel,
        &mut report,
        &Frame::HelloAck {
            version: PROTOCOL_VERSION,
            fingerprint: *grammar.fingerprint(),
        },
    )?;

    let mut messages = Vec::new();
    loop {
        match recv_opt(channel, &mut report)? {
            None => break, // sender closed after its last ack
            Some(Frame::Data { seq, encoding }) => {
                if seq != messages.len() as u64 {
                    fail(channel, &mut report, ERR_PROTOCOL, "out-of-order sequence")?;
                    return Err(WireError::ProtocolViolation(format!(
                        "expected sequence {}, got {seq}",
                        messages.len()
                    )));
                }
                report.encoding_bytes.push(encoding.len() as u64);
                let message = match read_encoding(&encoding, grammar)
                    .and_then(|enc| Ok(decode(&enc, grammar)?))
                {
                    Ok(m) => m,
                    Err(e) => {
                        fail(channel, &mut report, ERR_BAD_PAYLOAD, &e.to_string())?;
                        return Err(e);
                    }
                };
                messages.push(message);
                report.messages += 1;
                send(channel, &mut report, &Frame::DataAck { seq })?;
            }
            Some(Frame::Err { code, msg }) => return Err(WireError::Remote { code, msg }),
            Some(_) => {
                fail(channel, &mut report, ERR_PROTOCOL, "unexpected frame")?;
                return Err(WireError::ProtocolViolation(
                    "unexpected frame in data phase".into(),
                ));
            }
        }
    }
    Ok((messages, report))
}

fn send<C: Write>(
    channel: &mut C,
    report: &mut SessionReport,
    frame: &Frame,
) -> Result<(), WireError> {
    let n = write_frame(channel, frame)?;
    report.frames_sent += 1;
    report.bytes_sent += n;
    Ok(())
}

fn fail<C: Write>(
    channel: &mut C,
    report: &mut SessionReport,
    code: u8,
    msg: &str,
) -> Result<(), WireError> {
    send(
        channel,
        report,
        &Frame::Err {
            code,
            msg: msg.to_string(),
        },
    )
}

fn recv<C: Read>(channel: &mut C, report: &mut SessionReport) -> Result<Frame, WireError> {
    recv_opt(channel, report)?.ok_or(WireError::ChannelClosed)
}

fn recv_opt<C: Read>(
    channel: &mut C,
    report: &mut SessionReport,
) -> Result<Option<Frame>, WireError> {
    match read_frame(channel)? {
        Some((frame, n)) => {
            report.frames_received += 1;
            report.bytes_received += n;
            Ok(Some(frame))
        }
        None => Ok(None),
    }
}
