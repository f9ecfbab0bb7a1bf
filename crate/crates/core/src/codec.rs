//! Encoding and decoding: derivations become compact token streams (the code
//! E) and token streams expand deterministically back into messages.
//!
//! Decoding is pre-order expansion: a class reference expands the member's
//! body, each slot consuming the next token in its class context. The encoder
//! self-verifies every encoding by decoding it; on any mismatch it falls back
//! to the literal encoding, so `decode(encode(D, G), G) == D` holds
//! unconditionally.

use crate::derivation::{best_derivation, DeriveParams, Derivation, Node, PatternUse};
use crate::model::{Bits, Element, Fingerprint, Grammar, Message, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("encoding fingerprint does not match the grammar")]
    FingerprintMismatch,
    #[error("token stream ended inside a pattern expansion")]
    TruncatedStream,
    #[error("bytes remain after the declared token stream")]
    TrailingTokens,
    #[error("invalid token: {0}")]
    InvalidToken(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One element of the code stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    /// A choice of `member` within `class`: the top-level ROOT context or a
    /// slot's class context.
    Ref { class: String, member: String },
    /// A top-level use of a pattern outside class ROOT, identified among all
    /// patterns.
    PatRef { member: String },
    /// An alphabet terminal.
    Lit(String),
    /// Raw bytes for out-of-alphabet input.
    Esc(Vec<u8>),
}

/// The code E: a pre-order token stream plus the fingerprint of the grammar
/// it decodes against.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub grammar_fingerprint: Fingerprint,
    pub tokens: Vec<Token>,
    /// Exact fractional-bit total of the token costs.
    pub bit_length: Bits,
}

/// Cost of an escape token carrying `byte_len` raw bytes:
/// 1 tag bit + 16-bit length header + 8 bits per byte.
pub fn esc_bits(byte_len: usize) -> Bits {
    1.0 + 16.0 + 8.0 * byte_len as Bits
}

/// Cost in bits of one token: 1 tag bit plus the choice or terminal cost.
pub fn token_cost(token: &Token, grammar: &Grammar) -> Result<Bits, CodecError> {
    Ok(match token {
        Token::Ref { class, member } => 1.0 + grammar.choice_cost(class, member)?,
        Token::PatRef { member } => 1.0 + grammar.pattern_identity_cost(member)?,
        Token::Lit(t) => 1.0 + grammar.terminal_cost(t)?,
        Token::Esc(bytes) => esc_bits(bytes.len()),
    })
}

/// Pre-order token stream of a derivation.
pub fn tokenize(derivation: &Derivation, grammar: &Grammar) -> Result<Vec<Token>, CodecError> {
    let mut tokens = Vec::new();
    for node in &derivation.roots {
        match node {
            Node::Literal(tok) => tokens.push(literal_token(tok, grammar)),
            Node::Use(u) => tokenize_use(u, None, grammar, &mut tokens)?,
        }
    }
    Ok(tokens)
}

fn literal_token(tok: &str, grammar: &Grammar) -> Token {
    if grammar.alphabet().id_of(tok).is_some() {
        Token::Lit(tok.to_string())
    } else {
        Token::Esc(tok.as_bytes().to_vec())
    }
}

fn tokenize_use(
    u: &PatternUse,
    slot_class: Option<&str>,
    grammar: &Grammar,
    tokens: &mut Vec<Token>,
) -> Result<(), CodecError> {
    let pattern = grammar
        .pattern(&u.pattern)
        .ok_or_else(|| ModelError::UnknownPattern(u.pattern.clone()))?;
    if u.fillers.len() != pattern.slot_count() {
        return Err(CodecError::InvalidToken(format!(
            "pattern `{}` expects {} fillers, derivation has {}",
            u.pattern,
            pattern.slot_count(),
            u.fillers.len()
        )));
    }
    match slot_class {
        Some(class) => {
            if pattern.class != class {
                return Err(CodecError::Model(ModelError::NotAMember {
                    class: class.to_string(),
                    member: u.pattern.clone(),
                }));
            }
            tokens.push(Token::Ref {
                class: class.to_string(),
                member: u.pattern.clone(),
            });
        }
        None if pattern.class == "ROOT" => tokens.push(Token::Ref {
            class: "ROOT".to_string(),
            member: u.pattern.clone(),
        }),
        None => tokens.push(Token::PatRef {
            member: u.pattern.clone(),
        }),
    }
    let mut filler_idx = 0;
    for elem in &pattern.body {
        if let Element::Slot(c) = elem {
            tokenize_use(&u.fillers[filler_idx], Some(c), grammar, tokens)?;
            filler_idx += 1;
        }
    }
    Ok(())
}

/// Total token-stream bits of a derivation (B_E).
pub fn derivation_bits(derivation: &Derivation, grammar: &Grammar) -> Result<Bits, CodecError> {
    let tokens = tokenize(derivation, grammar)?;
    let mut total = 0.0;
    for t in &tokens {
        total += token_cost(t, grammar)?;
    }
    Ok(total)
}

/// Encodes a message. The result always decodes back to `message`: the
/// encoder verifies this and falls back to the literal encoding on any
/// mismatch, and never does worse than that fallback.
pub fn encode(message: &Message, grammar: &Grammar, params: &DeriveParams) -> Encoding {
    let literal = encode_literal(message, grammar);
    let derived = best_derivation(message, grammar, params)
        .ok()
        .and_then(|d| encoding_of(&d, grammar).ok());
    match derived {
        Some(enc)
            if enc.bit_length <= literal.bit_length
                && decode(&enc, grammar).as_ref() == Ok(message) =>
        {
            enc
        }
        _ => literal,
    }
}

fn encoding_of(derivation: &Derivation, grammar: &Grammar) -> Result<Encoding, CodecError> {
    let tokens = tokenize(derivation, grammar)?;
    let mut bit_length = 0.0;
    for t in &tokens {
        bit_length += token_cost(t, grammar)?;
    }
    Ok(Encoding {
        grammar_fingerprint: *grammar.fingerprint(),
        tokens,
        bit_length,
    })
}

/// The all-literal (and escape) encoding. Always decodable.
pub fn encode_literal(message: &Message, grammar: &Grammar) -> Encoding {
    let tokens: Vec<Token> = message
        .tokens
        .iter()
        .map(|t| literal_token(t, grammar))
        .collect();
    let bit_length = tokens
        .iter()
        .map(|t| token_cost(t, grammar).expect("literal tokens always cost"))
        .sum();
    Encoding {
        grammar_fingerprint: *grammar.fingerprint(),
        tokens,
        bit_length,
    }
}

// Body cursor used by the iterative expansion walk.
struct Cursor {
    pattern: usize,
    elem: usize,
}

/// Decodes a token stream against the grammar whose fingerprint it carries.
///
/// Expansion is iterative, so adversarial nesting cannot overflow the stack;
/// the stream must be consumed exactly.
pub fn decode(encoding: &Encoding, grammar: &Grammar) -> Result<Message, CodecError> {
    if &encoding.grammar_fingerprint != grammar.fingerprint() {
        return Err(CodecError::FingerprintMismatch);
    }
    decode_tokens(&encoding.tokens, grammar)
}

pub(crate) fn decode_tokens(tokens: &[Token], grammar: &Grammar) -> Result<Message, CodecError> {
    let mut out: Vec<String> = Vec::new();
    let mut iter = tokens.iter();
    let mut stack: Vec<Cursor> = Vec::new();

    loop {
        // Emit terminals until a slot needs filling or the stack drains.
        let needed_class: Option<String> = loop {
            match stack.last_mut() {
                None => break None,
                Some(cur) => {
                    let pattern = grammar.pattern_at(cur.pattern);
                    if cur.elem == pattern.body.len() {
                        stack.pop();
                        continue;
                    }
                    match &pattern.body[cur.elem] {
                        Element::Terminal(t) => {
                            out.push(t.clone());
                            cur.elem += 1;
                        }
                        Element::Slot(c) => break Some(c.clone()),
                    }
                }
            }
        };

        match needed_class {
            Some(class) => {
                let token = iter.next().ok_or(CodecError::TruncatedStream)?;
                let Token::Ref { class: tc, member } = token else {
                    return Err(CodecError::InvalidToken(format!(
                        "slot of class `{class}` must be filled by a class reference"
                    )));
                };
                if tc != &class {
                    return Err(CodecError::InvalidToken(format!(
                        "slot expects class `{class}`, token references class `{tc}`"
                    )));
                }
                let pidx = member_index(grammar, &class, member)?;
                stack.last_mut().unwrap().elem += 1;
                stack.push(Cursor {
                    pattern: pidx,
                    elem: 0,
                });
            }
            None => match iter.next() {
                None => break,
                Some(Token::Lit(t)) => {
                    grammar
                        .alphabet()
                        .id_of(t)
                        .ok_or_else(|| ModelError::UnknownSymbol(t.clone()))?;
                    out.push(t.clone());
                }
                Some(Token::Esc(bytes)) => {
                    let tok = String::from_utf8(bytes.clone()).map_err(|_| {
                        CodecError::InvalidToken("escape payload is not UTF-8".into())
                    })?;
                    if tok.is_empty() || tok.contains(char::is_whitespace) {
                        return Err(CodecError::InvalidToken(
                            "escape payload is not a valid token".into(),
                        ));
                    }
                    out.push(tok);
                }
                Some(Token::Ref { class, member }) => {
                    if class != "ROOT" {
                        return Err(CodecError::InvalidToken(format!(
                            "top-level class reference must use ROOT, got `{class}`"
                        )));
                    }
                    let pidx = member_index(grammar, class, member)?;
                    stack.push(Cursor {
                        pattern: pidx,
                        elem: 0,
                    });
                }
                Some(Token::PatRef { member }) => {
                    let pidx = grammar
                        .pattern_idx(member)
                        .ok_or_else(|| ModelError::UnknownPattern(member.clone()))?;
                    stack.push(Cursor {
                        pattern: pidx,
                        elem: 0,
                    });
                }
            },
        }
    }

    if !stack.is_empty() {
        return Err(CodecError::TruncatedStream);
    }
    Ok(Message { tokens: out })
}

fn member_index(grammar: &Grammar, class: &str, member: &str) -> Result<usize, CodecError> {
    let pidx = grammar
        .pattern_idx(member)
        .ok_or_else(|| ModelError::UnknownPattern(member.to_string()))?;
    if grammar.pattern_at(pidx).class != class {
        return Err(CodecError::Model(ModelError::NotAMember {
            class: class.to_string(),
            member: member.to_string(),
        }));
    }
    Ok(pidx)
}
