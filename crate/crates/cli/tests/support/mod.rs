//! Shared helpers for the acceptance suite: an independent brute-force
//! alignment enumerator, seeded random instance generators, and a counting
//! channel wrapper.

use std::io::{Read, Write};

use gramwire::model::{CostMode, Element, Grammar, PatternSpec};
use gramwire::Message;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Prints one pass/fail line for a criterion and panics on failure.
pub fn verdict(number: u32, description: &str, errors: Vec<String>) {
    if errors.is_empty() {
        println!("acceptance criterion {number}: PASS - {description}");
    } else {
        println!(
            "acceptance criterion {number}: FAIL - {description} ({} problems)",
            errors.len()
        );
        panic!(
            "criterion {number} failed:\n{}",
            errors
                .iter()
                .take(5)
                .cloned()
                .collect::<Vec<_>>()
                .join("\n")
        );
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pick(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

// ---------------------------------------------------------------------------
// Independent minimum-cost enumerator.
//
// Exhaustively enumerates every depth-bounded derivation and prices it from
// the grammar's public cost accessors. It shares nothing with the search in
// `best_derivation`: no memoization, no dynamic program, plain recursion.
// ---------------------------------------------------------------------------

/// Minimum token-stream bits over all derivations of `message`, or None if
/// no derivation exists (only possible with `allow_literals = false`).
pub fn brute_force_min_bits(
    message: &Message,
    grammar: &Grammar,
    max_depth: usize,
    allow_literals: bool,
) -> Option<f64> {
    cover_min(message, grammar, 0, max_depth, allow_literals)
}

fn cover_min(
    message: &Message,
    grammar: &Grammar,
    pos: usize,
    max_depth: usize,
    allow_literals: bool,
) -> Option<f64> {
    if pos == message.len() {
        return Some(0.0);
    }
    let mut best: Option<f64> = None;
    if allow_literals {
        let tok = &message.tokens[pos];
        let lit = match grammar.terminal_cost(tok) {
            Ok(c) => 1.0 + c,
            Err(_) => 1.0 + 16.0 + 8.0 * tok.len() as f64,
        };
        if let Some(rest) = cover_min(message, grammar, pos + 1, max_depth, allow_literals) {
            best = merge_min(best, lit + rest);
        }
    }
    for pattern in grammar.patterns() {
        let head = if pattern.class == "ROOT" {
            1.0 + grammar.choice_cost("ROOT", &pattern.name).unwrap()
        } else {
            1.0 + grammar.pattern_identity_cost(&pattern.name).unwrap()
        };
        for (end, inner) in match_all(message, grammar, &pattern.name, pos, max_depth) {
            if let Some(rest) = cover_min(message, grammar, end, max_depth, allow_literals) {
                best = merge_min(best, head + inner + rest);
            }
        }
    }
    best
}

fn merge_min(best: Option<f64>, candidate: f64) -> Option<f64> {
    match best {
        Some(b) if b <= candidate => Some(b),
        _ => Some(candidate),
    }
}

/// All (end position, slot-filling cost) completions of `pattern` matched at
/// `pos` with `depth` nesting levels available.
fn match_all(
    message: &Message,
    grammar: &Grammar,
    pattern: &str,
    pos: usize,
    depth: usize,
) -> Vec<(usize, f64)> {
    if depth == 0 {
        return Vec::new();
    }
    let p = grammar.pattern(pattern).unwrap();
    let mut states = vec![(pos, 0.0f64)];
    for elem in &p.body {
        let mut next = Vec::new();
        match elem {
            Element::Terminal(t) => {
                for (at, cost) in &states {
                    if message.tokens.get(*at) == Some(t) {
                        next.push((*at + 1, *cost));
                    }
                }
            }
            Element::Slot(class) => {
                let members = grammar.class_members(class).unwrap();
                for (at, cost) in &states {
                    for member in &members {
                        let slot_ref = 1.0 + grammar.choice_cost(class, member).unwrap();
                        for (end, inner) in match_all(message, grammar, member, *at, depth - 1) {
                            next.push((end, cost + slot_ref + inner));
                        }
                    }
                }
            }
        }
        states = next;
        if states.is_empty() {
            break;
        }
    }
    states
}

// ---------------------------------------------------------------------------
// Random instances.
// ---------------------------------------------------------------------------

pub const SMALL_TERMS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// A random valid grammar: at most `max_patterns` patterns with bodies of at
/// most `max_body` elements over the 6-terminal alphabet. Slots only ever
/// reference classes that already have members, so every grammar builds.
pub fn random_grammar(
    rng: &mut ChaCha8Rng,
    max_patterns: usize,
    max_body: usize,
    cost_mode: CostMode,
    max_depth: usize,
) -> Grammar {
    let class_pool = ["ROOT", "A", "B"];
    let n = 1 + pick(rng, max_patterns);
    let mut specs: Vec<PatternSpec> = Vec::new();
    for i in 0..n {
        let class = class_pool[pick(rng, class_pool.len())];
        let body_len = 1 + pick(rng, max_body);
        let mut body = Vec::new();
        for _ in 0..body_len {
            let slot_ok = !specs.is_empty() && pick(rng, 4) == 0;
            if slot_ok {
                let target = &specs[pick(rng, specs.len())].class;
                body.push(Element::Slot(target.clone()));
            } else {
                body.push(Element::Terminal(
                    SMALL_TERMS[pick(rng, SMALL_TERMS.len())].to_string(),
                ));
            }
        }
        specs.push(PatternSpec {
            name: format!("p{i}"),
            class: class.to_string(),
            body,
            frequency: 1 + pick(rng, 4) as u64,
        });
    }
    let terms: Vec<(String, u64)> = SMALL_TERMS
        .iter()
        .map(|t| (t.to_string(), 1 + pick(rng, 9) as u64))
        .collect();
    Grammar::build_full(&specs, &terms, cost_mode, max_depth).expect("generated grammar is valid")
}

/// A random message over the small alphabet, with optional out-of-alphabet
/// tokens mixed in.
pub fn random_message(rng: &mut ChaCha8Rng, max_len: usize, oov_per_mille: usize) -> Message {
    let len = pick(rng, max_len + 1);
    let tokens = (0..len)
        .map(|_| {
            if pick(rng, 1000) < oov_per_mille {
                match pick(rng, 3) {
                    0 => format!("zz{}", pick(rng, 50)),
                    1 => format!("x:{}", pick(rng, 50)),
                    _ => format!("@w{}", pick(rng, 50)),
                }
            } else {
                SMALL_TERMS[pick(rng, SMALL_TERMS.len())].to_string()
            }
        })
        .collect();
    Message::new(tokens)
}

// ---------------------------------------------------------------------------
// Counting channel wrapper.
// ---------------------------------------------------------------------------

/// Forwards reads and writes while counting every byte that crosses.
pub struct Counting<C> {
    pub inner: C,
    pub bytes_read: u64,
    pub bytes_written: u64,
}

impl<C> Counting<C> {
    pub fn new(inner: C) -> Counting<C> {
        Counting {
            inner,
            bytes_read: 0,
            bytes_written: 0,
        }
    }
}

impl<C: Read> Read for Counting<C> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.bytes_read += n as u64;
        Ok(n)
    }
}

impl<C: Write> Write for Counting<C> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.bytes_written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}
