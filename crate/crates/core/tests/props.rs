//! Cross-module property tests: randomized invariants the unit tests only
//! spot-check.

use gramwire::baseline::{lz_compress, lz_decompress};
use gramwire::codec::{decode, encode, encode_literal, Encoding, Token};
use gramwire::induction::Corpus;
use gramwire::model::{CostMode, Element, Grammar, PatternSpec};
use gramwire::wire::{parse_grammar, read_encoding, read_frame, serialize_grammar, write_encoding};
use gramwire::{best_derivation, DeriveParams, Message};
use proptest::prelude::*;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TERMS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn pick(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Seeded valid grammar: slots only reference classes that already have
/// members.
fn grammar_from_seed(seed: u64, cost_mode: CostMode) -> Grammar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = ["ROOT", "A", "B"];
    let n = 1 + pick(&mut rng, 5);
    let mut specs: Vec<PatternSpec> = Vec::new();
    for i in 0..n {
        let class = classes[pick(&mut rng, classes.len())];
        let len = 1 + pick(&mut rng, 4);
        let body = (0..len)
            .map(|_| {
                if !specs.is_empty() && pick(&mut rng, 4) == 0 {
                    Element::Slot(specs[pick(&mut rng, specs.len())].class.clone())
                } else {
                    Element::Terminal(TERMS[pick(&mut rng, TERMS.len())].to_string())
                }
            })
            .collect();
        specs.push(PatternSpec {
            name: format!("p{i}"),
            class: class.to_string(),
            body,
            frequency: 1 + pick(&mut rng, 4) as u64,
        });
    }
    let terms: Vec<(String, u64)> = TERMS
        .iter()
        .map(|t| (t.to_string(), 1 + pick(&mut rng, 9) as u64))
        .collect();
    Grammar::build_with_terminals(&specs, &terms, cost_mode).unwrap()
}

fn message_from_seed(seed: u64, max_len: usize) -> Message {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let len = pick(&mut rng, max_len + 1);
    Message::new(
        (0..len)
            .map(|_| {
                if pick(&mut rng, 8) == 0 {
                    format!("oov{}", pick(&mut rng, 20))
                } else {
                    TERMS[pick(&mut rng, TERMS.len())].to_string()
                }
            })
            .collect(),
    )
}

fn mode_of(seed: u64) -> CostMode {
    if seed.is_multiple_of(2) {
        CostMode::Uniform
    } else {
        CostMode::Frequency
    }
}

proptest! {
    /// The defining contract: decode(encode(D, G), G) == D for random
    /// grammars and messages, including out-of-alphabet tokens.
    #[test]
    fn codec_roundtrip(seed in any::<u64>()) {
        let grammar = grammar_from_seed(seed, mode_of(seed));
        let message = message_from_seed(seed, 24);
        let enc = encode(&message, &grammar, &DeriveParams::default());
        prop_assert_eq!(decode(&enc, &grammar).unwrap(), message);
    }

    /// The encoder never does worse than its literal fallback.
    #[test]
    fn encoder_never_beats_by_literal(seed in any::<u64>()) {
        let grammar = grammar_from_seed(seed, mode_of(seed));
        let message = message_from_seed(seed, 24);
        let enc = encode(&message, &grammar, &DeriveParams::default());
        let lit = encode_literal(&message, &grammar);
        prop_assert!(enc.bit_length <= lit.bit_length + 1e-9);
    }

    /// Canonical grammar text roundtrips to an equal grammar with an equal
    /// fingerprint, and re-serializes byte-identically.
    #[test]
    fn grammar_text_roundtrip(seed in any::<u64>()) {
        let grammar = grammar_from_seed(seed, mode_of(seed));
        let text = serialize_grammar(&grammar);
        let back = parse_grammar(&text).unwrap();
        prop_assert_eq!(&back, &grammar);
        prop_assert_eq!(back.fingerprint(), grammar.fingerprint());
        prop_assert_eq!(serialize_grammar(&back), text);
    }

    /// SPE1 bytes roundtrip to an equal encoding.
    #[test]
    fn encoding_bytes_roundtrip(seed in any::<u64>()) {
        let grammar = grammar_from_seed(seed, mode_of(seed));
        let message = message_from_seed(seed, 16);
        let enc = encode(&message, &grammar, &DeriveParams::default());
        let bytes = write_encoding(&enc, &grammar).unwrap();
        let back = read_encoding(&bytes, &grammar).unwrap();
        prop_assert_eq!(back, enc);
    }

    /// Raw size is additive over message concatenation.
    #[test]
    fn raw_bits_additive(seed in any::<u64>(), split in 0usize..16) {
        let grammar = grammar_from_seed(seed, mode_of(seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tokens: Vec<String> = (0..16)
            .map(|_| TERMS[pick(&mut rng, TERMS.len())].to_string())
            .collect();
        let head = Message::new(tokens[..split].to_vec());
        let tail = Message::new(tokens[split..].to_vec());
        let whole = Message::new(tokens);
        let sum = grammar.raw_bits(&head).unwrap() + grammar.raw_bits(&tail).unwrap();
        prop_assert!((grammar.raw_bits(&whole).unwrap() - sum).abs() < 1e-9);
    }

    /// The baseline compressor is the identity through a roundtrip.
    #[test]
    fn lz_roundtrip(data in proptest::collection::vec(any::<u8>(), 0..4096)) {
        let blob = lz_compress(&data);
        prop_assert_eq!(lz_decompress(&blob).unwrap(), data);
    }

    /// The frame parser is total: random bytes parse or error, never panic,
    /// and never claim more than one frame per 5 input bytes.
    #[test]
    fn frame_parser_totality(data in proptest::collection::vec(any::<u8>(), 0..512)) {
        let mut cursor = data.as_slice();
        let mut frames = 0usize;
        loop {
            match read_frame(&mut cursor) {
                Ok(Some(_)) => frames += 1,
                Ok(None) => break,
                Err(_) => break,
            }
        }
        prop_assert!(frames <= data.len() / 5 + 1);
    }

    /// Truncating or extending a token stream never decodes to the original
    /// message.
    #[test]
    fn stream_exactness(seed in any::<u64>()) {
        let grammar = grammar_from_seed(seed, mode_of(seed));
        let mut message = message_from_seed(seed, 12);
        if message.is_empty() {
            message = Message::from_tokens(&["a", "b"]);
        }
        let enc = encode(&message, &grammar, &DeriveParams::default());

        let prefix = Encoding {
            grammar_fingerprint: enc.grammar_fingerprint,
            tokens: enc.tokens[..enc.tokens.len() - 1].to_vec(),
            bit_length: 0.0,
        };
        if let Ok(m) = decode(&prefix, &grammar) {
            prop_assert_ne!(&m, &message);
        }

        let mut extended_tokens = enc.tokens.clone();
        extended_tokens.push(Token::Lit("a".to_string()));
        let extended = Encoding {
            grammar_fingerprint: enc.grammar_fingerprint,
            tokens: extended_tokens,
            bit_length: 0.0,
        };
        if let Ok(m) = decode(&extended, &grammar) {
            prop_assert_ne!(&m, &message);
        }
    }

    /// Adding a pattern under a fresh class with no new terminals never
    /// increases the optimal encoding cost, provided the old optimum used no
    /// globally-identified pattern references (whose cost depends on the
    /// total pattern count).
    #[test]
    fn monotone_grammar_benefit(seed in any::<u64>()) {
        let grammar = grammar_from_seed(seed, mode_of(seed));
        let message = message_from_seed(seed, 12);
        let params = DeriveParams::default();
        let before = best_derivation(&message, &grammar, &params).unwrap();
        let uses_global_ref = before.roots.iter().any(|node| match node {
            gramwire::derivation::Node::Use(u) => {
                grammar.pattern(&u.pattern).unwrap().class != "ROOT"
            }
            gramwire::derivation::Node::Literal(_) => false,
        });
        prop_assume!(!uses_global_ref);
        let before_bits = gramwire::codec::derivation_bits(&before, &grammar).unwrap();

        let mut specs: Vec<PatternSpec> = grammar
            .patterns()
            .iter()
            .map(|p| PatternSpec {
                name: p.name.clone(),
                class: p.class.clone(),
                body: p.body.clone(),
                frequency: p.frequency,
            })
            .collect();
        specs.push(PatternSpec::new("extra", "FRESH", &["a", "b"], 1));
        let terms: Vec<(String, u64)> = grammar
            .alphabet()
            .entries()
            .map(|(n, c)| (n.to_string(), c))
            .collect();
        let bigger = Grammar::build_with_terminals(&specs, &terms, grammar.cost_mode()).unwrap();
        let after = best_derivation(&message, &bigger, &params).unwrap();
        let after_bits = gramwire::codec::derivation_bits(&after, &bigger).unwrap();
        prop_assert!(after_bits <= before_bits + 1e-9,
            "optimum rose from {before_bits} to {after_bits}");
    }
}

#[test]
fn wire_corpus_file_roundtrip() {
    let text = "the cat sat\n\nthe dog ran\n";
    let corpus = Corpus::from_text("c", text, false);
    assert_eq!(corpus.len(), 3);
    assert!(corpus.messages[1].is_empty());
    assert_eq!(corpus.to_text(), text);
}

#[test]
fn learned_grammar_survives_file_and_session() {
    // Learn, serialize, reparse, and ship messages through a session with
    // the reparsed grammar: the full pipeline agrees with itself.
    let corpus = Corpus::from_text(
        "pipeline",
        "alpha beta gamma\nalpha beta delta\nalpha beta gamma\nalpha beta delta\n",
        false,
    );
    let learned = gramwire::learn(&corpus, &gramwire::LearnParams::default())
        .unwrap()
        .grammar;
    let reparsed = parse_grammar(&serialize_grammar(&learned)).unwrap();
    assert_eq!(reparsed.fingerprint(), learned.fingerprint());

    let (mut alice, mut bob) = gramwire::wire::duplex();
    let receiver = std::thread::spawn(move || gramwire::wire::run_receiver(&mut bob, &reparsed));
    let report = gramwire::wire::run_sender(&mut alice, &learned, &corpus.messages).unwrap();
    drop(alice);
    let (received, _) = receiver.join().unwrap().unwrap();
    assert_eq!(received, corpus.messages);
    assert_eq!(report.messages, corpus.messages.len() as u64);
}
