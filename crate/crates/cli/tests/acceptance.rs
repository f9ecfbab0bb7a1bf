//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test -p gramwire-cli --test acceptance -- --nocapture`.

mod support;

use std::time::Instant;

use gramwire::baseline::{lz_compress, lz_decompress, parse_tokens, LzToken};
use gramwire::codec::{decode, derivation_bits, encode};
use gramwire::induction::{description_length, learn, Corpus, LearnParams};
use gramwire::model::{CostMode, Element, Grammar, PatternSpec};
use gramwire::wire::{
    duplex, parse_grammar, read_encoding, run_receiver, run_sender, serialize_grammar,
    write_encoding, WireError, ERR_FINGERPRINT_MISMATCH,
};
use gramwire::{best_derivation, DeriveParams, Message};
use rand_chacha::rand_core::RngCore;

use support::{brute_force_min_bits, pick, random_grammar, rng, verdict, Counting};

fn the_cat_grammar() -> Grammar {
    Grammar::build(
        &[
            PatternSpec::new("d1", "D", &["t", "h", "e"], 1),
            PatternSpec::new("n1", "N", &["c", "a", "t"], 1),
            PatternSpec::new("n2", "N", &["d", "o", "g"], 1),
            PatternSpec::new("s1", "ROOT", &["@D", "@N"], 1),
        ],
        CostMode::Uniform,
    )
    .unwrap()
}

fn planted_corpus() -> Corpus {
    gramwire_cli::planted::det_noun_verb_spec().generate(42)
}

fn learned_grammar(corpus: &Corpus) -> Grammar {
    learn(corpus, &LearnParams::default()).unwrap().grammar
}

fn random_message_over(
    rng: &mut rand_chacha::ChaCha8Rng,
    words: &[String],
    max_len: usize,
) -> Message {
    let len = pick(rng, max_len + 1);
    let tokens = (0..len)
        .map(|_| {
            if pick(rng, 10) == 0 {
                match pick(rng, 3) {
                    0 => format!("zz{}", pick(rng, 40)),
                    1 => format!("x:{}", pick(rng, 40)),
                    _ => format!("@w{}", pick(rng, 40)),
                }
            } else if words.is_empty() {
                format!("w{}", pick(rng, 30))
            } else {
                words[pick(rng, words.len())].clone()
            }
        })
        .collect();
    Message::new(tokens)
}

#[test]
fn criterion_1_lossless_roundtrip() {
    let start = Instant::now();
    let empty = Grammar::terminals_only(&[], CostMode::Uniform).unwrap();
    let handcrafted = the_cat_grammar();
    let corpus = planted_corpus();
    let learned = learned_grammar(&corpus);
    let grammars = [
        ("empty", &empty),
        ("handcrafted", &handcrafted),
        ("learned", &learned),
    ];

    let params = DeriveParams::default();
    let mut errors = Vec::new();
    let mut r = rng(0xC1);
    for case in 0..10_000u32 {
        let (label, grammar) = grammars[case as usize % grammars.len()];
        let words: Vec<String> = grammar
            .alphabet()
            .entries()
            .map(|(n, _)| n.to_string())
            .collect();
        let message = random_message_over(&mut r, &words, 200);
        let enc = encode(&message, grammar, &params);
        match decode(&enc, grammar) {
            Ok(back) if back == message => {}
            Ok(_) => errors.push(format!("case {case} ({label}): decoded wrong message")),
            Err(e) => errors.push(format!("case {case} ({label}): decode failed: {e}")),
        }
        if errors.len() > 5 {
            break;
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 30 {
        errors.push(format!("runtime {elapsed:?} exceeds 30 s"));
    }
    verdict(
        1,
        &format!("10,000 randomized messages roundtrip losslessly ({elapsed:?})"),
        errors,
    );
}

#[test]
fn criterion_2_alignment_optimality_oracle() {
    let start = Instant::now();
    let mut errors = Vec::new();
    let mut r = rng(0xC2);
    for case in 0..1_000u32 {
        let cost_mode = if case % 10 < 7 {
            CostMode::Uniform
        } else {
            CostMode::Frequency
        };
        let grammar = random_grammar(&mut r, 5, 4, cost_mode, 3);
        let message = support::random_message(&mut r, 8, 30);
        let params = DeriveParams {
            max_depth: Some(3),
            beam_width: 0,
            allow_literals: true,
        };
        let derivation = match best_derivation(&message, &grammar, &params) {
            Ok(d) => d,
            Err(e) => {
                errors.push(format!("case {case}: search failed: {e}"));
                continue;
            }
        };
        if derivation.spell(&grammar).unwrap() != message.tokens {
            errors.push(format!("case {case}: derivation does not spell the message"));
            continue;
        }
        let searched = derivation_bits(&derivation, &grammar).unwrap();
        let brute = brute_force_min_bits(&message, &grammar, 3, true).unwrap();
        let tolerance = match cost_mode {
            CostMode::Uniform => 0.0,
            CostMode::Frequency => 1e-9,
        };
        if (searched - brute).abs() > tolerance {
            errors.push(format!(
                "case {case}: search found {searched} bits, brute force minimum is {brute}"
            ));
        }
        if errors.len() > 5 {
            break;
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 60 {
        errors.push(format!("runtime {elapsed:?} exceeds 60 s"));
    }
    verdict(
        2,
        &format!("exact search matches brute-force enumeration on 1,000 cases ({elapsed:?})"),
        errors,
    );
}

#[test]
fn criterion_3_mdl_monotonicity() {
    let mut errors = Vec::new();
    let vocab: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
    for corpus_idx in 0..20u64 {
        for seed in 0..5u64 {
            let mut r = rng(0xC3_000 + corpus_idx * 5 + seed);
            // Semi-structured corpus: a few fixed template lines plus noise.
            let n_templates = 2 + pick(&mut r, 3);
            let templates: Vec<Vec<String>> = (0..n_templates)
                .map(|_| {
                    (0..2 + pick(&mut r, 3))
                        .map(|_| vocab[pick(&mut r, vocab.len())].clone())
                        .collect()
                })
                .collect();
            let n_lines = 15 + pick(&mut r, 25);
            let messages: Vec<Message> = (0..n_lines)
                .map(|_| {
                    if pick(&mut r, 10) < 6 {
                        Message::new(templates[pick(&mut r, templates.len())].clone())
                    } else {
                        Message::new(
                            (0..1 + pick(&mut r, 5))
                                .map(|_| vocab[pick(&mut r, vocab.len())].clone())
                                .collect(),
                        )
                    }
                })
                .collect();
            let corpus = Corpus::new(format!("random-{corpus_idx}-{seed}"), messages);
            let params = LearnParams {
                seed,
                ..LearnParams::default()
            };
            let result = learn(&corpus, &params).unwrap();
            for (i, pair) in result.trajectory.windows(2).enumerate() {
                if pair[1] > pair[0] {
                    errors.push(format!(
                        "corpus {corpus_idx} seed {seed}: DL rose at step {i}: {} -> {}",
                        pair[0], pair[1]
                    ));
                }
            }
            let terminals = corpus.alphabet_counts().unwrap();
            let bare = Grammar::terminals_only(&terminals, params.cost_mode).unwrap();
            let dl_bare = description_length(&bare, &corpus).unwrap();
            let dl_learned = description_length(&result.grammar, &corpus).unwrap();
            if dl_learned > dl_bare {
                errors.push(format!(
                    "corpus {corpus_idx} seed {seed}: learned DL {dl_learned} exceeds terminals-only {dl_bare}"
                ));
            }
            // Losslessness under learning.
            let dp = DeriveParams::default();
            for m in &corpus.messages {
                let enc = encode(m, &result.grammar, &dp);
                if decode(&enc, &result.grammar).as_ref() != Ok(m) {
                    errors.push(format!(
                        "corpus {corpus_idx} seed {seed}: message failed to roundtrip"
                    ));
                }
            }
        }
    }
    verdict(
        3,
        "DL trajectories are non-increasing over 20 corpora x 5 seeds",
        errors,
    );
}

#[test]
fn criterion_4_planted_structure_recovery() {
    let start = Instant::now();
    let mut errors = Vec::new();
    let spec = gramwire_cli::planted::det_noun_verb_spec();
    let corpus = spec.generate(42);
    let result = learn(&corpus, &LearnParams::default()).unwrap();

    let words = spec.all_words();
    let recovered: Vec<&str> = words
        .iter()
        .filter(|w| {
            result.grammar.patterns().iter().any(|p| {
                matches!(p.body.as_slice(), [Element::Terminal(t)] if t == *w)
            })
        })
        .copied()
        .collect();
    let recall = recovered.len() as f64 / words.len() as f64;
    println!(
        "  planted recovery: {}/{} words ({:.1}%), classes: {:?}",
        recovered.len(),
        words.len(),
        100.0 * recall,
        result.grammar.class_names().collect::<Vec<_>>()
    );
    if recall < 0.80 {
        errors.push(format!(
            "recall {recall:.3} below 0.80 (recovered {recovered:?})"
        ));
    }
    let formed_classes = result
        .grammar
        .class_names()
        .filter(|c| *c != "ROOT")
        .count();
    if formed_classes < 1 {
        errors.push("no class was formed".to_string());
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 120 {
        errors.push(format!("runtime {elapsed:?} exceeds 120 s"));
    }
    verdict(
        4,
        &format!("planted words recovered as pattern yields with a class ({elapsed:?})"),
        errors,
    );
}

#[test]
fn criterion_5_transmission_ratio() {
    let start = Instant::now();
    let mut errors = Vec::new();

    // (a) Planted corpus with its learned grammar: mean ratio <= 0.25.
    let corpus = planted_corpus();
    let grammar = learned_grammar(&corpus);
    let grammar_bits = (serialize_grammar(&grammar).len() * 8) as f64;
    let report =
        gramwire_cli::report::ComparisonReport::build(&grammar, &corpus, grammar_bits, None)
            .unwrap();
    let mean_a = report.mean_ratio();
    println!("  planted corpus CSV (tail):");
    for line in report.to_csv().lines().rev().take(3).collect::<Vec<_>>().iter().rev() {
        println!("    {line}");
    }
    if mean_a > 0.25 {
        errors.push(format!("planted mean ratio {mean_a:.4} exceeds 0.25"));
    }

    // (b) High-redundancy corpus: 200 messages from 8 template sentences
    // over a 40-word vocabulary: mean ratio < 0.06.
    let spec8 = gramwire_cli::planted::eight_template_spec();
    let corpus8 = spec8.generate(7);
    let grammar8 = learned_grammar(&corpus8);
    let grammar8_bits = (serialize_grammar(&grammar8).len() * 8) as f64;
    let report8 =
        gramwire_cli::report::ComparisonReport::build(&grammar8, &corpus8, grammar8_bits, None)
            .unwrap();
    let mean_b = report8.mean_ratio();
    println!("  high-redundancy corpus CSV (tail):");
    for line in report8.to_csv().lines().rev().take(3).collect::<Vec<_>>().iter().rev() {
        println!("    {line}");
    }
    if mean_b >= 0.06 {
        errors.push(format!("high-redundancy mean ratio {mean_b:.4} not below 0.06"));
    }

    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 120 {
        errors.push(format!("runtime {elapsed:?} exceeds 120 s"));
    }
    verdict(
        5,
        &format!("mean ratios: planted {mean_a:.4} <= 0.25, high-redundancy {mean_b:.4} < 0.06 ({elapsed:?})"),
        errors,
    );
}

#[test]
fn criterion_6_baseline_roundtrip() {
    let mut errors = Vec::new();
    let mut r = rng(0xC6);
    for case in 0..10_000u32 {
        let len = pick(&mut r, 10_001);
        let mut data = vec![0u8; len];
        r.fill_bytes(&mut data);
        let blob = lz_compress(&data);
        match lz_decompress(&blob) {
            Ok(back) if back == data => {}
            Ok(_) => errors.push(format!("case {case}: wrong bytes after roundtrip")),
            Err(e) => errors.push(format!("case {case}: decompress failed: {e}")),
        }
        if case % 100 == 0 {
            for token in parse_tokens(&blob).unwrap() {
                if let LzToken::Match { distance, .. } = token {
                    if distance as usize > 32768 {
                        errors.push(format!("case {case}: match distance {distance} too far"));
                    }
                }
            }
        }
        if errors.len() > 5 {
            break;
        }
    }
    // Corpus files as produced by the generators.
    for (name, text) in [
        ("planted", planted_corpus().to_text()),
        (
            "high-redundancy",
            gramwire_cli::planted::eight_template_spec().generate(7).to_text(),
        ),
    ] {
        let blob = lz_compress(text.as_bytes());
        if lz_decompress(&blob).as_deref() != Ok(text.as_bytes()) {
            errors.push(format!("corpus file `{name}` failed to roundtrip"));
        }
        for token in parse_tokens(&blob).unwrap() {
            if let LzToken::Match { distance, .. } = token {
                if distance as usize > 32768 {
                    errors.push(format!("corpus `{name}`: match distance {distance} too far"));
                }
            }
        }
    }
    verdict(
        6,
        "LZSS roundtrips 10,000 random strings and all corpus files within the window",
        errors,
    );
}

#[test]
fn criterion_7_wire_protocol() {
    let mut errors = Vec::new();
    let corpus = planted_corpus();
    let messages: Vec<Message> = corpus.messages.iter().take(100).cloned().collect();
    let grammar = the_cat_grammar();

    // In-memory channel with exact byte accounting.
    {
        let (alice, bob) = duplex();
        let mut alice = Counting::new(alice);
        let g = grammar.clone();
        let receiver = std::thread::spawn(move || {
            let mut bob = Counting::new(bob);
            let out = run_receiver(&mut bob, &g);
            (out, bob.bytes_read, bob.bytes_written)
        });
        let report = run_sender(&mut alice, &grammar, &messages).unwrap();
        let sender_counted = (alice.bytes_written, alice.bytes_read);
        drop(alice);
        let (out, bob_read, bob_written) = receiver.join().unwrap();
        let (received, recv_report) = out.unwrap();
        if received != messages {
            errors.push("in-memory: received messages differ".to_string());
        }
        if report.bytes_sent != sender_counted.0 || report.bytes_received != sender_counted.1 {
            errors.push(format!(
                "in-memory: sender accounting {}/{} != channel {}/{}",
                report.bytes_sent, report.bytes_received, sender_counted.0, sender_counted.1
            ));
        }
        if recv_report.bytes_received != bob_read || recv_report.bytes_sent != bob_written {
            errors.push("in-memory: receiver accounting mismatch".to_string());
        }
        if report.bytes_sent != recv_report.bytes_received {
            errors.push("in-memory: bytes sent != bytes received".to_string());
        }
    }

    // Localhost TCP.
    {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let g = grammar.clone();
        let receiver = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut stream = Counting::new(stream);
            run_receiver(&mut stream, &g)
        });
        let stream = std::net::TcpStream::connect(addr).unwrap();
        let mut stream = Counting::new(stream);
        let report = run_sender(&mut stream, &grammar, &messages).unwrap();
        if report.bytes_sent != stream.bytes_written || report.bytes_received != stream.bytes_read
        {
            errors.push("tcp: sender accounting mismatch".to_string());
        }
        drop(stream);
        let (received, _) = receiver.join().unwrap().unwrap();
        if received != messages {
            errors.push("tcp: received messages differ".to_string());
        }
    }

    // Fingerprint mismatch: ERR code 1 and zero delivered messages.
    {
        let other = Grammar::build(
            &[PatternSpec::new("q", "ROOT", &["zz"], 1)],
            CostMode::Uniform,
        )
        .unwrap();
        let (mut alice, mut bob) = duplex();
        let receiver = std::thread::spawn(move || run_receiver(&mut bob, &other));
        let send_result = run_sender(&mut alice, &grammar, &messages);
        drop(alice);
        let recv_result = receiver.join().unwrap();
        match send_result {
            Err(WireError::Remote { code, .. }) if code == ERR_FINGERPRINT_MISMATCH => {}
            other => errors.push(format!("mismatch: sender saw {other:?}")),
        }
        match recv_result {
            Err(WireError::FingerprintMismatch) => {}
            Ok((msgs, _)) => errors.push(format!("mismatch: receiver delivered {}", msgs.len())),
            Err(e) => errors.push(format!("mismatch: receiver error {e}")),
        }
    }

    verdict(
        7,
        "sessions deliver 100 messages exactly over pipe and TCP with exact byte accounting",
        errors,
    );
}

#[test]
fn criterion_8_format_stability() {
    let mut errors = Vec::new();
    let golden_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let regen = std::env::var("REGEN_GOLDEN").is_ok();

    // Golden SPG1 grammar file.
    let grammar = the_cat_grammar();
    let spg = serialize_grammar(&grammar);
    let spg_path = golden_dir.join("the_cat.spg");
    // Golden SPE1 encoding file.
    let message = Message::from_tokens(&["t", "h", "e", "c", "a", "t"]);
    let enc = encode(&message, &grammar, &DeriveParams::default());
    let spe = write_encoding(&enc, &grammar).unwrap();
    let spe_path = golden_dir.join("the_cat.spe");
    // Golden SPB1 baseline blob.
    let sample = b"the cat sat on the mat and the cat sat on the dog\n";
    let spb = lz_compress(sample);
    let spb_path = golden_dir.join("lz_sample.spb");

    if regen {
        std::fs::create_dir_all(&golden_dir).unwrap();
        std::fs::write(&spg_path, spg.as_bytes()).unwrap();
        std::fs::write(&spe_path, &spe).unwrap();
        std::fs::write(&spb_path, &spb).unwrap();
        println!("  regenerated golden files in {}", golden_dir.display());
    } else {
        for (path, bytes, label) in [
            (&spg_path, spg.as_bytes().to_vec(), "SPG1"),
            (&spe_path, spe.clone(), "SPE1"),
            (&spb_path, spb.clone(), "SPB1"),
        ] {
            match std::fs::read(path) {
                Ok(golden) if golden == bytes => {}
                Ok(_) => errors.push(format!("{label}: bytes differ from {}", path.display())),
                Err(e) => errors.push(format!("{label}: cannot read golden: {e}")),
            }
        }
    }

    // Golden files parse back to the same artifacts.
    match parse_grammar(&spg) {
        Ok(g) if g == grammar => {}
        Ok(_) => errors.push("SPG1 golden parses to a different grammar".into()),
        Err(e) => errors.push(format!("SPG1 golden does not parse: {e}")),
    }
    match read_encoding(&spe, &grammar) {
        Ok(e) if e == enc => {}
        Ok(_) => errors.push("SPE1 golden reads to a different encoding".into()),
        Err(e) => errors.push(format!("SPE1 golden does not read: {e}")),
    }
    if lz_decompress(&spb).as_deref() != Ok(sample.as_slice()) {
        errors.push("SPB1 golden does not decompress to the sample".into());
    }

    // Randomized identities, 1,000 cases each.
    let mut r = rng(0xC8);
    for case in 0..1_000u32 {
        let mode = if case % 2 == 0 {
            CostMode::Uniform
        } else {
            CostMode::Frequency
        };
        let g = random_grammar(&mut r, 5, 4, mode, 8);
        let text = serialize_grammar(&g);
        match parse_grammar(&text) {
            Ok(back) if back == g => {}
            Ok(_) => errors.push(format!("case {case}: serialize/parse changed the grammar")),
            Err(e) => errors.push(format!("case {case}: canonical text rejected: {e}")),
        }

        let message = support::random_message(&mut r, 12, 50);
        let enc = encode(&message, &g, &DeriveParams::default());
        let bytes = write_encoding(&enc, &g).unwrap();
        match read_encoding(&bytes, &g) {
            Ok(back) if back == enc => {}
            Ok(_) => errors.push(format!("case {case}: write/read changed the encoding")),
            Err(e) => errors.push(format!("case {case}: encoding bytes rejected: {e}")),
        }
        if errors.len() > 5 {
            break;
        }
    }

    verdict(
        8,
        "golden SPG1/SPE1/SPB1 files stable; randomized format identities hold",
        errors,
    );
}
