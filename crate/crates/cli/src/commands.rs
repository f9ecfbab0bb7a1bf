//! Command implementations. Each returns `Ok(())` for exit 0 or a
//! [`CliError`] carrying the exit code.

use std::fs;
use std::net::{TcpListener, TcpStream};
use std::path::Path;

use gramwire::codec::{decode, encode};
use gramwire::induction::{learn, Corpus, LearnParams};
use gramwire::wire::{
    parse_grammar, read_encoding, run_receiver, run_sender, serialize_grammar, write_encoding,
    WireError,
};
use gramwire::{DeriveParams, Grammar, Message};

use crate::planted::PlantedSpec;
use crate::report::ComparisonReport;
use crate::CliError;

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

pub fn load_grammar(path: &Path) -> Result<Grammar, CliError> {
    let text = read_file(path)?;
    parse_grammar(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_corpus(path: &Path, char_mode: bool) -> Result<Corpus, CliError> {
    let text = read_file(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    Ok(Corpus::from_text(name, &text, char_mode))
}

fn wire_error(e: WireError) -> CliError {
    match e {
        WireError::FingerprintMismatch => CliError::Mismatch(e.to_string()),
        WireError::Remote { code: 1, .. } => CliError::Mismatch(e.to_string()),
        WireError::Io(_) => CliError::Input(e.to_string()),
        other => CliError::Contract(other.to_string()),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_learn(
    corpus_path: &Path,
    out: &Path,
    max_iters: usize,
    min_count: u64,
    max_pattern_len: usize,
    seed: u64,
    char_mode: bool,
) -> Result<(), CliError> {
    let corpus = load_corpus(corpus_path, char_mode)?;
    let params = LearnParams {
        max_iters,
        min_count,
        max_pattern_len,
        seed,
        ..LearnParams::default()
    };
    let result = learn(&corpus, &params).map_err(|e| CliError::Input(e.to_string()))?;
    write_file(out, serialize_grammar(&result.grammar).as_bytes())?;
    println!(
        "learned {} patterns over {} terminals in {} accepted steps",
        result.grammar.pattern_count(),
        result.grammar.alphabet().len(),
        result.trajectory.len().saturating_sub(1),
    );
    println!(
        "description length: {:.2} -> {:.2} bits",
        result.trajectory.first().unwrap(),
        result.trajectory.last().unwrap()
    );
    for warning in result.grammar.validation_warnings() {
        eprintln!("warning: {warning}");
    }
    Ok(())
}

pub fn cmd_encode(
    grammar_path: &Path,
    input: &Path,
    out: &Path,
    char_mode: bool,
) -> Result<(), CliError> {
    let grammar = load_grammar(grammar_path)?;
    let text = read_file(input)?;
    let message = if char_mode {
        Message::from_chars(&text)
    } else {
        Message::from_text(&text)
    };
    let enc = encode(&message, &grammar, &DeriveParams::default());
    let bytes = write_encoding(&enc, &grammar).map_err(|e| CliError::Input(e.to_string()))?;
    write_file(out, &bytes)?;
    println!(
        "{} tokens -> {} code tokens, {:.2} bits ({} bytes on disk)",
        message.len(),
        enc.tokens.len(),
        enc.bit_length,
        bytes.len()
    );
    Ok(())
}

pub fn cmd_decode(grammar_path: &Path, input: &Path, out: &Path) -> Result<(), CliError> {
    let grammar = load_grammar(grammar_path)?;
    let bytes = read_bytes(input)?;
    let enc = read_encoding(&bytes, &grammar).map_err(wire_error)?;
    let message = decode(&enc, &grammar).map_err(|e| CliError::Contract(e.to_string()))?;
    write_file(out, message.to_text().as_bytes())?;
    println!("decoded {} tokens", message.len());
    Ok(())
}

pub fn cmd_compare(
    grammar_path: &Path,
    corpus_path: &Path,
    csv: bool,
    external_baseline: Option<&Path>,
    char_mode: bool,
) -> Result<(), CliError> {
    let grammar = load_grammar(grammar_path)?;
    let corpus = load_corpus(corpus_path, char_mode)?;
    let grammar_file_bits = (serialize_grammar(&grammar).len() * 8) as f64;
    let external = match external_baseline {
        Some(path) => Some(parse_external_baseline(path)?),
        None => None,
    };
    let report = ComparisonReport::build(&grammar, &corpus, grammar_file_bits, external.as_deref())?;
    if csv {
        print!("{}", report.to_csv());
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

/// `index,bits` rows, optional header line.
fn parse_external_baseline(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = read_file(path)?;
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() || (lineno == 0 && line.starts_with("index")) {
            continue;
        }
        let mut fields = line.split(',');
        let mut parse = || -> Option<(usize, f64)> {
            let idx = fields.next()?.trim().parse().ok()?;
            let bits = fields.next()?.trim().parse().ok()?;
            Some((idx, bits))
        };
        let (idx, bits) = parse().ok_or_else(|| {
            CliError::Input(format!(
                "{}:{}: expected `index,bits`",
                path.display(),
                lineno + 1
            ))
        })?;
        rows.push((idx, bits));
    }
    rows.sort_by_key(|(i, _)| *i);
    for (pos, (idx, _)) in rows.iter().enumerate() {
        if *idx != pos {
            return Err(CliError::Input(format!(
                "external baseline rows must cover indices 0..n, missing {pos}"
            )));
        }
    }
    Ok(rows.into_iter().map(|(_, b)| b).collect())
}

pub fn cmd_roundtrip(
    grammar_path: &Path,
    corpus_path: &Path,
    char_mode: bool,
    debug_corrupt: Option<usize>,
) -> Result<(), CliError> {
    let grammar = load_grammar(grammar_path)?;
    let corpus = load_corpus(corpus_path, char_mode)?;
    let params = DeriveParams::default();
    for (index, message) in corpus.messages.iter().enumerate() {
        let mut enc = encode(message, &grammar, &params);
        if debug_corrupt == Some(index) {
            // Debug path: tamper with the encoding to prove the check bites.
            enc = encode(
                &Message::new(vec!["?corrupted?".to_string()]),
                &grammar,
                &params,
            );
        }
        let bytes = write_encoding(&enc, &grammar).map_err(|e| CliError::Input(e.to_string()))?;
        let back = read_encoding(&bytes, &grammar).map_err(wire_error)?;
        let decoded = decode(&back, &grammar).map_err(|e| CliError::Contract(e.to_string()))?;
        if &decoded != message {
            let diff = message
                .tokens
                .iter()
                .zip(&decoded.tokens)
                .position(|(a, b)| a != b)
                .unwrap_or_else(|| message.len().min(decoded.len()));
            return Err(CliError::Contract(format!(
                "message {index} does not roundtrip: first difference at token {diff}"
            )));
        }
    }
    println!("{} messages roundtrip exactly", corpus.len());
    Ok(())
}

pub fn cmd_gen_corpus(spec_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let text = read_file(spec_path)?;
    let spec: PlantedSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", spec_path.display())))?;
    spec.validate()?;
    let corpus = spec.generate(seed.unwrap_or(spec.seed));
    write_file(out, corpus.to_text().as_bytes())?;
    println!("wrote {} sentences to {}", corpus.len(), out.display());
    Ok(())
}

pub fn cmd_send(
    grammar_path: &Path,
    corpus_path: &Path,
    connect: &str,
    char_mode: bool,
) -> Result<(), CliError> {
    let grammar = load_grammar(grammar_path)?;
    let corpus = load_corpus(corpus_path, char_mode)?;
    let mut stream = TcpStream::connect(connect)
        .map_err(|e| CliError::Input(format!("connect {connect}: {e}")))?;
    let report = run_sender(&mut stream, &grammar, &corpus.messages).map_err(wire_error)?;
    println!(
        "sent {} messages in {} frames, {} bytes out / {} bytes in",
        report.messages, report.frames_sent, report.bytes_sent, report.bytes_received
    );
    let total: u64 = report.encoding_bytes.iter().sum();
    let largest = report.encoding_bytes.iter().max().copied().unwrap_or(0);
    println!("encoding payloads: {total} bytes total, largest {largest} bytes");
    Ok(())
}

pub fn cmd_recv(grammar_path: &Path, listen: &str, out: &Path) -> Result<(), CliError> {
    let grammar = load_grammar(grammar_path)?;
    let listener = TcpListener::bind(listen)
        .map_err(|e| CliError::Input(format!("listen {listen}: {e}")))?;
    let (mut stream, peer) = listener
        .accept()
        .map_err(|e| CliError::Input(format!("accept: {e}")))?;
    let (messages, report) = run_receiver(&mut stream, &grammar).map_err(wire_error)?;
    let corpus = Corpus::new("received", messages);
    write_file(out, corpus.to_text().as_bytes())?;
    println!(
        "received {} messages from {peer} in {} frames ({} bytes in / {} bytes out)",
        report.messages, report.frames_received, report.bytes_received, report.bytes_sent
    );
    Ok(())
}
