//! The SPG1 canonical grammar text format.
//!
//! ```text
//! SPG1 <cost_mode> <max_depth>
//! term <name> <count>                      (one per alphabet terminal, sorted)
//! pattern <name> class <class> freq <n> : <elem> <elem> ...
//! ```
//!
//! Pattern lines are sorted by pattern name; slot elements are written
//! `@ClassName`, terminals as bare tokens. This serialization is the
//! canonical form hashed by the grammar fingerprint, so parse and serialize
//! are exact mutual inverses and the parser rejects unsorted or duplicate
//! lines.

use sha2::{Digest, Sha256};

use crate::model::{CostMode, Element, Fingerprint, Grammar, PatternSpec};

use super::WireError;

pub const GRAMMAR_MAGIC: &str = "SPG1";

/// Canonical text form of a grammar.
pub fn serialize_grammar(grammar: &Grammar) -> String {
    let mut out = String::new();
    out.push_str(GRAMMAR_MAGIC);
    out.push(' ');
    out.push_str(grammar.cost_mode().as_str());
    out.push(' ');
    out.push_str(&grammar.max_depth().to_string());
    out.push('\n');
    for (name, count) in grammar.alphabet().entries() {
        out.push_str("term ");
        out.push_str(name);
        out.push(' ');
        out.push_str(&count.to_string());
        out.push('\n');
    }
    for pattern in grammar.patterns() {
        out.push_str("pattern ");
        out.push_str(&pattern.name);
        out.push_str(" class ");
        out.push_str(&pattern.class);
        out.push_str(" freq ");
        out.push_str(&pattern.frequency.to_string());
        out.push_str(" :");
        for elem in &pattern.body {
            out.push(' ');
            match elem {
                Element::Terminal(t) => out.push_str(t),
                Element::Slot(c) => {
                    out.push('@');
                    out.push_str(c);
                }
            }
        }
        out.push('\n');
    }
    out
}

/// SHA-256 of the canonical serialization. This is the grammar fingerprint.
pub fn digest_grammar(grammar: &Grammar) -> Fingerprint {
    let text = serialize_grammar(grammar);
    let digest = Sha256::digest(text.as_bytes());
    digest.into()
}

fn syntax(line: usize, msg: impl Into<String>) -> WireError {
    WireError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Parses the canonical text form back into a grammar.
pub fn parse_grammar(text: &str) -> Result<Grammar, WireError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| syntax(1, "empty grammar file"))?;
    let mut parts = header.split(' ');
    if parts.next() != Some(GRAMMAR_MAGIC) {
        return Err(syntax(1, format!("expected `{GRAMMAR_MAGIC}` header")));
    }
    let cost_mode = parts
        .next()
        .and_then(CostMode::parse)
        .ok_or_else(|| syntax(1, "bad cost mode (expected UNIFORM or FREQUENCY)"))?;
    let max_depth: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .filter(|&d| d >= 1)
        .ok_or_else(|| syntax(1, "bad max depth"))?;
    if parts.next().is_some() {
        return Err(syntax(1, "trailing tokens in header"));
    }

    let mut terminals: Vec<(String, u64)> = Vec::new();
    let mut specs: Vec<PatternSpec> = Vec::new();
    let mut seen_pattern = false;

    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() {
            return Err(syntax(lineno, "blank line"));
        }
        let fields: Vec<&str> = line.split(' ').collect();
        match fields[0] {
            "term" => {
                if seen_pattern {
                    return Err(WireError::UnsortedInput { line: lineno });
                }
                if fields.len() != 3 {
                    return Err(syntax(lineno, "expected `term <name> <count>`"));
                }
                let name = fields[1].to_string();
                let count: u64 = fields[2]
                    .parse()
                    .ok()
                    .filter(|&c| c > 0)
                    .ok_or_else(|| syntax(lineno, "bad terminal count"))?;
                if let Some((prev, _)) = terminals.last() {
                    if prev.as_str() >= name.as_str() {
                        return Err(WireError::UnsortedInput { line: lineno });
                    }
                }
                terminals.push((name, count));
            }
            "pattern" => {
                seen_pattern = true;
                let colon = fields
                    .iter()
                    .position(|&f| f == ":")
                    .ok_or_else(|| syntax(lineno, "missing `:` separator"))?;
                if colon != 6
                    || fields.len() < 8
                    || fields[2] != "class"
                    || fields[4] != "freq"
                {
                    return Err(syntax(
                        lineno,
                        "expected `pattern <name> class <class> freq <n> : <elem> ...`",
                    ));
                }
                let name = fields[1].to_string();
                let class = fields[3].to_string();
                let frequency: u64 = fields[5]
                    .parse()
                    .ok()
                    .filter(|&f| f > 0)
                    .ok_or_else(|| syntax(lineno, "bad frequency"))?;
                if let Some(prev) = specs.last() {
                    if prev.name == name {
                        return Err(WireError::Model(
                            crate::model::ModelError::DuplicatePatternName(name),
                        ));
                    }
                    if prev.name.as_str() > name.as_str() {
                        return Err(WireError::UnsortedInput { line: lineno });
                    }
                }
                let body: Vec<Element> = fields[colon + 1..]
                    .iter()
                    .map(|&e| match e.strip_prefix('@') {
                        Some(c) => Element::Slot(c.to_string()),
                        None => Element::Terminal(e.to_string()),
                    })
                    .collect();
                specs.push(PatternSpec {
                    name,
                    class,
                    body,
                    frequency,
                });
            }
            other => {
                return Err(syntax(lineno, format!("unknown line kind `{other}`")));
            }
        }
    }

    // Canonical files list every body terminal in the term section.
    for spec in &specs {
        for elem in &spec.body {
            if let Element::Terminal(t) = elem {
                if !terminals.iter().any(|(n, _)| n == t) {
                    return Err(WireError::Model(crate::model::ModelError::UnknownSymbol(
                        t.clone(),
                    )));
                }
            }
        }
    }

    let grammar = Grammar::build_full(&specs, &terminals, cost_mode, max_depth)?;
    Ok(grammar)
}
