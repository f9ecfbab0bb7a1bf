//! Core model types: symbols, patterns, grammars, messages, and the bit-cost model.
//!
//! A [`Grammar`] is a set of named patterns grouped into classes, plus an
//! alphabet of terminal symbols with occurrence counts. Pattern bodies mix
//! terminals with slots; a slot names a class and is filled by one member
//! pattern of that class. Costs are information measures in fractional bits,
//! rounded up to whole bits only at file and frame boundaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::wire;

/// Fractional bits. Costs accumulate as double-precision sums.
pub type Bits = f64;

/// 32-byte digest of a grammar's canonical serialization.
pub type Fingerprint = [u8; 32];

pub const DEFAULT_MAX_DEPTH: usize = 8;

/// Interned terminal id: the lexicographic rank of the symbol name
/// within the grammar's alphabet.
pub type SymId = u32;

/// Interned class id: the lexicographic rank of the class name among
/// the grammar's declared class names.
pub type ClassId = u32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("duplicate pattern name `{0}`")]
    DuplicatePatternName(String),
    #[error("slot references class `{0}` which has no member patterns")]
    EmptyClassReferenced(String),
    #[error("pattern `{0}` has an empty body")]
    EmptyBody(String),
    #[error("invalid symbol or class token `{0}` (must be non-empty, no whitespace, no `:` or `@`)")]
    InvalidToken(String),
    #[error("pattern `{0}` has frequency 0 (must be >= 1)")]
    InvalidFrequency(String),
    #[error("terminal count for `{0}` is 0 (must be >= 1)")]
    InvalidTerminalCount(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("pattern `{member}` is not a member of class `{class}`")]
    NotAMember { class: String, member: String },
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
}

/// Returns true for a well-formed symbol/class/pattern-name token.
pub fn valid_token(s: &str) -> bool {
    !s.is_empty() && !s.contains(|c: char| c.is_whitespace() || c == ':' || c == '@')
}

/// How choices are priced.
///
/// UNIFORM prices a choice among `k` alternatives at `ceil(log2 k)` bits.
/// FREQUENCY prices choosing member `m` of class `C` at
/// `-log2(f(m) / sum of f over C)` fractional bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostMode {
    Uniform,
    Frequency,
}

impl CostMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CostMode::Uniform => "UNIFORM",
            CostMode::Frequency => "FREQUENCY",
        }
    }

    pub fn parse(s: &str) -> Option<CostMode> {
        match s {
            "UNIFORM" => Some(CostMode::Uniform),
            "FREQUENCY" => Some(CostMode::Frequency),
            _ => None,
        }
    }
}

impl fmt::Display for CostMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `ceil(log2 k)` as bits; 0 for k <= 1.
pub fn ceil_log2(k: usize) -> Bits {
    if k <= 1 {
        0.0
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as Bits
    }
}

/// `-log2(num/den)`, normalized so a certain choice costs exactly 0.0.
pub fn neg_log2_ratio(num: u64, den: u64) -> Bits {
    debug_assert!(num > 0 && den >= num);
    if num == den {
        0.0
    } else {
        -((num as f64 / den as f64).log2())
    }
}

/// One element of a pattern body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Element {
    /// A terminal symbol, matched literally.
    Terminal(String),
    /// A slot filled by one member pattern of the named class.
    Slot(String),
}

impl Element {
    pub fn is_slot(&self) -> bool {
        matches!(self, Element::Slot(_))
    }
}

/// Input description of one pattern, consumed by [`Grammar::build`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSpec {
    pub name: String,
    pub class: String,
    pub body: Vec<Element>,
    pub frequency: u64,
}

impl PatternSpec {
    /// Convenience constructor: elements starting with `@` are slots.
    pub fn new(name: &str, class: &str, body: &[&str], frequency: u64) -> Self {
        let body = body
            .iter()
            .map(|e| match e.strip_prefix('@') {
                Some(c) => Element::Slot(c.to_string()),
                None => Element::Terminal(e.to_string()),
            })
            .collect();
        PatternSpec {
            name: name.to_string(),
            class: class.to_string(),
            body,
            frequency,
        }
    }
}

/// A validated pattern inside a grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub name: String,
    pub class: String,
    pub body: Vec<Element>,
    pub frequency: u64,
    /// Body compiled to interned ids, in body order.
    pub(crate) ops: Vec<BodyOp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BodyOp {
    Term(SymId),
    Class(ClassId),
}

impl Pattern {
    /// Number of slots in the body.
    pub fn slot_count(&self) -> usize {
        self.body.iter().filter(|e| e.is_slot()).count()
    }

    /// Class names of the slots, in body order.
    pub fn slot_classes(&self) -> impl Iterator<Item = &str> {
        self.body.iter().filter_map(|e| match e {
            Element::Slot(c) => Some(c.as_str()),
            Element::Terminal(_) => None,
        })
    }
}

/// The terminal alphabet: sorted symbol names with occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alphabet {
    // Sorted by name; index in this vec == SymId.
    symbols: Vec<(String, u64)>,
    index: BTreeMap<String, SymId>,
    total_count: u64,
}

impl Alphabet {
    fn from_counts(counts: BTreeMap<String, u64>) -> Result<Alphabet, ModelError> {
        let mut symbols = Vec::with_capacity(counts.len());
        let mut index = BTreeMap::new();
        let mut total = 0u64;
        for (name, count) in counts {
            if !valid_token(&name) {
                return Err(ModelError::InvalidToken(name));
            }
            if count == 0 {
                return Err(ModelError::InvalidTerminalCount(name));
            }
            index.insert(name.clone(), symbols.len() as SymId);
            total += count;
            symbols.push((name, count));
        }
        Ok(Alphabet {
            symbols,
            index,
            total_count: total,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn id_of(&self, name: &str) -> Option<SymId> {
        self.index.get(name).copied()
    }

    pub fn name_of(&self, id: SymId) -> Option<&str> {
        self.symbols.get(id as usize).map(|(n, _)| n.as_str())
    }

    pub fn count_of(&self, name: &str) -> Option<u64> {
        self.index.get(name).map(|&id| self.symbols[id as usize].1)
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    /// `(name, count)` pairs in canonical (sorted) order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> {
        self.symbols.iter().map(|(n, c)| (n.as_str(), *c))
    }
}

/// A message to transmit: a sequence of whitespace-free tokens.
///
/// Tokens need not belong to any grammar's alphabet; the codec escapes
/// out-of-alphabet tokens so transmission stays lossless.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Message {
    pub tokens: Vec<String>,
}

impl Message {
    pub fn new(tokens: Vec<String>) -> Message {
        debug_assert!(tokens
            .iter()
            .all(|t| !t.is_empty() && !t.contains(char::is_whitespace)));
        Message { tokens }
    }

    /// Whitespace-tokenizes a line of text.
    pub fn from_text(text: &str) -> Message {
        Message {
            tokens: text.split_whitespace().map(str::to_string).collect(),
        }
    }

    /// Per-character tokenization (each non-whitespace char is one token).
    pub fn from_chars(text: &str) -> Message {
        Message {
            tokens: text
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| c.to_string())
                .collect(),
        }
    }

    pub fn from_tokens(tokens: &[&str]) -> Message {
        Message {
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Canonical text form: tokens joined by single spaces, newline-terminated.
    /// The empty message serializes to the empty string.
    pub fn to_text(&self) -> String {
        if self.tokens.is_empty() {
            String::new()
        } else {
            let mut s = self.tokens.join(" ");
            s.push('\n');
            s
        }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

/// The shared model: validated patterns, alphabet, cost mode, and the
/// fingerprint of the canonical serialization.
///
/// Immutable after construction; safe to share across concurrent
/// encode/decode workers.
#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    patterns: Vec<Pattern>, // sorted by name
    pattern_index: BTreeMap<String, usize>,
    /// class name -> member pattern indices (sorted by pattern name).
    classes: BTreeMap<String, Vec<usize>>,
    class_names: Vec<String>, // sorted; index == ClassId
    class_totals: Vec<u64>,   // sum of member frequencies per class
    total_frequency: u64,     // sum over all patterns
    alphabet: Alphabet,
    cost_mode: CostMode,
    max_depth: usize,
    fingerprint: Fingerprint,
}

impl Grammar {
    /// Builds a grammar from pattern descriptions. The alphabet is derived
    /// from the bodies: each terminal's count is its frequency-weighted
    /// number of occurrences.
    pub fn build(specs: &[PatternSpec], cost_mode: CostMode) -> Result<Grammar, ModelError> {
        Grammar::build_full(specs, &[], cost_mode, DEFAULT_MAX_DEPTH)
    }

    /// Like [`Grammar::build`], but seeds the alphabet with explicit
    /// `(terminal, count)` entries. Terminals appearing in bodies but not in
    /// `terminals` are added with derived counts; explicit counts win.
    pub fn build_with_terminals(
        specs: &[PatternSpec],
        terminals: &[(String, u64)],
        cost_mode: CostMode,
    ) -> Result<Grammar, ModelError> {
        Grammar::build_full(specs, terminals, cost_mode, DEFAULT_MAX_DEPTH)
    }

    pub fn build_full(
        specs: &[PatternSpec],
        terminals: &[(String, u64)],
        cost_mode: CostMode,
        max_depth: usize,
    ) -> Result<Grammar, ModelError> {
        assert!(max_depth >= 1, "max_depth must be positive");

        // Validate names and collect derived terminal counts.
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut names = BTreeSet::new();
        for spec in specs {
            if !valid_token(&spec.name) {
                return Err(ModelError::InvalidToken(spec.name.clone()));
            }
            if !valid_token(&spec.class) {
                return Err(ModelError::InvalidToken(spec.class.clone()));
            }
            if !names.insert(spec.name.clone()) {
                return Err(ModelError::DuplicatePatternName(spec.name.clone()));
            }
            if spec.body.is_empty() {
                return Err(ModelError::EmptyBody(spec.name.clone()));
            }
            if spec.frequency == 0 {
                return Err(ModelError::InvalidFrequency(spec.name.clone()));
            }
            for elem in &spec.body {
                match elem {
                    Element::Terminal(t) => {
                        if !valid_token(t) {
                            return Err(ModelError::InvalidToken(t.clone()));
                        }
                        *counts.entry(t.clone()).or_insert(0) += spec.frequency;
                    }
                    Element::Slot(c) => {
                        if !valid_token(c) {
                            return Err(ModelError::InvalidToken(c.clone()));
                        }
                    }
                }
            }
        }
        for (t, c) in terminals {
            if !valid_token(t) {
                return Err(ModelError::InvalidToken(t.clone()));
            }
            if *c == 0 {
                return Err(ModelError::InvalidTerminalCount(t.clone()));
            }
            counts.insert(t.clone(), *c);
        }
        let alphabet = Alphabet::from_counts(counts)?;

        // Sort patterns by name; build class memberships.
        let mut sorted: Vec<&PatternSpec> = specs.iter().collect();
        sorted.sort_by(|a, b| a.name.cmp(&b.name));

        let mut classes: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (idx, spec) in sorted.iter().enumerate() {
            classes.entry(spec.class.clone()).or_default().push(idx);
        }
        // Every slot must name a non-empty class.
        for spec in &sorted {
            for elem in &spec.body {
                if let Element::Slot(c) = elem {
                    if !classes.contains_key(c) {
                        return Err(ModelError::EmptyClassReferenced(c.clone()));
                    }
                }
            }
        }

        let class_names: Vec<String> = classes.keys().cloned().collect();
        let class_ids: BTreeMap<&str, ClassId> = class_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i as ClassId))
            .collect();

        let mut patterns = Vec::with_capacity(sorted.len());
        let mut pattern_index = BTreeMap::new();
        let mut total_frequency = 0u64;
        for (idx, spec) in sorted.iter().enumerate() {
            let ops = spec
                .body
                .iter()
                .map(|e| match e {
                    Element::Terminal(t) => BodyOp::Term(alphabet.id_of(t).unwrap()),
                    Element::Slot(c) => BodyOp::Class(class_ids[c.as_str()]),
                })
                .collect();
            pattern_index.insert(spec.name.clone(), idx);
            total_frequency += spec.frequency;
            patterns.push(Pattern {
                name: spec.name.clone(),
                class: spec.class.clone(),
                body: spec.body.clone(),
                frequency: spec.frequency,
                ops,
            });
        }

        let class_totals = class_names
            .iter()
            .map(|c| classes[c].iter().map(|&i| patterns[i].frequency).sum())
            .collect();

        let mut grammar = Grammar {
            patterns,
            pattern_index,
            classes,
            class_names,
            class_totals,
            total_frequency,
            alphabet,
            cost_mode,
            max_depth,
            fingerprint: [0; 32],
        };
        grammar.fingerprint = wire::digest_grammar(&grammar);
        Ok(grammar)
    }

    /// A grammar with no patterns over the given terminal counts.
    pub fn terminals_only(
        terminals: &[(String, u64)],
        cost_mode: CostMode,
    ) -> Result<Grammar, ModelError> {
        Grammar::build_with_terminals(&[], terminals, cost_mode)
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    pub fn cost_mode(&self) -> CostMode {
        self.cost_mode
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn pattern_count(&self) -> usize {
        self.patterns.len()
    }

    pub fn pattern(&self, name: &str) -> Option<&Pattern> {
        self.pattern_index.get(name).map(|&i| &self.patterns[i])
    }

    pub(crate) fn pattern_idx(&self, name: &str) -> Option<usize> {
        self.pattern_index.get(name).copied()
    }

    pub(crate) fn pattern_at(&self, idx: usize) -> &Pattern {
        &self.patterns[idx]
    }

    /// Sum of all pattern frequencies.
    pub fn total_frequency(&self) -> u64 {
        self.total_frequency
    }

    /// Declared class names, sorted.
    pub fn class_names(&self) -> impl Iterator<Item = &str> {
        self.class_names.iter().map(String::as_str)
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub(crate) fn class_id(&self, name: &str) -> Option<ClassId> {
        self.class_names
            .binary_search_by(|c| c.as_str().cmp(name))
            .ok()
            .map(|i| i as ClassId)
    }

    pub(crate) fn class_name_of(&self, id: ClassId) -> &str {
        &self.class_names[id as usize]
    }

    /// Member pattern indices of a class, sorted by pattern name.
    pub(crate) fn class_members_by_id(&self, id: ClassId) -> &[usize] {
        &self.classes[&self.class_names[id as usize]]
    }

    /// Member pattern names of a class, sorted.
    pub fn class_members(&self, class: &str) -> Option<Vec<&str>> {
        self.classes
            .get(class)
            .map(|m| m.iter().map(|&i| self.patterns[i].name.as_str()).collect())
    }

    /// Cost in bits of choosing `member` within `class`.
    pub fn choice_cost(&self, class: &str, member: &str) -> Result<Bits, ModelError> {
        let members = self
            .classes
            .get(class)
            .ok_or_else(|| ModelError::UnknownClass(class.to_string()))?;
        let midx = self
            .pattern_index
            .get(member)
            .copied()
            .filter(|i| members.contains(i))
            .ok_or_else(|| ModelError::NotAMember {
                class: class.to_string(),
                member: member.to_string(),
            })?;
        Ok(match self.cost_mode {
            CostMode::Uniform => ceil_log2(members.len()),
            CostMode::Frequency => {
                let cid = self.class_id(class).unwrap();
                neg_log2_ratio(self.patterns[midx].frequency, self.class_totals[cid as usize])
            }
        })
    }

    pub(crate) fn choice_cost_by_ids(&self, class: ClassId, pattern_idx: usize) -> Bits {
        match self.cost_mode {
            CostMode::Uniform => ceil_log2(self.class_members_by_id(class).len()),
            CostMode::Frequency => neg_log2_ratio(
                self.patterns[pattern_idx].frequency,
                self.class_totals[class as usize],
            ),
        }
    }

    /// Cost in bits of identifying a pattern among all patterns, outside any
    /// class context (used for top-level references to non-ROOT patterns).
    pub fn pattern_identity_cost(&self, member: &str) -> Result<Bits, ModelError> {
        let idx = self
            .pattern_index
            .get(member)
            .copied()
            .ok_or_else(|| ModelError::UnknownPattern(member.to_string()))?;
        Ok(self.pattern_identity_cost_by_idx(idx))
    }

    pub(crate) fn pattern_identity_cost_by_idx(&self, idx: usize) -> Bits {
        match self.cost_mode {
            CostMode::Uniform => ceil_log2(self.patterns.len()),
            CostMode::Frequency => {
                neg_log2_ratio(self.patterns[idx].frequency, self.total_frequency)
            }
        }
    }

    /// Cost in bits of one terminal under the cost model.
    pub fn terminal_cost(&self, name: &str) -> Result<Bits, ModelError> {
        let id = self
            .alphabet
            .id_of(name)
            .ok_or_else(|| ModelError::UnknownSymbol(name.to_string()))?;
        Ok(self.terminal_cost_by_id(id))
    }

    pub(crate) fn terminal_cost_by_id(&self, id: SymId) -> Bits {
        match self.cost_mode {
            CostMode::Uniform => ceil_log2(self.alphabet.len()),
            CostMode::Frequency => {
                let count = self.alphabet.symbols[id as usize].1;
                neg_log2_ratio(count, self.alphabet.total_count)
            }
        }
    }

    /// Raw size of a message: B_N, the uncompressed reference measure.
    pub fn raw_bits(&self, message: &Message) -> Result<Bits, ModelError> {
        let mut total = 0.0;
        for tok in &message.tokens {
            let id = self
                .alphabet
                .id_of(tok)
                .ok_or_else(|| ModelError::UnknownSymbol(tok.clone()))?;
            total += match self.cost_mode {
                CostMode::Uniform => ceil_log2(self.alphabet.len()),
                CostMode::Frequency => self.terminal_cost_by_id(id),
            };
        }
        Ok(total)
    }

    /// Patterns not reachable from class ROOT, reported as warnings.
    /// Reachability is not required for validity.
    pub fn validation_warnings(&self) -> Vec<String> {
        let mut reachable = vec![false; self.patterns.len()];
        let mut stack: Vec<usize> = self
            .classes
            .get("ROOT")
            .map(|m| m.to_vec())
            .unwrap_or_default();
        for &i in &stack {
            reachable[i] = true;
        }
        while let Some(idx) = stack.pop() {
            for op in &self.patterns[idx].ops {
                if let BodyOp::Class(cid) = op {
                    for &m in self.class_members_by_id(*cid) {
                        if !reachable[m] {
                            reachable[m] = true;
                            stack.push(m);
                        }
                    }
                }
            }
        }
        self.patterns
            .iter()
            .zip(&reachable)
            .filter(|(_, &r)| !r)
            .map(|(p, _)| format!("pattern `{}` is not reachable from class ROOT", p.name))
            .collect()
    }
}
