//! Unsupervised grammar learning: minimum-description-length search over
//! chunking and class-formation moves.
//!
//! The learner starts from the terminals-only grammar and repeatedly proposes
//! structure: frequent adjacent segments become chunk patterns, and positions
//! whose fillers vary become slots over fresh classes. Every move is kept
//! only if the total description length DL(G) + sum of encoded corpus bits
//! strictly decreases, so the recorded DL trajectory is non-increasing by
//! construction and the result never codes worse than the terminals-only
//! start.

use std::collections::{BTreeMap, BTreeSet};

use crate::codec::encode;
use crate::derivation::{best_derivation, DeriveParams, Node, PatternUse};
use crate::model::{
    ceil_log2, valid_token, Bits, CostMode, Element, Grammar, Message, ModelError, PatternSpec,
};

/// Model cost charged per pattern before its elements. Crude but explicit,
/// and tunable: raising it demands more evidence per pattern.
pub const PATTERN_HEADER_BITS: Bits = 16.0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InductionError {
    #[error("cannot learn from an empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A body of training data: one message per line of its text form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    pub messages: Vec<Message>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, messages: Vec<Message>) -> Corpus {
        Corpus {
            name: name.into(),
            messages,
        }
    }

    /// One message per line; `char_mode` tokenizes lines per character
    /// instead of per whitespace-separated token.
    pub fn from_text(name: impl Into<String>, text: &str, char_mode: bool) -> Corpus {
        let messages = text
            .lines()
            .map(|line| {
                if char_mode {
                    Message::from_chars(line)
                } else {
                    Message::from_text(line)
                }
            })
            .collect();
        Corpus::new(name, messages)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&m.tokens.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Occurrence counts of every distinct token, sorted by token. Errors if
    /// any token cannot serve as an alphabet symbol.
    pub fn alphabet_counts(&self) -> Result<Vec<(String, u64)>, ModelError> {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for m in &self.messages {
            for t in &m.tokens {
                if !valid_token(t) {
                    return Err(ModelError::InvalidToken(t.clone()));
                }
                *counts.entry(t.clone()).or_insert(0) += 1;
            }
        }
        Ok(counts.into_iter().collect())
    }
}

/// Learning controls. The loop itself is deterministic; `seed` is carried
/// for corpus generators and reports.
#[derive(Debug, Clone)]
pub struct LearnParams {
    pub max_iters: usize,
    pub min_count: u64,
    pub max_pattern_len: usize,
    pub candidates_per_iter: usize,
    pub seed: u64,
    pub cost_mode: CostMode,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            max_iters: 50,
            min_count: 2,
            max_pattern_len: 12,
            candidates_per_iter: 20,
            seed: 0,
            cost_mode: CostMode::Frequency,
        }
    }
}

/// A learned grammar plus the DL value after the start state and after every
/// accepted move.
#[derive(Debug, Clone)]
pub struct LearnResult {
    pub grammar: Grammar,
    pub trajectory: Vec<Bits>,
}

/// Model cost of the grammar: per pattern, a fixed header plus one tag bit
/// and a uniform symbol or class-name index per element.
pub fn grammar_model_bits(grammar: &Grammar) -> Bits {
    let term_bits = ceil_log2(grammar.alphabet().len());
    let class_bits = ceil_log2(grammar.class_count());
    let mut total = 0.0;
    for pattern in grammar.patterns() {
        total += PATTERN_HEADER_BITS;
        for elem in &pattern.body {
            total += 1.0
                + match elem {
                    Element::Terminal(_) => term_bits,
                    Element::Slot(_) => class_bits,
                };
        }
    }
    total
}

/// Total DL = DL(G) + sum over messages of encoded bits.
pub fn description_length(grammar: &Grammar, corpus: &Corpus) -> Result<Bits, InductionError> {
    for m in &corpus.messages {
        for t in &m.tokens {
            if grammar.alphabet().id_of(t).is_none() {
                return Err(InductionError::Model(ModelError::UnknownSymbol(t.clone())));
            }
        }
    }
    let params = DeriveParams::default();
    let mut total = grammar_model_bits(grammar);
    for m in &corpus.messages {
        total += encode(m, grammar, &params).bit_length;
    }
    Ok(total)
}

/// A proposed chunk: a candidate ROOT pattern body with its observed count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkCandidate {
    pub body: Vec<Element>,
    pub count: u64,
}

// One top-level item of a message's derivation, keyed for pair counting.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Item {
    Pat(String),
    Lit(String),
}

impl Item {
    fn body(&self, grammar: &Grammar) -> Vec<Element> {
        match self {
            Item::Pat(name) => grammar.pattern(name).expect("pattern exists").body.clone(),
            Item::Lit(t) => vec![Element::Terminal(t.clone())],
        }
    }
}

/// Top-level item streams of the corpus under the current grammar. Items the
/// chunker cannot reuse (out-of-alphabet literals) appear as `None`.
fn top_streams(corpus: &Corpus, grammar: &Grammar) -> Vec<Vec<Option<Item>>> {
    let params = DeriveParams::default();
    corpus
        .messages
        .iter()
        .map(|m| {
            let derivation = best_derivation(m, grammar, &params)
                .expect("literal fallback always covers");
            derivation
                .roots
                .iter()
                .map(|node| match node {
                    Node::Use(u) => Some(Item::Pat(u.pattern.clone())),
                    Node::Literal(t) if grammar.alphabet().id_of(t).is_some() => {
                        Some(Item::Lit(t.clone()))
                    }
                    Node::Literal(_) => None,
                })
                .collect()
        })
        .collect()
}

/// Scans current top-level streams for the `k` most frequent adjacent pairs
/// (and their one-item extensions) and returns them as candidate ROOT
/// pattern bodies. Candidates shorter than `min_count` occurrences or longer
/// than `max_pattern_len` elements are excluded.
pub fn propose_chunks(
    corpus: &Corpus,
    grammar: &Grammar,
    k: usize,
    min_count: u64,
    max_pattern_len: usize,
) -> Vec<ChunkCandidate> {
    let streams = top_streams(corpus, grammar);
    let mut counts: BTreeMap<Vec<Item>, u64> = BTreeMap::new();
    for stream in &streams {
        for window in stream.windows(2) {
            if let [Some(a), Some(b)] = window {
                *counts.entry(vec![a.clone(), b.clone()]).or_insert(0) += 1;
            }
        }
        for window in stream.windows(3) {
            if let [Some(a), Some(b), Some(c)] = window {
                *counts
                    .entry(vec![a.clone(), b.clone(), c.clone()])
                    .or_insert(0) += 1;
            }
        }
    }

    let existing: BTreeSet<Vec<Element>> = grammar
        .patterns()
        .iter()
        .map(|p| p.body.clone())
        .collect();

    let mut candidates: Vec<ChunkCandidate> = counts
        .into_iter()
        .filter(|(_, count)| *count >= min_count)
        .map(|(items, count)| {
            let mut body = Vec::new();
            for item in &items {
                body.extend(item.body(grammar));
            }
            ChunkCandidate { body, count }
        })
        .filter(|c| c.body.len() <= max_pattern_len && !existing.contains(&c.body))
        .collect();

    candidates.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(a.body.len().cmp(&b.body.len()))
            .then(body_key(&a.body).cmp(&body_key(&b.body)))
    });
    candidates.dedup_by(|a, b| a.body == b.body);
    candidates.truncate(k);
    candidates
}

fn body_key(body: &[Element]) -> Vec<(u8, &str)> {
    body.iter()
        .map(|e| match e {
            Element::Terminal(t) => (0u8, t.as_str()),
            Element::Slot(c) => (1u8, c.as_str()),
        })
        .collect()
}

// Mutable learning state: pattern specs plus deterministic name counters.
#[derive(Debug, Clone)]
struct LearnState {
    specs: Vec<PatternSpec>,
    terminals: Vec<(String, u64)>,
    cost_mode: CostMode,
    next_chunk: usize,
    next_class: usize,
    next_gen: usize,
}

impl LearnState {
    fn from_grammar(grammar: &Grammar) -> LearnState {
        let specs: Vec<PatternSpec> = grammar
            .patterns()
            .iter()
            .map(|p| PatternSpec {
                name: p.name.clone(),
                class: p.class.clone(),
                body: p.body.clone(),
                frequency: p.frequency,
            })
            .collect();
        let terminals = grammar
            .alphabet()
            .entries()
            .map(|(n, c)| (n.to_string(), c))
            .collect();
        let mut state = LearnState {
            specs,
            terminals,
            cost_mode: grammar.cost_mode(),
            next_chunk: 1,
            next_class: 1,
            next_gen: 1,
        };
        state.sync_counters();
        state
    }

    fn sync_counters(&mut self) {
        for spec in &self.specs {
            bump(&mut self.next_chunk, &spec.name, 'p');
            bump(&mut self.next_gen, &spec.name, 'g');
            bump(&mut self.next_class, &spec.class, 'C');
        }
    }

    fn grammar(&self) -> Result<Grammar, ModelError> {
        Grammar::build_with_terminals(&self.specs, &self.terminals, self.cost_mode)
    }

    fn names(&self) -> BTreeSet<&str> {
        self.specs.iter().map(|s| s.name.as_str()).collect()
    }

    fn fresh_chunk_name(&mut self) -> String {
        loop {
            let name = format!("p{}", self.next_chunk);
            self.next_chunk += 1;
            if !self.names().contains(name.as_str()) {
                return name;
            }
        }
    }

    fn fresh_gen_name(&mut self) -> String {
        loop {
            let name = format!("g{}", self.next_gen);
            self.next_gen += 1;
            if !self.names().contains(name.as_str()) {
                return name;
            }
        }
    }

    /// Reserves a class name such that every `{class}_{filler}` member name
    /// is also free.
    fn fresh_class_name(&mut self, fillers: &[String]) -> String {
        loop {
            let class = format!("C{}", self.next_class);
            self.next_class += 1;
            let names = self.names();
            let clash = fillers
                .iter()
                .any(|f| names.contains(format!("{class}_{f}").as_str()))
                || self.specs.iter().any(|s| s.class == class);
            if !clash {
                return class;
            }
        }
    }

    fn remove(&mut self, name: &str) {
        self.specs.retain(|s| s.name != name);
    }
}

fn bump(counter: &mut usize, name: &str, prefix: char) {
    if let Some(rest) = name.strip_prefix(prefix) {
        if let Ok(n) = rest.parse::<usize>() {
            *counter = (*counter).max(n + 1);
        }
    }
}

/// Pattern usage counts under the current grammar, derived from re-encoding
/// the corpus (not raw substring counts), so shadowed patterns show up as
/// unused.
fn count_usages(corpus: &Corpus, grammar: &Grammar) -> BTreeMap<String, u64> {
    let params = DeriveParams::default();
    let mut usages: BTreeMap<String, u64> = BTreeMap::new();
    fn visit(u: &PatternUse, usages: &mut BTreeMap<String, u64>) {
        *usages.entry(u.pattern.clone()).or_insert(0) += 1;
        for f in &u.fillers {
            visit(f, usages);
        }
    }
    for m in &corpus.messages {
        let derivation = best_derivation(m, grammar, &params).expect("literal fallback covers");
        for node in &derivation.roots {
            if let Node::Use(u) = node {
                visit(u, &mut usages);
            }
        }
    }
    usages
}

// A class-formation move, built and then gated on DL.
#[derive(Debug, Clone)]
struct ClassMove {
    remove: Vec<String>,
    add: Vec<PatternSpec>,
    score: u64, // evidence weight for deterministic ordering
}

/// Single-terminal yields of a class's members, if every member is a single
/// terminal.
fn class_yields(grammar: &Grammar, class: &str) -> Option<BTreeSet<String>> {
    let members = grammar.class_members(class)?;
    let mut yields = BTreeSet::new();
    for m in members {
        let p = grammar.pattern(m)?;
        match p.body.as_slice() {
            [Element::Terminal(t)] => {
                yields.insert(t.clone());
            }
            _ => return None,
        }
    }
    Some(yields)
}

/// Picks a class for the filler set: reuse a compatible existing class
/// (absorbing missing fillers as fresh singles) or mint a new one.
fn realize_class(
    state: &mut LearnState,
    grammar: &Grammar,
    fillers: &BTreeMap<String, u64>,
) -> (String, Vec<PatternSpec>) {
    let filler_set: BTreeSet<String> = fillers.keys().cloned().collect();
    // Best-overlapping existing single-terminal class.
    let mut best: Option<(String, BTreeSet<String>, usize)> = None;
    for class in grammar.class_names() {
        if class == "ROOT" {
            continue;
        }
        if let Some(yields) = class_yields(grammar, class) {
            let overlap = yields.intersection(&filler_set).count();
            if overlap > best.as_ref().map_or(0, |(_, _, o)| *o) {
                best = Some((class.to_string(), yields, overlap));
            }
        }
    }
    if let Some((class, yields, overlap)) = best {
        if overlap * 2 >= filler_set.len() {
            let singles = fillers
                .iter()
                .filter(|(t, _)| !yields.contains(*t))
                .map(|(t, count)| PatternSpec {
                    name: format!("{class}_{t}"),
                    class: class.clone(),
                    body: vec![Element::Terminal(t.clone())],
                    frequency: *count,
                })
                .filter(|s| !state.names().contains(s.name.as_str()))
                .collect();
            return (class, singles);
        }
    }
    let class = state.fresh_class_name(&filler_set.iter().cloned().collect::<Vec<_>>());
    let singles = fillers
        .iter()
        .map(|(t, count)| PatternSpec {
            name: format!("{class}_{t}"),
            class: class.clone(),
            body: vec![Element::Terminal(t.clone())],
            frequency: *count,
        })
        .collect();
    (class, singles)
}

/// Occurrences of an all-terminal template (with one wildcard position) as a
/// literal run in the top-level streams, keyed by the wildcard's filler.
fn stream_fillers(
    streams: &[Vec<Option<Item>>],
    template: &[Element],
    pos: usize,
) -> BTreeMap<String, u64> {
    let mut terminals: Vec<Option<&str>> = Vec::with_capacity(template.len() + 1);
    for elem in &template[..pos] {
        match elem {
            Element::Terminal(t) => terminals.push(Some(t)),
            Element::Slot(_) => return BTreeMap::new(),
        }
    }
    terminals.push(None); // wildcard
    for elem in &template[pos..] {
        match elem {
            Element::Terminal(t) => terminals.push(Some(t)),
            Element::Slot(_) => return BTreeMap::new(),
        }
    }

    let mut fillers: BTreeMap<String, u64> = BTreeMap::new();
    for stream in streams {
        for window in stream.windows(terminals.len()) {
            let mut filler: Option<&str> = None;
            let matched = window.iter().zip(&terminals).all(|(item, want)| {
                match (item, want) {
                    (Some(Item::Lit(t)), Some(w)) => t == w,
                    (Some(Item::Lit(t)), None) => {
                        filler = Some(t);
                        true
                    }
                    _ => false,
                }
            });
            if matched {
                if let Some(f) = filler {
                    *fillers.entry(f.to_string()).or_insert(0) += 1;
                }
            }
        }
    }
    fillers
}

/// Body-template moves: ROOT patterns of equal length differing in exactly
/// one terminal position merge into one generalized pattern with a slot over
/// the differing fillers. Literal runs in the streams that match a template
/// contribute fillers too, so a class can cover sentences no chunk reached.
fn body_template_moves(
    state: &mut LearnState,
    grammar: &Grammar,
    streams: &[Vec<Option<Item>>],
) -> Vec<ClassMove> {
    // (len, hole position) -> template -> [(filler, pattern name, freq)]
    type Group = BTreeMap<Vec<Element>, Vec<(String, String, u64)>>;
    let mut groups: BTreeMap<(usize, usize), Group> = BTreeMap::new();
    for p in grammar.patterns() {
        if p.class != "ROOT" || p.body.len() < 2 {
            continue;
        }
        for (pos, elem) in p.body.iter().enumerate() {
            if let Element::Terminal(t) = elem {
                let mut template = p.body.clone();
                template.remove(pos);
                groups
                    .entry((p.body.len(), pos))
                    .or_default()
                    .entry(template)
                    .or_default()
                    .push((t.clone(), p.name.clone(), p.frequency));
            }
        }
    }

    let mut moves = Vec::new();
    for ((_, pos), templates) in groups {
        let mut fillers: BTreeMap<String, u64> = BTreeMap::new();
        let mut remove = Vec::new();
        let mut score = 0u64;
        let mut shapes: Vec<(Vec<Element>, u64)> = Vec::new();
        for (template, entries) in &templates {
            let mut total = 0;
            for (filler, name, freq) in entries {
                *fillers.entry(filler.clone()).or_insert(0) += freq;
                remove.push(name.clone());
                total += freq;
                score += freq;
            }
            for (filler, count) in stream_fillers(streams, template, pos) {
                *fillers.entry(filler).or_insert(0) += count;
                total += count;
                score += count;
            }
            shapes.push((template.clone(), total));
        }
        if fillers.len() < 2 {
            continue;
        }
        let (class, singles) = realize_class(state, grammar, &fillers);
        let mut add = singles;
        for (template, freq) in shapes {
            let mut body = template;
            body.insert(pos, Element::Slot(class.clone()));
            if grammar.patterns().iter().any(|p| p.body == body) {
                continue;
            }
            add.push(PatternSpec {
                name: state.fresh_gen_name(),
                class: "ROOT".to_string(),
                body,
                frequency: freq.max(1),
            });
        }
        moves.push(ClassMove { remove, add, score });
    }
    moves.sort_by(|a, b| b.score.cmp(&a.score).then(a.remove.cmp(&b.remove)));
    moves
}

/// Stream moves: a top-level item whose neighbor varies becomes a longer
/// pattern with a slot over the observed neighbors. This is how classes of
/// alternatives are discovered directly from alignments.
fn stream_moves(
    state: &mut LearnState,
    grammar: &Grammar,
    streams: &[Vec<Option<Item>>],
    min_count: u64,
    max_pattern_len: usize,
) -> Vec<ClassMove> {
    // (anchor, filler-on-right?) -> filler distribution
    type Context = (Item, bool);
    let mut contexts: BTreeMap<Context, BTreeMap<String, u64>> = BTreeMap::new();
    for stream in streams {
        for window in stream.windows(2) {
            if let [Some(a), Some(b)] = window {
                if let Item::Lit(w) = b {
                    *contexts
                        .entry((a.clone(), true))
                        .or_default()
                        .entry(w.clone())
                        .or_insert(0) += 1;
                }
                if let Item::Lit(w) = a {
                    *contexts
                        .entry((b.clone(), false))
                        .or_default()
                        .entry(w.clone())
                        .or_insert(0) += 1;
                }
            }
        }
    }

    let mut ranked: Vec<(Context, BTreeMap<String, u64>, u64)> = contexts
        .into_iter()
        .map(|(key, dist)| {
            let total = dist.values().sum();
            (key, dist, total)
        })
        .filter(|(_, dist, total)| dist.len() >= 2 && *total >= min_count)
        .collect();
    ranked.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));

    let mut moves = Vec::new();
    for ((anchor, filler_right), dist, total) in ranked {
        let anchor_body = anchor.body(grammar);
        if anchor_body.len() + 1 > max_pattern_len {
            continue;
        }
        let (class, singles) = realize_class(state, grammar, &dist);
        let mut body = anchor_body;
        if filler_right {
            body.push(Element::Slot(class.clone()));
        } else {
            body.insert(0, Element::Slot(class.clone()));
        }
        if grammar.patterns().iter().any(|p| p.body == body) {
            continue;
        }
        let mut add = singles;
        add.push(PatternSpec {
            name: state.fresh_gen_name(),
            class: "ROOT".to_string(),
            body,
            frequency: total,
        });
        // Extending a pattern usually supersedes it: offer the move with the
        // anchor retired first, then the conservative variant.
        if let Item::Pat(name) = &anchor {
            moves.push(ClassMove {
                remove: vec![name.clone()],
                add: add.clone(),
                score: total,
            });
        }
        moves.push(ClassMove {
            remove: Vec::new(),
            add,
            score: total,
        });
    }
    moves
}

/// Applies the first move that strictly lowers DL; repeats to fixpoint.
/// Returns the number of accepted moves, recording each DL step.
fn run_class_fixpoint(
    state: &mut LearnState,
    corpus: &Corpus,
    params: &LearnParams,
    dl: &mut Bits,
    trajectory: &mut Vec<Bits>,
) -> Result<usize, InductionError> {
    let mut accepted = 0;
    // Each acceptance strictly lowers DL, which is bounded below; the cap is
    // a safety net for pathological float behavior.
    for _ in 0..1000 {
        let grammar = state.grammar()?;
        let streams = top_streams(corpus, &grammar);
        let mut moves = body_template_moves(state, &grammar, &streams);
        moves.extend(stream_moves(
            state,
            &grammar,
            &streams,
            params.min_count,
            params.max_pattern_len,
        ));
        let mut advanced = false;
        for mv in moves {
            let mut candidate = state.clone();
            for name in &mv.remove {
                candidate.remove(name);
            }
            for spec in &mv.add {
                candidate.specs.push(spec.clone());
            }
            let Ok(g) = candidate.grammar() else { continue };
            let cand_dl = description_length(&g, corpus)?;
            if cand_dl < *dl {
                *state = candidate;
                *dl = cand_dl;
                trajectory.push(cand_dl);
                accepted += 1;
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    Ok(accepted)
}

/// One round of class formation over an existing grammar: merges patterns
/// differing in a single position into slot-backed generalizations, keeping
/// each change only if the description length of grammar plus corpus drops.
pub fn form_classes(grammar: &Grammar, corpus: &Corpus) -> Result<Grammar, InductionError> {
    let params = LearnParams::default();
    let mut state = LearnState::from_grammar(grammar);
    let mut dl = description_length(grammar, corpus)?;
    let mut trajectory = Vec::new();
    run_class_fixpoint(&mut state, corpus, &params, &mut dl, &mut trajectory)?;
    Ok(state.grammar()?)
}

/// Prunes patterns whose encode-derived usage falls below `min_count`,
/// keeping each removal only if DL drops. Never empties a referenced class.
fn prune(
    state: &mut LearnState,
    corpus: &Corpus,
    params: &LearnParams,
    dl: &mut Bits,
    trajectory: &mut Vec<Bits>,
) -> Result<usize, InductionError> {
    let mut accepted = 0;
    loop {
        let grammar = state.grammar()?;
        let usages = count_usages(corpus, &grammar);
        let mut candidates: Vec<(u64, String)> = state
            .specs
            .iter()
            .map(|s| (usages.get(&s.name).copied().unwrap_or(0), s.name.clone()))
            .filter(|(u, _)| *u < params.min_count)
            .collect();
        candidates.sort();
        let mut advanced = false;
        for (_, name) in candidates {
            let spec = state.specs.iter().find(|s| s.name == name).unwrap().clone();
            // Removal must not empty a class some remaining slot references.
            let class_still_referenced = state.specs.iter().any(|s| {
                s.name != name
                    && s.body
                        .iter()
                        .any(|e| matches!(e, Element::Slot(c) if *c == spec.class))
            });
            let other_members = state
                .specs
                .iter()
                .any(|s| s.name != name && s.class == spec.class);
            if class_still_referenced && !other_members {
                continue;
            }
            let mut candidate = state.clone();
            candidate.remove(&name);
            let Ok(g) = candidate.grammar() else { continue };
            let cand_dl = description_length(&g, corpus)?;
            if cand_dl < *dl {
                *state = candidate;
                *dl = cand_dl;
                trajectory.push(cand_dl);
                accepted += 1;
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    Ok(accepted)
}

/// Re-estimates pattern frequencies from encode-derived usage counts, kept
/// only if DL drops.
fn refit_frequencies(
    state: &mut LearnState,
    corpus: &Corpus,
    dl: &mut Bits,
    trajectory: &mut Vec<Bits>,
) -> Result<bool, InductionError> {
    let grammar = state.grammar()?;
    let usages = count_usages(corpus, &grammar);
    let mut candidate = state.clone();
    for spec in &mut candidate.specs {
        spec.frequency = usages.get(&spec.name).copied().unwrap_or(0).max(1);
    }
    let Ok(g) = candidate.grammar() else {
        return Ok(false);
    };
    let cand_dl = description_length(&g, corpus)?;
    if cand_dl < *dl {
        *state = candidate;
        *dl = cand_dl;
        trajectory.push(cand_dl);
        return Ok(true);
    }
    Ok(false)
}

/// Learns a grammar from the corpus without supervision: iterates chunk
/// proposal, class formation, frequency refitting, and pruning, each move
/// gated by a strict decrease of the total description length.
pub fn learn(corpus: &Corpus, params: &LearnParams) -> Result<LearnResult, InductionError> {
    if corpus.is_empty() {
        return Err(InductionError::EmptyCorpus);
    }
    let terminals = corpus.alphabet_counts()?;
    let start = Grammar::terminals_only(&terminals, params.cost_mode)?;
    let mut state = LearnState::from_grammar(&start);
    let mut dl = description_length(&start, corpus)?;
    let mut trajectory = vec![dl];

    for _ in 0..params.max_iters {
        let mut changed = false;

        // Chunking: frequent adjacent segments become ROOT patterns.
        let grammar = state.grammar()?;
        let chunks = propose_chunks(
            corpus,
            &grammar,
            params.candidates_per_iter,
            params.min_count,
            params.max_pattern_len,
        );
        for chunk in chunks {
            let mut candidate = state.clone();
            let name = candidate.fresh_chunk_name();
            candidate.specs.push(PatternSpec {
                name,
                class: "ROOT".to_string(),
                body: chunk.body.clone(),
                frequency: chunk.count,
            });
            let Ok(g) = candidate.grammar() else { continue };
            let cand_dl = description_length(&g, corpus)?;
            if cand_dl < dl {
                state = candidate;
                dl = cand_dl;
                trajectory.push(cand_dl);
                changed = true;
            }
        }

        // Class formation to fixpoint.
        if run_class_fixpoint(&mut state, corpus, params, &mut dl, &mut trajectory)? > 0 {
            changed = true;
        }

        // Frequency refit, then pruning of shadowed patterns.
        if refit_frequencies(&mut state, corpus, &mut dl, &mut trajectory)? {
            changed = true;
        }
        if prune(&mut state, corpus, params, &mut dl, &mut trajectory)? > 0 {
            changed = true;
        }

        if !changed {
            break;
        }
    }

    Ok(LearnResult {
        grammar: state.grammar()?,
        trajectory,
    })
}
