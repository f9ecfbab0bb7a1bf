//! Minimum-cost alignment of a message against grammar patterns.
//!
//! [`best_derivation`] runs a left-to-right dynamic program over message
//! positions: for every prefix it keeps the cheapest cover, extending either
//! by a literal or by a pattern use matched with memoized recursive slot
//! filling. With `beam_width = 0` the search is exhaustive and exact under
//! the depth bound; the cost minimized is exactly the bit length of the
//! token stream the codec would emit for the derivation.

use std::collections::HashMap;

use crate::codec;
use crate::model::{Bits, BodyOp, ClassId, Grammar, Message, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeriveError {
    #[error("no derivation covers the message (first uncoverable suffix at token {position})")]
    NoCover { position: usize },
    #[error("derivation does not spell the message")]
    CoverMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Search controls for [`best_derivation`].
#[derive(Debug, Clone)]
pub struct DeriveParams {
    /// Overrides the grammar's derivation depth bound.
    pub max_depth: Option<usize>,
    /// 0 = exhaustive and exact; otherwise keeps the `beam_width` cheapest
    /// partial matches per search state.
    pub beam_width: usize,
    /// Permit literal (and escape) nodes so every message has a derivation.
    pub allow_literals: bool,
}

impl Default for DeriveParams {
    fn default() -> Self {
        DeriveParams {
            max_depth: None,
            beam_width: 0,
            allow_literals: true,
        }
    }
}

/// One use of a grammar pattern: `fillers` holds exactly one nested use per
/// slot of the pattern's body, in body order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternUse {
    pub pattern: String,
    pub fillers: Vec<PatternUse>,
}

impl PatternUse {
    fn node_count(&self) -> usize {
        1 + self.fillers.iter().map(PatternUse::node_count).sum::<usize>()
    }

    fn depth(&self) -> usize {
        1 + self.fillers.iter().map(PatternUse::depth).max().unwrap_or(0)
    }
}

/// A node covering a contiguous span of the message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Use(PatternUse),
    Literal(String),
}

impl Node {
    fn node_count(&self) -> usize {
        match self {
            Node::Use(u) => u.node_count(),
            Node::Literal(_) => 1,
        }
    }
}

/// An alignment of the message (New) against grammar patterns (Old): an
/// ordered sequence of nodes whose terminal yield spells the message exactly.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Derivation {
    pub roots: Vec<Node>,
}

impl Derivation {
    /// In-order concatenation of terminals reachable from the roots.
    pub fn spell(&self, grammar: &Grammar) -> Result<Vec<String>, DeriveError> {
        let mut out = Vec::new();
        for node in &self.roots {
            match node {
                Node::Literal(tok) => out.push(tok.clone()),
                Node::Use(u) => spell_use(u, grammar, &mut out)?,
            }
        }
        Ok(out)
    }

    pub fn node_count(&self) -> usize {
        self.roots.iter().map(Node::node_count).sum()
    }

    pub fn depth(&self) -> usize {
        self.roots
            .iter()
            .map(|n| match n {
                Node::Use(u) => u.depth(),
                Node::Literal(_) => 1,
            })
            .max()
            .unwrap_or(0)
    }
}

fn spell_use(u: &PatternUse, grammar: &Grammar, out: &mut Vec<String>) -> Result<(), DeriveError> {
    let pattern = grammar
        .pattern(&u.pattern)
        .ok_or_else(|| ModelError::UnknownPattern(u.pattern.clone()))?;
    if u.fillers.len() != pattern.slot_count() {
        return Err(DeriveError::CoverMismatch);
    }
    let mut filler_idx = 0;
    for elem in &pattern.body {
        match elem {
            crate::model::Element::Terminal(t) => out.push(t.clone()),
            crate::model::Element::Slot(_) => {
                spell_use(&u.fillers[filler_idx], grammar, out)?;
                filler_idx += 1;
            }
        }
    }
    Ok(())
}

/// B_N, B_E, and their difference CD = B_N - B_E.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentScore {
    /// Raw bits of the message (B_N).
    pub b_new: Bits,
    /// Bits of the derivation's token stream (B_E).
    pub b_encoding: Bits,
    /// Compression difference, B_N - B_E. Negative when the derivation is
    /// worse than raw.
    pub cd: Bits,
}

impl AlignmentScore {
    pub fn new(b_new: Bits, b_encoding: Bits) -> AlignmentScore {
        AlignmentScore {
            b_new,
            b_encoding,
            cd: b_new - b_encoding,
        }
    }
}

/// Scores a derivation against the message it covers.
pub fn score(
    derivation: &Derivation,
    message: &Message,
    grammar: &Grammar,
) -> Result<AlignmentScore, DeriveError> {
    if derivation.spell(grammar)? != message.tokens {
        return Err(DeriveError::CoverMismatch);
    }
    let b_new = grammar.raw_bits(message)?;
    let b_encoding = codec::derivation_bits(derivation, grammar).map_err(|e| match e {
        codec::CodecError::Model(m) => DeriveError::Model(m),
        _ => DeriveError::CoverMismatch,
    })?;
    Ok(AlignmentScore::new(b_new, b_encoding))
}

// Tie-break label: pattern uses order before literals, then by name bytes.
type Label = (u8, String);

fn labels_of_use(u: &PatternUse, out: &mut Vec<Label>) {
    out.push((0, u.pattern.clone()));
    for f in &u.fillers {
        labels_of_use(f, out);
    }
}

/// Candidate ordering: cost, then node count, then pre-order labels.
fn better(
    cost_a: Bits,
    nodes_a: usize,
    labels_a: impl Fn() -> Vec<Label>,
    cost_b: Bits,
    nodes_b: usize,
    labels_b: impl Fn() -> Vec<Label>,
) -> bool {
    if cost_a != cost_b {
        return cost_a < cost_b;
    }
    if nodes_a != nodes_b {
        return nodes_a < nodes_b;
    }
    labels_a() < labels_b()
}

#[derive(Debug, Clone)]
struct MatchResult {
    end: usize,
    cost: Bits,       // slot-filling cost; excludes the pattern's own reference
    nodes: usize,     // nodes in the subtree, including the pattern itself
    fillers: Vec<PatternUse>,
}

struct Searcher<'a> {
    grammar: &'a Grammar,
    msg: Vec<Option<u32>>, // interned message tokens; None = out of alphabet
    beam: usize,
    // (pattern idx, position, depth budget) -> best completion per end position
    memo: HashMap<(usize, usize, usize), Vec<MatchResult>>,
}

impl<'a> Searcher<'a> {
    /// All minimal-cost completions of `pattern` starting at `pos` with
    /// `budget` nesting levels available (the pattern itself consumes one).
    fn match_pattern(&mut self, pidx: usize, pos: usize, budget: usize) -> Vec<MatchResult> {
        debug_assert!(budget >= 1);
        let key = (pidx, pos, budget);
        if let Some(cached) = self.memo.get(&key) {
            return cached.clone();
        }
        let ops = self.grammar.pattern_at(pidx).ops.clone();
        let mut states = vec![MatchResult {
            end: pos,
            cost: 0.0,
            nodes: 1,
            fillers: Vec::new(),
        }];
        for op in &ops {
            let mut next: Vec<MatchResult> = Vec::new();
            match *op {
                BodyOp::Term(sym) => {
                    for st in &states {
                        if st.end < self.msg.len() && self.msg[st.end] == Some(sym) {
                            let mut st = st.clone();
                            st.end += 1;
                            next.push(st);
                        }
                    }
                }
                BodyOp::Class(cid) => {
                    if budget > 1 {
                        next = self.expand_slot(&states, cid, budget - 1);
                    }
                }
            }
            states = dedup_best(next, self.beam);
            if states.is_empty() {
                break;
            }
        }
        self.memo.insert(key, states.clone());
        states
    }

    fn expand_slot(
        &mut self,
        states: &[MatchResult],
        cid: ClassId,
        budget: usize,
    ) -> Vec<MatchResult> {
        let members = self.grammar.class_members_by_id(cid).to_vec();
        let mut next = Vec::new();
        for st in states {
            for &midx in &members {
                let ref_cost = 1.0 + self.grammar.choice_cost_by_ids(cid, midx);
                for sub in self.match_pattern(midx, st.end, budget) {
                    let mut fillers = st.fillers.clone();
                    fillers.push(PatternUse {
                        pattern: self.grammar.pattern_at(midx).name.clone(),
                        fillers: sub.fillers,
                    });
                    next.push(MatchResult {
                        end: sub.end,
                        cost: st.cost + ref_cost + sub.cost,
                        nodes: st.nodes + sub.nodes,
                        fillers,
                    });
                }
            }
        }
        next
    }
}

/// Keeps, per end position, the best state; when `beam > 0`, additionally
/// keeps only the `beam` cheapest end positions.
fn dedup_best(states: Vec<MatchResult>, beam: usize) -> Vec<MatchResult> {
    let mut by_end: HashMap<usize, MatchResult> = HashMap::new();
    for st in states {
        match by_end.get(&st.end) {
            Some(cur)
                if !better(
                    st.cost,
                    st.nodes,
                    || labels_of_fillers(&st.fillers),
                    cur.cost,
                    cur.nodes,
                    || labels_of_fillers(&cur.fillers),
                ) => {}
            _ => {
                by_end.insert(st.end, st);
            }
        }
    }
    let mut out: Vec<MatchResult> = by_end.into_values().collect();
    out.sort_by_key(|s| s.end);
    if beam > 0 && out.len() > beam {
        out.sort_by(|a, b| a.cost.partial_cmp(&b.cost).unwrap().then(a.end.cmp(&b.end)));
        out.truncate(beam);
        out.sort_by_key(|s| s.end);
    }
    out
}

fn labels_of_fillers(fillers: &[PatternUse]) -> Vec<Label> {
    let mut out = Vec::new();
    for f in fillers {
        labels_of_use(f, &mut out);
    }
    out
}

#[derive(Debug, Clone)]
enum Back {
    Start,
    Literal {
        prev: usize,
    },
    Use {
        prev: usize,
        pattern_name: String,
        fillers: Vec<PatternUse>,
    },
}

#[derive(Debug, Clone)]
struct TopState {
    cost: Bits,
    nodes: usize,
    back: Back,
}

/// Builds the minimum-cost derivation of `message` against `grammar`.
///
/// Ties break toward fewer nodes, then the lexicographically smaller
/// pre-order label sequence, so results are fully deterministic.
pub fn best_derivation(
    message: &Message,
    grammar: &Grammar,
    params: &DeriveParams,
) -> Result<Derivation, DeriveError> {
    let n = message.len();
    let depth = params.max_depth.unwrap_or(grammar.max_depth()).max(1);
    let msg: Vec<Option<u32>> = message
        .tokens
        .iter()
        .map(|t| grammar.alphabet().id_of(t))
        .collect();

    let mut searcher = Searcher {
        grammar,
        msg,
        beam: params.beam_width,
        memo: HashMap::new(),
    };

    let root_class = grammar.class_id("ROOT");
    let mut dp: Vec<Option<TopState>> = vec![None; n + 1];
    dp[0] = Some(TopState {
        cost: 0.0,
        nodes: 0,
        back: Back::Start,
    });

    for pos in 0..n {
        let Some(cur) = dp[pos].clone() else { continue };
        // Literal / escape step.
        if params.allow_literals {
            let lit_cost = match searcher.msg[pos] {
                Some(sym) => 1.0 + grammar.terminal_cost_by_id(sym),
                None => codec::esc_bits(message.tokens[pos].len()),
            };
            relax(
                &mut dp,
                pos + 1,
                TopState {
                    cost: cur.cost + lit_cost,
                    nodes: cur.nodes + 1,
                    back: Back::Literal { prev: pos },
                },
                message,
            );
        }
        // Pattern-use step: ROOT members are chosen within ROOT; any other
        // pattern is identified globally.
        for pidx in 0..grammar.pattern_count() {
            let pattern = grammar.pattern_at(pidx);
            let use_cost = if pattern.class == "ROOT" {
                1.0 + grammar.choice_cost_by_ids(root_class.unwrap(), pidx)
            } else {
                1.0 + grammar.pattern_identity_cost_by_idx(pidx)
            };
            for m in searcher.match_pattern(pidx, pos, depth) {
                if m.end == pos {
                    continue; // zero-width matches cannot exist (bodies are non-empty)
                }
                relax(
                    &mut dp,
                    m.end,
                    TopState {
                        cost: cur.cost + use_cost + m.cost,
                        nodes: cur.nodes + m.nodes,
                        back: Back::Use {
                            prev: pos,
                            pattern_name: pattern.name.clone(),
                            fillers: m.fillers,
                        },
                    },
                    message,
                );
            }
        }
    }

    if dp[n].is_none() {
        let position = (0..=n).rev().find(|&i| dp[i].is_some()).unwrap_or(0);
        return Err(DeriveError::NoCover { position });
    }

    // Reconstruct.
    let mut nodes_rev: Vec<Node> = Vec::new();
    let mut pos = n;
    loop {
        let state = dp[pos].as_ref().unwrap();
        match &state.back {
            Back::Start => break,
            Back::Literal { prev } => {
                nodes_rev.push(Node::Literal(message.tokens[*prev].clone()));
                pos = *prev;
            }
            Back::Use {
                prev,
                pattern_name,
                fillers,
            } => {
                nodes_rev.push(Node::Use(PatternUse {
                    pattern: pattern_name.clone(),
                    fillers: fillers.clone(),
                }));
                pos = *prev;
            }
        }
    }
    nodes_rev.reverse();
    Ok(Derivation { roots: nodes_rev })
}

fn relax(dp: &mut [Option<TopState>], end: usize, cand: TopState, message: &Message) {
    let replace = match &dp[end] {
        None => true,
        Some(cur) => better(
            cand.cost,
            cand.nodes,
            || prefix_labels(dp, end, &cand, message),
            cur.cost,
            cur.nodes,
            || prefix_labels(dp, end, cur, message),
        ),
    };
    if replace {
        dp[end] = Some(cand);
    }
}

/// Pre-order labels of the prefix derivation represented by a DP state.
/// Only materialized on exact cost/node-count ties.
fn prefix_labels(
    dp: &[Option<TopState>],
    _end: usize,
    state: &TopState,
    message: &Message,
) -> Vec<Label> {
    let mut segments: Vec<Vec<Label>> = Vec::new();
    let mut back = state.back.clone();
    loop {
        match back {
            Back::Start => break,
            Back::Literal { prev } => {
                segments.push(vec![(1, message.tokens[prev].clone())]);
                back = dp[prev].as_ref().unwrap().back.clone();
            }
            Back::Use {
                prev,
                ref pattern_name,
                ref fillers,
            } => {
                let mut seg = vec![(0, pattern_name.clone())];
                seg.extend(labels_of_fillers(fillers));
                segments.push(seg);
                back = dp[prev].as_ref().unwrap().back.clone();
            }
        }
    }
    segments.reverse();
    segments.into_iter().flatten().collect()
}

/// Multi-row text rendering of a derivation over its message: row 0 is the
/// message, row 1 marks columns matched by pattern terminals with `|`, and
/// each pattern use gets one row showing its terminals, `@Class` markers at
/// filler start columns, and the pattern name at the end of the row.
pub fn render(derivation: &Derivation, message: &Message, grammar: &Grammar) -> String {
    let n = message.len();
    struct Row {
        entries: Vec<(usize, String)>,
        label: String,
    }
    let mut rows: Vec<Row> = Vec::new();
    let mut matched = vec![false; n];

    fn walk(
        u: &PatternUse,
        start: usize,
        grammar: &Grammar,
        rows: &mut Vec<Row>,
        matched: &mut [bool],
    ) -> usize {
        let pattern = grammar.pattern(&u.pattern).expect("pattern exists");
        let row_idx = rows.len();
        rows.push(Row {
            entries: Vec::new(),
            label: u.pattern.clone(),
        });
        let mut pos = start;
        let mut filler_idx = 0;
        for elem in &pattern.body {
            match elem {
                crate::model::Element::Terminal(t) => {
                    rows[row_idx].entries.push((pos, t.clone()));
                    if pos < matched.len() {
                        matched[pos] = true;
                    }
                    pos += 1;
                }
                crate::model::Element::Slot(c) => {
                    rows[row_idx].entries.push((pos, format!("@{c}")));
                    pos = walk(&u.fillers[filler_idx], pos, grammar, rows, matched);
                    filler_idx += 1;
                }
            }
        }
        pos
    }

    let mut pos = 0;
    for node in &derivation.roots {
        match node {
            Node::Literal(_) => pos += 1,
            Node::Use(u) => pos = walk(u, pos, grammar, &mut rows, &mut matched),
        }
    }
    debug_assert!(pos == n || n == 0 || pos <= n);

    let mut widths: Vec<usize> = message.tokens.iter().map(String::len).collect();
    for row in &rows {
        for (col, text) in &row.entries {
            if *col < n {
                widths[*col] = widths[*col].max(text.len());
            }
        }
    }

    let format_row = |entries: &[(usize, String)], label: &str| -> String {
        let mut cells = vec![String::new(); n];
        for (col, text) in entries {
            if *col < n {
                cells[*col] = text.clone();
            }
        }
        let mut line = cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:<width$}", c, width = widths[i]))
            .collect::<Vec<_>>()
            .join(" ");
        if !label.is_empty() {
            line = line.trim_end().to_string();
            let pad = 2;
            line.push_str(&" ".repeat(pad));
            line.push_str(label);
        }
        line.trim_end().to_string()
    };

    let mut out = String::new();
    let msg_entries: Vec<(usize, String)> = message
        .tokens
        .iter()
        .cloned()
        .enumerate()
        .collect();
    out.push_str(&format_row(&msg_entries, ""));
    out.push('\n');
    let connector: Vec<(usize, String)> = matched
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| (i, "|".to_string()))
        .collect();
    out.push_str(&format_row(&connector, ""));
    out.push('\n');
    for row in &rows {
        out.push_str(&format_row(&row.entries, &row.label));
        out.push('\n');
    }
    out
}
