//! Edit-matching F-beta scorer for correction systems.
//!
//! Source and hypothesis are aligned by token-level Levenshtein; the
//! optimal alignments form a lattice of candidate edits, where adjacent
//! edit operations (optionally spanning a bounded number of unchanged
//! words) merge into larger candidates. Scoring picks the edit
//! decomposition that maximizes agreement with an annotator's gold
//! edits, the annotator that maximizes the running corpus-level F-beta,
//! and accumulates TP/FP/FN overall and per domain.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use crate::corpus::m2::GoldAnnotation;
use crate::corpus::Sentence;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_UNCHANGED: usize = 2;
pub const DEFAULT_BETA: f64 = 0.5;

/// Replace source tokens `[start, end)` with `replacement` (tokens
/// joined by single spaces; empty for a deletion). `start == end` is a
/// pure insertion before `start`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EditSpan {
    pub start: usize,
    pub end: usize,
    pub replacement: String,
}

impl EditSpan {
    pub fn from_annotation(a: &GoldAnnotation) -> EditSpan {
        EditSpan {
            start: a.span_start,
            end: a.span_end,
            replacement: normalize_whitespace(&a.replacement),
        }
    }
}

fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// An outgoing lattice edge: either one matched token (`edit: None`)
/// or a candidate edit.
#[derive(Debug, Clone)]
pub struct LatticeEdge {
    pub to: usize,
    pub edit: Option<EditSpan>,
}

/// The lattice of alternative edit decompositions turning the source
/// into the hypothesis. Nodes are `(source index, hypothesis index)`
/// pairs lying on optimal Levenshtein alignments; node ids are in
/// topological order.
pub struct EditLattice {
    positions: Vec<(usize, usize)>,
    edges: Vec<Vec<LatticeEdge>>,
    start: usize,
    end: usize,
}

impl EditLattice {
    pub fn start_node(&self) -> usize {
        self.start
    }

    pub fn end_node(&self) -> usize {
        self.end
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn position(&self, node: usize) -> (usize, usize) {
        self.positions[node]
    }

    pub fn edges_of(&self, node: usize) -> &[LatticeEdge] {
        &self.edges[node]
    }

    /// All candidate edits anywhere in the lattice.
    pub fn candidate_edits(&self) -> impl Iterator<Item = &EditSpan> {
        self.edges
            .iter()
            .flat_map(|edges| edges.iter().filter_map(|e| e.edit.as_ref()))
    }
}

/// Token-level Levenshtein alignment (match 0; substitution, insertion,
/// deletion 1; no transpositions) expanded into the candidate-edit
/// lattice. Merged candidates span runs of edits with at most
/// `max_unchanged_words` matched tokens between them.
pub fn align(source: &Sentence, hypothesis: &Sentence, max_unchanged_words: usize) -> EditLattice {
    let src = source.tokens();
    let hyp = hypothesis.tokens();
    let m = src.len();
    let n = hyp.len();

    // forward and backward optimal costs
    let mut fwd = vec![vec![0u32; n + 1]; m + 1];
    for i in 0..=m {
        for j in 0..=n {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = u32::MAX;
            if i > 0 {
                best = best.min(fwd[i - 1][j] + 1);
            }
            if j > 0 {
                best = best.min(fwd[i][j - 1] + 1);
            }
            if i > 0 && j > 0 {
                let cost = u32::from(src[i - 1] != hyp[j - 1]);
                best = best.min(fwd[i - 1][j - 1] + cost);
            }
            fwd[i][j] = best;
        }
    }
    let mut bwd = vec![vec![0u32; n + 1]; m + 1];
    for i in (0..=m).rev() {
        for j in (0..=n).rev() {
            if i == m && j == n {
                continue;
            }
            let mut best = u32::MAX;
            if i < m {
                best = best.min(bwd[i + 1][j] + 1);
            }
            if j < n {
                best = best.min(bwd[i][j + 1] + 1);
            }
            if i < m && j < n {
                let cost = u32::from(src[i] != hyp[j]);
                best = best.min(bwd[i + 1][j + 1] + cost);
            }
            bwd[i][j] = best;
        }
    }
    let total = fwd[m][n];

    // nodes on at least one optimal alignment, in (i, j) lexicographic
    // order, which is topological (edges never decrease i or j)
    let mut node_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut positions: Vec<(usize, usize)> = Vec::new();
    for i in 0..=m {
        for j in 0..=n {
            if fwd[i][j] + bwd[i][j] == total {
                node_ids.insert((i, j), positions.len());
                positions.push((i, j));
            }
        }
    }

    // atomic alignment edges restricted to optimal paths
    #[derive(Clone)]
    struct RawEdge {
        to: usize,
        is_match: bool,
    }
    let mut raw: Vec<Vec<RawEdge>> = vec![Vec::new(); positions.len()];
    for (id, &(i, j)) in positions.iter().enumerate() {
        if i < m && j < n {
            let is_match = src[i] == hyp[j];
            let cost = u32::from(!is_match);
            if fwd[i][j] + cost + bwd[i + 1][j + 1] == total {
                raw[id].push(RawEdge {
                    to: node_ids[&(i + 1, j + 1)],
                    is_match,
                });
            }
        }
        if i < m && fwd[i][j] + 1 + bwd[i + 1][j] == total {
            raw[id].push(RawEdge {
                to: node_ids[&(i + 1, j)],
                is_match: false,
            });
        }
        if j < n && fwd[i][j] + 1 + bwd[i][j + 1] == total {
            raw[id].push(RawEdge {
                to: node_ids[&(i, j + 1)],
                is_match: false,
            });
        }
    }

    // candidate edits: segments that start and end with an edit edge
    // and never contain more than max_unchanged_words consecutive
    // matched tokens in between
    let mut candidates: HashSet<(usize, usize)> = HashSet::new();
    for start in 0..positions.len() {
        if !raw[start].iter().any(|e| !e.is_match) {
            continue;
        }
        let mut visited: HashSet<(usize, usize)> = HashSet::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for edge in raw[start].iter().filter(|e| !e.is_match) {
            candidates.insert((start, edge.to));
            if visited.insert((edge.to, 0)) {
                stack.push((edge.to, 0));
            }
        }
        while let Some((node, run)) = stack.pop() {
            for edge in &raw[node] {
                if edge.is_match {
                    if run < max_unchanged_words && visited.insert((edge.to, run + 1)) {
                        stack.push((edge.to, run + 1));
                    }
                } else {
                    candidates.insert((start, edge.to));
                    if visited.insert((edge.to, 0)) {
                        stack.push((edge.to, 0));
                    }
                }
            }
        }
    }

    // final adjacency: match edges plus candidate edit edges
    let mut edges: Vec<Vec<LatticeEdge>> = vec![Vec::new(); positions.len()];
    for (id, raw_edges) in raw.iter().enumerate() {
        for edge in raw_edges.iter().filter(|e| e.is_match) {
            edges[id].push(LatticeEdge {
                to: edge.to,
                edit: None,
            });
        }
    }
    let mut candidates: Vec<(usize, usize)> = candidates.into_iter().collect();
    candidates.sort_unstable();
    for (from, to) in candidates {
        let (i1, j1) = positions[from];
        let (i2, j2) = positions[to];
        let replacement = hyp[j1..j2].join(" ");
        debug_assert!(
            src[i1..i2].join(" ") != replacement,
            "candidate edit equal to its source"
        );
        edges[from].push(LatticeEdge {
            to,
            edit: Some(EditSpan {
                start: i1,
                end: i2,
                replacement,
            }),
        });
    }

    let start = node_ids[&(0, 0)];
    let end = node_ids[&(m, n)];
    EditLattice {
        positions,
        edges,
        start,
        end,
    }
}

/// One annotator's gold edit set, with the match-sensitivity baked in.
/// Matching is case-sensitive by default, like the reference scorer.
#[derive(Debug, Clone)]
pub struct GoldSet {
    edits: HashSet<EditSpan>,
    case_sensitive: bool,
}

impl GoldSet {
    pub fn new(edits: HashSet<EditSpan>, case_sensitive: bool) -> GoldSet {
        let edits = if case_sensitive {
            edits
        } else {
            edits
                .into_iter()
                .map(|e| EditSpan {
                    replacement: e.replacement.to_lowercase(),
                    ..e
                })
                .collect()
        };
        GoldSet {
            edits,
            case_sensitive,
        }
    }

    pub fn len(&self) -> usize {
        self.edits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    pub fn contains(&self, edit: &EditSpan) -> bool {
        if self.case_sensitive {
            self.edits.contains(edit)
        } else {
            self.edits.contains(&EditSpan {
                start: edit.start,
                end: edit.end,
                replacement: edit.replacement.to_lowercase(),
            })
        }
    }
}

impl From<HashSet<EditSpan>> for GoldSet {
    fn from(edits: HashSet<EditSpan>) -> GoldSet {
        GoldSet::new(edits, true)
    }
}

/// The edit decomposition chosen for one annotator, with its counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionEval {
    pub selected: Vec<EditSpan>,
    /// Selected edits that exactly match a gold edit.
    pub hits: u64,
    /// Total selected edits.
    pub proposed: u64,
    /// Gold (non-noop) edits for the annotator.
    pub gold_count: u64,
}

impl SelectionEval {
    pub fn tp(&self) -> u64 {
        self.hits.min(self.gold_count)
    }

    pub fn fp(&self) -> u64 {
        self.proposed - self.hits
    }

    pub fn fn_count(&self) -> u64 {
        self.gold_count - self.tp()
    }
}

/// Pick the path through the lattice that maximizes the number of edits
/// exactly matching gold (same span, same replacement), breaking ties
/// toward fewer total edits.
pub fn best_edit_selection(lattice: &EditLattice, gold: &GoldSet) -> Vec<EditSpan> {
    evaluate_selection(lattice, gold).selected
}

pub fn evaluate_selection(lattice: &EditLattice, gold: &GoldSet) -> SelectionEval {
    let nodes = lattice.node_count();
    // (hits, edits) per node; better = more hits, then fewer edits
    let mut best: Vec<Option<(u64, u64)>> = vec![None; nodes];
    let mut back: Vec<Option<(usize, usize)>> = vec![None; nodes];
    best[lattice.start_node()] = Some((0, 0));
    for node in 0..nodes {
        let Some((hits, edits)) = best[node] else {
            continue;
        };
        for (edge_idx, edge) in lattice.edges_of(node).iter().enumerate() {
            let (mut new_hits, mut new_edits) = (hits, edits);
            if let Some(edit) = &edge.edit {
                new_edits += 1;
                if gold.contains(edit) {
                    new_hits += 1;
                }
            }
            let improves = match best[edge.to] {
                None => true,
                Some((h, e)) => new_hits > h || (new_hits == h && new_edits < e),
            };
            if improves {
                best[edge.to] = Some((new_hits, new_edits));
                back[edge.to] = Some((node, edge_idx));
            }
        }
    }

    let mut selected = Vec::new();
    let mut node = lattice.end_node();
    while let Some((prev, edge_idx)) = back[node] {
        if let Some(edit) = &lattice.edges_of(prev)[edge_idx].edit {
            selected.push(edit.clone());
        }
        node = prev;
    }
    selected.reverse();

    let (hits, proposed) = best[lattice.end_node()].unwrap_or((0, 0));
    SelectionEval {
        selected,
        hits,
        proposed,
        gold_count: gold.len() as u64,
    }
}

/// Apply a path-ordered edit set to the source tokens.
pub fn apply_edits(tokens: &[String], edits: &[EditSpan]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut pos = 0;
    for edit in edits {
        out.extend(tokens[pos..edit.start].iter().cloned());
        out.extend(edit.replacement.split_whitespace().map(str::to_string));
        pos = edit.end;
    }
    out.extend(tokens[pos..].iter().cloned());
    out
}

/// TP/FP/FN with the derived precision, recall and F-beta.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_count: u64,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
}

impl Metrics {
    pub fn from_counts(tp: u64, fp: u64, fn_count: u64, beta: f64) -> Metrics {
        let precision = if tp + fp == 0 {
            1.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_count == 0 {
            1.0
        } else {
            tp as f64 / (tp + fn_count) as f64
        };
        Metrics {
            tp,
            fp,
            fn_count,
            precision,
            recall,
            f_beta: f_beta(precision, recall, beta),
        }
    }
}

/// F_beta = (1 + beta^2) * P * R / (beta^2 * P + R); zero when the
/// numerator is zero.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let numerator = (1.0 + b2) * precision * recall;
    if numerator == 0.0 {
        0.0
    } else {
        numerator / (b2 * precision + recall)
    }
}

/// Overall and per-domain scores.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreReport {
    pub beta: f64,
    pub overall: Metrics,
    pub per_domain: BTreeMap<String, Metrics>,
}

/// One gold block: source sentence, all annotator edits, and an
/// optional domain tag.
#[derive(Debug, Clone)]
pub struct ScoreBlock {
    pub source: Sentence,
    pub annotations: Vec<GoldAnnotation>,
    pub domain: Option<String>,
}

/// Scoring knobs, defaulting to the reference scorer's behavior.
#[derive(Debug, Clone, Copy)]
pub struct ScoreOptions {
    pub beta: f64,
    pub max_unchanged_words: usize,
    pub case_sensitive: bool,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            beta: DEFAULT_BETA,
            max_unchanged_words: DEFAULT_MAX_UNCHANGED,
            case_sensitive: true,
        }
    }
}

/// Score hypotheses against index-aligned gold blocks. For every
/// sentence each annotator's gold set is evaluated and the one that
/// maximizes the corpus-level F-beta given the running totals is kept
/// (ties go to the lowest annotator id), so accumulation is sequential
/// in input order.
pub fn score_corpus(
    blocks: &[ScoreBlock],
    hypotheses: &[Sentence],
    beta: f64,
    max_unchanged_words: usize,
) -> Result<ScoreReport> {
    score_corpus_with(
        blocks,
        hypotheses,
        &ScoreOptions {
            beta,
            max_unchanged_words,
            ..ScoreOptions::default()
        },
    )
}

pub fn score_corpus_with(
    blocks: &[ScoreBlock],
    hypotheses: &[Sentence],
    options: &ScoreOptions,
) -> Result<ScoreReport> {
    if blocks.len() != hypotheses.len() {
        return Err(Error::CountMismatch {
            gold: blocks.len(),
            hyp: hypotheses.len(),
        });
    }
    let beta = options.beta;
    let mut totals = (0u64, 0u64, 0u64);
    let mut domain_totals: BTreeMap<String, (u64, u64, u64)> = BTreeMap::new();
    for (block, hypothesis) in blocks.iter().zip(hypotheses) {
        let lattice = align(&block.source, hypothesis, options.max_unchanged_words);
        let mut chosen: Option<(f64, (u64, u64, u64))> = None;
        for (_, gold) in group_gold(&block.annotations) {
            let gold = GoldSet::new(gold, options.case_sensitive);
            let eval = evaluate_selection(&lattice, &gold);
            let counts = (eval.tp(), eval.fp(), eval.fn_count());
            let f = {
                let m = Metrics::from_counts(
                    totals.0 + counts.0,
                    totals.1 + counts.1,
                    totals.2 + counts.2,
                    beta,
                );
                m.f_beta
            };
            if chosen.as_ref().is_none_or(|(best_f, _)| f > *best_f) {
                chosen = Some((f, counts));
            }
        }
        let (_, counts) = chosen.expect("at least one annotator");
        totals.0 += counts.0;
        totals.1 += counts.1;
        totals.2 += counts.2;
        if let Some(domain) = &block.domain {
            let d = domain_totals.entry(domain.clone()).or_insert((0, 0, 0));
            d.0 += counts.0;
            d.1 += counts.1;
            d.2 += counts.2;
        }
    }
    Ok(ScoreReport {
        beta,
        overall: Metrics::from_counts(totals.0, totals.1, totals.2, beta),
        per_domain: domain_totals
            .into_iter()
            .map(|(k, (tp, fp, fn_count))| (k, Metrics::from_counts(tp, fp, fn_count, beta)))
            .collect(),
    })
}

/// Convert an M2 block's annotations grouped per annotator into gold
/// edit sets (noop annotations drop out).
pub fn group_gold(annotations: &[GoldAnnotation]) -> BTreeMap<u32, HashSet<EditSpan>> {
    let mut map: BTreeMap<u32, HashSet<EditSpan>> = BTreeMap::new();
    for a in annotations {
        let set = map.entry(a.annotator_id).or_default();
        if !a.is_noop() {
            set.insert(EditSpan::from_annotation(a));
        }
    }
    if map.is_empty() {
        map.insert(0, HashSet::new());
    }
    map
}
