//! Declarative rule engine injecting characteristic Czech errors
//! (mě/mně, i/y after ambiguous consonants, s-/z- prefixes, ú/ů,
//! bysme/bychom, dvouma/dvěma, capitalization and comma errors).
//!
//! Rules are data, not code: one rule per line in a TSV table, see
//! `data/typical_errors_cs.tsv` for the shipped default set.

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::providers::transfer_casing;

/// The default Czech rule table shipped with the crate
/// (`crates/core/data/typical_errors_cs.tsv`).
pub const DEFAULT_RULES_TSV: &str = include_str!("../data/typical_errors_cs.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchKind {
    /// Whole-token match.
    TokenLiteral,
    /// Pattern occurs anywhere inside a token; first occurrence is replaced.
    Substring,
    /// Token starts with the pattern.
    Prefix,
    /// Sentence-initial token starts with an uppercase letter; firing
    /// lowercases that letter.
    SentenceBoundaryCase,
    /// Non-empty pattern: delete/replace a matching punctuation token.
    /// Empty pattern: insert the replacement at an interior boundary.
    Punctuation,
}

impl MatchKind {
    fn parse(s: &str) -> Option<MatchKind> {
        match s {
            "token-literal" => Some(MatchKind::TokenLiteral),
            "substring" => Some(MatchKind::Substring),
            "prefix" => Some(MatchKind::Prefix),
            "sentence-boundary-case" => Some(MatchKind::SentenceBoundaryCase),
            "punctuation" => Some(MatchKind::Punctuation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseBehavior {
    /// Match case-insensitively, re-apply the token's casing pattern to
    /// the replacement (used for whole-token rules).
    Preserve,
    /// Match and replace exactly as written.
    Literal,
}

#[derive(Debug, Clone)]
pub struct TypicalErrorRule {
    pub rule_id: String,
    pub kind: MatchKind,
    pub pattern: String,
    pub replacements: Vec<String>,
    pub probability: f64,
    pub case_behavior: CaseBehavior,
}

impl TypicalErrorRule {
    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Error::Rule {
            rule_id: self.rule_id.clone(),
            msg,
        };
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(fail(format!(
                "probability {} outside [0, 1]",
                self.probability
            )));
        }
        if self.replacements.is_empty() {
            return Err(fail("no replacements".into()));
        }
        if matches!(self.kind, MatchKind::Substring | MatchKind::Prefix) && self.pattern.is_empty()
        {
            return Err(fail("substring/prefix pattern must be non-empty".into()));
        }
        if !self.pattern.is_empty() && self.replacements.iter().any(|r| r == &self.pattern) {
            return Err(fail("replacement equals the matched text".into()));
        }
        Ok(())
    }
}

/// Load and validate a rule table file.
pub fn load_rules(path: impl AsRef<Path>) -> Result<Vec<TypicalErrorRule>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rules(&text, &path.display().to_string())
}

/// The built-in Czech rule set.
pub fn default_rules() -> Vec<TypicalErrorRule> {
    parse_rules(DEFAULT_RULES_TSV, "<builtin>").expect("built-in rule table is valid")
}

pub fn parse_rules(text: &str, file: &str) -> Result<Vec<TypicalErrorRule>> {
    let mut rules = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::RuleParse {
                file: file.to_string(),
                line: idx as u64 + 1,
                msg: format!("expected 5 tab-separated fields, found {}", fields.len()),
            });
        }
        let parse_err = |msg: String| Error::RuleParse {
            file: file.to_string(),
            line: idx as u64 + 1,
            msg,
        };
        let kind = MatchKind::parse(fields[1])
            .ok_or_else(|| parse_err(format!("unknown kind {:?}", fields[1])))?;
        let probability: f64 = fields[4]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad probability {:?}", fields[4])))?;
        let rule = TypicalErrorRule {
            rule_id: fields[0].to_string(),
            kind,
            pattern: fields[2].to_string(),
            replacements: split_replacements(fields[3]),
            probability,
            case_behavior: match kind {
                MatchKind::TokenLiteral => CaseBehavior::Preserve,
                _ => CaseBehavior::Literal,
            },
        };
        rule.validate()?;
        rules.push(rule);
    }
    Ok(rules)
}

/// Comma-separated replacement list; "\," escapes a literal comma and
/// "\\" a literal backslash.
fn split_replacements(field: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some(next) => current.push(next),
                None => current.push('\\'),
            },
            ',' => {
                out.push(std::mem::take(&mut current));
            }
            _ => current.push(c),
        }
    }
    out.push(current);
    out
}

/// One rule application, for operation logging. For insertion rules the
/// token index is the boundary the token was inserted at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleFiring {
    pub rule_index: usize,
    pub token_index: usize,
}

/// Run the rule table over a sentence. Rules are scanned in listed
/// order; every match site gets an independent chance to fire with its
/// rule's probability, and the first rule that fires claims the token
/// (at most one rule application per token). Insertion rules run over
/// the interior token boundaries afterwards.
pub fn apply_rules<R: Rng>(
    sentence: &Sentence,
    rules: &[TypicalErrorRule],
    rng: &mut R,
) -> (Sentence, Vec<RuleFiring>) {
    let mut firings = Vec::new();
    if sentence.is_empty() || rules.is_empty() {
        return (sentence.clone(), firings);
    }

    let mut out: Vec<String> = Vec::with_capacity(sentence.len());
    for (idx, token) in sentence.tokens().iter().enumerate() {
        let mut claimed = false;
        for (rule_index, rule) in rules.iter().enumerate() {
            let Some(rewrite) = match_site(rule, token, idx) else {
                continue;
            };
            if rng.random::<f64>() >= rule.probability {
                continue;
            }
            let replacement = pick_replacement(rule, rng);
            let new_text = rewrite.apply(token, rule, &replacement);
            for piece in new_text.split_whitespace() {
                out.push(piece.to_string());
            }
            firings.push(RuleFiring {
                rule_index,
                token_index: idx,
            });
            claimed = true;
            break;
        }
        if !claimed {
            out.push(token.clone());
        }
    }

    // insertion rules fire on the interior boundaries of the result
    let insertion_rules: Vec<(usize, &TypicalErrorRule)> = rules
        .iter()
        .enumerate()
        .filter(|(_, r)| r.kind == MatchKind::Punctuation && r.pattern.is_empty())
        .collect();
    if !insertion_rules.is_empty() && out.len() > 1 {
        let mut with_insertions: Vec<String> = Vec::with_capacity(out.len() + 2);
        for (boundary, token) in out.into_iter().enumerate() {
            if boundary > 0 {
                for &(rule_index, rule) in &insertion_rules {
                    if rng.random::<f64>() < rule.probability {
                        let replacement = pick_replacement(rule, rng);
                        for piece in replacement.split_whitespace() {
                            with_insertions.push(piece.to_string());
                        }
                        firings.push(RuleFiring {
                            rule_index,
                            token_index: boundary,
                        });
                        break;
                    }
                }
            }
            with_insertions.push(token);
        }
        out = with_insertions;
    }

    let noisy = Sentence::from_tokens(out).unwrap_or_else(|_| sentence.clone());
    (noisy, firings)
}

fn pick_replacement<R: Rng>(rule: &TypicalErrorRule, rng: &mut R) -> String {
    if rule.replacements.len() == 1 {
        rule.replacements[0].clone()
    } else {
        rule.replacements[rng.random_range(0..rule.replacements.len())].clone()
    }
}

enum Rewrite {
    WholeToken,
    FirstOccurrence,
    PrefixSwap,
    LowercaseFirst,
}

impl Rewrite {
    fn apply(&self, token: &str, rule: &TypicalErrorRule, replacement: &str) -> String {
        match self {
            Rewrite::WholeToken => match rule.case_behavior {
                CaseBehavior::Preserve => transfer_casing(token, replacement),
                CaseBehavior::Literal => replacement.to_string(),
            },
            Rewrite::FirstOccurrence => token.replacen(&rule.pattern, replacement, 1),
            Rewrite::PrefixSwap => {
                format!("{replacement}{}", &token[rule.pattern.len()..])
            }
            Rewrite::LowercaseFirst => {
                let mut chars = token.chars();
                match chars.next() {
                    Some(first) => first.to_lowercase().chain(chars).collect(),
                    None => String::new(),
                }
            }
        }
    }
}

/// Case-insensitive equality without allocating.
fn eq_case_folded(a: &str, b: &str) -> bool {
    a.chars()
        .flat_map(char::to_lowercase)
        .eq(b.chars().flat_map(char::to_lowercase))
}

fn match_site(rule: &TypicalErrorRule, token: &str, index: usize) -> Option<Rewrite> {
    match rule.kind {
        MatchKind::TokenLiteral => {
            let matches = match rule.case_behavior {
                CaseBehavior::Preserve => eq_case_folded(token, &rule.pattern),
                CaseBehavior::Literal => token == rule.pattern,
            };
            matches.then_some(Rewrite::WholeToken)
        }
        MatchKind::Substring => token
            .contains(&rule.pattern)
            .then_some(Rewrite::FirstOccurrence),
        MatchKind::Prefix => token
            .starts_with(&rule.pattern)
            .then_some(Rewrite::PrefixSwap),
        MatchKind::SentenceBoundaryCase => (index == 0
            && token.chars().next().is_some_and(|c| c.is_uppercase()))
        .then_some(Rewrite::LowercaseFirst),
        MatchKind::Punctuation => {
            (!rule.pattern.is_empty() && token == rule.pattern).then_some(Rewrite::WholeToken)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tokenizer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sentence(text: &str) -> Sentence {
        Sentence::from_line(text, &Tokenizer::whitespace())
    }

    fn rule(
        id: &str,
        kind: MatchKind,
        pattern: &str,
        replacement: &str,
        p: f64,
    ) -> TypicalErrorRule {
        TypicalErrorRule {
            rule_id: id.into(),
            kind,
            pattern: pattern.into(),
            replacements: vec![replacement.into()],
            probability: p,
            case_behavior: match kind {
                MatchKind::TokenLiteral => CaseBehavior::Preserve,
                _ => CaseBehavior::Literal,
            },
        }
    }

    #[test]
    fn token_literal_fires_at_probability_one() {
        let rules = vec![rule("mne_me", MatchKind::TokenLiteral, "mně", "mě", 1.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (noisy, firings) = apply_rules(&sentence("dej mně pokoj"), &rules, &mut rng);
        assert_eq!(noisy.tokens(), ["dej", "mě", "pokoj"]);
        assert_eq!(firings.len(), 1);
        assert_eq!(firings[0].token_index, 1);
    }

    #[test]
    fn casing_is_preserved_for_token_literal_rules() {
        let rules = vec![rule("me_mne", MatchKind::TokenLiteral, "mě", "mně", 1.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (noisy, _) = apply_rules(&sentence("Mě to mrzí"), &rules, &mut rng);
        assert_eq!(noisy.tokens(), ["Mně", "to", "mrzí"]);
    }

    #[test]
    fn zero_probability_never_fires() {
        let rules = vec![rule("b", MatchKind::TokenLiteral, "bychom", "bysme", 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = sentence("abychom šli bychom tam");
        let (noisy, firings) = apply_rules(&s, &rules, &mut rng);
        assert_eq!(noisy, s);
        assert!(firings.is_empty());
    }

    #[test]
    fn all_zero_probabilities_are_the_identity() {
        let mut rules = default_rules();
        for r in &mut rules {
            r.probability = 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = sentence("Kdybychom tam šli , mě by to mrzelo .");
        let (noisy, firings) = apply_rules(&s, &rules, &mut rng);
        assert_eq!(noisy, s);
        assert!(firings.is_empty());
    }

    #[test]
    fn substring_replaces_first_occurrence_only() {
        let rules = vec![rule("iy", MatchKind::Substring, "bi", "by", 1.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (noisy, _) = apply_rules(&sentence("nabitý bicykl"), &rules, &mut rng);
        assert_eq!(noisy.tokens(), ["nabytý", "bycykl"]);
    }

    #[test]
    fn first_match_wins_per_token() {
        let rules = vec![
            rule("a", MatchKind::TokenLiteral, "bychom", "bysme", 1.0),
            rule("b", MatchKind::Substring, "by", "bi", 1.0),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (noisy, firings) = apply_rules(&sentence("bychom"), &rules, &mut rng);
        assert_eq!(noisy.tokens(), ["bysme"]);
        assert_eq!(firings.len(), 1);
        assert_eq!(firings[0].rule_index, 0);
    }

    #[test]
    fn prefix_swap() {
        let rules = vec![rule("sz", MatchKind::Prefix, "s", "z", 1.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (noisy, _) = apply_rules(&sentence("sletěl s okna"), &rules, &mut rng);
        assert_eq!(noisy.tokens(), ["zletěl", "z", "okna"]);
    }

    #[test]
    fn sentence_start_is_lowercased() {
        let rules = vec![rule("lc", MatchKind::SentenceBoundaryCase, "", "", 1.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (noisy, _) = apply_rules(&sentence("Šel domů v Praze"), &rules, &mut rng);
        assert_eq!(noisy.tokens(), ["šel", "domů", "v", "Praze"]);
    }

    #[test]
    fn comma_rules_delete_and_insert() {
        let del = rule("cd", MatchKind::Punctuation, ",", "", 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (noisy, _) = apply_rules(&sentence("ano , určitě"), &[del], &mut rng);
        assert_eq!(noisy.tokens(), ["ano", "určitě"]);

        let ins = rule("ci", MatchKind::Punctuation, "", ",", 1.0);
        let (noisy, firings) = apply_rules(&sentence("ano určitě"), &[ins], &mut rng);
        assert_eq!(noisy.tokens(), ["ano", ",", "určitě"]);
        assert_eq!(firings[0].token_index, 1);
    }

    #[test]
    fn default_rule_file_covers_the_typical_phenomena() {
        let rules = default_rules();
        assert!(rules.len() >= 8, "only {} rules", rules.len());
        let ids: Vec<&str> = rules.iter().map(|r| r.rule_id.as_str()).collect();
        for needed in [
            "me_mne",
            "mne_me",
            "bychom_bysme",
            "dvema_dvouma",
            "prefix_s_z",
            "uu_u_ring",
            "uu_ring_u",
            "lowercase_sentence_start",
            "comma_delete",
            "comma_insert",
        ] {
            assert!(ids.contains(&needed), "missing rule {needed}");
        }
        assert!(ids.iter().any(|id| id.starts_with("iy_")));
        // static reversibility sanity: no rule maps the pattern to itself
        for r in &rules {
            for repl in &r.replacements {
                assert!(r.pattern.is_empty() || repl != &r.pattern, "{}", r.rule_id);
            }
        }
    }

    #[test]
    fn probability_out_of_range_is_rejected() {
        let text = "bad\ttoken-literal\tmě\tmně\t1.5\n";
        assert!(parse_rules(text, "<test>").is_err());
    }

    #[test]
    fn malformed_line_reports_position() {
        match parse_rules("only\tthree\tfields\n", "<test>") {
            Err(Error::RuleParse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_rule_file_is_identity() {
        let rules = parse_rules("# nothing here\n", "<test>").unwrap();
        assert!(rules.is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = sentence("Mě bychom tam , vzali");
        let (noisy, firings) = apply_rules(&s, &rules, &mut rng);
        assert_eq!(noisy, s);
        assert!(firings.is_empty());
    }

    #[test]
    fn firing_frequency_tracks_probability() {
        let rules = vec![rule("b", MatchKind::TokenLiteral, "bychom", "bysme", 0.3)];
        let s = sentence("šli bychom tam");
        let mut fired = 0;
        for i in 0..10_000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
            let (_, firings) = apply_rules(&s, &rules, &mut rng);
            fired += firings.len();
        }
        assert!((2800..=3200).contains(&fired), "fired {fired} times");
    }
}
