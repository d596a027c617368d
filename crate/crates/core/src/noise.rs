//! Two-pass sentence noising: a character-level pass (uniform over five
//! operations), a token-level pass (weighted over six operations), and
//! an optional typical-error rule pass. Per-pass error counts come from
//! a clamped normal draw scaled by the sentence's word count.
//!
//! Everything here is a pure function of `(seed, sentence_index)`, so a
//! corpus can be sharded across any number of workers and still produce
//! byte-identical output.

use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{is_punct_token, Sentence};
use crate::error::{Error, Result};
use crate::providers::{transfer_casing, DiacriticsTable, Providers, DEFAULT_MAX_DISTANCE};
use crate::typical::{apply_rules, TypicalErrorRule};

/// Character-level operations, drawn uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CharOp {
    Sub,
    Ins,
    Del,
    Swap,
    Diacritics,
}

pub const CHAR_OPS: [CharOp; 5] = [
    CharOp::Sub,
    CharOp::Ins,
    CharOp::Del,
    CharOp::Swap,
    CharOp::Diacritics,
];

impl CharOp {
    pub fn name(self) -> &'static str {
        match self {
            CharOp::Sub => "char_sub",
            CharOp::Ins => "char_ins",
            CharOp::Del => "char_del",
            CharOp::Swap => "char_swap",
            CharOp::Diacritics => "diacritics",
        }
    }
}

/// Token-level operations, drawn from the profile's weight vector
/// (sub_aspell, sub_morph, ins, del, swap, recase).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenOp {
    SubAspell,
    SubMorph,
    Ins,
    Del,
    Swap,
    Recase,
}

pub const TOKEN_OPS: [TokenOp; 6] = [
    TokenOp::SubAspell,
    TokenOp::SubMorph,
    TokenOp::Ins,
    TokenOp::Del,
    TokenOp::Swap,
    TokenOp::Recase,
];

impl TokenOp {
    pub fn name(self) -> &'static str {
        match self {
            TokenOp::SubAspell => "sub_aspell",
            TokenOp::SubMorph => "sub_morph",
            TokenOp::Ins => "ins",
            TokenOp::Del => "del",
            TokenOp::Swap => "swap",
            TokenOp::Recase => "recase",
        }
    }
}

pub const DEFAULT_ALPHABET: &str = "aábcčdďeéěfghiíjklmnňoópqrřsštťuúůvwxyýzž";

fn default_alphabet() -> String {
    DEFAULT_ALPHABET.to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharPassConfig {
    pub rate_mean: f64,
    pub rate_std: f64,
    /// Weights over (char_sub, char_ins, char_del, char_swap, diacritics).
    pub op_weights: [f64; 5],
}

impl Default for CharPassConfig {
    fn default() -> Self {
        CharPassConfig {
            rate_mean: 0.02,
            rate_std: 0.01,
            op_weights: [0.2; 5],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenPassConfig {
    pub rate_mean: f64,
    pub rate_std: f64,
    /// Weights over (sub_aspell, sub_morph, ins, del, swap, recase).
    pub op_weights: [f64; 6],
}

impl Default for TokenPassConfig {
    fn default() -> Self {
        TokenPassConfig {
            rate_mean: 0.15,
            rate_std: 0.2,
            op_weights: [0.5, 0.2, 0.1, 0.05, 0.1, 0.05],
        }
    }
}

/// Full configuration of both noising passes and the typical-error pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseProfile {
    #[serde(default)]
    pub char_pass: CharPassConfig,
    #[serde(default)]
    pub token_pass: TokenPassConfig,
    #[serde(default)]
    pub typical_errors_enabled: bool,
    #[serde(default)]
    pub rule_set_path: Option<PathBuf>,
    #[serde(default = "default_alphabet")]
    pub alphabet: String,
}

impl Default for NoiseProfile {
    fn default() -> Self {
        NoisePreset::Mate.profile()
    }
}

impl NoiseProfile {
    /// Parse a TOML profile and validate it.
    pub fn from_toml_str(text: &str) -> Result<NoiseProfile> {
        let mut profile: NoiseProfile =
            toml::from_str(text).map_err(|e| Error::Profile(e.to_string()))?;
        profile.validate_and_normalize()?;
        Ok(profile)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<NoiseProfile> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        NoiseProfile::from_toml_str(&text)
    }

    /// Checks rates and weights, then rescales each weight vector to
    /// sum to 1.
    pub fn validate_and_normalize(&mut self) -> Result<()> {
        for (name, rate) in [
            ("char_pass.rate_mean", self.char_pass.rate_mean),
            ("char_pass.rate_std", self.char_pass.rate_std),
            ("token_pass.rate_mean", self.token_pass.rate_mean),
            ("token_pass.rate_std", self.token_pass.rate_std),
        ] {
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::Profile(format!("{name} must be finite and >= 0")));
            }
        }
        if self.char_pass.rate_mean > 1.0 || self.token_pass.rate_mean > 1.0 {
            log::warn!("rate_mean above 1.0 saturates at one error per word");
        }
        normalize_weights("char_pass.op_weights", &mut self.char_pass.op_weights)?;
        normalize_weights("token_pass.op_weights", &mut self.token_pass.op_weights)?;
        if self.alphabet.is_empty() {
            return Err(Error::Profile("alphabet must not be empty".into()));
        }
        if self.alphabet.chars().any(char::is_whitespace) {
            return Err(Error::Profile(
                "alphabet must not contain whitespace".into(),
            ));
        }
        Ok(())
    }

    /// Providers the token pass needs under this profile: (dictionary
    /// lexicon, morphological lexicon). The dictionary doubles as the
    /// insertion-word source.
    pub fn required_providers(&self) -> (bool, bool) {
        let w = &self.token_pass.op_weights;
        (w[0] > 0.0 || w[2] > 0.0, w[1] > 0.0)
    }
}

fn normalize_weights(name: &str, weights: &mut [f64]) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Profile(format!(
            "{name}: weights must be finite and non-negative"
        )));
    }
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return Err(Error::Profile(format!("{name}: weights sum to zero")));
    }
    for w in weights.iter_mut() {
        *w /= sum;
    }
    Ok(())
}

/// The four named noising settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoisePreset {
    Aspell,
    Morphodita,
    TypicalErrors,
    Mate,
}

impl NoisePreset {
    pub const ALL: [NoisePreset; 4] = [
        NoisePreset::Aspell,
        NoisePreset::Morphodita,
        NoisePreset::TypicalErrors,
        NoisePreset::Mate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoisePreset::Aspell => "aspell",
            NoisePreset::Morphodita => "morphodita",
            NoisePreset::TypicalErrors => "typical",
            NoisePreset::Mate => "mate",
        }
    }

    pub fn profile(self) -> NoiseProfile {
        let (token_weights, typical) = match self {
            NoisePreset::Aspell => ([0.7, 0.0, 0.1, 0.05, 0.1, 0.05], false),
            NoisePreset::Morphodita => ([0.5, 0.2, 0.1, 0.05, 0.1, 0.05], false),
            NoisePreset::TypicalErrors => ([0.7, 0.0, 0.1, 0.05, 0.1, 0.05], true),
            NoisePreset::Mate => ([0.5, 0.2, 0.1, 0.05, 0.1, 0.05], true),
        };
        NoiseProfile {
            char_pass: CharPassConfig::default(),
            token_pass: TokenPassConfig {
                op_weights: token_weights,
                ..TokenPassConfig::default()
            },
            typical_errors_enabled: typical,
            rule_set_path: None,
            alphabet: DEFAULT_ALPHABET.to_string(),
        }
    }
}

impl std::str::FromStr for NoisePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<NoisePreset> {
        match s.to_ascii_lowercase().as_str() {
            "aspell" => Ok(NoisePreset::Aspell),
            "morphodita" => Ok(NoisePreset::Morphodita),
            "typical" | "typical-errors" => Ok(NoisePreset::TypicalErrors),
            "mate" => Ok(NoisePreset::Mate),
            other => Err(Error::Profile(format!(
                "unknown preset {other:?} (expected aspell | morphodita | typical | mate)"
            ))),
        }
    }
}

/// The per-sentence random stream: a pure function of
/// `(seed, sentence_index)`, independent of processing order and worker
/// count.
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn for_sentence(seed: u64, sentence_index: u64) -> RngStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(sentence_index);
        RngStream { rng }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// Draw an error probability from `Normal(rate_mean, rate_std)`, clamp
/// it to [0, 1] and scale by the unit count, rounding to nearest.
pub fn sample_error_count<R: Rng>(
    n_units: usize,
    rate_mean: f64,
    rate_std: f64,
    rng: &mut R,
) -> usize {
    let p = if rate_std > 0.0 {
        match Normal::new(rate_mean, rate_std) {
            Ok(normal) => normal.sample(rng),
            Err(_) => rate_mean,
        }
    } else {
        rate_mean
    };
    let p = p.clamp(0.0, 1.0);
    (((p * n_units as f64).round()) as usize).min(n_units)
}

/// Apply one character-level operation to a word. Returns `None` when
/// the operation is inapplicable (the word is left unchanged); an empty
/// result means the whole word was deleted. Operates on Unicode scalar
/// values, never splitting a code point.
pub fn apply_char_op<R: Rng>(
    word: &str,
    op: CharOp,
    alphabet: &[char],
    diacritics: &DiacriticsTable,
    rng: &mut R,
) -> Option<String> {
    let mut chars: Vec<char> = word.chars().collect();
    match op {
        CharOp::Sub => {
            if chars.is_empty() {
                return None;
            }
            let pos = rng.random_range(0..chars.len());
            let mut letter = alphabet[rng.random_range(0..alphabet.len())];
            if chars[pos].is_uppercase() {
                letter = letter.to_uppercase().next().unwrap_or(letter);
            }
            chars[pos] = letter;
        }
        CharOp::Ins => {
            let pos = rng.random_range(0..=chars.len());
            let letter = alphabet[rng.random_range(0..alphabet.len())];
            chars.insert(pos, letter);
        }
        CharOp::Del => {
            if chars.is_empty() {
                return None;
            }
            let pos = rng.random_range(0..chars.len());
            chars.remove(pos);
        }
        CharOp::Swap => {
            if chars.len() < 2 {
                return None;
            }
            let pos = rng.random_range(0..chars.len() - 1);
            chars.swap(pos, pos + 1);
        }
        CharOp::Diacritics => {
            let positions: Vec<usize> = (0..chars.len())
                .filter(|&i| diacritics.has_variants(chars[i]))
                .collect();
            if positions.is_empty() {
                return None;
            }
            let pos = positions[rng.random_range(0..positions.len())];
            let variants = diacritics.variants(chars[pos]);
            if variants.is_empty() {
                return None;
            }
            chars[pos] = variants[rng.random_range(0..variants.len())];
        }
    }
    Some(chars.into_iter().collect())
}

/// How many ranked dictionary suggestions the substitution op samples
/// from.
pub const SUGGEST_TOP_K: usize = 5;

/// Apply one token-level operation at `index`. Returns false when the
/// operation was skipped (no candidates, sentence too short, no letters
/// to recase); the token list is then left unchanged.
pub fn apply_token_op<R: Rng>(
    tokens: &mut Vec<String>,
    index: usize,
    op: TokenOp,
    providers: &Providers,
    rng: &mut R,
) -> bool {
    match op {
        TokenOp::SubAspell => {
            let Some(lexicon) = providers.lexicon.as_ref() else {
                return false;
            };
            let Ok(pool) =
                lexicon.suggest_top_k(&tokens[index], DEFAULT_MAX_DISTANCE, SUGGEST_TOP_K)
            else {
                return false;
            };
            if pool.is_empty() {
                return false;
            }
            let choice = &pool[rng.random_range(0..pool.len())];
            tokens[index] = transfer_casing(&tokens[index], &choice.form);
            true
        }
        TokenOp::SubMorph => {
            let Some(morph) = providers.morph.as_ref() else {
                return false;
            };
            let word = &tokens[index];
            let mut forms = morph.morph_forms(word);
            let mut recase = false;
            if forms.is_empty() {
                let lower = word.to_lowercase();
                if lower != *word {
                    forms = morph.morph_forms(&lower);
                    recase = true;
                }
            }
            if forms.is_empty() {
                return false;
            }
            let choice = &forms[rng.random_range(0..forms.len())];
            tokens[index] = if recase {
                transfer_casing(&tokens[index], choice)
            } else {
                choice.clone()
            };
            true
        }
        TokenOp::Ins => {
            let Some(lexicon) = providers.lexicon.as_ref() else {
                return false;
            };
            let word = lexicon.sample_weighted(rng).to_string();
            let boundary = rng.random_range(0..=tokens.len());
            tokens.insert(boundary, word);
            true
        }
        TokenOp::Del => {
            tokens.remove(index);
            true
        }
        TokenOp::Swap => {
            if tokens.len() < 2 {
                return false;
            }
            if index + 1 < tokens.len() {
                tokens.swap(index, index + 1);
            } else {
                tokens.swap(index - 1, index);
            }
            true
        }
        TokenOp::Recase => {
            let Some(first_letter) = tokens[index].chars().find(|c| c.is_alphabetic()) else {
                return false;
            };
            tokens[index] = if first_letter.is_lowercase() {
                capitalize_first_letter(&tokens[index])
            } else {
                tokens[index].to_lowercase()
            };
            true
        }
    }
}

fn capitalize_first_letter(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    let mut done = false;
    for c in token.chars() {
        if !done && c.is_alphabetic() {
            out.extend(c.to_uppercase());
            done = true;
        } else {
            out.push(c);
        }
    }
    out
}

/// Which pass an operation was drawn in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassKind {
    Char,
    Token,
    Typical,
}

impl PassKind {
    pub fn name(self) -> &'static str {
        match self {
            PassKind::Char => "char",
            PassKind::Token => "token",
            PassKind::Typical => "typical",
        }
    }
}

/// One scheduled operation, recorded at draw time (an op that later
/// turns out inapplicable is still logged, keeping the per-draw
/// distribution accounting exact). For typical-error firings `op` is
/// the rule id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpEntry {
    pub pass: PassKind,
    pub op: String,
    pub token_index: usize,
}

/// Result of noising one sentence. The clean side is always
/// byte-identical to the input.
#[derive(Debug, Clone)]
pub struct NoiseOutcome {
    pub noisy: Sentence,
    pub clean: Sentence,
    pub ops: Vec<OpEntry>,
}

/// A noise profile compiled against its providers and rule table,
/// reusable across sentences and shareable across workers.
pub struct Noiser<'a> {
    profile: &'a NoiseProfile,
    providers: &'a Providers,
    rules: &'a [TypicalErrorRule],
    alphabet: Vec<char>,
    char_cum: [f64; 5],
    token_cum: [f64; 6],
}

impl<'a> Noiser<'a> {
    pub fn new(
        profile: &'a NoiseProfile,
        providers: &'a Providers,
        rules: &'a [TypicalErrorRule],
    ) -> Result<Noiser<'a>> {
        let (needs_lexicon, needs_morph) = profile.required_providers();
        if needs_lexicon && providers.lexicon.is_none() {
            return Err(Error::Provider(
                "profile uses sub_aspell/ins but no dictionary lexicon is loaded".into(),
            ));
        }
        if needs_morph && providers.morph.is_none() {
            return Err(Error::Provider(
                "profile uses sub_morph but no morphological lexicon is loaded".into(),
            ));
        }
        Ok(Noiser {
            profile,
            providers,
            rules,
            alphabet: profile.alphabet.chars().collect(),
            char_cum: cumulative(&profile.char_pass.op_weights),
            token_cum: cumulative(&profile.token_pass.op_weights),
        })
    }

    /// Noise one sentence. Pass order is fixed: character pass, token
    /// pass, typical-error rules.
    pub fn noise_sentence<R: Rng>(&self, clean: &Sentence, rng: &mut R) -> NoiseOutcome {
        let mut ops: Vec<OpEntry> = Vec::new();
        if clean.is_empty() {
            return NoiseOutcome {
                noisy: Sentence::from_tokens(Vec::new()).expect("empty token list is valid"),
                clean: clean.clone(),
                ops,
            };
        }
        let mut tokens: Vec<String> = clean.tokens().to_vec();

        // character pass
        let selected = self.select_positions(
            &tokens,
            self.profile.char_pass.rate_mean,
            self.profile.char_pass.rate_std,
            rng,
        );
        let mut emptied: Vec<usize> = Vec::new();
        for pos in selected {
            let op = CHAR_OPS[weighted_pick(&self.char_cum, rng)];
            ops.push(OpEntry {
                pass: PassKind::Char,
                op: op.name().to_string(),
                token_index: pos,
            });
            if let Some(new_word) = apply_char_op(
                &tokens[pos],
                op,
                &self.alphabet,
                &self.providers.diacritics,
                rng,
            ) {
                if new_word.is_empty() {
                    emptied.push(pos);
                }
                tokens[pos] = new_word;
            }
        }
        for &pos in emptied.iter().rev() {
            tokens.remove(pos);
        }

        // token pass
        let selected = self.select_positions(
            &tokens,
            self.profile.token_pass.rate_mean,
            self.profile.token_pass.rate_std,
            rng,
        );
        let drawn: Vec<(usize, TokenOp)> = selected
            .into_iter()
            .map(|pos| {
                let op = TOKEN_OPS[weighted_pick(&self.token_cum, rng)];
                ops.push(OpEntry {
                    pass: PassKind::Token,
                    op: op.name().to_string(),
                    token_index: pos,
                });
                (pos, op)
            })
            .collect();
        for &(pos, op) in drawn.iter().rev() {
            apply_token_op(&mut tokens, pos, op, self.providers, rng);
        }

        // typical errors
        let noisy = Sentence::from_tokens(tokens).expect("ops never produce malformed tokens");
        let noisy = if self.profile.typical_errors_enabled && !self.rules.is_empty() {
            let (rewritten, firings) = apply_rules(&noisy, self.rules, rng);
            for firing in firings {
                ops.push(OpEntry {
                    pass: PassKind::Typical,
                    op: self.rules[firing.rule_index].rule_id.clone(),
                    token_index: firing.token_index,
                });
            }
            rewritten
        } else {
            noisy
        };

        NoiseOutcome {
            noisy,
            clean: clean.clone(),
            ops,
        }
    }

    /// Sample the pass's error count over the non-punctuation words and
    /// pick that many distinct positions, returned in ascending order.
    fn select_positions<R: Rng>(
        &self,
        tokens: &[String],
        rate_mean: f64,
        rate_std: f64,
        rng: &mut R,
    ) -> Vec<usize> {
        let eligible: Vec<usize> = (0..tokens.len())
            .filter(|&i| !is_punct_token(&tokens[i]))
            .collect();
        if eligible.is_empty() {
            return Vec::new();
        }
        let count = sample_error_count(eligible.len(), rate_mean, rate_std, rng);
        if count == 0 {
            return Vec::new();
        }
        let mut picked: Vec<usize> = rand::seq::index::sample(rng, eligible.len(), count)
            .into_iter()
            .map(|i| eligible[i])
            .collect();
        picked.sort_unstable();
        picked
    }
}

/// One-shot convenience wrapper around [`Noiser`].
pub fn noise_sentence<R: Rng>(
    clean: &Sentence,
    profile: &NoiseProfile,
    providers: &Providers,
    rules: &[TypicalErrorRule],
    rng: &mut R,
) -> Result<NoiseOutcome> {
    Ok(Noiser::new(profile, providers, rules)?.noise_sentence(clean, rng))
}

fn cumulative<const N: usize>(weights: &[f64; N]) -> [f64; N] {
    let mut cum = [0.0; N];
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        cum[i] = acc;
    }
    cum[N - 1] = 1.0;
    cum
}

fn weighted_pick<R: Rng>(cumulative: &[f64], rng: &mut R) -> usize {
    let x = rng.random::<f64>();
    for (i, &c) in cumulative.iter().enumerate() {
        if x < c {
            return i;
        }
    }
    cumulative.len() - 1
}
