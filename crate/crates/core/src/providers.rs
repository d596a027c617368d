//! Substitution candidate sources used by the token-level noising ops:
//! an edit-distance dictionary ([`Lexicon`]), a morphological lexicon
//! mapping forms to their paradigms ([`MorphLexicon`]), and the table
//! of diacritic character variants ([`DiacriticsTable`]).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Optimal-string-alignment Damerau-Levenshtein distance over Unicode
/// scalar values (substitution, insertion, deletion, adjacent swap).
pub fn damerau_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let n = b.len();
    let mut prev2: Vec<usize> = vec![0; n + 1];
    let mut prev: Vec<usize> = (0..=n).collect();
    let mut curr: Vec<usize> = vec![0; n + 1];
    for i in 0..a.len() {
        curr[0] = i + 1;
        for j in 0..n {
            let cost = usize::from(a[i] != b[j]);
            curr[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(curr[j] + 1);
            if i > 0 && j > 0 && a[i] == b[j - 1] && a[i - 1] == b[j] && a[i] != b[j] {
                curr[j + 1] = curr[j + 1].min(prev2[j - 1] + 1);
            }
        }
        std::mem::swap(&mut prev2, &mut prev);
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[n]
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Reusable DP rows so verifying thousands of candidates per lookup
/// allocates nothing.
#[derive(Default)]
struct DistanceScratch {
    prev2: Vec<u32>,
    prev: Vec<u32>,
    curr: Vec<u32>,
}

impl DistanceScratch {
    fn osa_distance(&mut self, a: &[char], b: &[char]) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        let n = b.len();
        self.prev2.clear();
        self.prev2.resize(n + 1, 0);
        self.prev.clear();
        self.prev.extend(0..=n as u32);
        self.curr.clear();
        self.curr.resize(n + 1, 0);
        for (i, &ca) in a.iter().enumerate() {
            self.curr[0] = i as u32 + 1;
            for (j, &cb) in b.iter().enumerate() {
                let cost = u32::from(ca != cb);
                let mut best = (self.prev[j] + cost)
                    .min(self.prev[j + 1] + 1)
                    .min(self.curr[j] + 1);
                if i > 0 && j > 0 && ca == b[j - 1] && a[i - 1] == cb && ca != cb {
                    best = best.min(self.prev2[j - 1] + 1);
                }
                self.curr[j + 1] = best;
            }
            std::mem::swap(&mut self.prev2, &mut self.prev);
            std::mem::swap(&mut self.prev, &mut self.curr);
        }
        self.prev[n] as usize
    }
}

/// A ranked dictionary suggestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suggestion {
    pub form: String,
    pub distance: usize,
    pub frequency: u64,
}

/// Word-form dictionary with optional per-form frequencies, indexed by
/// a precomputed deletion neighborhood so that lookups touch only a
/// handful of candidates instead of scanning the whole lexicon.
///
/// File format: one form per line, optionally "form<TAB>frequency".
pub struct Lexicon {
    forms: Vec<String>,
    folded: Vec<String>,
    folded_chars: Vec<Box<[char]>>,
    freqs: Vec<u64>,
    /// (hash of deletion variant, form id), sorted by hash, with a
    /// bucket offset table over the top hash bits for O(1) probes.
    index: Vec<(u64, u32)>,
    buckets: Vec<u32>,
    max_distance: usize,
    cumulative: Vec<u64>,
}

const BUCKET_BITS: u32 = 20;

pub const DEFAULT_MAX_DISTANCE: usize = 2;

impl Lexicon {
    pub fn load(path: impl AsRef<Path>) -> Result<Lexicon> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (form, freq) = match line.split_once('\t') {
                Some((f, n)) => {
                    let freq = n.trim().parse::<u64>().map_err(|_| {
                        Error::Provider(format!("bad frequency {n:?} for form {f:?}"))
                    })?;
                    (f, freq)
                }
                None => (line, 1),
            };
            entries.push((form.nfc().collect::<String>(), freq));
        }
        Lexicon::from_entries(entries, DEFAULT_MAX_DISTANCE)
    }

    pub fn from_entries(entries: Vec<(String, u64)>, max_distance: usize) -> Result<Lexicon> {
        if entries.is_empty() {
            return Err(Error::Provider("lexicon is empty".into()));
        }
        // duplicate forms collapse into one entry with summed frequency
        let mut forms: Vec<String> = Vec::with_capacity(entries.len());
        let mut freqs: Vec<u64> = Vec::with_capacity(entries.len());
        let mut by_form: HashMap<String, usize> = HashMap::with_capacity(entries.len());
        for (form, freq) in entries {
            match by_form.get(&form) {
                Some(&i) => freqs[i] = freqs[i].saturating_add(freq),
                None => {
                    by_form.insert(form.clone(), forms.len());
                    forms.push(form);
                    freqs.push(freq);
                }
            }
        }
        let folded: Vec<String> = forms.iter().map(|f| f.to_lowercase()).collect();
        let folded_chars: Vec<Box<[char]>> = folded
            .iter()
            .map(|f| f.chars().collect::<Vec<char>>().into_boxed_slice())
            .collect();
        let mut index = Vec::new();
        let mut variants = Vec::new();
        for (id, form) in folded.iter().enumerate() {
            variants.clear();
            deletion_variants(form, max_distance, &mut variants);
            for v in &variants {
                index.push((fnv1a(v.as_bytes()), id as u32));
            }
        }
        index.sort_unstable();
        index.dedup();
        let mut buckets = vec![0u32; (1usize << BUCKET_BITS) + 1];
        for &(hash, _) in &index {
            buckets[(hash >> (64 - BUCKET_BITS)) as usize + 1] += 1;
        }
        for i in 1..buckets.len() {
            buckets[i] += buckets[i - 1];
        }
        let mut cumulative = Vec::with_capacity(freqs.len());
        let mut total = 0u64;
        for &f in &freqs {
            total += f.max(1);
            cumulative.push(total);
        }
        Ok(Lexicon {
            forms,
            folded,
            folded_chars,
            freqs,
            index,
            buckets,
            max_distance,
            cumulative,
        })
    }

    /// Ids of all forms whose deletion neighborhood contains `variant`.
    fn probe(&self, variant: &str, out: &mut Vec<u32>) {
        let hash = fnv1a(variant.as_bytes());
        let bucket = (hash >> (64 - BUCKET_BITS)) as usize;
        let slice = &self.index[self.buckets[bucket] as usize..self.buckets[bucket + 1] as usize];
        let start = slice.partition_point(|&(h, _)| h < hash);
        for &(h, id) in &slice[start..] {
            if h != hash {
                break;
            }
            out.push(id);
        }
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.forms.iter().map(String::as_str)
    }

    /// Lexicon forms within Damerau-Levenshtein distance `max_distance`
    /// of the case-folded query, the query itself excluded, ranked by
    /// (distance, frequency descending, form).
    pub fn suggest(&self, word: &str, max_distance: usize) -> Result<Vec<Suggestion>> {
        self.check_distance(max_distance)?;
        let query = word.to_lowercase();
        let qchars: Vec<char> = query.chars().collect();
        let ids = self.candidate_ids(&query, max_distance);
        let mut scratch = DistanceScratch::default();
        let ranked = self.verify_and_rank(&query, &qchars, &ids, max_distance, &mut scratch);
        Ok(ranked
            .into_iter()
            .map(|(distance, id)| self.suggestion(distance, id))
            .collect())
    }

    /// The first `k` entries of [`Lexicon::suggest`], computed without
    /// materializing the whole neighborhood: distance-1 candidates are
    /// complete after probing single-deletion variants, so the much
    /// larger two-deletion probe only runs when they cannot fill `k`.
    pub fn suggest_top_k(
        &self,
        word: &str,
        max_distance: usize,
        k: usize,
    ) -> Result<Vec<Suggestion>> {
        self.check_distance(max_distance)?;
        if k == 0 {
            return Ok(Vec::new());
        }
        let query = word.to_lowercase();
        let qchars: Vec<char> = query.chars().collect();
        let mut scratch = DistanceScratch::default();
        if max_distance > 1 {
            let ids = self.candidate_ids(&query, 1);
            let mut close = self.verify_and_rank(&query, &qchars, &ids, 1, &mut scratch);
            if close.len() >= k {
                close.truncate(k);
                return Ok(close
                    .into_iter()
                    .map(|(distance, id)| self.suggestion(distance, id))
                    .collect());
            }
        }
        let ids = self.candidate_ids(&query, max_distance);
        let mut ranked = self.verify_and_rank(&query, &qchars, &ids, max_distance, &mut scratch);
        ranked.truncate(k);
        Ok(ranked
            .into_iter()
            .map(|(distance, id)| self.suggestion(distance, id))
            .collect())
    }

    fn check_distance(&self, max_distance: usize) -> Result<()> {
        if max_distance > self.max_distance {
            return Err(Error::Provider(format!(
                "suggest distance {max_distance} exceeds index distance {}",
                self.max_distance
            )));
        }
        Ok(())
    }

    fn suggestion(&self, distance: usize, id: u32) -> Suggestion {
        Suggestion {
            form: self.forms[id as usize].clone(),
            distance,
            frequency: self.freqs[id as usize],
        }
    }

    fn candidate_ids(&self, query: &str, deletes: usize) -> Vec<u32> {
        let mut variants = Vec::new();
        deletion_variants(query, deletes, &mut variants);
        let mut ids = Vec::new();
        for v in &variants {
            self.probe(v, &mut ids);
        }
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Verify true distances and return (distance, id) sorted by
    /// (distance, frequency descending, form).
    fn verify_and_rank(
        &self,
        query: &str,
        qchars: &[char],
        ids: &[u32],
        max_distance: usize,
        scratch: &mut DistanceScratch,
    ) -> Vec<(usize, u32)> {
        let mut hits: Vec<(usize, u32)> = Vec::new();
        for &id in ids {
            let candidate = &self.folded_chars[id as usize];
            if qchars.len().abs_diff(candidate.len()) > max_distance {
                continue;
            }
            if self.folded[id as usize] == query {
                continue;
            }
            let distance = scratch.osa_distance(qchars, candidate);
            if distance <= max_distance {
                hits.push((distance, id));
            }
        }
        hits.sort_by(|&(da, ia), &(db, ib)| {
            da.cmp(&db)
                .then(self.freqs[ib as usize].cmp(&self.freqs[ia as usize]))
                .then(self.forms[ia as usize].cmp(&self.forms[ib as usize]))
        });
        hits
    }

    /// Draw a form proportionally to its frequency (used as the
    /// insertion-word source of the token "ins" operation).
    pub fn sample_weighted<R: Rng>(&self, rng: &mut R) -> &str {
        let total = *self.cumulative.last().expect("non-empty lexicon");
        let x = rng.random_range(0..total);
        let idx = self.cumulative.partition_point(|&c| c <= x);
        &self.forms[idx]
    }
}

/// All strings obtainable from `word` by deleting up to `max_deletes`
/// characters (including the word itself).
fn deletion_variants(word: &str, max_deletes: usize, out: &mut Vec<String>) {
    out.push(word.to_string());
    if max_deletes == 0 {
        return;
    }
    let chars: Vec<char> = word.chars().collect();
    let mut seen = std::collections::HashSet::new();
    let mut frontier: Vec<Vec<char>> = vec![chars];
    for _ in 0..max_deletes {
        let mut next = Vec::new();
        for base in &frontier {
            if base.is_empty() {
                continue;
            }
            for skip in 0..base.len() {
                let mut v = Vec::with_capacity(base.len() - 1);
                v.extend_from_slice(&base[..skip]);
                v.extend_from_slice(&base[skip + 1..]);
                let s: String = v.iter().collect();
                if seen.insert(s.clone()) {
                    out.push(s);
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
}

/// Re-apply the casing pattern of `pattern` to `target`: all-caps maps
/// to all-caps, leading capital maps to a capitalized form, anything
/// else leaves the target as stored in the lexicon.
pub fn transfer_casing(pattern: &str, target: &str) -> String {
    let letters: Vec<char> = pattern.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.is_empty() {
        return target.to_string();
    }
    if letters.iter().all(|c| c.is_uppercase()) && letters.len() > 1 {
        return target.to_uppercase();
    }
    if letters[0].is_uppercase() {
        let mut chars = target.chars();
        match chars.next() {
            Some(first) => first.to_uppercase().chain(chars).collect(),
            None => String::new(),
        }
    } else {
        target.to_string()
    }
}

/// Form-to-lemma and lemma-to-forms mapping loaded from a
/// "form<TAB>lemma" pair file.
pub struct MorphLexicon {
    form_to_lemmas: HashMap<String, Vec<u32>>,
    lemma_forms: Vec<Vec<String>>,
}

impl MorphLexicon {
    pub fn load(path: impl AsRef<Path>) -> Result<MorphLexicon> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (form, lemma) = line.split_once('\t').ok_or_else(|| {
                Error::Provider(format!(
                    "{}:{}: expected \"form<TAB>lemma\"",
                    path.display(),
                    idx + 1
                ))
            })?;
            pairs.push((
                form.trim().nfc().collect::<String>(),
                lemma.trim().nfc().collect::<String>(),
            ));
        }
        Ok(MorphLexicon::from_pairs(pairs))
    }

    pub fn from_pairs(pairs: Vec<(String, String)>) -> MorphLexicon {
        let mut lemma_ids: HashMap<String, u32> = HashMap::new();
        let mut lemma_forms: Vec<Vec<String>> = Vec::new();
        let mut form_to_lemmas: HashMap<String, Vec<u32>> = HashMap::new();
        for (form, lemma) in pairs {
            let id = *lemma_ids.entry(lemma).or_insert_with(|| {
                lemma_forms.push(Vec::new());
                (lemma_forms.len() - 1) as u32
            });
            if !lemma_forms[id as usize].contains(&form) {
                lemma_forms[id as usize].push(form.clone());
            }
            let lemmas = form_to_lemmas.entry(form).or_default();
            if !lemmas.contains(&id) {
                lemmas.push(id);
            }
        }
        for forms in &mut lemma_forms {
            forms.sort();
        }
        MorphLexicon {
            form_to_lemmas,
            lemma_forms,
        }
    }

    pub fn contains(&self, form: &str) -> bool {
        self.form_to_lemmas.contains_key(form)
    }

    /// Union of the paradigms of every lemma of `word`, minus `word`
    /// itself; empty when the word is unknown. Sorted for determinism.
    pub fn morph_forms(&self, word: &str) -> Vec<String> {
        let Some(lemmas) = self.form_to_lemmas.get(word) else {
            return Vec::new();
        };
        let mut out: Vec<String> = Vec::new();
        for &id in lemmas {
            for form in &self.lemma_forms[id as usize] {
                if form != word && !out.contains(form) {
                    out.push(form.clone());
                }
            }
        }
        out.sort();
        out
    }
}

/// Groups of characters that differ only in diacritics. Folding any
/// group member yields the group's base (first) character.
pub struct DiacriticsTable {
    by_char: HashMap<char, usize>,
    groups: Vec<Vec<char>>,
}

impl DiacriticsTable {
    pub fn from_groups(groups: Vec<Vec<char>>) -> DiacriticsTable {
        let mut by_char = HashMap::new();
        for (i, group) in groups.iter().enumerate() {
            for &c in group {
                by_char.insert(c, i);
            }
        }
        DiacriticsTable { by_char, groups }
    }

    /// The Czech orthography table: a-á, c-č, d-ď, e-é-ě, i-í, n-ň,
    /// o-ó, r-ř, s-š, t-ť, u-ú-ů, y-ý, z-ž.
    pub fn czech() -> DiacriticsTable {
        let groups = [
            "aá", "cč", "dď", "eéě", "ií", "nň", "oó", "rř", "sš", "tť", "uúů", "yý", "zž",
        ];
        DiacriticsTable::from_groups(groups.iter().map(|g| g.chars().collect()).collect())
    }

    /// Diacritic variants of `ch` excluding `ch` itself; empty when the
    /// character has none. Case is preserved.
    pub fn variants(&self, ch: char) -> Vec<char> {
        let lower = lowercase_char(ch);
        let Some(&group) = self.by_char.get(&lower) else {
            return Vec::new();
        };
        let upper = ch.is_uppercase();
        self.groups[group]
            .iter()
            .filter(|&&v| v != lower)
            .map(|&v| if upper { uppercase_char(v) } else { v })
            .collect()
    }

    pub fn has_variants(&self, ch: char) -> bool {
        self.by_char.contains_key(&lowercase_char(ch))
    }

    /// Strip the diacritic: map a character to its group base.
    pub fn fold(&self, ch: char) -> char {
        let lower = lowercase_char(ch);
        match self.by_char.get(&lower) {
            Some(&group) => {
                let base = self.groups[group][0];
                if ch.is_uppercase() {
                    uppercase_char(base)
                } else {
                    base
                }
            }
            None => ch,
        }
    }

    pub fn fold_str(&self, s: &str) -> String {
        s.chars().map(|c| self.fold(c)).collect()
    }
}

fn lowercase_char(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

fn uppercase_char(c: char) -> char {
    c.to_uppercase().next().unwrap_or(c)
}

/// The provider bundle handed to the noising passes. Immutable after
/// load; safe to share across workers.
pub struct Providers {
    pub lexicon: Option<Lexicon>,
    pub morph: Option<MorphLexicon>,
    pub diacritics: DiacriticsTable,
}

impl Providers {
    pub fn new(lexicon: Option<Lexicon>, morph: Option<MorphLexicon>) -> Providers {
        Providers {
            lexicon,
            morph,
            diacritics: DiacriticsTable::czech(),
        }
    }

    pub fn empty() -> Providers {
        Providers::new(None, None)
    }
}
