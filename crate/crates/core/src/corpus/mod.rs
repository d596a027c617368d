//! Reading and writing the corpus formats used across the pipeline:
//! plain-text corpora (one sentence per line), tab-separated parallel
//! pairs, domain manifests, and the M2 annotation format (see [`m2`]).

pub mod m2;

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use unicode_normalization::{is_nfc, UnicodeNormalization};

use crate::error::{Error, Result};

/// A tokenized sentence together with the raw line it came from.
///
/// Invariants: no token is empty, no token contains whitespace, and
/// re-tokenizing the space-joined token list yields the same tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<String>,
    raw: String,
}

impl Sentence {
    /// Tokenize a raw line with the given policy.
    pub fn from_line(line: &str, tokenizer: &Tokenizer) -> Sentence {
        Sentence {
            tokens: tokenizer.tokenize(line),
            raw: line.to_string(),
        }
    }

    /// Build a sentence from pre-split tokens. Rejects empty tokens and
    /// tokens containing whitespace.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Sentence> {
        for t in &tokens {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::IllegalText(t.clone()));
            }
        }
        let raw = tokens.join(" ");
        Ok(Sentence { tokens, raw })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    /// Tokens joined by single spaces.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Tokenization policy: NFC normalization, whitespace splitting and
/// (optionally) detaching leading/trailing punctuation into separate
/// single-character tokens.
#[derive(Debug, Clone, Copy)]
pub struct Tokenizer {
    pub detach_punctuation: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer {
            detach_punctuation: true,
        }
    }
}

impl Tokenizer {
    /// Plain whitespace splitting, for input that is already tokenized
    /// (M2 source lines, hypothesis files).
    pub fn whitespace() -> Tokenizer {
        Tokenizer {
            detach_punctuation: false,
        }
    }

    pub fn tokenize(&self, line: &str) -> Vec<String> {
        let line: String = if is_nfc(line) {
            line.to_string()
        } else {
            line.nfc().collect()
        };
        let mut tokens = Vec::new();
        for chunk in line.split_whitespace() {
            if self.detach_punctuation {
                detach_chunk(chunk, &mut tokens);
            } else {
                tokens.push(chunk.to_string());
            }
        }
        tokens
    }
}

/// Splits leading and trailing punctuation characters of a whitespace
/// chunk into their own tokens; interior punctuation stays attached.
fn detach_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut start = 0;
    let mut end = chars.len();
    while start < end && is_punctuation(chars[start]) {
        start += 1;
    }
    while end > start && is_punctuation(chars[end - 1]) {
        end -= 1;
    }
    for &c in &chars[..start] {
        out.push(c.to_string());
    }
    if start < end {
        out.push(chars[start..end].iter().collect());
    }
    for &c in &chars[end..] {
        out.push(c.to_string());
    }
}

/// Punctuation characters that get detached at token boundaries:
/// ASCII punctuation plus common typographic marks.
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'
                | '\u{2019}'
                | '\u{201A}'
                | '\u{201C}'
                | '\u{201D}'
                | '\u{201E}'
                | '\u{2039}'
                | '\u{203A}'
                | '\u{00AB}'
                | '\u{00BB}'
                | '\u{2013}'
                | '\u{2014}'
                | '\u{2026}'
                | '\u{00A1}'
                | '\u{00BF}'
                | '\u{00B7}'
        )
}

/// True if the token contains no alphanumeric character at all.
pub fn is_punct_token(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}

/// Streaming reader over a one-sentence-per-line corpus. Memory use is
/// bounded by the longest line, not the file size.
pub struct SentenceReader<R: BufRead> {
    inner: R,
    tokenizer: Tokenizer,
    path: PathBuf,
    line_no: u64,
    buf: Vec<u8>,
}

impl SentenceReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>, tokenizer: Tokenizer) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(SentenceReader {
            inner: BufReader::new(file),
            tokenizer,
            path: path.to_path_buf(),
            line_no: 0,
            buf: Vec::new(),
        })
    }
}

impl<R: BufRead> SentenceReader<R> {
    pub fn from_reader(inner: R, tokenizer: Tokenizer, name: impl Into<PathBuf>) -> Self {
        SentenceReader {
            inner,
            tokenizer,
            path: name.into(),
            line_no: 0,
            buf: Vec::new(),
        }
    }
}

impl<R: BufRead> Iterator for SentenceReader<R> {
    type Item = Result<Sentence>;

    fn next(&mut self) -> Option<Self::Item> {
        self.buf.clear();
        match self.inner.read_until(b'\n', &mut self.buf) {
            Ok(0) => None,
            Ok(_) => {
                self.line_no += 1;
                if self.buf.last() == Some(&b'\n') {
                    self.buf.pop();
                    if self.buf.last() == Some(&b'\r') {
                        self.buf.pop();
                    }
                }
                match std::str::from_utf8(&self.buf) {
                    Ok(line) => Some(Ok(Sentence::from_line(line, &self.tokenizer))),
                    Err(_) => Some(Err(Error::InvalidUtf8 {
                        path: self.path.clone(),
                        line: self.line_no,
                    })),
                }
            }
            Err(e) => Some(Err(Error::io(self.path.clone(), e))),
        }
    }
}

/// Open a plain-text corpus as a stream of sentences.
pub fn read_sentences(
    path: impl AsRef<Path>,
    tokenizer: Tokenizer,
) -> Result<SentenceReader<BufReader<File>>> {
    SentenceReader::open(path, tokenizer)
}

/// Write one "noisy<TAB>clean" pair. Tabs and newlines inside either
/// side are rejected rather than silently corrupting the format.
pub fn write_tsv_pair<W: Write>(w: &mut W, noisy: &str, clean: &str) -> Result<()> {
    for side in [noisy, clean] {
        if side.contains('\t') || side.contains('\n') {
            return Err(Error::IllegalText(side.to_string()));
        }
    }
    writeln!(w, "{noisy}\t{clean}").map_err(|e| Error::io("<output>", e))
}

/// One domain of a multi-domain corpus: an id, a corpus file and its
/// sentence count (validated on load).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainCorpus {
    pub domain_id: String,
    pub path: PathBuf,
    pub size: u64,
}

/// Load a "domain_id<TAB>path" manifest. Relative corpus paths are
/// resolved against the manifest's directory; sizes are computed by
/// counting lines. Duplicate domain ids and missing files are errors.
pub fn load_domain_manifest(path: impl AsRef<Path>) -> Result<Vec<DomainCorpus>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut domains: Vec<DomainCorpus> = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, rel) = line.split_once('\t').ok_or_else(|| {
            Error::Manifest(format!(
                "{}:{}: expected \"domain_id<TAB>path\"",
                path.display(),
                idx + 1
            ))
        })?;
        let id = id.trim();
        if id.is_empty() {
            return Err(Error::Manifest(format!(
                "{}:{}: empty domain id",
                path.display(),
                idx + 1
            )));
        }
        if domains.iter().any(|d| d.domain_id == id) {
            return Err(Error::Manifest(format!("duplicate domain id {id:?}")));
        }
        let corpus_path = base.join(rel.trim());
        let size = count_lines(&corpus_path)?;
        if size == 0 {
            log::warn!("domain {id}: corpus {} is empty", corpus_path.display());
        }
        domains.push(DomainCorpus {
            domain_id: id.to_string(),
            path: corpus_path,
            size,
        });
    }
    Ok(domains)
}

fn count_lines(path: &Path) -> Result<u64> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut count = 0u64;
    let mut last_byte = b'\n';
    loop {
        let buf = reader.fill_buf().map_err(|e| Error::io(path, e))?;
        if buf.is_empty() {
            break;
        }
        count += buf.iter().filter(|&&b| b == b'\n').count() as u64;
        last_byte = buf[buf.len() - 1];
        let len = buf.len();
        reader.consume(len);
    }
    if last_byte != b'\n' {
        count += 1; // final line without trailing newline
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn toks(line: &str) -> Vec<String> {
        Tokenizer::default().tokenize(line)
    }

    #[test]
    fn whitespace_tokenization() {
        assert_eq!(toks("Ahoj , světe ."), vec!["Ahoj", ",", "světe", "."]);
    }

    #[test]
    fn punctuation_detachment() {
        assert_eq!(toks("Ahoj, světe."), vec!["Ahoj", ",", "světe", "."]);
        assert_eq!(toks("„Ano!“"), vec!["„", "Ano", "!", "“"]);
        // interior punctuation stays attached
        assert_eq!(
            toks("Praha-východ a 3,14"),
            vec!["Praha-východ", "a", "3,14"]
        );
    }

    #[test]
    fn double_space_collapses_but_raw_is_kept() {
        let s = Sentence::from_line("a  b", &Tokenizer::default());
        assert_eq!(s.tokens(), ["a", "b"]);
        assert_eq!(s.raw(), "a  b");
        // idempotence: re-tokenizing the joined text gives the same tokens
        assert_eq!(toks(&s.text()), s.tokens());
    }

    #[test]
    fn empty_input_yields_empty_stream() {
        let r = SentenceReader::from_reader(Cursor::new(""), Tokenizer::default(), "<mem>");
        assert_eq!(r.count(), 0);
    }

    #[test]
    fn reader_reports_utf8_error_with_line_number() {
        let data: Vec<u8> = b"ok line\n\xff\xfe broken\n".to_vec();
        let mut r = SentenceReader::from_reader(Cursor::new(data), Tokenizer::default(), "<mem>");
        assert!(r.next().unwrap().is_ok());
        match r.next().unwrap() {
            Err(Error::InvalidUtf8 { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected utf8 error, got {other:?}"),
        }
    }

    #[test]
    fn nfc_normalization_applied() {
        // "e" + combining caron composes to "ě"
        let s = Sentence::from_line("de\u{30c}ti", &Tokenizer::default());
        assert_eq!(s.tokens(), ["děti"]);
    }

    #[test]
    fn tsv_rejects_embedded_tab() {
        let mut out = Vec::new();
        assert!(write_tsv_pair(&mut out, "a\tb", "c").is_err());
        assert!(write_tsv_pair(&mut out, "a", "c").is_ok());
        assert_eq!(out, b"a\tc\n");
    }

    #[test]
    fn manifest_loads_four_domains() {
        let dir = tempfile::tempdir().unwrap();
        for (id, n) in [("NF", 3), ("NWI", 2), ("R", 1), ("SL", 4)] {
            let p = dir.path().join(format!("{id}.txt"));
            std::fs::write(&p, "x\n".repeat(n)).unwrap();
        }
        let manifest = dir.path().join("manifest.tsv");
        std::fs::write(
            &manifest,
            "NF\tNF.txt\nNWI\tNWI.txt\nR\tR.txt\nSL\tSL.txt\n",
        )
        .unwrap();
        let domains = load_domain_manifest(&manifest).unwrap();
        assert_eq!(domains.len(), 4);
        assert_eq!(domains[0].domain_id, "NF");
        assert_eq!(domains[0].size, 3);
        assert_eq!(domains[3].size, 4);
    }

    #[test]
    fn manifest_accepts_empty_corpus_with_size_zero() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("empty.txt"), "").unwrap();
        let manifest = dir.path().join("m.tsv");
        std::fs::write(&manifest, "E\tempty.txt\n").unwrap();
        let domains = load_domain_manifest(&manifest).unwrap();
        assert_eq!(domains[0].size, 0);
    }

    #[test]
    fn manifest_rejects_duplicate_domain() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "x\n").unwrap();
        let manifest = dir.path().join("m.tsv");
        std::fs::write(&manifest, "NF\ta.txt\nNF\ta.txt\n").unwrap();
        assert!(matches!(
            load_domain_manifest(&manifest),
            Err(Error::Manifest(_))
        ));
    }

    #[test]
    fn manifest_rejects_missing_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("m.tsv");
        std::fs::write(&manifest, "NF\tnope.txt\n").unwrap();
        assert!(load_domain_manifest(&manifest).is_err());
    }

    #[test]
    fn count_lines_without_trailing_newline() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        std::fs::write(&p, "a\nb\nc").unwrap();
        assert_eq!(count_lines(&p).unwrap(), 3);
    }

    proptest! {
        // Tokenization is idempotent and produces clean tokens.
        #[test]
        fn tokenize_invariants(line in "[ a-zA-Zěščřžýáíéůú.,!?()\"-]{0,60}") {
            let tokens = toks(&line);
            for t in &tokens {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(char::is_whitespace));
            }
            let rejoined = tokens.join(" ");
            prop_assert_eq!(toks(&rejoined), tokens);
        }
    }
}
