//! Helpers shared by the CLI and acceptance test suites.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_geckit"))
}

pub fn run_cli(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawning geckit")
}

pub fn stdout_of(output: &Output) -> String {
    assert!(
        output.status.success(),
        "geckit failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).expect("utf8 stdout")
}

/// A small Czech-flavored vocabulary with dictionary neighborhoods.
pub const VOCAB: [&str; 24] = [
    "pes", "psa", "psi", "psy", "les", "ves", "den", "sen", "ten", "ty", "kočka", "kočky", "kočku",
    "plot", "plotem", "okno", "okna", "voda", "vodu", "město", "města", "slovo", "slova", "dům",
];

/// Deterministic pseudo-Czech word list of exactly `n` unique forms.
pub fn synthetic_forms(n: usize) -> Vec<(String, u64)> {
    let onsets = [
        "b", "c", "č", "d", "h", "j", "k", "l", "m", "n", "p", "r", "ř", "s", "š", "t", "v", "z",
        "ž", "st",
    ];
    let vowels = ["a", "e", "i", "o", "u", "á", "é", "í", "ů", "y"];
    let codas = ["", "n", "m", "l", "k", "t", "s", "ch", "st", "r"];
    let suffixes = ["", "ka", "ny", "vá", "la", "em", "ou", "mi", "ho", "ti"];
    let mut seen = std::collections::HashSet::new();
    let mut forms = Vec::with_capacity(n);
    'outer: for extra in suffixes {
        for o1 in onsets {
            for v1 in vowels {
                for c in codas {
                    for v2 in vowels {
                        let form = format!("{o1}{v1}{c}{v2}{extra}");
                        if seen.insert(form.clone()) {
                            forms.push((form, (forms.len() % 97 + 1) as u64));
                            if forms.len() >= n {
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(forms.len() >= n, "only {} forms generated", forms.len());
    forms
}

pub fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).expect("writing test file");
    path
}

/// Lexicon file over VOCAB with descending frequencies.
pub fn write_vocab_lexicon(dir: &Path) -> PathBuf {
    let content: String = VOCAB
        .iter()
        .enumerate()
        .map(|(i, w)| format!("{w}\t{}\n", 100 - i))
        .collect();
    write_file(dir, "lexicon.tsv", &content)
}

/// Morphological lexicon grouping a few VOCAB paradigms.
pub fn write_vocab_morph(dir: &Path) -> PathBuf {
    let pairs = [
        ("pes", "pes"),
        ("psa", "pes"),
        ("psi", "pes"),
        ("psy", "pes"),
        ("kočka", "kočka"),
        ("kočky", "kočka"),
        ("kočku", "kočka"),
        ("okno", "okno"),
        ("okna", "okno"),
        ("město", "město"),
        ("města", "město"),
        ("slovo", "slovo"),
        ("slova", "slovo"),
        ("voda", "voda"),
        ("vodu", "voda"),
    ];
    let content: String = pairs
        .iter()
        .map(|(form, lemma)| format!("{form}\t{lemma}\n"))
        .collect();
    write_file(dir, "morph.tsv", &content)
}

/// A corpus of `n` pre-tokenized sentences, `words_per_sentence` tokens
/// each, cycled deterministically through VOCAB.
pub fn corpus_lines(n: usize, words_per_sentence: usize) -> String {
    let mut out = String::new();
    for i in 0..n {
        let words: Vec<&str> = (0..words_per_sentence)
            .map(|j| VOCAB[(i * 7 + j * 3 + i * j) % VOCAB.len()])
            .collect();
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    out
}
