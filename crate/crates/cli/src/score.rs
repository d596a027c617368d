//! The score command: M2 gold file + hypothesis file (+ optional
//! domain sidecar) in, human-readable report on stdout and an optional
//! JSON report file out.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use geckit_core::corpus::m2::parse_m2;
use geckit_core::corpus::{Sentence, Tokenizer};
use geckit_core::scorer::{score_corpus_with, ScoreBlock, ScoreOptions, ScoreReport};

pub struct ScoreConfig {
    pub beta: f64,
    pub max_unchanged: usize,
    pub case_sensitive: bool,
}

pub fn run_score<W: Write>(
    gold_path: &Path,
    hypothesis_path: &Path,
    domains_path: Option<&Path>,
    config: &ScoreConfig,
    json_out: Option<&Path>,
    out: &mut W,
) -> Result<ScoreReport> {
    let blocks = parse_m2(gold_path)?;
    let hypotheses = read_hypotheses(hypothesis_path)?;
    if blocks.len() != hypotheses.len() {
        bail!(
            "gold file has {} blocks but hypothesis file has {} lines",
            blocks.len(),
            hypotheses.len()
        );
    }
    let domains: Vec<Option<String>> = match domains_path {
        Some(path) => {
            let ids = read_lines(path)?;
            if ids.len() != blocks.len() {
                bail!(
                    "domain sidecar has {} lines but gold file has {} blocks",
                    ids.len(),
                    blocks.len()
                );
            }
            ids.into_iter().map(Some).collect()
        }
        None => vec![None; blocks.len()],
    };

    let score_blocks: Vec<ScoreBlock> = blocks
        .into_iter()
        .zip(domains)
        .map(|(block, domain)| ScoreBlock {
            source: block.sentence,
            annotations: block.annotations,
            domain,
        })
        .collect();
    let report = score_corpus_with(
        &score_blocks,
        &hypotheses,
        &ScoreOptions {
            beta: config.beta,
            max_unchanged_words: config.max_unchanged,
            case_sensitive: config.case_sensitive,
        },
    )?;

    out.write_all(format_report(&report).as_bytes())?;
    out.flush()?;
    if let Some(path) = json_out {
        let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
        serde_json::to_writer_pretty(file, &report)?;
    }
    Ok(report)
}

fn read_hypotheses(path: &Path) -> Result<Vec<Sentence>> {
    let tokenizer = Tokenizer::whitespace();
    read_lines(path)?
        .into_iter()
        .enumerate()
        .map(|(i, line)| {
            if line.contains('\t') {
                bail!("{}:{}: hypothesis contains a tab", path.display(), i + 1);
            }
            Ok(Sentence::from_line(&line, &tokenizer))
        })
        .collect()
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    BufReader::new(file)
        .lines()
        .map(|l| l.map_err(Into::into))
        .collect()
}

/// Display rounding is half-up, full precision lives in the JSON report.
fn round_half_up(x: f64, digits: u32) -> f64 {
    let scale = 10f64.powi(digits as i32);
    (x * scale + 0.5).floor() / scale
}

fn fmt4(x: f64) -> String {
    format!("{:.4}", round_half_up(x, 4))
}

pub fn format_report(report: &ScoreReport) -> String {
    let mut text = String::new();
    let m = &report.overall;
    text.push_str(&format!("TP: {}  FP: {}  FN: {}\n", m.tp, m.fp, m.fn_count));
    text.push_str(&format!("Precision: {}\n", fmt4(m.precision)));
    text.push_str(&format!("Recall:    {}\n", fmt4(m.recall)));
    text.push_str(&format!("F{}:      {}\n", report.beta, fmt4(m.f_beta)));
    if !report.per_domain.is_empty() {
        text.push_str("\nPer-domain:\n");
        for (domain, m) in &report.per_domain {
            text.push_str(&format!(
                "  {:<8} TP {:>6}  FP {:>6}  FN {:>6}  P {}  R {}  F{} {}\n",
                domain,
                m.tp,
                m.fp,
                m.fn_count,
                fmt4(m.precision),
                fmt4(m.recall),
                report.beta,
                fmt4(m.f_beta),
            ));
        }
    }
    text
}
