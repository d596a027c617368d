//! The M2 annotation exchange format: blocks of one "S" source line
//! followed by zero or more "A" edit lines, separated by blank lines.
//!
//! ```text
//! S A dog .
//! A 0 1|||Det|||The|||REQUIRED|||-NONE-|||0
//! ```
//!
//! A noop annotation ("annotator says the sentence is correct") is
//! written with the conventional `-1 -1` span and `-NONE-` replacement;
//! on parse both `-1 -1` and `0 0` noop spans are accepted, as are
//! blocks with no A-lines at all.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::corpus::{Sentence, Tokenizer};
use crate::error::{Error, Result};

pub const NOOP_TYPE: &str = "noop";

/// One annotator edit: replace source tokens `[span_start, span_end)`
/// with `replacement`. `span_start == span_end` encodes an insertion
/// before `span_start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldAnnotation {
    pub span_start: usize,
    pub span_end: usize,
    pub replacement: String,
    pub error_type: String,
    pub annotator_id: u32,
}

impl GoldAnnotation {
    pub fn is_noop(&self) -> bool {
        self.error_type == NOOP_TYPE
    }
}

/// One sentence with all of its annotator edits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct M2Block {
    pub sentence: Sentence,
    pub annotations: Vec<GoldAnnotation>,
}

impl M2Block {
    /// Annotations grouped by annotator id. A block with no annotations
    /// is treated as a single annotator 0 with an empty edit set.
    pub fn by_annotator(&self) -> BTreeMap<u32, Vec<&GoldAnnotation>> {
        let mut map: BTreeMap<u32, Vec<&GoldAnnotation>> = BTreeMap::new();
        for a in &self.annotations {
            map.entry(a.annotator_id).or_default().push(a);
        }
        if map.is_empty() {
            map.insert(0, Vec::new());
        }
        map
    }
}

pub fn parse_m2(path: impl AsRef<Path>) -> Result<Vec<M2Block>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_m2_reader(BufReader::new(file), &path.display().to_string())
}

pub fn parse_m2_str(text: &str) -> Result<Vec<M2Block>> {
    parse_m2_reader(text.as_bytes(), "<memory>")
}

pub fn parse_m2_reader<R: Read>(reader: R, file: &str) -> Result<Vec<M2Block>> {
    let err = |line: u64, msg: String| Error::M2Parse {
        file: file.to_string(),
        line,
        msg,
    };
    let mut blocks = Vec::new();
    let mut current: Option<M2Block> = None;
    let tokenizer = Tokenizer::whitespace();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|e| Error::io(file, e))?;
        if line.trim().is_empty() {
            if let Some(block) = current.take() {
                blocks.push(block);
            }
            continue;
        }
        if let Some(rest) = line
            .strip_prefix("S ")
            .or(if line == "S" { Some("") } else { None })
        {
            if let Some(block) = current.take() {
                blocks.push(block);
            }
            current = Some(M2Block {
                sentence: Sentence::from_line(rest, &tokenizer),
                annotations: Vec::new(),
            });
        } else if let Some(rest) = line.strip_prefix("A ") {
            let block = current
                .as_mut()
                .ok_or_else(|| err(line_no, "A-line before any S-line".into()))?;
            let annotation =
                parse_a_line(rest, block.sentence.len()).map_err(|msg| err(line_no, msg))?;
            block.annotations.push(annotation);
        } else {
            return Err(err(line_no, format!("expected S-line or A-line: {line:?}")));
        }
    }
    if let Some(block) = current.take() {
        blocks.push(block);
    }
    Ok(blocks)
}

fn parse_a_line(rest: &str, token_count: usize) -> std::result::Result<GoldAnnotation, String> {
    let fields: Vec<&str> = rest.split("|||").collect();
    if fields.len() < 6 {
        return Err(format!(
            "expected 6 |||-separated fields, found {}",
            fields.len()
        ));
    }
    let mut span = fields[0].split_whitespace();
    let start: i64 = span
        .next()
        .ok_or("missing span start")?
        .parse()
        .map_err(|_| "span start is not an integer".to_string())?;
    let end: i64 = span
        .next()
        .ok_or("missing span end")?
        .parse()
        .map_err(|_| "span end is not an integer".to_string())?;
    let error_type = fields[1].to_string();
    let replacement = if fields[2] == "-NONE-" {
        String::new()
    } else {
        fields[2].to_string()
    };
    let annotator_id: u32 = fields[fields.len() - 1]
        .trim()
        .parse()
        .map_err(|_| "annotator id is not an integer".to_string())?;
    let (span_start, span_end) = if error_type == NOOP_TYPE {
        match (start, end) {
            (-1, -1) | (0, 0) => (0, 0),
            _ => return Err(format!("noop annotation with span {start} {end}")),
        }
    } else {
        if start < 0 || end < start || end as usize > token_count {
            return Err(format!(
                "span {start} {end} out of range for {token_count} tokens"
            ));
        }
        (start as usize, end as usize)
    };
    Ok(GoldAnnotation {
        span_start,
        span_end,
        replacement,
        error_type,
        annotator_id,
    })
}

pub fn write_m2<W: Write>(w: &mut W, blocks: &[M2Block]) -> Result<()> {
    let io_err = |e| Error::io("<output>", e);
    for block in blocks {
        for annotation in &block.annotations {
            validate_annotation(annotation, block.sentence.len())?;
        }
        writeln!(w, "S {}", block.sentence.text()).map_err(io_err)?;
        for a in &block.annotations {
            if a.is_noop() {
                writeln!(
                    w,
                    "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||{}",
                    a.annotator_id
                )
                .map_err(io_err)?;
            } else {
                writeln!(
                    w,
                    "A {} {}|||{}|||{}|||REQUIRED|||-NONE-|||{}",
                    a.span_start, a.span_end, a.error_type, a.replacement, a.annotator_id
                )
                .map_err(io_err)?;
            }
        }
        writeln!(w).map_err(io_err)?;
    }
    Ok(())
}

pub fn write_m2_file(path: impl AsRef<Path>, blocks: &[M2Block]) -> Result<()> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_m2(&mut file, blocks)
}

fn validate_annotation(a: &GoldAnnotation, token_count: usize) -> Result<()> {
    if !a.is_noop() && (a.span_start > a.span_end || a.span_end > token_count) {
        return Err(Error::M2Parse {
            file: "<write>".into(),
            line: 0,
            msg: format!(
                "annotation span {} {} invalid for {} tokens",
                a.span_start, a.span_end, token_count
            ),
        });
    }
    Ok(())
}
