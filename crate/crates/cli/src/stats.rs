//! The stats command: aggregate an operation sidecar written by
//! `generate --log-ops` into per-op and per-rule counts and empirical
//! frequencies. One "pass<TAB>op<TAB>count<TAB>frequency" line per op;
//! the standard operations are always listed, even at count zero.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use geckit_core::noise::{CHAR_OPS, TOKEN_OPS};

/// Sidecar path convention: `<tsv>.ops` unless overridden.
pub fn sidecar_path(tsv: &Path) -> PathBuf {
    let mut os = tsv.as_os_str().to_os_string();
    os.push(".ops");
    PathBuf::from(os)
}

pub fn run_stats<W: Write>(tsv: &Path, ops: Option<&Path>, out: &mut W) -> Result<()> {
    let ops_path = ops
        .map(Path::to_path_buf)
        .unwrap_or_else(|| sidecar_path(tsv));
    if !ops_path.exists() {
        bail!(
            "operation sidecar {} not found (generate with --log-ops)",
            ops_path.display()
        );
    }
    let file = File::open(&ops_path).with_context(|| format!("opening {}", ops_path.display()))?;

    let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
    for op in CHAR_OPS {
        counts.insert(("char".into(), op.name().into()), 0);
    }
    for op in TOKEN_OPS {
        counts.insert(("token".into(), op.name().into()), 0);
    }
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(_), Some(pass), Some(op), Some(_)) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            bail!("{}:{}: malformed sidecar line", ops_path.display(), idx + 1);
        };
        *counts
            .entry((pass.to_string(), op.to_string()))
            .or_insert(0) += 1;
    }

    let mut pass_totals: BTreeMap<&str, u64> = BTreeMap::new();
    for ((pass, _), count) in &counts {
        *pass_totals.entry(pass).or_insert(0) += count;
    }
    for ((pass, op), count) in &counts {
        let total = pass_totals[pass.as_str()];
        let frequency = if total == 0 {
            0.0
        } else {
            *count as f64 / total as f64
        };
        writeln!(out, "{pass}\t{op}\t{count}\t{frequency:.6}")?;
    }
    out.flush()?;
    Ok(())
}
