//! Domain-balanced mixing: interleave a noised synthetic stream with
//! the gold stream sampled from the same manifest, on a deterministic
//! r:1 schedule. Output lines are "domain_id<TAB>noisy<TAB>clean";
//! synthetic-slot lines carry a "syn:" domain prefix so the schedule
//! stays auditable, gold lines the bare domain id with noisy == clean.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use geckit_core::corpus::load_domain_manifest;
use geckit_core::noise::{Noiser, RngStream};
use geckit_core::sampler::{mix_streams, sample_domains, MixPlan, MixSlot, Ratio};

use crate::setup::derive_seed;

pub struct MixConfig {
    pub factor: f64,
    pub ratio: Ratio,
    pub count: u64,
    pub seed: u64,
    pub shuffle_buffer: usize,
}

pub fn run_mix<W: Write>(
    manifest: &Path,
    config: &MixConfig,
    noiser: Option<&Noiser<'_>>,
    out: &mut W,
) -> Result<()> {
    let domains = load_domain_manifest(manifest)
        .with_context(|| format!("loading manifest {}", manifest.display()))?;
    if domains.is_empty() {
        bail!("manifest {} lists no domains", manifest.display());
    }
    if !config.ratio.is_zero() && noiser.is_none() {
        bail!("--ratio above 0 needs a noise configuration (--preset or --profile)");
    }
    let mut plan = MixPlan::new(domains, config.factor, config.ratio);
    plan.shuffle_buffer = config.shuffle_buffer;

    let gold = sample_domains(&plan, derive_seed(config.seed, 1))?;
    let synthetic = sample_domains(&plan, derive_seed(config.seed, 2))?;
    let mixed = mix_streams(synthetic, gold, config.ratio);

    for (line_index, (slot, item)) in mixed.take(config.count as usize).enumerate() {
        let (domain_index, sentence) = item?;
        let domain_id = &plan.domains[domain_index].domain_id;
        let clean = sentence.text();
        match slot {
            MixSlot::Gold => {
                writeln!(out, "{domain_id}\t{clean}\t{clean}")?;
            }
            MixSlot::Synthetic => {
                let noiser = noiser.expect("checked above");
                let mut rng = RngStream::for_sentence(config.seed, line_index as u64);
                let outcome = noiser.noise_sentence(&sentence, &mut rng);
                writeln!(out, "syn:{domain_id}\t{}\t{clean}", outcome.noisy.text())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
