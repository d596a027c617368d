//! The streaming generation pipeline: read sentences, noise them in
//! fixed-size batches (sharded across a worker pool by sentence index),
//! and write "noisy<TAB>clean" pairs in input order. Output is a pure
//! function of the seed, independent of worker count and batch size;
//! memory is bounded by the batch, not the corpus.

use std::io::Write;

use anyhow::{Context, Result};
use geckit_core::corpus::{write_tsv_pair, Sentence};
use geckit_core::noise::{NoiseOutcome, Noiser, RngStream};
use rayon::prelude::*;

pub const DEFAULT_BATCH: usize = 2048;

pub struct GeneratePipeline<'a> {
    pub noiser: &'a Noiser<'a>,
    pub seed: u64,
    pub workers: usize,
    pub batch_size: usize,
}

impl<'a> GeneratePipeline<'a> {
    pub fn new(noiser: &'a Noiser<'a>, seed: u64, workers: usize) -> GeneratePipeline<'a> {
        GeneratePipeline {
            noiser,
            seed,
            workers: workers.max(1),
            batch_size: DEFAULT_BATCH,
        }
    }

    /// Drive the full stream. Returns the number of sentences written.
    pub fn run<I, W, O>(
        &self,
        mut sentences: I,
        out: &mut W,
        mut ops_out: Option<&mut O>,
    ) -> Result<u64>
    where
        I: Iterator<Item = geckit_core::Result<Sentence>>,
        W: Write,
        O: Write,
    {
        let pool = (self.workers > 1)
            .then(|| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(self.workers)
                    .build()
            })
            .transpose()
            .context("building worker pool")?;

        let mut next_index = 0u64;
        let mut batch: Vec<(u64, Sentence)> = Vec::with_capacity(self.batch_size);
        loop {
            batch.clear();
            while batch.len() < self.batch_size {
                match sentences.next() {
                    Some(sentence) => {
                        batch.push((next_index, sentence?));
                        next_index += 1;
                    }
                    None => break,
                }
            }
            if batch.is_empty() {
                break;
            }
            let outcomes: Vec<NoiseOutcome> = match &pool {
                Some(pool) => pool.install(|| {
                    batch
                        .par_iter()
                        .map(|(index, sentence)| self.noise_one(*index, sentence))
                        .collect()
                }),
                None => batch
                    .iter()
                    .map(|(index, sentence)| self.noise_one(*index, sentence))
                    .collect(),
            };
            for ((index, _), outcome) in batch.iter().zip(&outcomes) {
                // the noisy sentence is built from tokens, so its raw
                // text is already the canonical space-joined form
                write_tsv_pair(out, outcome.noisy.raw(), &outcome.clean.text())?;
                if let Some(ops) = ops_out.as_mut() {
                    for op in &outcome.ops {
                        writeln!(
                            ops,
                            "{index}\t{}\t{}\t{}",
                            op.pass.name(),
                            op.op,
                            op.token_index
                        )?;
                    }
                }
            }
        }
        out.flush()?;
        if let Some(ops) = ops_out.as_mut() {
            ops.flush()?;
        }
        Ok(next_index)
    }

    fn noise_one(&self, index: u64, sentence: &Sentence) -> NoiseOutcome {
        let mut rng = RngStream::for_sentence(self.seed, index);
        self.noiser.noise_sentence(sentence, &mut rng)
    }
}
