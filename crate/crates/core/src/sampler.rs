//! Domain-balanced sampling and synthetic/gold stream interleaving.
//!
//! Domains are drawn i.i.d. with probability proportional to
//! `size^factor`; within a domain, sentences cycle endlessly with
//! per-epoch reshuffling through a bounded shuffle buffer. A mix ratio
//! r:1 interleaves r synthetic items per gold item on a deterministic
//! schedule.

use std::fs::File;
use std::io::BufReader;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DomainCorpus, Sentence, SentenceReader, Tokenizer};
use crate::error::{Error, Result};

/// weight_i = size_i^factor / sum_j size_j^factor
pub fn domain_weights(sizes: &[u64], factor: f64) -> Result<Vec<f64>> {
    if sizes.is_empty() {
        return Err(Error::Sampler("no domains".into()));
    }
    if let Some(i) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Sampler(format!(
            "domain {i} has size 0; drop it explicitly before sampling"
        )));
    }
    if !factor.is_finite() || factor < 0.0 {
        return Err(Error::Sampler(format!("factor {factor} must be >= 0")));
    }
    let powered: Vec<f64> = sizes.iter().map(|&s| (s as f64).powf(factor)).collect();
    let total: f64 = powered.iter().sum();
    Ok(powered.into_iter().map(|p| p / total).collect())
}

/// synthetic:gold ratio r = num/den, parsed from "2", "5:1" or "5/2".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Result<Ratio> {
        if den == 0 {
            return Err(Error::Sampler("ratio denominator must be positive".into()));
        }
        Ok(Ratio { num, den })
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }
}

impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Ratio> {
        let bad = || Error::Sampler(format!("cannot parse ratio {s:?} (use N, N:M or N/M)"));
        let (num, den) = match s.split_once([':', '/']) {
            Some((n, d)) => (
                n.trim().parse().map_err(|_| bad())?,
                d.trim().parse().map_err(|_| bad())?,
            ),
            None => (s.trim().parse().map_err(|_| bad())?, 1),
        };
        Ratio::new(num, den)
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

pub const DEFAULT_SHUFFLE_BUFFER: usize = 65_536;

/// Sized domain streams plus the sampling policy.
pub struct MixPlan {
    pub domains: Vec<DomainCorpus>,
    pub factor: f64,
    pub synthetic_ratio: Ratio,
    pub shuffle_buffer: usize,
}

impl MixPlan {
    pub fn new(domains: Vec<DomainCorpus>, factor: f64, synthetic_ratio: Ratio) -> MixPlan {
        MixPlan {
            domains,
            factor,
            synthetic_ratio,
            shuffle_buffer: DEFAULT_SHUFFLE_BUFFER,
        }
    }

    pub fn weights(&self) -> Result<Vec<f64>> {
        let sizes: Vec<u64> = self.domains.iter().map(|d| d.size).collect();
        domain_weights(&sizes, self.factor)
    }
}

/// Endless cycling reader over one corpus: each epoch visits every
/// sentence exactly once, in an order shuffled through a bounded buffer
/// re-seeded per epoch.
struct DomainReader {
    corpus: DomainCorpus,
    seed: u64,
    epoch: u64,
    buffer_capacity: usize,
    buffer: Vec<Sentence>,
    reader: Option<SentenceReader<BufReader<File>>>,
    rng: ChaCha8Rng,
    exhausted: bool,
}

impl DomainReader {
    fn new(corpus: DomainCorpus, seed: u64, buffer_capacity: usize) -> DomainReader {
        DomainReader {
            rng: epoch_rng(seed, &corpus.domain_id, 0),
            corpus,
            seed,
            epoch: 0,
            buffer_capacity: buffer_capacity.max(1),
            buffer: Vec::new(),
            reader: None,
            exhausted: false,
        }
    }

    fn open(&mut self) -> Result<()> {
        self.reader = Some(SentenceReader::open(
            &self.corpus.path,
            Tokenizer::default(),
        )?);
        self.exhausted = false;
        Ok(())
    }

    fn next_sentence(&mut self) -> Result<Sentence> {
        // one extra attempt covers the epoch boundary; if the reopened
        // file still yields nothing the corpus is empty
        for _ in 0..2 {
            if self.reader.is_none() && !self.exhausted {
                self.open()?;
            }
            // keep the buffer full while the file still has sentences
            while !self.exhausted && self.buffer.len() < self.buffer_capacity {
                match self.reader.as_mut().unwrap().next() {
                    Some(Ok(sentence)) => self.buffer.push(sentence),
                    Some(Err(e)) => {
                        return Err(Error::Sampler(format!(
                            "domain {}: {e}",
                            self.corpus.domain_id
                        )))
                    }
                    None => {
                        self.exhausted = true;
                        self.reader = None;
                    }
                }
            }
            if let Some(sentence) = self.pop_random() {
                return Ok(sentence);
            }
            // epoch finished: rewind and reshuffle
            self.epoch += 1;
            self.rng = epoch_rng(self.seed, &self.corpus.domain_id, self.epoch);
            self.open()?;
        }
        Err(Error::Sampler(format!(
            "domain {} is empty",
            self.corpus.domain_id
        )))
    }

    fn pop_random(&mut self) -> Option<Sentence> {
        if self.buffer.is_empty() {
            return None;
        }
        let idx = self.rng.random_range(0..self.buffer.len());
        Some(self.buffer.swap_remove(idx))
    }
}

fn epoch_rng(seed: u64, domain_id: &str, epoch: u64) -> ChaCha8Rng {
    // cheap stable mix of seed, domain and epoch
    let mut h = 0xcbf29ce484222325u64 ^ seed;
    for b in domain_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    rng.set_stream(epoch);
    rng
}

/// Endless stream of `(domain_index, Sentence)` drawn i.i.d. from the
/// plan's domain weights.
pub struct DomainSampler {
    readers: Vec<DomainReader>,
    cumulative: Vec<f64>,
    rng: ChaCha8Rng,
}

impl DomainSampler {
    pub fn new(plan: &MixPlan, seed: u64) -> Result<DomainSampler> {
        let weights = plan.weights()?;
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        let readers = plan
            .domains
            .iter()
            .map(|d| DomainReader::new(d.clone(), seed, plan.shuffle_buffer))
            .collect();
        Ok(DomainSampler {
            readers,
            cumulative,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15),
        })
    }

    pub fn domain_count(&self) -> usize {
        self.readers.len()
    }
}

impl Iterator for DomainSampler {
    type Item = Result<(usize, Sentence)>;

    fn next(&mut self) -> Option<Self::Item> {
        let x = self.rng.random::<f64>();
        let mut domain = self.cumulative.len() - 1;
        for (i, &c) in self.cumulative.iter().enumerate() {
            if x < c {
                domain = i;
                break;
            }
        }
        Some(self.readers[domain].next_sentence().map(|s| (domain, s)))
    }
}

/// Convenience constructor matching the plan directly.
pub fn sample_domains(plan: &MixPlan, seed: u64) -> Result<DomainSampler> {
    DomainSampler::new(plan, seed)
}

/// Which side of the mix an item came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixSlot {
    Synthetic,
    Gold,
}

/// Deterministic r:1 interleave of two streams. For the ratio p/q the
/// schedule emits, in every aligned window of p+q items, p synthetic
/// and q gold items (gold last for integer ratios: S,S,G for 2:1). A
/// zero ratio yields the gold stream unchanged. The stream ends when
/// the side scheduled next is exhausted.
pub struct MixStream<S, G, T>
where
    S: Iterator<Item = T>,
    G: Iterator<Item = T>,
{
    synthetic: S,
    gold: G,
    ratio: Ratio,
    position: u64,
}

pub fn mix_streams<S, G, T>(synthetic: S, gold: G, ratio: Ratio) -> MixStream<S, G, T>
where
    S: Iterator<Item = T>,
    G: Iterator<Item = T>,
{
    MixStream {
        synthetic,
        gold,
        ratio,
        position: 0,
    }
}

impl<S, G, T> Iterator for MixStream<S, G, T>
where
    S: Iterator<Item = T>,
    G: Iterator<Item = T>,
{
    type Item = (MixSlot, T);

    fn next(&mut self) -> Option<Self::Item> {
        if self.ratio.is_zero() {
            return self.gold.next().map(|item| (MixSlot::Gold, item));
        }
        let block = self.ratio.num + self.ratio.den;
        let n = self.position % block;
        // gold when the running gold quota crosses an integer
        let gold_before = n * self.ratio.den / block;
        let gold_after = (n + 1) * self.ratio.den / block;
        self.position += 1;
        if gold_after > gold_before {
            self.gold.next().map(|item| (MixSlot::Gold, item))
        } else {
            self.synthetic.next().map(|item| (MixSlot::Synthetic, item))
        }
    }
}
