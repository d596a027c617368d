//! Data engineering toolkit for grammatical error correction:
//! deterministic synthetic-error generation over clean corpora
//! (character-level, token-level and Czech typical-error passes),
//! domain-balanced corpus sampling and mixing, and an M2-style
//! edit-matching F-beta scorer.
//!
//! The noising side is built for streaming: every sentence's random
//! stream is a pure function of `(seed, sentence_index)`, so output is
//! reproducible and independent of worker count.

pub mod corpus;
pub mod error;
pub mod noise;
pub mod providers;
pub mod sampler;
pub mod scorer;
pub mod typical;

pub use corpus::m2::{parse_m2, write_m2, GoldAnnotation, M2Block};
pub use corpus::{load_domain_manifest, read_sentences, DomainCorpus, Sentence, Tokenizer};
pub use error::{Error, Result};
pub use noise::{
    noise_sentence, NoiseOutcome, NoisePreset, NoiseProfile, Noiser, OpEntry, PassKind, RngStream,
};
pub use providers::{DiacriticsTable, Lexicon, MorphLexicon, Providers};
pub use sampler::{domain_weights, mix_streams, sample_domains, MixPlan, MixSlot, Ratio};
pub use scorer::{
    align, best_edit_selection, score_corpus, score_corpus_with, EditSpan, GoldSet, ScoreBlock,
    ScoreOptions, ScoreReport,
};
pub use typical::{apply_rules, default_rules, load_rules, TypicalErrorRule};
