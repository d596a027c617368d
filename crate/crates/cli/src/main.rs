use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use geckit_core::corpus::{SentenceReader, Tokenizer};
use geckit_core::noise::Noiser;
use geckit_core::sampler::{Ratio, DEFAULT_SHUFFLE_BUFFER};

use geckit::mix::{run_mix, MixConfig};
use geckit::pipeline::GeneratePipeline;
use geckit::score::{run_score, ScoreConfig};
use geckit::setup::resolve_noise;
use geckit::stats::{run_stats, sidecar_path};

#[derive(Parser)]
#[command(
    name = "geckit",
    version,
    about = "Synthetic error generation, corpus mixing and M2-style scoring for GEC data pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a clean corpus into a "noisy<TAB>clean" parallel corpus
    Generate(GenerateArgs),
    /// Interleave domain-balanced gold and synthetic streams
    Mix(MixArgs),
    /// Score corrected output against M2 gold edits
    Score(ScoreArgs),
    /// Report operation/rule frequencies from a generation sidecar
    Stats(StatsArgs),
}

#[derive(Args)]
struct NoiseOpts {
    /// Noising preset: aspell | morphodita | typical | mate
    #[arg(long, conflicts_with = "profile")]
    preset: Option<String>,
    /// TOML noise profile
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Word-form dictionary, "form" or "form<TAB>frequency" per line
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Morphological lexicon, "form<TAB>lemma" per line
    #[arg(long)]
    morph_lexicon: Option<PathBuf>,
    /// Typical-error rule table (default: built-in Czech rules)
    #[arg(long)]
    rules: Option<PathBuf>,
}

impl NoiseOpts {
    fn resolve(&self) -> Result<geckit::setup::NoiseSetup> {
        resolve_noise(
            self.preset.as_deref(),
            self.profile.as_deref(),
            self.lexicon.as_deref(),
            self.morph_lexicon.as_deref(),
            self.rules.as_deref(),
        )
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Clean corpus, one sentence per line ("-" reads stdin)
    corpus: PathBuf,
    #[command(flatten)]
    noise: NoiseOpts,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    workers: Option<usize>,
    /// Log every drawn operation to the "<out>.ops" sidecar
    #[arg(long)]
    log_ops: bool,
    /// Output file (default: stdout, for piping into training)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MixArgs {
    /// Domain manifest, "domain_id<TAB>corpus_path" per line
    manifest: PathBuf,
    /// Oversampling exponent in size^factor domain weighting
    #[arg(long, default_value_t = 0.25)]
    factor: f64,
    /// synthetic:gold ratio (N, N:M or N/M); 0 emits gold only
    #[arg(long, default_value = "0")]
    ratio: Ratio,
    /// Lines to emit
    #[arg(long, default_value_t = 10_000)]
    count: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Per-domain shuffle buffer (sentences)
    #[arg(long, default_value_t = DEFAULT_SHUFFLE_BUFFER)]
    shuffle_buffer: usize,
    #[command(flatten)]
    noise: NoiseOpts,
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Gold edits in M2 format
    gold: PathBuf,
    /// System output, one tokenized sentence per line
    hypothesis: PathBuf,
    /// Domain-id sidecar, one id per gold block
    #[arg(long)]
    domains: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Most matched words a merged edit may span
    #[arg(long, default_value_t = 2)]
    max_unchanged: usize,
    /// Match edits case-insensitively (default: case-sensitive)
    #[arg(long)]
    ignore_case: bool,
    /// Write the JSON report here (stdout gets the readable one)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// TSV written by generate --log-ops
    tsv: PathBuf,
    /// Sidecar path (default: <tsv>.ops)
    #[arg(long)]
    ops: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match Cli::parse().command {
        Command::Generate(args) => generate(args),
        Command::Mix(args) => mix(args),
        Command::Score(args) => score(args),
        Command::Stats(args) => stats(args),
    };
    if let Err(error) = result {
        // a consumer closing the pipe (head, training process shutdown)
        // ends the stream, it is not a failure
        if is_broken_pipe(&error) {
            return;
        }
        eprintln!("Error: {error:#}");
        std::process::exit(1);
    }
}

fn is_broken_pipe(error: &anyhow::Error) -> bool {
    error.chain().any(|cause| {
        cause
            .downcast_ref::<io::Error>()
            .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
    })
}

fn generate(args: GenerateArgs) -> Result<()> {
    let setup = args.noise.resolve()?;
    let noiser = Noiser::new(&setup.profile, &setup.providers, &setup.rules)?;
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    let pipeline = GeneratePipeline::new(&noiser, args.seed, workers);

    let mut ops_out = if args.log_ops {
        let Some(out) = &args.out else {
            bail!("--log-ops needs --out so the sidecar has somewhere to live");
        };
        let path = sidecar_path(out);
        Some(BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        ))
    } else {
        None
    };

    let tokenizer = Tokenizer::default();
    let written = if args.corpus.to_str() == Some("-") {
        let reader = SentenceReader::from_reader(BufReader::new(io::stdin()), tokenizer, "<stdin>");
        with_output(args.out.as_deref(), |out| {
            pipeline.run(reader, out, ops_out.as_mut())
        })?
    } else {
        let reader = SentenceReader::open(&args.corpus, tokenizer)?;
        with_output(args.out.as_deref(), |out| {
            pipeline.run(reader, out, ops_out.as_mut())
        })?
    };
    log::info!("generated {written} sentence pairs");
    Ok(())
}

fn mix(args: MixArgs) -> Result<()> {
    let config = MixConfig {
        factor: args.factor,
        ratio: args.ratio,
        count: args.count,
        seed: args.seed,
        shuffle_buffer: args.shuffle_buffer,
    };
    if config.ratio.is_zero() {
        with_output(args.out.as_deref(), |out| {
            run_mix(&args.manifest, &config, None, out)
        })
    } else {
        let setup = args.noise.resolve()?;
        let noiser = Noiser::new(&setup.profile, &setup.providers, &setup.rules)?;
        with_output(args.out.as_deref(), |out| {
            run_mix(&args.manifest, &config, Some(&noiser), out)
        })
    }
}

fn score(args: ScoreArgs) -> Result<()> {
    let config = ScoreConfig {
        beta: args.beta,
        max_unchanged: args.max_unchanged,
        case_sensitive: !args.ignore_case,
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    run_score(
        &args.gold,
        &args.hypothesis,
        args.domains.as_deref(),
        &config,
        args.out.as_deref(),
        &mut out,
    )?;
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    run_stats(&args.tsv, args.ops.as_deref(), &mut out)
}

fn with_output<T>(
    path: Option<&Path>,
    f: impl FnOnce(&mut Box<dyn Write>) -> Result<T>,
) -> Result<T> {
    let mut out: Box<dyn Write> = match path {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    f(&mut out)
}
