//! Command-line surface for the orthant-probit correlated topic model:
//! fitting, topic and correlation reports, model-selection sweeps,
//! synthetic corpora, and the baseline efficiency benchmark.
//!
//! Every subcommand is deterministic for a given configuration and seed:
//! output files are byte-identical across runs, except for recorded wall
//! times (the `wall_seconds` column of `fit.csv` and the `seconds`
//! columns of the sweep and bench tables).

mod artifact;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use probit_ctm::corpus::{self, Corpus, TokenizerConfig};
use probit_ctm::diagnostics::{self, sweep_k};
use probit_ctm::gibbs::{self, RunOptions};
use probit_ctm::mnp::{bench_compare, MnpConfig};
use probit_ctm::model::{Checkpoint, Hyperparams, IterationStat};
use probit_ctm::rng::RngStream;

use artifact::StateArtifact;

#[derive(Parser)]
#[command(
    name = "probit-ctm",
    version,
    about = "Correlated topic model with diagonal-orthant probit topic proportions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model to a corpus by Gibbs sampling
    Fit(FitArgs),
    /// List the highest-probability words of each fitted topic
    Topics(TopicsArgs),
    /// Export the topic correlation matrix and its strong edges
    Corr(CorrArgs),
    /// Fit several topic counts and report the selection curve
    Sweep(SweepArgs),
    /// Draw a synthetic corpus from the generative process
    Simulate(SimulateArgs),
    /// Time the orthant sampler against the rejection baseline
    Bench(BenchArgs),
}

/// Where the documents come from. Exactly one source: a UCI bag-of-words
/// pair, or plain text.
#[derive(Args)]
struct CorpusArgs {
    /// UCI bag-of-words counts file (use with --vocab)
    #[arg(long, requires = "vocab")]
    bow: Option<PathBuf>,
    /// Vocabulary file, one term per line
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Plain-text file or directory of files to tokenize
    #[arg(long, conflicts_with_all = ["bow", "vocab"])]
    text_dir: Option<PathBuf>,
    /// With --text-dir: every nonempty line is its own document
    #[arg(long, requires = "text_dir")]
    one_doc_per_line: bool,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Number of topics (required unless resuming)
    #[arg(long)]
    k: Option<usize>,
    /// Total Gibbs sweeps [default: 1000]
    #[arg(long)]
    iters: Option<usize>,
    /// Sweeps discarded before draws are retained [default: half of the
    /// sweep count]
    #[arg(long)]
    burn_in: Option<usize>,
    /// Keep every m-th post-burn-in draw [default: 1]
    #[arg(long)]
    thin: Option<usize>,
    /// Symmetric Dirichlet concentration on topic-word rows [default: 0.01]
    #[arg(long)]
    beta: Option<f64>,
    /// Prior strength on the score mean [default: 1]
    #[arg(long)]
    kappa0: Option<f64>,
    /// Inverse-Wishart degrees of freedom [default: K + 2]
    #[arg(long)]
    nu0: Option<f64>,
    /// RNG seed; fixed default so runs reproduce
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads for the document-parallel score sweep (0 = all
    /// cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory for checkpoint, fit.csv, and state
    #[arg(long)]
    out: PathBuf,
    /// Resume from this checkpoint; only --iters (to extend the run),
    /// --out, and --threads apply
    #[arg(long, conflicts_with_all = [
        "bow", "vocab", "text_dir", "one_doc_per_line",
        "k", "burn_in", "thin", "beta", "kappa0", "nu0", "seed",
    ])]
    resume: Option<PathBuf>,
    /// Sweeps between checkpoint writes
    #[arg(long, default_value_t = 100)]
    checkpoint_every: usize,
}

#[derive(Args)]
struct TopicsArgs {
    /// State file written by fit (run_dir/state)
    #[arg(long)]
    state: PathBuf,
    /// Words listed per topic
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Write the TSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CorrArgs {
    /// State file written by fit (run_dir/state)
    #[arg(long)]
    state: PathBuf,
    /// Keep pairs with |r| at or above this in the edge list
    #[arg(long, default_value_t = 0.15)]
    corr_threshold: f64,
    /// Directory for corr.csv and corr_edges.csv (edges also go to
    /// stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Comma-separated topic counts to try, e.g. 5,10,20
    #[arg(long, value_delimiter = ',', required = true)]
    k_list: Vec<usize>,
    /// Total Gibbs sweeps per candidate [default: 1000]
    #[arg(long)]
    iters: Option<usize>,
    /// Sweeps discarded per candidate [default: half of the sweep count]
    #[arg(long)]
    burn_in: Option<usize>,
    /// Keep every m-th post-burn-in draw [default: 1]
    #[arg(long)]
    thin: Option<usize>,
    /// Symmetric Dirichlet concentration on topic-word rows [default: 0.01]
    #[arg(long)]
    beta: Option<f64>,
    /// Prior strength on the score mean [default: 1]
    #[arg(long)]
    kappa0: Option<f64>,
    /// RNG seed shared by every candidate
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads for the document-parallel score sweep (0 = all
    /// cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Write the curve as CSV here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of topics
    #[arg(long)]
    k: usize,
    /// Vocabulary size (at least one term per topic)
    #[arg(long)]
    v: usize,
    /// Number of documents
    #[arg(long)]
    docs: usize,
    /// Words per document
    #[arg(long)]
    len: usize,
    /// Scale on the score-prior matrix; larger values concentrate each
    /// document on fewer topics
    #[arg(long, default_value_t = 1.0)]
    psi_scale: f64,
    /// RNG seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory for docword.txt, vocab.txt, and truth.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated topic counts to time
    #[arg(
        long,
        visible_alias = "k",
        value_delimiter = ',',
        default_value = "10,20,30,40"
    )]
    k_list: Vec<usize>,
    /// Words per synthetic document
    #[arg(long, default_value_t = 50)]
    words_per_doc: usize,
    /// Repetitions per topic count
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Monte Carlo draws per baseline probability estimate
    #[arg(long, default_value_t = 1000)]
    mc_samples: usize,
    /// Attempt cap per baseline rejection draw
    #[arg(long, default_value_t = 10_000)]
    max_attempts: usize,
    /// RNG seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also write the table as CSV here
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Topics(args) => cmd_topics(args),
        Command::Corr(args) => cmd_corr(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    ensure!(path.is_file(), "{what} {} not found", path.display());
    Ok(())
}

fn load_corpus(args: &CorpusArgs) -> Result<Corpus> {
    match (&args.bow, &args.text_dir) {
        (Some(bow), None) => {
            let vocab = args
                .vocab
                .as_ref()
                .context("--bow needs --vocab (one term per line)")?;
            require_file(bow, "counts file")?;
            require_file(vocab, "vocabulary file")?;
            Ok(corpus::load_uci_bow(bow, vocab)?)
        }
        (None, Some(dir)) => {
            ensure!(dir.exists(), "text path {} not found", dir.display());
            let config = TokenizerConfig {
                one_doc_per_line: args.one_doc_per_line,
            };
            Ok(corpus::load_plain_text(dir, config)?)
        }
        _ => bail!("no corpus given: pass --bow with --vocab, or --text-dir"),
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: usize) {
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("note: thread pool already configured: {e}");
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: usize) {
    if threads > 0 {
        eprintln!("note: built without the parallel feature; --threads has no effect");
    }
}

/// Per-iteration progress line on stderr, leaving stdout for results.
fn report_iteration(stat: &IterationStat) {
    eprintln!("iter {:>6}  loglik {:.6}", stat.iteration, stat.loglik);
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    configure_threads(args.threads);
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    let options = RunOptions {
        checkpoint_path: Some(args.out.join("checkpoint")),
        checkpoint_every: args.checkpoint_every.max(1),
    };

    let (corpus, hyper, state, report) = if let Some(resume) = &args.resume {
        require_file(resume, "checkpoint")?;
        let mut ck = Checkpoint::load(resume)?;
        if let Some(iters) = args.iters {
            ensure!(
                iters >= ck.completed_iters,
                "--iters {iters} is below the checkpoint's {} completed sweeps",
                ck.completed_iters
            );
            ck.hyper.n_iters = iters;
        }
        eprintln!(
            "resuming at sweep {} of {}",
            ck.completed_iters, ck.hyper.n_iters
        );
        let hyper = ck.hyper.clone();
        let (corpus, state, report) = gibbs::resume(ck, &options, &mut report_iteration)
            .map_err(|e| flag_partial_outputs(&args.out, e.into()))?;
        (corpus, hyper, state, report)
    } else {
        let k = args.k.context("fit needs --k (or --resume)")?;
        let corpus = load_corpus(&args.corpus)?;
        let mut hyper = Hyperparams::new(k);
        if let Some(iters) = args.iters {
            hyper.n_iters = iters;
            hyper.burn_in = iters / 2;
        }
        if let Some(burn_in) = args.burn_in {
            hyper.burn_in = burn_in;
        }
        if let Some(thin) = args.thin {
            hyper.thin = thin;
        }
        if let Some(beta) = args.beta {
            hyper.beta = beta;
        }
        if let Some(kappa0) = args.kappa0 {
            hyper.kappa0 = kappa0;
        }
        if let Some(nu0) = args.nu0 {
            hyper.nu0 = nu0;
        }
        hyper.seed = args.seed;
        let (state, report) = gibbs::run(&corpus, &hyper, &options, &mut report_iteration)
            .map_err(|e| flag_partial_outputs(&args.out, e.into()))?;
        (corpus, hyper, state, report)
    };

    report.write_csv(&args.out.join("fit.csv"))?;
    StateArtifact::from_fit(&hyper, &corpus.vocab, &state, &report)
        .save(&args.out.join("state"))?;
    println!(
        "fit: {} documents, {} terms, K = {}, {} sweeps (burn-in {}, thin {}), {} retained draws",
        corpus.n_docs(),
        corpus.n_terms(),
        hyper.k,
        hyper.n_iters,
        hyper.burn_in,
        hyper.thin,
        report.retained
    );
    println!(
        "wrote {0}/checkpoint, {0}/fit.csv, {0}/state",
        args.out.display()
    );
    Ok(())
}

/// A failed run may leave a usable checkpoint behind; say so next to the
/// error instead of leaving the directory unexplained.
fn flag_partial_outputs(out: &Path, e: anyhow::Error) -> anyhow::Error {
    eprintln!(
        "note: partial outputs (checkpoints) may remain in {}",
        out.display()
    );
    e
}

fn cmd_topics(args: TopicsArgs) -> Result<()> {
    require_file(&args.state, "state file")?;
    let artifact = StateArtifact::load(&args.state)?;
    let report = diagnostics::top_words(
        &artifact.state,
        &artifact.vocab,
        args.top,
        artifact.hyper.beta,
    )?;
    match &args.out {
        Some(path) => report.write_tsv(path)?,
        None => {
            println!("topic\trank\tterm\tprob");
            for (k, terms) in report.top_terms.iter().enumerate() {
                for (rank, (term, prob)) in terms.iter().enumerate() {
                    println!("{k}\t{}\t{term}\t{prob}", rank + 1);
                }
            }
        }
    }
    Ok(())
}

fn cmd_corr(args: CorrArgs) -> Result<()> {
    require_file(&args.state, "state file")?;
    let artifact = StateArtifact::load(&args.state)?;
    ensure!(
        !artifact.sigma_samples.is_empty(),
        "state file {} has no retained covariance draws (was the whole run burned in?)",
        args.state.display()
    );
    let corr = diagnostics::topic_correlations(&artifact.sigma_samples)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        corr.write_csv(&dir.join("corr.csv"))?;
        corr.write_edges_csv(&dir.join("corr_edges.csv"), args.corr_threshold)?;
        println!("wrote {0}/corr.csv, {0}/corr_edges.csv", dir.display());
    }
    let edges = corr.edges(args.corr_threshold);
    println!(
        "{} topic pairs with |r| >= {}",
        edges.len(),
        args.corr_threshold
    );
    for (i, j, r) in edges {
        println!("{i}\t{j}\t{r}");
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    configure_threads(args.threads);
    let corpus = load_corpus(&args.corpus)?;
    ensure!(!args.k_list.is_empty(), "--k-list is empty");
    let mut template = Hyperparams::new(args.k_list[0].max(2));
    if let Some(iters) = args.iters {
        template.n_iters = iters;
        template.burn_in = iters / 2;
    }
    if let Some(burn_in) = args.burn_in {
        template.burn_in = burn_in;
    }
    if let Some(thin) = args.thin {
        template.thin = thin;
    }
    if let Some(beta) = args.beta {
        template.beta = beta;
    }
    if let Some(kappa0) = args.kappa0 {
        template.kappa0 = kappa0;
    }
    template.seed = args.seed;

    let report = sweep_k(&corpus, &template, &args.k_list, &mut |k, stat| {
        eprintln!(
            "K {:>4}  iter {:>6}  loglik {:.6}",
            k, stat.iteration, stat.loglik
        );
    })?;
    for row in &report.rows {
        println!("K = {:>4}  held-out loglik = {:.4}", row.k, row.loglik);
    }
    println!("best K = {}", report.best_k);
    if let Some(path) = &args.out {
        report.write_csv(path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Disjoint uniform vocabulary blocks, one per topic: the well-separated
/// rows used by the recovery experiments.
fn blocked_topic_rows(k: usize, v: usize) -> DMatrix<f64> {
    let mut rows = DMatrix::zeros(k, v);
    for t in 0..k {
        let lo = v * t / k;
        let hi = v * (t + 1) / k;
        for w in lo..hi {
            rows[(t, w)] = 1.0 / (hi - lo) as f64;
        }
    }
    rows
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    ensure!(
        args.v >= args.k.max(2),
        "--v {} cannot give each of {} topics its own word block",
        args.v,
        args.k
    );
    let mut hyper = Hyperparams::new(args.k);
    hyper.seed = args.seed;
    hyper.psi0 *= args.psi_scale;
    let rows = blocked_topic_rows(args.k, args.v);
    let (corpus, truth) = gibbs::simulate_corpus(
        &hyper,
        &rows,
        args.docs,
        args.len,
        RngStream::new(args.seed, 0),
    )?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    corpus.write_uci_bow(&args.out.join("docword.txt"))?;
    corpus.vocab.write(&args.out.join("vocab.txt"))?;
    let truth_path = args.out.join("truth.json");
    let file = std::fs::File::create(&truth_path)
        .with_context(|| format!("creating {}", truth_path.display()))?;
    serde_json::to_writer(std::io::BufWriter::new(file), &truth)
        .with_context(|| format!("writing {}", truth_path.display()))?;

    println!(
        "simulated {} documents, {} terms, {} tokens (K = {})",
        corpus.n_docs(),
        corpus.n_terms(),
        corpus.total_tokens(),
        args.k
    );
    println!(
        "wrote {0}/docword.txt, {0}/vocab.txt, {0}/truth.json",
        args.out.display()
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let config = MnpConfig {
        mc_samples: args.mc_samples,
        max_attempts: args.max_attempts,
        timeout: Duration::from_secs(30),
    };
    let table = bench_compare(
        &args.k_list,
        args.words_per_doc,
        args.reps,
        &config,
        RngStream::new(args.seed, 0),
    )?;
    print!("{}", table.to_text());
    if let Some(path) = &args.out {
        table.write_csv(path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
