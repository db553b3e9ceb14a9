//! `chainsent` command-line driver. Logs go to stderr; data only to files.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use chainsent::pipeline::{
    self, artifacts, load_preprocessor, load_scorer, CorpusKind, Pipeline, PipelineConfig,
};
use chainsent::txdecoder::{Chain, ChainFilter};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "chainsent",
    version,
    about = "Blockchain text sentiment and price-direction pipeline"
)]
struct Cli {
    /// Pipeline configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decode embedded text from a transactions NDJSON file.
    Decode(DecodeArgs),
    /// Clean decoded texts into corpora.
    Clean(CleanArgs),
    /// Score per-day sentiment of a cleaned corpus.
    Sentiment(SentimentArgs),
    /// Fit LDA topics per chain and write intertopic maps.
    Topics(TopicsArgs),
    /// Join prices and daily sentiment into a supervised table.
    Dataset(DatasetArgs),
    /// Grid-search, refit and evaluate every model family.
    Train(TrainArgs),
    /// Render report JSON files as a results table.
    Report(ReportArgs),
    /// Every stage in order.
    Run,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// btc, eth or both.
    #[arg(long)]
    chain: Option<String>,
    /// Decode on a single thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct CleanArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Single corpus file; without it all three corpora go to the work directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the financial corpus instead of the cleaned corpus.
    #[arg(long, conflicts_with = "raw")]
    financial: bool,
    /// Write the raw financial corpus (minimal cleanup).
    #[arg(long)]
    raw: bool,
    /// Financial lexicon replacing the bundled one.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SentimentArgs {
    /// Corpus NDJSON; without it both financial corpora in the work directory are scored.
    #[arg(long = "in", requires = "out")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Date-keyed CSV of extra sentiment columns.
    #[arg(long)]
    external: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TopicsArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DatasetArgs {
    #[arg(long)]
    prices_btc: Option<PathBuf>,
    #[arg(long)]
    prices_eth: Option<PathBuf>,
    /// Financial corpus NDJSON.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Raw financial corpus NDJSON for the raw_ columns.
    #[arg(long)]
    raw_corpus: Option<PathBuf>,
    #[arg(long)]
    external: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to every configured target.
    #[arg(long)]
    target: Option<Chain>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    target: Option<Chain>,
    /// Grid TOML replacing the configured grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Report JSON files; defaults to every configured target.
    #[arg(long = "in", num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => {
            let cwd = std::env::current_dir()?;
            PipelineConfig::from_str("", &cwd)?
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn targets(cfg: &PipelineConfig, one: Option<Chain>) -> Vec<Chain> {
    one.map(|t| vec![t]).unwrap_or_else(|| cfg.train.targets.clone())
}

fn or_work(cfg: &PipelineConfig, p: &Option<PathBuf>, name: &str) -> PathBuf {
    p.clone().unwrap_or_else(|| cfg.paths.work_dir.join(name))
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Decode(a) => {
            if let Some(c) = a.chain {
                cfg.decode.chain = c;
            }
            if a.sequential {
                cfg.decode.parallel = false;
            }
            let input = a
                .input
                .or(cfg.paths.transactions.clone())
                .context("no input: pass --in or set paths.transactions")?;
            let out = or_work(&cfg, &a.out, artifacts::TEXTS);
            cfg.decode
                .chain
                .parse::<ChainFilter>()
                .map_err(|e| anyhow::anyhow!("--chain: {e}"))?;
            pipeline::decode_file(&input, &out, &cfg.decode_options())?;
        }
        Command::Clean(a) => {
            if let Some(l) = a.lexicon {
                cfg.lexicons.financial = Some(l);
            }
            let p = Pipeline::new(cfg);
            p.check_lexicons()?;
            let pre = load_preprocessor(&p.config.lexicons, &p.config.clean)?;
            let input = or_work(&p.config, &a.input, artifacts::TEXTS);
            match a.out {
                Some(out) => {
                    let kind = if a.financial {
                        CorpusKind::Financial
                    } else if a.raw {
                        CorpusKind::RawFinancial
                    } else {
                        CorpusKind::Corpus
                    };
                    let n = pipeline::clean_file(&input, &out, &pre, kind)?;
                    log::info!("{n} cleaned texts");
                }
                None => {
                    let s = pipeline::clean_files(&input, &p.config.paths.work_dir, &pre)?;
                    log::info!(
                        "{} texts → {} corpus, {} financial, {} raw financial",
                        s.texts,
                        s.corpus,
                        s.financial,
                        s.raw_financial
                    );
                }
            }
        }
        Command::Sentiment(a) => {
            if a.external.is_some() {
                cfg.paths.external_features = a.external;
            }
            let p = Pipeline::new(cfg);
            match (a.input, a.out) {
                (Some(input), Some(out)) => {
                    p.check_lexicons()?;
                    let scorer = load_scorer(&p.config.lexicons)?;
                    let ext = p.config.paths.external_features.as_deref();
                    let n = pipeline::sentiment_file(&input, ext, &out, &scorer)?;
                    log::info!("{n} days scored");
                }
                _ => p.sentiment()?,
            }
        }
        Command::Topics(a) => {
            if let Some(k) = a.k {
                cfg.topics.k = k;
            }
            if let Some(n) = a.iters {
                cfg.topics.iterations = n;
            }
            if cfg.topics.k == 0 || cfg.topics.iterations == 0 {
                anyhow::bail!("--k and --iters must be positive");
            }
            if let Some(d) = a.out {
                cfg.paths.work_dir = d;
            }
            let p = Pipeline::new(cfg);
            match a.input {
                Some(input) => {
                    pipeline::topics_files(
                        &input,
                        &p.config.paths.work_dir,
                        &p.config.lda_config(),
                        p.config.topics.top_n,
                    )?;
                }
                None => {
                    p.topics()?;
                }
            }
        }
        Command::Dataset(a) => {
            if a.prices_btc.is_some() {
                cfg.paths.prices_btc = a.prices_btc;
            }
            if a.prices_eth.is_some() {
                cfg.paths.prices_eth = a.prices_eth;
            }
            if a.external.is_some() {
                cfg.paths.external_features = a.external;
            }
            let p = Pipeline::new(cfg);
            p.check_lexicons()?;
            let scorer = load_scorer(&p.config.lexicons)?;
            let ts = targets(&p.config, a.target);
            if a.out.is_some() && ts.len() > 1 {
                anyhow::bail!("--out needs a single --target");
            }
            let corpus = or_work(&p.config, &a.corpus, artifacts::FINANCIAL);
            let raw = match (&a.raw_corpus, &a.corpus) {
                (Some(r), _) => Some(r.clone()),
                // An explicit corpus without a raw corpus leaves raw columns neutral.
                (None, Some(_)) => None,
                (None, None) => Some(p.config.paths.work_dir.join(artifacts::RAW_FINANCIAL)),
            };
            for t in ts {
                let prices = p.config.prices(t).with_context(|| {
                    format!("no price file for {t}: pass --prices-{t} or set paths.prices_{t}")
                })?;
                let out = or_work(&p.config, &a.out, &artifacts::dataset(t.as_str()));
                pipeline::dataset_file(
                    t,
                    prices,
                    &corpus,
                    raw.as_deref(),
                    p.config.paths.external_features.as_deref(),
                    &out,
                    &scorer,
                )?;
            }
        }
        Command::Train(a) => {
            if a.grid.is_some() {
                cfg.train.grid = a.grid;
            }
            let ts = targets(&cfg, a.target);
            if a.dataset.is_some() && ts.len() > 1 {
                anyhow::bail!("--dataset needs a single --target");
            }
            let out_dir = a.out.unwrap_or_else(|| cfg.paths.work_dir.clone());
            let specs = cfg.grids()?;
            let opts = cfg.experiment_options()?;
            for t in ts {
                let ds = or_work(&cfg, &a.dataset, &artifacts::dataset(t.as_str()));
                let report = pipeline::train_file(t, &ds, &specs, &opts, &out_dir)?;
                log::info!("{t}: {} report rows", report.rows.len());
            }
        }
        Command::Report(a) => {
            let inputs = if a.input.is_empty() {
                cfg.train
                    .targets
                    .iter()
                    .map(|t| cfg.paths.work_dir.join(artifacts::report_json(t.as_str())))
                    .collect()
            } else {
                a.input
            };
            let out = or_work(&cfg, &a.out, artifacts::REPORT_TEXT);
            pipeline::report_file(&inputs, &out)?;
        }
        Command::Run => {
            Pipeline::new(cfg).run_all()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
