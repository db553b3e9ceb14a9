//! File-to-file pipeline stages. Every artifact is written under a
//! `.partial` name and renamed once complete, so an interrupted or failed
//! stage never leaves a file that looks finished.

mod config;

pub use config::{
    CleanSection, DecodeSection, Lexicons, Paths, PipelineConfig, SentimentSection, TopicsSection,
    TrainSection,
};

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataset::{self, aggregate_daily, assemble, DatasetError, DatasetTable};
use crate::ml::{self, render_table, run_experiments, ExperimentOptions, MetricsReport, MlError, ModelSpec};
use crate::sentiment::{
    pearson_matrix, prune_correlated, write_features, Blob, BlobLexicon, DailyFeatures, ExternalFeatures,
    Scorer, SentimentError, SentimentLexicon, Vader, BASE_FEATURES,
};
use crate::textprep::{
    read_ndjson, write_ndjson, AbbreviationMap, CleanText, Cleaner, FinancialLexicon, LexiconError,
    Preprocessor, Vocabulary, WordSet,
};
use crate::topics::{self, DocTermMatrix, TopicsError};
use crate::txdecoder::{decode_stream, Chain, DecodeOptions, DecodeStats, TextRecord};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing input {0}")]
    MissingInput(PathBuf),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Sentiment(#[from] SentimentError),
    #[error(transparent)]
    Topics(#[from] TopicsError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Artifact file names inside the work directory.
pub mod artifacts {
    pub const TEXTS: &str = "texts.ndjson";
    pub const CORPUS: &str = "corpus.ndjson";
    pub const FINANCIAL: &str = "financial.ndjson";
    pub const RAW_FINANCIAL: &str = "raw_financial.ndjson";
    pub const SENTIMENT: &str = "sentiment.csv";
    pub const RAW_SENTIMENT: &str = "raw_sentiment.csv";
    pub const CORRELATIONS: &str = "correlations.csv";
    pub const REPORT_TEXT: &str = "report.txt";

    pub fn topics(chain: &str) -> String {
        format!("topics_{chain}.csv")
    }

    pub fn topic_map(chain: &str) -> String {
        format!("topic_map_{chain}.csv")
    }

    pub fn dataset(target: &str) -> String {
        format!("dataset_{target}.csv")
    }

    pub fn report_json(target: &str) -> String {
        format!("report_{target}.json")
    }

    pub fn report_csv(target: &str) -> String {
        format!("report_{target}.csv")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_owned(),
        source,
    }
}

fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::MissingInput(path.to_owned()));
    }
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

/// Runs `body` against `<path>.partial`, then renames it to `path`.
pub fn write_artifact<F>(path: &Path, body: F) -> Result<(), PipelineError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), PipelineError>,
{
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = partial_path(path);
    let mut w = BufWriter::new(File::create(&tmp).map_err(io_err(&tmp))?);
    body(&mut w)?;
    w.flush().map_err(io_err(&tmp))?;
    drop(w);
    std::fs::rename(&tmp, path).map_err(io_err(path))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn read_records<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<Vec<T>, PipelineError> {
    read_ndjson(open(path)?).map_err(io_err(path))
}

/// Loads the cleanup resources, replacing bundled lists where configured.
pub fn load_preprocessor(lex: &Lexicons, clean: &CleanSection) -> Result<Preprocessor, PipelineError> {
    let english = match &lex.english {
        Some(p) => std::sync::Arc::new(WordSet::load(p)?),
        None => Vocabulary::bundled_english(),
    };
    let financial = match &lex.financial {
        Some(p) => FinancialLexicon::load(p)?,
        None => FinancialLexicon::bundled(),
    };
    let abbreviations = match &lex.abbreviations {
        Some(p) => AbbreviationMap::load(p)?,
        None => AbbreviationMap::bundled(),
    };
    Ok(Preprocessor {
        cleaner: Cleaner {
            max_run: clean.max_run,
            min_len: clean.min_len,
        },
        abbreviations,
        vocabulary: Vocabulary::new(english, financial)?,
    })
}

pub fn load_scorer(lex: &Lexicons) -> Result<Scorer, PipelineError> {
    let vader = match &lex.vader {
        Some(p) => Vader::new(SentimentLexicon::load(p)?),
        None => Vader::bundled(),
    };
    let blob = match &lex.blob {
        Some(p) => Blob::new(BlobLexicon::load(p)?),
        None => Blob::bundled(),
    };
    Ok(Scorer { vader, blob })
}

/// Transactions NDJSON → text records NDJSON.
pub fn decode_file(input: &Path, output: &Path, opts: &DecodeOptions) -> Result<DecodeStats, PipelineError> {
    let reader = open(input)?;
    let mut stats = DecodeStats::default();
    write_artifact(output, |w| {
        stats = decode_stream(reader, w, opts).map_err(io_err(input))?;
        Ok(())
    })?;
    log::info!(
        "decoded {} records ({} bad, {} skipped by chain, {} payload warnings) into {} texts",
        stats.records,
        stats.record_errors,
        stats.skipped_chain,
        stats.warnings,
        stats.texts
    );
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CleanSummary {
    pub texts: usize,
    pub corpus: usize,
    pub financial: usize,
    pub raw_financial: usize,
}

/// Which cleaned corpus a single-output clean writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    Corpus,
    Financial,
    RawFinancial,
}

/// Text records → one corpus file. Returns the number of items written.
pub fn clean_file(
    texts: &Path,
    output: &Path,
    pre: &Preprocessor,
    kind: CorpusKind,
) -> Result<usize, PipelineError> {
    let records: Vec<TextRecord> = read_records(texts)?;
    let items = match kind {
        CorpusKind::Corpus => pre.build_corpora(&records).corpus,
        CorpusKind::Financial => pre.build_corpora(&records).financial,
        CorpusKind::RawFinancial => pre.build_raw_financial(&records),
    };
    write_artifact(output, |w| write_ndjson(&items, w).map_err(io_err(output)))?;
    Ok(items.len())
}

/// Text records → corpus, financial corpus and raw financial corpus.
pub fn clean_files(texts: &Path, out_dir: &Path, pre: &Preprocessor) -> Result<CleanSummary, PipelineError> {
    let records: Vec<TextRecord> = read_records(texts)?;
    let corpora = pre.build_corpora(&records);
    let raw = pre.build_raw_financial(&records);
    for (name, items) in [
        (artifacts::CORPUS, &corpora.corpus),
        (artifacts::FINANCIAL, &corpora.financial),
        (artifacts::RAW_FINANCIAL, &raw),
    ] {
        let path = out_dir.join(name);
        write_artifact(&path, |w| write_ndjson(items, w).map_err(io_err(&path)))?;
    }
    Ok(CleanSummary {
        texts: records.len(),
        corpus: corpora.corpus.len(),
        financial: corpora.financial.len(),
        raw_financial: raw.len(),
    })
}

fn load_external(path: Option<&Path>) -> Result<Option<ExternalFeatures>, PipelineError> {
    match path {
        Some(p) if !p.exists() => Err(PipelineError::MissingInput(p.to_owned())),
        Some(p) => Ok(Some(ExternalFeatures::load(p)?)),
        None => Ok(None),
    }
}

fn score_corpus(
    corpus: &Path,
    ext: Option<&ExternalFeatures>,
    scorer: &Scorer,
) -> Result<DailyFeatures, PipelineError> {
    let docs = aggregate_daily(&read_records::<CleanText>(corpus)?);
    let texts: Vec<_> = docs.iter().map(|d| (d.date, d.document())).collect();
    let mut rows = scorer.score_days(&texts);
    if let Some(e) = ext {
        for (date, v) in rows.iter_mut() {
            e.attach(*date, v);
        }
    }
    Ok(rows)
}

/// One corpus → per-day feature CSV.
pub fn sentiment_file(
    corpus: &Path,
    external: Option<&Path>,
    output: &Path,
    scorer: &Scorer,
) -> Result<usize, PipelineError> {
    let ext = load_external(external)?;
    let rows = score_corpus(corpus, ext.as_ref(), scorer)?;
    let cols = ext.map(|e| e.columns).unwrap_or_default();
    write_artifact(output, |w| Ok(write_features(&rows, &cols, w)?))?;
    Ok(rows.len())
}

/// Per-day sentiment of the financial and raw financial corpora, plus the
/// correlation matrix of the base features.
pub fn sentiment_files(
    financial: &Path,
    raw_financial: &Path,
    external: Option<&Path>,
    out_dir: &Path,
    scorer: &Scorer,
    threshold: f64,
) -> Result<(), PipelineError> {
    let ext = load_external(external)?;
    let ext_cols = ext.as_ref().map(|e| e.columns.clone()).unwrap_or_default();
    let base_rows = score_corpus(financial, ext.as_ref(), scorer)?;
    let path = out_dir.join(artifacts::SENTIMENT);
    write_artifact(&path, |w| Ok(write_features(&base_rows, &ext_cols, w)?))?;
    let raw_rows = score_corpus(raw_financial, None, scorer)?;
    let path = out_dir.join(artifacts::RAW_SENTIMENT);
    write_artifact(&path, |w| Ok(write_features(&raw_rows, &[], w)?))?;

    let names: Vec<String> = BASE_FEATURES.iter().map(|s| s.to_string()).collect();
    let columns: Vec<Vec<f64>> = (0..names.len())
        .map(|j| base_rows.iter().map(|(_, v)| v.base_values()[j]).collect())
        .collect();
    let m = pearson_matrix(&columns);
    let kept = prune_correlated(&names, &columns, threshold);
    let dropped: Vec<&String> = names.iter().filter(|n| !kept.contains(n)).collect();
    log::info!("correlation pruning at {threshold} would drop {dropped:?}");
    let path = out_dir.join(artifacts::CORRELATIONS);
    write_artifact(&path, |w| {
        let mut c = csv::Writer::from_writer(w);
        let mut header = vec!["feature".to_string()];
        header.extend(names.iter().cloned());
        c.write_record(&header).map_err(SentimentError::from)?;
        for (name, row) in names.iter().zip(&m) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|r| r.map(|x| x.to_string()).unwrap_or_default()));
            c.write_record(&rec).map_err(SentimentError::from)?;
        }
        c.flush().map_err(io_err(&path))?;
        Ok(())
    })
}

/// Topic tables and intertopic maps for each chain present in `corpus`.
/// Returns the chains modelled.
pub fn topics_files(
    corpus: &Path,
    out_dir: &Path,
    cfg: &topics::LdaConfig,
    top_n: usize,
) -> Result<Vec<Chain>, PipelineError> {
    let records: Vec<CleanText> = read_records(corpus)?;
    let mut done = Vec::new();
    for chain in [Chain::Btc, Chain::Eth] {
        let docs: Vec<Vec<String>> = records
            .iter()
            .filter(|r| r.chain == chain && !r.tokens.is_empty())
            .map(|r| r.tokens.clone())
            .collect();
        if docs.is_empty() {
            log::info!("no {chain} documents; skipping topics");
            continue;
        }
        let dtm = DocTermMatrix::from_token_docs(&docs);
        let model = topics::fit_lda(&dtm, cfg)?;
        log::info!(
            "{chain}: LDA on {} docs, {} terms, final log-likelihood {:.3}",
            docs.len(),
            dtm.vocabulary.len(),
            model.log_likelihood.last().copied().unwrap_or(f64::NAN)
        );
        let table = topics::top_words(&model, top_n);
        let path = out_dir.join(artifacts::topics(chain.as_str()));
        write_artifact(&path, |w| Ok(topics::write_topics_csv(&table, w)?))?;
        if model.k >= 2 {
            let points = topics::intertopic_map(&model)?;
            let path = out_dir.join(artifacts::topic_map(chain.as_str()));
            write_artifact(&path, |w| Ok(topics::write_map_csv(&points, w)?))?;
        }
        done.push(chain);
    }
    Ok(done)
}

/// Prices + financial corpora → supervised table for `target`.
pub fn dataset_file(
    target: Chain,
    prices: &Path,
    financial: &Path,
    raw_financial: Option<&Path>,
    external: Option<&Path>,
    output: &Path,
    scorer: &Scorer,
) -> Result<DatasetTable, PipelineError> {
    if !prices.exists() {
        return Err(PipelineError::MissingInput(prices.to_owned()));
    }
    let series = dataset::load_prices(target, prices)?;
    let docs = aggregate_daily(&read_records::<CleanText>(financial)?);
    let raw_docs = match raw_financial {
        Some(p) => aggregate_daily(&read_records::<CleanText>(p)?),
        None => Vec::new(),
    };
    let ext = load_external(external)?;
    let examples = assemble(&series, &docs, &raw_docs, ext.as_ref(), scorer)?;
    let ext_cols = ext.map(|e| e.columns).unwrap_or_default();
    let table = DatasetTable::from_examples(&examples, &ext_cols);
    let (zeros, ones) = dataset::class_balance(&table.labels);
    log::info!(
        "{target} dataset: {} days, {:.1}% zeros / {:.1}% ones",
        table.len(),
        100.0 * zeros,
        100.0 * ones
    );
    write_artifact(output, |w| Ok(table.write_csv(w)?))?;
    Ok(table)
}

/// Dataset → report JSON and CSV in `out_dir`.
pub fn train_file(
    target: Chain,
    dataset_path: &Path,
    specs: &[ModelSpec],
    opts: &ExperimentOptions,
    out_dir: &Path,
) -> Result<MetricsReport, PipelineError> {
    if !dataset_path.exists() {
        return Err(PipelineError::MissingInput(dataset_path.to_owned()));
    }
    let table = DatasetTable::load(dataset_path)?;
    let report = run_experiments(&table, target, specs, opts)?;
    let json = out_dir.join(artifacts::report_json(target.as_str()));
    write_artifact(&json, |w| {
        serde_json::to_writer_pretty(&mut *w, &report).map_err(|source| PipelineError::Json {
            path: json.clone(),
            source,
        })?;
        w.write_all(b"\n").map_err(io_err(&json))
    })?;
    let csv_path = out_dir.join(artifacts::report_csv(target.as_str()));
    write_artifact(&csv_path, |w| {
        ml::write_report_csv(&report, w).map_err(|e| PipelineError::Sentiment(e.into()))
    })?;
    Ok(report)
}

/// Report JSON files → aligned text table.
pub fn report_file(reports: &[PathBuf], output: &Path) -> Result<String, PipelineError> {
    if reports.is_empty() {
        return Err(PipelineError::Config("no reports to render".into()));
    }
    let mut parsed = Vec::new();
    for p in reports {
        let r: MetricsReport = serde_json::from_reader(open(p)?).map_err(|source| PipelineError::Json {
            path: p.clone(),
            source,
        })?;
        parsed.push(r);
    }
    let text = render_table(&parsed);
    write_artifact(output, |w| w.write_all(text.as_bytes()).map_err(io_err(output)))?;
    Ok(text)
}

/// Stage runner bound to a configuration.
pub struct Pipeline {
    pub config: PipelineConfig,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        Pipeline { config }
    }

    fn work(&self, name: &str) -> PathBuf {
        self.config.paths.work_dir.join(name)
    }

    fn require<'a>(&self, p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, PipelineError> {
        p.as_deref()
            .ok_or_else(|| PipelineError::Config(format!("paths.{key} is not set")))
    }

    /// Lexicon overrides must exist before any stage starts.
    pub fn check_lexicons(&self) -> Result<(), PipelineError> {
        let l = &self.config.lexicons;
        for p in [&l.english, &l.financial, &l.abbreviations, &l.vader, &l.blob]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(PipelineError::Config(format!(
                    "lexicon {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn decode(&self) -> Result<DecodeStats, PipelineError> {
        let input = self.require(&self.config.paths.transactions, "transactions")?;
        decode_file(input, &self.work(artifacts::TEXTS), &self.config.decode_options())
    }

    pub fn clean(&self) -> Result<CleanSummary, PipelineError> {
        self.check_lexicons()?;
        let pre = load_preprocessor(&self.config.lexicons, &self.config.clean)?;
        clean_files(&self.work(artifacts::TEXTS), &self.config.paths.work_dir, &pre)
    }

    pub fn sentiment(&self) -> Result<(), PipelineError> {
        self.check_lexicons()?;
        let scorer = load_scorer(&self.config.lexicons)?;
        sentiment_files(
            &self.work(artifacts::FINANCIAL),
            &self.work(artifacts::RAW_FINANCIAL),
            self.config.paths.external_features.as_deref(),
            &self.config.paths.work_dir,
            &scorer,
            self.config.sentiment.correlation_threshold,
        )
    }

    pub fn topics(&self) -> Result<Vec<Chain>, PipelineError> {
        let corpus = match self.config.topics.corpus.as_str() {
            "financial" => artifacts::FINANCIAL,
            _ => artifacts::CORPUS,
        };
        topics_files(
            &self.work(corpus),
            &self.config.paths.work_dir,
            &self.config.lda_config(),
            self.config.topics.top_n,
        )
    }

    pub fn dataset(&self, target: Chain) -> Result<DatasetTable, PipelineError> {
        self.check_lexicons()?;
        let key = format!("prices_{}", target.as_str());
        let prices = self
            .config
            .prices(target)
            .ok_or_else(|| PipelineError::Config(format!("paths.{key} is not set")))?;
        let scorer = load_scorer(&self.config.lexicons)?;
        dataset_file(
            target,
            prices,
            &self.work(artifacts::FINANCIAL),
            Some(&self.work(artifacts::RAW_FINANCIAL)),
            self.config.paths.external_features.as_deref(),
            &self.work(&artifacts::dataset(target.as_str())),
            &scorer,
        )
    }

    pub fn train(&self, target: Chain) -> Result<MetricsReport, PipelineError> {
        let specs = self.config.grids()?;
        train_file(
            target,
            &self.work(&artifacts::dataset(target.as_str())),
            &specs,
            &self.config.experiment_options()?,
            &self.config.paths.work_dir,
        )
    }

    pub fn report(&self) -> Result<String, PipelineError> {
        let reports: Vec<PathBuf> = self
            .config
            .train
            .targets
            .iter()
            .map(|t| self.work(&artifacts::report_json(t.as_str())))
            .collect();
        report_file(&reports, &self.work(artifacts::REPORT_TEXT))
    }

    /// Every stage in order, for every configured target.
    pub fn run_all(&self) -> Result<String, PipelineError> {
        self.check_lexicons()?;
        self.decode()?;
        self.clean()?;
        self.sentiment()?;
        self.topics()?;
        for &t in &self.config.train.targets {
            self.dataset(t)?;
            self.train(t)?;
        }
        self.report()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_then_rename() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/a.csv");
        write_artifact(&path, |w| w.write_all(b"x\n").map_err(io_err(&path))).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "x\n");
        assert!(!partial_path(&path).exists());

        let failed = dir.path().join("b.csv");
        let r = write_artifact(&failed, |w| {
            w.write_all(b"half").unwrap();
            Err(PipelineError::Config("boom".into()))
        });
        assert!(r.is_err());
        assert!(!failed.exists());
        assert!(partial_path(&failed).exists());
    }

    #[test]
    fn missing_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let r = decode_file(
            &dir.path().join("none"),
            &dir.path().join("o"),
            &DecodeOptions::default(),
        );
        assert!(matches!(r, Err(PipelineError::MissingInput(_))));
        let cfg = PipelineConfig::from_str("[lexicons]\nvader = \"nope.tsv\"\n", dir.path()).unwrap();
        assert!(matches!(
            Pipeline::new(cfg).sentiment(),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn empty_decode() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("tx.ndjson");
        std::fs::write(&input, "").unwrap();
        let out = dir.path().join("texts.ndjson");
        let stats = decode_file(&input, &out, &DecodeOptions::default()).unwrap();
        assert_eq!(stats.texts, 0);
        assert_eq!(std::fs::read(&out).unwrap(), b"");
    }
}
