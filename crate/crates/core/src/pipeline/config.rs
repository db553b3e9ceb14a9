//! TOML pipeline configuration. Relative paths resolve against the
//! directory holding the configuration file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::PipelineError;
use crate::ml::{default_grids, parse_grids, ExperimentOptions, FeatureConfig, ModelSpec};
use crate::topics::LdaConfig;
use crate::txdecoder::{Chain, ChainFilter, DecodeOptions, Printability};

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// NDJSON raw transactions.
    pub transactions: Option<PathBuf>,
    pub prices_btc: Option<PathBuf>,
    pub prices_eth: Option<PathBuf>,
    /// Optional date-keyed CSV of extra sentiment columns.
    pub external_features: Option<PathBuf>,
    /// Directory receiving every artifact.
    pub work_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            transactions: None,
            prices_btc: None,
            prices_eth: None,
            external_features: None,
            work_dir: PathBuf::from("out"),
        }
    }
}

/// Overrides for the bundled word lists and lexicons.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Lexicons {
    pub english: Option<PathBuf>,
    pub financial: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub vader: Option<PathBuf>,
    pub blob: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DecodeSection {
    pub chain: String,
    pub min_chars: usize,
    pub min_ratio: f64,
    pub parallel: bool,
}

impl Default for DecodeSection {
    fn default() -> Self {
        DecodeSection {
            chain: "both".into(),
            min_chars: 2,
            min_ratio: 0.9,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CleanSection {
    pub max_run: usize,
    pub min_len: usize,
}

impl Default for CleanSection {
    fn default() -> Self {
        CleanSection {
            max_run: 25,
            min_len: 2,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SentimentSection {
    pub correlation_threshold: f64,
}

impl Default for SentimentSection {
    fn default() -> Self {
        SentimentSection {
            correlation_threshold: 0.8,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TopicsSection {
    pub k: usize,
    pub iterations: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub top_n: usize,
    /// `corpus` or `financial`.
    pub corpus: String,
}

impl Default for TopicsSection {
    fn default() -> Self {
        TopicsSection {
            k: 4,
            iterations: 1000,
            alpha: None,
            beta: 0.01,
            top_n: 10,
            corpus: "corpus".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub targets: Vec<Chain>,
    pub train_fraction: f64,
    pub folds: usize,
    /// Grid TOML; the full default grid when absent.
    pub grid: Option<PathBuf>,
    pub configs: Vec<String>,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            targets: vec![Chain::Btc, Chain::Eth],
            train_fraction: 0.85,
            folds: 5,
            grid: None,
            configs: FeatureConfig::ALL.iter().map(|c| c.label().to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub lexicons: Lexicons,
    pub decode: DecodeSection,
    pub clean: CleanSection,
    pub sentiment: SentimentSection,
    pub topics: TopicsSection,
    pub train: TrainSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            paths: Paths::default(),
            lexicons: Lexicons::default(),
            decode: DecodeSection::default(),
            clean: CleanSection::default(),
            sentiment: SentimentSection::default(),
            topics: TopicsSection::default(),
            train: TrainSection::default(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn resolve_opt(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(p) = p {
        resolve(base, p);
    }
}

impl PipelineConfig {
    /// Parses and validates; relative paths are joined onto `base`.
    pub fn from_str(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        resolve_opt(base, &mut cfg.paths.transactions);
        resolve_opt(base, &mut cfg.paths.prices_btc);
        resolve_opt(base, &mut cfg.paths.prices_eth);
        resolve_opt(base, &mut cfg.paths.external_features);
        resolve(base, &mut cfg.paths.work_dir);
        let l = &mut cfg.lexicons;
        for p in [
            &mut l.english,
            &mut l.financial,
            &mut l.abbreviations,
            &mut l.vader,
            &mut l.blob,
        ] {
            resolve_opt(base, p);
        }
        resolve_opt(base, &mut cfg.train.grid);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_str(&text, base)
    }

    fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.decode
            .chain
            .parse::<ChainFilter>()
            .map_err(PipelineError::Config)?;
        if !(self.decode.min_ratio > 0.0 && self.decode.min_ratio <= 1.0) {
            return bad(format!(
                "decode.min_ratio {} outside (0, 1]",
                self.decode.min_ratio
            ));
        }
        if self.clean.max_run == 0 {
            return bad("clean.max_run must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.sentiment.correlation_threshold) {
            return bad("sentiment.correlation_threshold outside [0, 1]".into());
        }
        if self.topics.k == 0 || self.topics.iterations == 0 || self.topics.top_n == 0 {
            return bad("topics.k, topics.iterations and topics.top_n must be positive".into());
        }
        if !matches!(self.topics.corpus.as_str(), "corpus" | "financial") {
            return bad(format!(
                "topics.corpus must be corpus or financial, got {}",
                self.topics.corpus
            ));
        }
        if !(self.train.train_fraction > 0.0 && self.train.train_fraction < 1.0) {
            return bad("train.train_fraction outside (0, 1)".into());
        }
        if self.train.folds == 0 {
            return bad("train.folds must be positive".into());
        }
        self.feature_configs()?;
        Ok(())
    }

    pub fn decode_options(&self) -> DecodeOptions {
        DecodeOptions {
            chain: self.decode.chain.parse().expect("validated"),
            rule: Printability {
                min_chars: self.decode.min_chars,
                min_ratio: self.decode.min_ratio,
            },
            parallel: self.decode.parallel,
            ..DecodeOptions::default()
        }
    }

    pub fn lda_config(&self) -> LdaConfig {
        LdaConfig {
            k: self.topics.k,
            alpha: self.topics.alpha,
            beta: self.topics.beta,
            iterations: self.topics.iterations,
            seed: self.seed,
        }
    }

    pub fn feature_configs(&self) -> Result<Vec<FeatureConfig>, PipelineError> {
        self.train
            .configs
            .iter()
            .map(|s| {
                FeatureConfig::from_label(s)
                    .ok_or_else(|| PipelineError::Config(format!("unknown feature configuration {s:?}")))
            })
            .collect()
    }

    pub fn experiment_options(&self) -> Result<ExperimentOptions, PipelineError> {
        Ok(ExperimentOptions {
            train_fraction: self.train.train_fraction,
            folds: self.train.folds,
            correlation_threshold: self.sentiment.correlation_threshold,
            configs: self.feature_configs()?,
            seed: self.seed,
        })
    }

    pub fn grids(&self) -> Result<Vec<ModelSpec>, PipelineError> {
        match &self.train.grid {
            None => Ok(default_grids()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
                    path: path.clone(),
                    source,
                })?;
                let table: toml::Table = toml::from_str(&text)
                    .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
                Ok(parse_grids(&table)?)
            }
        }
    }

    pub fn prices(&self, target: Chain) -> Option<&Path> {
        match target {
            Chain::Btc => self.paths.prices_btc.as_deref(),
            Chain::Eth => self.paths.prices_eth.as_deref(),
        }
    }
}
