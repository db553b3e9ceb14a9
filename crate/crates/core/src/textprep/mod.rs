//! Cleanup of decoded texts into the general corpus and the financial
//! sub-corpus.

mod clean;
mod lexicon;

pub use clean::{
    clean_text, ends_with_base64_padding, has_long_run, remove_noise, remove_sandwiched_digits,
    remove_symbols, remove_urls, strip_artifacts, too_short_or_numeric, Cleaner,
};
pub use lexicon::{AbbreviationMap, FinancialLexicon, LexiconError, Vocabulary, WordSet};

use std::io::{BufRead, Write};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::txdecoder::{utc_seconds, Chain, TextRecord};

/// One surviving text with its tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanText {
    pub chain: Chain,
    pub text: String,
    pub tokens: Vec<String>,
    #[serde(with = "utc_seconds")]
    pub block_timestamp: DateTime<Utc>,
}

/// Unicode word segmentation.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(str::to_owned).collect()
}

/// Keeps tokens found in the vocabulary, in order.
pub fn remove_oov(tokens: &[String], vocabulary: &Vocabulary) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| vocabulary.contains(t))
        .cloned()
        .collect()
}

pub fn financial_filter(record: &CleanText, lexicon: &FinancialLexicon) -> bool {
    record.tokens.iter().any(|t| lexicon.contains(t))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpora {
    pub corpus: Vec<CleanText>,
    pub financial: Vec<CleanText>,
}

/// The cleanup pipeline with its resources.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub cleaner: Cleaner,
    pub abbreviations: AbbreviationMap,
    pub vocabulary: Vocabulary,
}

impl Preprocessor {
    pub fn bundled() -> Self {
        Preprocessor {
            cleaner: Cleaner::default(),
            abbreviations: AbbreviationMap::bundled(),
            vocabulary: Vocabulary::new(Vocabulary::bundled_english(), FinancialLexicon::bundled())
                .expect("bundled vocabulary is nonempty"),
        }
    }

    pub fn lexicon(&self) -> &FinancialLexicon {
        self.vocabulary.financial()
    }

    /// clean → expand abbreviations → tokenize → OOV removal. The text of the
    /// result is its tokens joined by single spaces.
    pub fn process_text(&self, raw: &str) -> Option<(String, Vec<String>)> {
        let cleaned = self.cleaner.clean(raw)?;
        let expanded = self.abbreviations.expand(&cleaned);
        let tokens = remove_oov(&tokenize(&expanded), &self.vocabulary);
        let text = tokens.join(" ");
        if tokens.is_empty() || text.chars().count() < self.cleaner.min_len {
            return None;
        }
        Some((text, tokens))
    }

    pub fn process(&self, record: &TextRecord) -> Option<CleanText> {
        let (text, tokens) = self.process_text(&record.text)?;
        Some(CleanText {
            chain: record.chain,
            text,
            tokens,
            block_timestamp: record.block_timestamp,
        })
    }

    /// Minimal variant for raw sentiment: steps 1 and 8 only, original case
    /// kept; tokens are the lowercased words, used only for the financial
    /// filter.
    pub fn process_raw(&self, record: &TextRecord) -> Option<CleanText> {
        let text = self.cleaner.minimal(&record.text)?;
        let tokens = tokenize(&text.to_lowercase());
        Some(CleanText {
            chain: record.chain,
            text,
            tokens,
            block_timestamp: record.block_timestamp,
        })
    }

    pub fn build_corpora(&self, records: &[TextRecord]) -> Corpora {
        let corpus: Vec<CleanText> = records.par_iter().filter_map(|r| self.process(r)).collect();
        let financial = corpus
            .iter()
            .filter(|c| financial_filter(c, self.lexicon()))
            .cloned()
            .collect::<Vec<_>>();
        log::info!(
            "corpus: {} of {} texts kept, {} financial",
            corpus.len(),
            records.len(),
            financial.len()
        );
        Corpora { corpus, financial }
    }

    pub fn build_raw_financial(&self, records: &[TextRecord]) -> Vec<CleanText> {
        let raw: Vec<CleanText> = records
            .par_iter()
            .filter_map(|r| self.process_raw(r))
            .filter(|c| financial_filter(c, self.lexicon()))
            .collect();
        log::info!("raw financial corpus: {} texts", raw.len());
        raw
    }
}

/// Reads NDJSON records of any serde type, skipping blank lines.
pub fn read_ndjson<T, R>(input: R) -> std::io::Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
{
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1))
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_ndjson<T: Serialize, W: Write>(items: &[T], mut output: W) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut output, item)?;
        output.write_all(b"\n")?;
    }
    output.flush()
}
