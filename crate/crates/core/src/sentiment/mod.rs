//! Per-document sentiment features and correlation-based pruning.

mod blob;
mod correlation;
mod vader;

pub use blob::{find_tokens, Blob, BlobLexicon};
pub use correlation::{pearson_matrix, prune_correlated, FEATURE_ORDER};
pub use vader::{normalize, SentimentLexicon, Vader, VaderScores};

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Input { row: usize, message: String },
}

/// The built-in feature columns, in file order.
pub const BASE_FEATURES: [&str; 6] = ["compound", "neg", "neu", "pos", "polarity", "subjectivity"];

/// Per-day feature rows in date order.
pub type DailyFeatures = Vec<(NaiveDate, SentimentVector)>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SentimentVector {
    pub compound: f64,
    pub neg: f64,
    pub neu: f64,
    pub pos: f64,
    pub polarity: f64,
    pub subjectivity: f64,
    /// Externally supplied columns; a missing key means the value is absent
    /// for that day.
    pub external: BTreeMap<String, f64>,
}

impl SentimentVector {
    pub fn base_values(&self) -> [f64; 6] {
        [
            self.compound,
            self.neg,
            self.neu,
            self.pos,
            self.polarity,
            self.subjectivity,
        ]
    }

    /// Value of a named column, base or external.
    pub fn get(&self, name: &str) -> Option<f64> {
        match BASE_FEATURES.iter().position(|n| *n == name) {
            Some(i) => Some(self.base_values()[i]),
            None => self.external.get(name).copied(),
        }
    }
}

/// Both lexicon scorers.
pub struct Scorer {
    pub vader: Vader,
    pub blob: Blob,
}

impl Scorer {
    pub fn bundled() -> Self {
        Scorer {
            vader: Vader::bundled(),
            blob: Blob::bundled(),
        }
    }

    pub fn score(&self, text: &str) -> SentimentVector {
        let v = self.vader.scores(text);
        let (polarity, subjectivity) = self.blob.scores(text);
        SentimentVector {
            compound: v.compound,
            neg: v.neg,
            neu: v.neu,
            pos: v.pos,
            polarity,
            subjectivity,
            external: BTreeMap::new(),
        }
    }

    /// Scores one document per day, in input order.
    pub fn score_days(&self, docs: &[(NaiveDate, String)]) -> Vec<(NaiveDate, SentimentVector)> {
        docs.par_iter().map(|(d, text)| (*d, self.score(text))).collect()
    }
}

/// Date-keyed extra columns such as transformer sentiment labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalFeatures {
    pub columns: Vec<String>,
    pub rows: BTreeMap<NaiveDate, Vec<Option<f64>>>,
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

impl ExternalFeatures {
    /// CSV with a `date` (or `Date`) first column and named numeric columns.
    /// Empty cells are absent values.
    pub fn from_reader<R: Read>(input: R) -> Result<Self, SentimentError> {
        let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.is_empty() {
            return Ok(ExternalFeatures::default());
        }
        if !headers[0].trim().eq_ignore_ascii_case("date") {
            return Err(SentimentError::Input {
                row: 0,
                message: "first column must be date".into(),
            });
        }
        let columns: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_owned()).collect();
        let mut rows = BTreeMap::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            let date = parse_date(&rec[0]).ok_or_else(|| SentimentError::Input {
                row,
                message: format!("bad date {:?}", &rec[0]),
            })?;
            let mut values = Vec::with_capacity(columns.len());
            for cell in rec.iter().skip(1) {
                let cell = cell.trim();
                values.push(if cell.is_empty() {
                    None
                } else {
                    Some(cell.parse::<f64>().map_err(|_| SentimentError::Input {
                        row,
                        message: format!("bad number {cell:?}"),
                    })?)
                });
            }
            if rows.insert(date, values).is_some() {
                return Err(SentimentError::Input {
                    row,
                    message: format!("duplicate date {date}"),
                });
            }
        }
        Ok(ExternalFeatures { columns, rows })
    }

    pub fn load(path: &Path) -> Result<Self, SentimentError> {
        let file = std::fs::File::open(path).map_err(|source| SentimentError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_reader(file)
    }

    /// Copies this day's present values into `v.external`.
    pub fn attach(&self, date: NaiveDate, v: &mut SentimentVector) {
        if let Some(values) = self.rows.get(&date) {
            for (name, value) in self.columns.iter().zip(values) {
                if let Some(x) = value {
                    v.external.insert(name.clone(), *x);
                }
            }
        }
    }
}

/// Writes `date,compound,neg,neu,pos,polarity,subjectivity[,external…]`.
pub fn write_features<W: Write>(
    rows: &[(NaiveDate, SentimentVector)],
    external_columns: &[String],
    output: W,
) -> Result<(), SentimentError> {
    let mut w = csv::Writer::from_writer(output);
    let mut header: Vec<String> = vec!["date".into()];
    header.extend(BASE_FEATURES.iter().map(|s| s.to_string()));
    header.extend(external_columns.iter().cloned());
    w.write_record(&header)?;
    for (date, v) in rows {
        let mut rec = vec![date.to_string()];
        rec.extend(v.base_values().iter().map(|x| x.to_string()));
        rec.extend(
            external_columns
                .iter()
                .map(|c| v.external.get(c).map(|x| x.to_string()).unwrap_or_default()),
        );
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a file produced by [`write_features`]. Returns the external column
/// names alongside the rows.
pub fn read_features<R: Read>(input: R) -> Result<(Vec<String>, DailyFeatures), SentimentError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let expected = std::iter::once("date").chain(BASE_FEATURES);
    if headers.len() < 7 || !headers.iter().zip(expected).all(|(h, e)| h == e) {
        return Err(SentimentError::Input {
            row: 0,
            message: "unexpected feature header".into(),
        });
    }
    let external: Vec<String> = headers.iter().skip(7).map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let bad = |message: String| SentimentError::Input { row, message };
        let date = parse_date(&rec[0]).ok_or_else(|| bad(format!("bad date {:?}", &rec[0])))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}")));
        let mut v = SentimentVector {
            compound: num(&rec[1])?,
            neg: num(&rec[2])?,
            neu: num(&rec[3])?,
            pos: num(&rec[4])?,
            polarity: num(&rec[5])?,
            subjectivity: num(&rec[6])?,
            external: BTreeMap::new(),
        };
        for (name, cell) in external.iter().zip(rec.iter().skip(7)) {
            if !cell.is_empty() {
                v.external.insert(name.clone(), num(cell)?);
            }
        }
        rows.push((date, v));
    }
    Ok((external, rows))
}
