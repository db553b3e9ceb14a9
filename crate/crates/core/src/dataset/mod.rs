//! Price series, next-day labels, per-day document aggregation and the
//! supervised table consumed by the classifiers.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

use crate::sentiment::{ExternalFeatures, Scorer, SentimentVector, BASE_FEATURES};
use crate::textprep::CleanText;
use crate::txdecoder::Chain;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Input { row: usize, message: String },
    #[error("need at least {needed} items, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("examples are not sorted by date")]
    Unsorted,
}

fn input(row: usize, message: impl Into<String>) -> DatasetError {
    DatasetError::Input {
        row,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub currency: Chain,
    /// Strictly increasing dates, positive closes.
    pub points: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn from_closes(currency: Chain, start: NaiveDate, closes: &[f64]) -> Self {
        PriceSeries {
            currency,
            points: closes
                .iter()
                .enumerate()
                .map(|(i, c)| (start + chrono::Days::new(i as u64), *c))
                .collect(),
        }
    }
}

/// Reads a `Date,Close` CSV (extra columns are ignored). Rows may come in
/// any order; the result is sorted. Row numbers in errors count data rows
/// from 1.
pub fn prices_from_reader<R: Read>(currency: Chain, input_csv: R) -> Result<PriceSeries, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input_csv);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| input(0, format!("missing {name} column")))
    };
    let (di, ci) = (col("Date")?, col("Close")?);
    let mut by_date = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| input(row, e.to_string()))?;
        let (d, c) = (rec.get(di).unwrap_or(""), rec.get(ci).unwrap_or(""));
        let date =
            NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|_| input(row, format!("bad date {d:?}")))?;
        let close: f64 = c.parse().map_err(|_| input(row, format!("bad close {c:?}")))?;
        if !(close > 0.0 && close.is_finite()) {
            return Err(input(row, format!("close must be positive, got {c}")));
        }
        if by_date.insert(date, close).is_some() {
            return Err(input(row, format!("duplicate date {date}")));
        }
    }
    Ok(PriceSeries {
        currency,
        points: by_date.into_iter().collect(),
    })
}

pub fn load_prices(currency: Chain, path: &Path) -> Result<PriceSeries, DatasetError> {
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_owned(),
        source,
    })?;
    prices_from_reader(currency, file)
}

/// 1 when the next close is strictly higher, else 0. The last day has no
/// label.
pub fn make_labels(series: &PriceSeries) -> Result<Vec<(NaiveDate, u8)>, DatasetError> {
    if series.len() < 2 {
        return Err(DatasetError::TooFew {
            needed: 2,
            got: series.len(),
        });
    }
    Ok(series
        .points
        .windows(2)
        .map(|w| (w[0].0, u8::from(w[1].1 > w[0].1)))
        .collect())
}

/// ln(close_t / close_{t-1}); the first day has no value.
pub fn log_return(series: &PriceSeries) -> Vec<(NaiveDate, f64)> {
    series
        .points
        .windows(2)
        .map(|w| (w[1].0, (w[1].1 / w[0].1).ln()))
        .collect()
}

/// 1 when today's close is strictly above yesterday's.
pub fn price_move_today(series: &PriceSeries) -> Vec<(NaiveDate, u8)> {
    series
        .points
        .windows(2)
        .map(|w| (w[1].0, u8::from(w[1].1 > w[0].1)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DailyDocument {
    pub date: NaiveDate,
    /// Unique texts ordered by first timestamp, then text.
    pub lines: Vec<String>,
}

impl DailyDocument {
    pub fn document(&self) -> String {
        self.lines.join("\n")
    }
}

/// Buckets texts of any chain by UTC day, keeping each distinct string once.
pub fn aggregate_daily(records: &[CleanText]) -> Vec<DailyDocument> {
    let mut days: BTreeMap<NaiveDate, BTreeMap<&str, i64>> = BTreeMap::new();
    for r in records {
        if r.text.is_empty() {
            continue;
        }
        let ts = r.block_timestamp.timestamp();
        days.entry(r.block_timestamp.date_naive())
            .or_default()
            .entry(r.text.as_str())
            .and_modify(|t| *t = (*t).min(ts))
            .or_insert(ts);
    }
    days.into_iter()
        .map(|(date, texts)| {
            let mut v: Vec<(i64, &str)> = texts.into_iter().map(|(s, t)| (t, s)).collect();
            v.sort();
            DailyDocument {
                date,
                lines: v.into_iter().map(|(_, s)| s.to_owned()).collect(),
            }
        })
        .collect()
}

/// Number of training items: ⌊fraction · N⌋. Dates must be non-decreasing.
pub fn split_point(dates: &[NaiveDate], train_fraction: f64) -> Result<usize, DatasetError> {
    if dates.len() < 20 {
        return Err(DatasetError::TooFew {
            needed: 20,
            got: dates.len(),
        });
    }
    if dates.windows(2).any(|w| w[1] < w[0]) {
        return Err(DatasetError::Unsorted);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(input(
            0,
            format!("train fraction {train_fraction} outside (0, 1)"),
        ));
    }
    Ok((train_fraction * dates.len() as f64).floor() as usize)
}

pub fn chrono_split<T>(
    examples: &[T],
    date: impl Fn(&T) -> NaiveDate,
    train_fraction: f64,
) -> Result<(&[T], &[T]), DatasetError> {
    let dates: Vec<NaiveDate> = examples.iter().map(date).collect();
    let n = split_point(&dates, train_fraction)?;
    Ok(examples.split_at(n))
}

/// Fractions of 0s and 1s.
pub fn class_balance(labels: &[u8]) -> (f64, f64) {
    if labels.is_empty() {
        return (0.0, 0.0);
    }
    let ones = labels.iter().filter(|&&l| l == 1).count() as f64;
    let n = labels.len() as f64;
    ((n - ones) / n, ones / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyExample {
    pub date: NaiveDate,
    pub document: String,
    pub sentiment: SentimentVector,
    /// Sentiment of the minimally processed texts of the same day.
    pub raw_sentiment: SentimentVector,
    pub price_move_today: u8,
    pub log_return_today: f64,
    pub label: u8,
}

pub const PRICE_FEATURES: [&str; 2] = ["price_move_today", "log_return_today"];
pub const RAW_PREFIX: &str = "raw_";

/// Joins prices with per-day documents. Days lacking a document, a previous
/// close or a next close are skipped. A day without raw text gets the score
/// of the empty document.
pub fn assemble(
    prices: &PriceSeries,
    documents: &[DailyDocument],
    raw_documents: &[DailyDocument],
    external: Option<&ExternalFeatures>,
    scorer: &Scorer,
) -> Result<Vec<DailyExample>, DatasetError> {
    let labels: BTreeMap<NaiveDate, u8> = make_labels(prices)?.into_iter().collect();
    let returns: BTreeMap<NaiveDate, f64> = log_return(prices).into_iter().collect();
    let moves: BTreeMap<NaiveDate, u8> = price_move_today(prices).into_iter().collect();
    let raw: BTreeMap<NaiveDate, String> = raw_documents.iter().map(|d| (d.date, d.document())).collect();

    let kept: Vec<&DailyDocument> = documents
        .iter()
        .filter(|d| labels.contains_key(&d.date) && returns.contains_key(&d.date))
        .collect();
    let texts: Vec<(NaiveDate, String)> = kept.iter().map(|d| (d.date, d.document())).collect();
    let raw_texts: Vec<(NaiveDate, String)> = kept
        .iter()
        .map(|d| (d.date, raw.get(&d.date).cloned().unwrap_or_default()))
        .collect();
    let missing_raw = kept.iter().filter(|d| !raw.contains_key(&d.date)).count();
    if missing_raw > 0 {
        log::warn!("{missing_raw} day(s) have no raw text; scored as empty documents");
    }
    let scored = scorer.score_days(&texts);
    let raw_scored = scorer.score_days(&raw_texts);

    log::info!(
        "{} of {} documented days have labels and returns",
        kept.len(),
        documents.len()
    );
    Ok(texts
        .into_iter()
        .zip(scored)
        .zip(raw_scored)
        .map(|(((date, document), (_, mut sentiment)), (_, raw_sentiment))| {
            if let Some(ext) = external {
                ext.attach(date, &mut sentiment);
            }
            DailyExample {
                date,
                document,
                sentiment,
                raw_sentiment,
                price_move_today: moves[&date],
                log_return_today: returns[&date],
                label: labels[&date],
            }
        })
        .collect())
}

/// Numeric view of a dataset. Missing values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetTable {
    pub dates: Vec<NaiveDate>,
    pub labels: Vec<u8>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl DatasetTable {
    pub fn from_examples(examples: &[DailyExample], external_columns: &[String]) -> Self {
        let mut columns: Vec<String> = PRICE_FEATURES.iter().map(|s| s.to_string()).collect();
        columns.extend(BASE_FEATURES.iter().map(|s| s.to_string()));
        columns.extend(external_columns.iter().cloned());
        columns.extend(BASE_FEATURES.iter().map(|s| format!("{RAW_PREFIX}{s}")));
        let rows = examples
            .iter()
            .map(|e| {
                let mut r = vec![e.price_move_today as f64, e.log_return_today];
                r.extend(e.sentiment.base_values());
                r.extend(
                    external_columns
                        .iter()
                        .map(|c| e.sentiment.external.get(c).copied().unwrap_or(f64::NAN)),
                );
                r.extend(e.raw_sentiment.base_values());
                r
            })
            .collect();
        DatasetTable {
            dates: examples.iter().map(|e| e.date).collect(),
            labels: examples.iter().map(|e| e.label).collect(),
            columns,
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// `date,label,<columns…>`.
    pub fn write_csv<W: Write>(&self, output: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(output);
        let mut header = vec!["date".to_string(), "label".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for ((d, l), row) in self.dates.iter().zip(&self.labels).zip(&self.rows) {
            let mut rec = vec![d.to_string(), l.to_string()];
            rec.extend(
                row.iter()
                    .map(|x| if x.is_nan() { String::new() } else { x.to_string() }),
            );
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input_csv: R) -> Result<Self, DatasetError> {
        let mut rdr = csv::Reader::from_reader(input_csv);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "date" || &headers[1] != "label" {
            return Err(input(0, "header must start with date,label"));
        }
        let columns: Vec<String> = headers.iter().skip(2).map(str::to_owned).collect();
        let unique: BTreeSet<&String> = columns.iter().collect();
        if unique.len() != columns.len() {
            return Err(input(0, "duplicate column names"));
        }
        let mut t = DatasetTable {
            dates: Vec::new(),
            labels: Vec::new(),
            columns,
            rows: Vec::new(),
        };
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| input(row, e.to_string()))?;
            let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
                .map_err(|_| input(row, format!("bad date {:?}", &rec[0])))?;
            let label = match &rec[1] {
                "0" => 0,
                "1" => 1,
                other => return Err(input(row, format!("bad label {other:?}"))),
            };
            let values = rec
                .iter()
                .skip(2)
                .map(|c| {
                    if c.is_empty() {
                        Ok(f64::NAN)
                    } else {
                        c.parse::<f64>()
                            .map_err(|_| input(row, format!("bad number {c:?}")))
                    }
                })
                .collect::<Result<Vec<f64>, _>>()?;
            t.dates.push(date);
            t.labels.push(label);
            t.rows.push(values);
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::read_csv(file)
    }
}
