//! Detection and decoding of arbitrary text embedded in transactions.
//!
//! Input is newline-delimited JSON, one transaction per line:
//!
//! ```text
//! {"chain":"btc","hash":"4a5e1e...","block_timestamp":"2009-01-03T18:15:05Z",
//!  "payloads":[["coinbase_input","04ffff001d0104455468..."]]}
//! ```
//!
//! Each payload is routed to the detectors for its location and every
//! qualifying text becomes one [`TextRecord`].

mod script;
mod text;

pub use script::{
    classify_output, extract_op_return, Instruction, Instructions, OutputTemplate, ScriptError,
};
pub use text::{
    extract_ascii_address, extract_coinbase_text, extract_eth_calldata_text, extract_pubkey_text,
    is_text_char, Printability,
};

use std::io::{BufRead, Write};

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chain {
    Btc,
    Eth,
}

impl Chain {
    pub fn as_str(self) -> &'static str {
        match self {
            Chain::Btc => "btc",
            Chain::Eth => "eth",
        }
    }
}

impl std::fmt::Display for Chain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Chain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "btc" => Ok(Chain::Btc),
            "eth" => Ok(Chain::Eth),
            other => Err(format!("unknown chain {other:?}")),
        }
    }
}

/// Which chains a decode run keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChainFilter {
    Btc,
    Eth,
    #[default]
    Both,
}

impl ChainFilter {
    pub fn accepts(self, chain: Chain) -> bool {
        match self {
            ChainFilter::Both => true,
            ChainFilter::Btc => chain == Chain::Btc,
            ChainFilter::Eth => chain == Chain::Eth,
        }
    }
}

impl std::str::FromStr for ChainFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "btc" => Ok(ChainFilter::Btc),
            "eth" => Ok(ChainFilter::Eth),
            "both" => Ok(ChainFilter::Both),
            other => Err(format!("unknown chain filter {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadLocation {
    CoinbaseInput,
    OutputScript,
    TxInputData,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payload {
    pub location: PayloadLocation,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTxRecord {
    pub chain: Chain,
    pub hash: String,
    pub block_timestamp: DateTime<Utc>,
    pub payloads: Vec<Payload>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertionMethod {
    OpReturn,
    CoinbaseScript,
    PubkeyPayload,
    AsciiAddress,
    EthCalldata,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextRecord {
    pub chain: Chain,
    pub text: String,
    #[serde(with = "utc_seconds")]
    pub block_timestamp: DateTime<Utc>,
    pub method: InsertionMethod,
    pub source_hash: String,
}

/// RFC 3339 with a `Z` suffix and second precision.
pub mod utc_seconds {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ts.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_timestamp(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

impl RecordError {
    pub fn line(&self) -> usize {
        match self {
            RecordError::Json { line, .. } | RecordError::Invalid { line, .. } => *line,
        }
    }
}

/// Non-fatal problem met while decoding one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeWarning {
    pub source_hash: String,
    pub payload_index: usize,
    pub error: ScriptError,
}

#[derive(Deserialize)]
struct WireTx {
    chain: String,
    hash: String,
    block_timestamp: String,
    #[serde(default)]
    payloads: Vec<(String, String)>,
}

/// Accepts RFC 3339, `YYYY-MM-DD HH:MM:SS[ UTC]` and naive `T`-separated
/// forms (taken as UTC). Sub-second precision is truncated.
pub fn parse_timestamp(raw: &str) -> Result<DateTime<Utc>, String> {
    let raw = raw.trim();
    let parsed = DateTime::parse_from_rfc3339(raw)
        .map(|dt| dt.with_timezone(&Utc))
        .or_else(|_| {
            let naive = raw.strip_suffix(" UTC").unwrap_or(raw);
            NaiveDateTime::parse_from_str(naive, "%Y-%m-%d %H:%M:%S%.f")
                .or_else(|_| NaiveDateTime::parse_from_str(naive, "%Y-%m-%dT%H:%M:%S%.f"))
                .map(|n| n.and_utc())
        })
        .map_err(|_| format!("unparseable timestamp {raw:?}"))?;
    let secs = parsed.timestamp();
    DateTime::from_timestamp(secs, 0).ok_or_else(|| format!("timestamp out of range {raw:?}"))
}

fn decode_hex(s: &str) -> Result<Vec<u8>, String> {
    let s = s.strip_prefix("0x").unwrap_or(s);
    if !s.len().is_multiple_of(2) {
        return Err(format!("odd-length hex string ({} chars)", s.len()));
    }
    let nibble = |c: u8| -> Result<u8, String> {
        match c {
            b'0'..=b'9' => Ok(c - b'0'),
            b'a'..=b'f' => Ok(c - b'a' + 10),
            b'A'..=b'F' => Ok(c - b'A' + 10),
            _ => Err(format!("non-hex character {:?}", c as char)),
        }
    };
    s.as_bytes()
        .chunks_exact(2)
        .map(|p| Ok((nibble(p[0])? << 4) | nibble(p[1])?))
        .collect()
}

fn parse_location(s: &str) -> Result<PayloadLocation, String> {
    match s {
        "coinbase_input" => Ok(PayloadLocation::CoinbaseInput),
        "output_script" => Ok(PayloadLocation::OutputScript),
        "tx_input_data" => Ok(PayloadLocation::TxInputData),
        other => Err(format!("unknown payload location {other:?}")),
    }
}

/// Parses one NDJSON line. `line_no` is 1-based and only used for errors.
pub fn parse_tx_line(line: &str, line_no: usize) -> Result<RawTxRecord, RecordError> {
    let wire: WireTx = serde_json::from_str(line).map_err(|source| RecordError::Json {
        line: line_no,
        source,
    })?;
    let invalid = |message: String| RecordError::Invalid {
        line: line_no,
        message,
    };
    let chain = wire.chain.parse::<Chain>().map_err(invalid)?;
    let hash = wire.hash.trim().to_owned();
    if hash.is_empty() {
        return Err(invalid("empty transaction hash".into()));
    }
    decode_hex(&hash).map_err(|e| invalid(format!("hash: {e}")))?;
    let block_timestamp = parse_timestamp(&wire.block_timestamp).map_err(invalid)?;
    let payloads = wire
        .payloads
        .iter()
        .enumerate()
        .map(|(i, (loc, hex))| {
            Ok(Payload {
                location: parse_location(loc).map_err(|e| invalid(format!("payload {i}: {e}")))?,
                bytes: decode_hex(hex).map_err(|e| invalid(format!("payload {i}: {e}")))?,
            })
        })
        .collect::<Result<Vec<_>, RecordError>>()?;
    Ok(RawTxRecord {
        chain,
        hash,
        block_timestamp,
        payloads,
    })
}

/// Runs every detector that applies to each payload, in payload order.
pub fn decode_record(tx: &RawTxRecord, rule: &Printability) -> (Vec<TextRecord>, Vec<DecodeWarning>) {
    let mut texts = Vec::new();
    let mut warnings = Vec::new();
    let mut emit = |text: String, method: InsertionMethod| {
        texts.push(TextRecord {
            chain: tx.chain,
            text,
            block_timestamp: tx.block_timestamp,
            method,
            source_hash: tx.hash.clone(),
        })
    };
    for (index, payload) in tx.payloads.iter().enumerate() {
        let bytes = payload.bytes.as_slice();
        match payload.location {
            PayloadLocation::CoinbaseInput => {
                if let Some(t) = extract_coinbase_text(bytes, rule) {
                    emit(t, InsertionMethod::CoinbaseScript);
                }
            }
            PayloadLocation::TxInputData => {
                if let Some(t) = extract_eth_calldata_text(bytes, rule) {
                    emit(t, InsertionMethod::EthCalldata);
                }
            }
            PayloadLocation::OutputScript => match classify_output(bytes) {
                OutputTemplate::NullData => match extract_op_return(bytes) {
                    Ok(Some(data)) => {
                        if let Some(t) = rule.whole_payload(&data) {
                            emit(t, InsertionMethod::OpReturn);
                        }
                    }
                    Ok(None) => {}
                    Err(error) => warnings.push(DecodeWarning {
                        source_hash: tx.hash.clone(),
                        payload_index: index,
                        error,
                    }),
                },
                OutputTemplate::AddressHash { hash, .. } => {
                    if let Some(t) = rule.whole_payload(hash) {
                        emit(t, InsertionMethod::AsciiAddress);
                    }
                }
                OutputTemplate::PubKeys(keys) => {
                    if let Some(t) = extract_pubkey_text(&keys, rule) {
                        emit(t, InsertionMethod::PubkeyPayload);
                    }
                }
                OutputTemplate::Other => {}
            },
        }
    }
    (texts, warnings)
}

/// Counters reported by a stream decode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeStats {
    pub lines: usize,
    pub records: usize,
    pub skipped_chain: usize,
    pub record_errors: usize,
    pub warnings: usize,
    pub texts: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct DecodeOptions {
    pub chain: ChainFilter,
    pub rule: Printability,
    /// Decode batches with the rayon pool; output order is unchanged.
    pub parallel: bool,
    pub batch_size: usize,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions {
            chain: ChainFilter::Both,
            rule: Printability::default(),
            parallel: false,
            batch_size: 4096,
        }
    }
}

enum LineOutcome {
    Blank,
    Skipped,
    Failed,
    Decoded(Vec<TextRecord>, usize),
}

fn process_line(line: &str, line_no: usize, opts: &DecodeOptions) -> LineOutcome {
    if line.trim().is_empty() {
        return LineOutcome::Blank;
    }
    match parse_tx_line(line, line_no) {
        Err(e) => {
            log::warn!("skipping record: {e}");
            LineOutcome::Failed
        }
        Ok(tx) if !opts.chain.accepts(tx.chain) => LineOutcome::Skipped,
        Ok(tx) => {
            let (texts, warnings) = decode_record(&tx, &opts.rule);
            for w in &warnings {
                log::warn!("{} payload {}: {}", w.source_hash, w.payload_index, w.error);
            }
            LineOutcome::Decoded(texts, warnings.len())
        }
    }
}

/// Streams NDJSON transactions from `input` to NDJSON text records on
/// `output`. Bad lines are counted and skipped; only I/O errors abort.
pub fn decode_stream<R: BufRead, W: Write>(
    input: R,
    mut output: W,
    opts: &DecodeOptions,
) -> std::io::Result<DecodeStats> {
    let mut stats = DecodeStats::default();
    let mut lines = input.lines();
    let mut line_no = 0usize;
    let batch_size = opts.batch_size.max(1);
    loop {
        let mut batch = Vec::with_capacity(batch_size);
        for line in lines.by_ref().take(batch_size) {
            line_no += 1;
            batch.push((line_no, line?));
        }
        if batch.is_empty() {
            break;
        }
        let outcomes: Vec<LineOutcome> = if opts.parallel {
            batch.par_iter().map(|(n, l)| process_line(l, *n, opts)).collect()
        } else {
            batch.iter().map(|(n, l)| process_line(l, *n, opts)).collect()
        };
        for outcome in outcomes {
            match outcome {
                LineOutcome::Blank => continue,
                LineOutcome::Skipped => stats.skipped_chain += 1,
                LineOutcome::Failed => stats.record_errors += 1,
                LineOutcome::Decoded(texts, warnings) => {
                    stats.records += 1;
                    stats.warnings += warnings;
                    for t in texts {
                        serde_json::to_writer(&mut output, &t)?;
                        output.write_all(b"\n")?;
                        stats.texts += 1;
                    }
                }
            }
            stats.lines += 1;
        }
    }
    output.flush()?;
    Ok(stats)
}

/// Serializes a timestamp the way text records carry it.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GENESIS_LINE: &str = r#"{"chain":"btc","hash":"4a5e1e4baab89f3a32518a88c31bc87f618f76673e2cc77ab2127b7afdeda33b","block_timestamp":"2009-01-03T18:15:05Z","payloads":[["coinbase_input","04ffff001d0104455468652054696d65732030332f4a616e2f32303039204368616e63656c6c6f72206f6e206272696e6b206f66207365636f6e64206261696c6f757420666f722062616e6b73"]]}"#;

    #[test]
    fn parses_genesis_line() {
        let tx = parse_tx_line(GENESIS_LINE, 1).unwrap();
        assert_eq!(tx.chain, Chain::Btc);
        assert_eq!(tx.payloads.len(), 1);
        assert_eq!(tx.payloads[0].location, PayloadLocation::CoinbaseInput);
        assert_eq!(tx.payloads[0].bytes.len(), 77);
        assert_eq!(format_timestamp(&tx.block_timestamp), "2009-01-03T18:15:05Z");
    }

    #[test]
    fn empty_payload_list() {
        let tx = parse_tx_line(
            r#"{"chain":"eth","hash":"ab12","block_timestamp":"2020-03-04T02:23:19Z","payloads":[]}"#,
            3,
        )
        .unwrap();
        assert!(tx.payloads.is_empty());
    }

    #[test]
    fn record_level_errors_carry_line_numbers() {
        assert_eq!(parse_tx_line("not json", 7).unwrap_err().line(), 7);
        let bad_hex = r#"{"chain":"btc","hash":"ab","block_timestamp":"2020-01-01T00:00:00Z","payloads":[["output_script","6a0zz"]]}"#;
        assert!(matches!(
            parse_tx_line(bad_hex, 2),
            Err(RecordError::Invalid { line: 2, .. })
        ));
        let bad_ts = r#"{"chain":"btc","hash":"ab","block_timestamp":"yesterday","payloads":[]}"#;
        assert!(parse_tx_line(bad_ts, 4).is_err());
        let empty_hash = r#"{"chain":"btc","hash":"","block_timestamp":"2020-01-01T00:00:00Z"}"#;
        assert!(parse_tx_line(empty_hash, 5).is_err());
        let bad_loc = r#"{"chain":"btc","hash":"ab","block_timestamp":"2020-01-01T00:00:00Z","payloads":[["witness","00"]]}"#;
        assert!(parse_tx_line(bad_loc, 6).is_err());
    }

    #[test]
    fn timestamps_normalize_to_utc() {
        let ts = parse_timestamp("2016-03-05T20:32:47+01:00").unwrap();
        assert_eq!(format_timestamp(&ts), "2016-03-05T19:32:47Z");
        let ts = parse_timestamp("2016-03-05 19:32:47 UTC").unwrap();
        assert_eq!(format_timestamp(&ts), "2016-03-05T19:32:47Z");
        let ts = parse_timestamp("2016-03-05 19:32:47.250").unwrap();
        assert_eq!(format_timestamp(&ts), "2016-03-05T19:32:47Z");
    }

    #[test]
    fn genesis_decodes_to_coinbase_text() {
        let tx = parse_tx_line(GENESIS_LINE, 1).unwrap();
        let (texts, warnings) = decode_record(&tx, &Printability::default());
        assert!(warnings.is_empty());
        assert_eq!(texts.len(), 1);
        assert_eq!(texts[0].method, InsertionMethod::CoinbaseScript);
        assert!(texts[0].text.starts_with("The Times 03/Jan/2009"));
    }

    #[test]
    fn p2pkh_outputs_without_text() {
        let line = r#"{"chain":"btc","hash":"cd","block_timestamp":"2020-01-01T00:00:00Z","payloads":[["output_script","76a91462e907b15cbf27d5425399ebf6f0fb50ebb88f1888ac"],["output_script","76a914c825a1ecf2a6830c4401620c3a16f1995057c2ab88ac"]]}"#;
        let tx = parse_tx_line(line, 1).unwrap();
        let (texts, warnings) = decode_record(&tx, &Printability::default());
        assert!(texts.is_empty());
        assert!(warnings.is_empty());
    }

    #[test]
    fn op_return_signal() {
        let msg = "Signal for today is 0 % BTC / 100 % USD";
        let mut script = vec![0x6a, msg.len() as u8];
        script.extend_from_slice(msg.as_bytes());
        let tx = RawTxRecord {
            chain: Chain::Btc,
            hash: "ee".into(),
            block_timestamp: parse_timestamp("2015-08-09T19:41:18Z").unwrap(),
            payloads: vec![Payload {
                location: PayloadLocation::OutputScript,
                bytes: script,
            }],
        };
        let (texts, _) = decode_record(&tx, &Printability::default());
        assert_eq!(texts.len(), 1);
        assert_eq!(texts[0].method, InsertionMethod::OpReturn);
        assert_eq!(texts[0].text, msg);
    }

    #[test]
    fn malformed_op_return_is_a_warning() {
        let tx = RawTxRecord {
            chain: Chain::Btc,
            hash: "ff".into(),
            block_timestamp: parse_timestamp("2015-08-09T19:41:18Z").unwrap(),
            payloads: vec![
                Payload {
                    location: PayloadLocation::OutputScript,
                    bytes: vec![0x6a, 0x20, b'h', b'i'],
                },
                Payload {
                    location: PayloadLocation::TxInputData,
                    bytes: b"still decoded".to_vec(),
                },
            ],
        };
        let (texts, warnings) = decode_record(&tx, &Printability::default());
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].payload_index, 0);
        assert_eq!(texts.len(), 1);
        assert_eq!(texts[0].method, InsertionMethod::EthCalldata);
    }

    #[test]
    fn ascii_p2pkh_hash() {
        let mut script = vec![0x76, 0xa9, 0x14];
        script.extend_from_slice(b"this is text padding");
        script.extend_from_slice(&[0x88, 0xac]);
        let tx = RawTxRecord {
            chain: Chain::Btc,
            hash: "aa".into(),
            block_timestamp: parse_timestamp("2014-01-01T00:00:00Z").unwrap(),
            payloads: vec![Payload {
                location: PayloadLocation::OutputScript,
                bytes: script,
            }],
        };
        let (texts, _) = decode_record(&tx, &Printability::default());
        assert_eq!(texts[0].method, InsertionMethod::AsciiAddress);
        assert_eq!(texts[0].text, "this is text padding");
    }

    #[test]
    fn stream_counts_and_skips() {
        let input = format!(
            "{GENESIS_LINE}\nnot json\n\n{}\n",
            r#"{"chain":"eth","hash":"01","block_timestamp":"2020-03-04T02:23:19Z","payloads":[["tx_input_data","686f646c206f6e20636f6d7261646521"]]}"#
        );
        let mut out = Vec::new();
        let stats = decode_stream(input.as_bytes(), &mut out, &DecodeOptions::default()).unwrap();
        assert_eq!(stats.records, 2);
        assert_eq!(stats.record_errors, 1);
        assert_eq!(stats.texts, 2);
        let lines: Vec<TextRecord> = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines[1].text, "hodl on comrade!");
        assert_eq!(lines[1].method, InsertionMethod::EthCalldata);

        let mut out = Vec::new();
        let opts = DecodeOptions {
            chain: ChainFilter::Eth,
            ..DecodeOptions::default()
        };
        let stats = decode_stream(input.as_bytes(), &mut out, &opts).unwrap();
        assert_eq!((stats.records, stats.skipped_chain, stats.texts), (1, 1, 1));
    }

    #[test]
    fn text_record_wire_format() {
        let rec = TextRecord {
            chain: Chain::Eth,
            text: "gm".into(),
            block_timestamp: parse_timestamp("2020-03-04T02:23:19Z").unwrap(),
            method: InsertionMethod::EthCalldata,
            source_hash: "01".into(),
        };
        assert_eq!(
            serde_json::to_string(&rec).unwrap(),
            r#"{"chain":"eth","text":"gm","block_timestamp":"2020-03-04T02:23:19Z","method":"eth_calldata","source_hash":"01"}"#
        );
    }
}
