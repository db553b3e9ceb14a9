use chainsent::dataset::aggregate_daily;
use chainsent::ml::{evaluate, ts_cv_folds};
use chainsent::sentiment::Scorer;
use chainsent::textprep::{
    clean_text, ends_with_base64_padding, has_long_run, too_short_or_numeric, CleanText, Preprocessor,
};
use chainsent::topics::{DocTermMatrix, LdaConfig, LdaSampler};
use chainsent::txdecoder::{decode_stream, extract_op_return, Chain, DecodeOptions, TextRecord};
use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use std::sync::LazyLock;

static SCORER: LazyLock<Scorer> = LazyLock::new(Scorer::bundled);
static PRE: LazyLock<Preprocessor> = LazyLock::new(Preprocessor::bundled);

fn push(data: &[u8]) -> Vec<u8> {
    let mut s = match data.len() {
        0..=75 => vec![data.len() as u8],
        76..=255 => vec![0x4c, data.len() as u8],
        n => vec![0x4d, n as u8, (n >> 8) as u8],
    };
    s.extend_from_slice(data);
    s
}

fn hex(b: &[u8]) -> String {
    b.iter().map(|x| format!("{x:02x}")).collect()
}

fn noisy_text() -> impl Strategy<Value = String> {
    prop_oneof![
        ".*",
        "[a-zA-Z0-9 ,.!?'=/:%$#_-]{0,80}",
        "(b'|https://|www\\.|0x)?[a-zA-Z0-9 ]{0,40}(==)?",
        proptest::collection::vec(
            prop_oneof!["buy", "Bitcoin", "hodl", "moon", "42", "a1b2c3", "\\\\n", "!!", "é", "İ"],
            0..12
        )
        .prop_map(|w| w.join(" ")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn op_return_round_trip(chunks in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..300), 1..4)) {
        let mut script = vec![0x6a];
        for c in &chunks {
            script.extend(push(c));
        }
        let got = extract_op_return(&script).unwrap().unwrap();
        prop_assert_eq!(got, chunks.concat());
    }

    #[test]
    fn op_return_text_survives_decode(text in "[a-zA-Z][a-zA-Z0-9 ,.!?]{0,70}[a-zA-Z.!?]") {
        let mut script = vec![0x6a];
        script.extend(push(text.as_bytes()));
        let line = format!(
            "{{\"chain\":\"btc\",\"hash\":\"00\",\"block_timestamp\":\"2021-05-24T10:59:18Z\",\"payloads\":[[\"output_script\",\"{}\"]]}}\n",
            hex(&script)
        );
        let mut out = Vec::new();
        decode_stream(line.as_bytes(), &mut out, &DecodeOptions::default()).unwrap();
        let rec: TextRecord = serde_json::from_slice(out.split(|&b| b == b'\n').next().unwrap()).unwrap();
        prop_assert_eq!(rec.text, text);
    }

    #[test]
    fn clean_is_idempotent_and_total(s in noisy_text()) {
        if let Some(t) = clean_text(&s) {
            prop_assert_eq!(clean_text(&t), Some(t.clone()));
            prop_assert_eq!(t.to_lowercase(), t.clone());
            prop_assert!(!has_long_run(&t, 25));
            prop_assert!(!too_short_or_numeric(&t, 2));
            prop_assert!(!ends_with_base64_padding(&t));
            prop_assert!(!t.contains("://") && !t.contains("www."));
        }
    }

    #[test]
    fn financial_is_subset_of_corpus(texts in proptest::collection::vec(noisy_text(), 0..20)) {
        let ts = Utc.timestamp_opt(1_600_000_000, 0).unwrap();
        let records: Vec<TextRecord> = texts
            .into_iter()
            .map(|text| TextRecord {
                chain: Chain::Eth,
                text,
                block_timestamp: ts,
                method: chainsent::txdecoder::InsertionMethod::EthCalldata,
                source_hash: "ab".into(),
            })
            .collect();
        let c = PRE.build_corpora(&records);
        for f in &c.financial {
            prop_assert!(c.corpus.contains(f));
        }
    }

    #[test]
    fn vader_proportions_sum_to_one(s in noisy_text()) {
        let v = SCORER.score(&s);
        prop_assert!((v.neg + v.neu + v.pos - 1.0).abs() <= 1e-9);
        prop_assert!((-1.0..=1.0).contains(&v.compound));
        prop_assert!((-1.0..=1.0).contains(&v.polarity));
        prop_assert!((0.0..=1.0).contains(&v.subjectivity));
    }

    #[test]
    fn aggregation_ignores_input_order(
        rows in proptest::collection::vec((0i64..5 * 86_400, "[a-d]{1,3}"), 0..30),
        seed in any::<u64>(),
    ) {
        let recs: Vec<CleanText> = rows
            .iter()
            .map(|(t, text)| CleanText {
                chain: Chain::Btc,
                text: text.clone(),
                tokens: vec![text.clone()],
                block_timestamp: Utc.timestamp_opt(1_600_000_000 + t, 0).unwrap(),
            })
            .collect();
        let mut shuffled = recs.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) >> 33) as usize % (i + 1);
            shuffled.swap(i, j);
        }
        prop_assert_eq!(aggregate_daily(&recs), aggregate_daily(&shuffled));
    }

    #[test]
    fn folds_never_leak(n in 2usize..2000, k in 1usize..12) {
        match ts_cv_folds(n, k) {
            Ok(folds) => {
                prop_assert_eq!(folds.len(), k);
                let b = n / (k + 1);
                for (i, f) in folds.iter().enumerate() {
                    prop_assert_eq!(f.train.clone(), 0..(i + 1) * b);
                    prop_assert!(f.train.end <= f.validation.start);
                    prop_assert_eq!(f.validation.len(), b);
                    prop_assert!(f.validation.end <= n);
                }
            }
            Err(_) => prop_assert!(n < k + 1),
        }
    }

    #[test]
    fn perfect_prediction_scores_one(y in proptest::collection::vec(0u8..2, 1..200)) {
        let m = evaluate(&y, &y).unwrap();
        prop_assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gibbs_preserves_token_count(
        docs in proptest::collection::vec(proptest::collection::vec("[a-h]", 1..25), 1..15),
        k in 1usize..5,
        seed in any::<u64>(),
    ) {
        let dtm = DocTermMatrix::from_token_docs(&docs);
        let total: usize = docs.iter().map(Vec::len).sum();
        prop_assert_eq!(dtm.total_tokens() as usize, total);
        let cfg = LdaConfig { iterations: 5, ..LdaConfig::new(k, seed) };
        let mut s = LdaSampler::new(&dtm, &cfg).unwrap();
        for _ in 0..5 {
            s.sweep();
            prop_assert_eq!(s.assigned_tokens() as usize, total);
        }
        let m = chainsent::topics::fit_lda(&dtm, &cfg).unwrap();
        for row in m.phi.iter().chain(&m.theta) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&p| p >= 0.0));
        }
    }
}
