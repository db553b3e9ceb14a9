//! Scores pinned from the reference analyzers (see tests/oracles).

use chainsent::sentiment::Scorer;

const ORACLE: &str = include_str!("fixtures/sentiment_oracle.tsv");

#[test]
fn matches_reference_analyzers() {
    let scorer = Scorer::bundled();
    let mut checked = 0;
    for line in ORACLE.lines().filter(|l| !l.starts_with('#')) {
        let cols: Vec<&str> = line.splitn(7, '\t').collect();
        let want: Vec<f64> = cols[..6].iter().map(|c| c.parse().unwrap()).collect();
        let text = cols[6];
        let v = scorer.score(text);
        let got = [v.compound, v.neg, v.neu, v.pos, v.polarity, v.subjectivity];
        for (k, (g, w)) in got.iter().zip(&want).enumerate() {
            assert!((g - w).abs() < 1e-9, "{text:?} column {k}: got {g}, want {w}");
        }
        checked += 1;
    }
    assert!(checked >= 10);
}
