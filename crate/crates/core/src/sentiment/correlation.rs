//! Pearson correlation and greedy pruning of redundant feature columns.

/// Column order used to break pruning ties: the later column is dropped.
pub const FEATURE_ORDER: [&str; 8] = [
    "cryptobert_sentiment",
    "cryptobert_sentiment_2",
    "subjectivity",
    "polarity",
    "compound",
    "neg",
    "neu",
    "pos",
];

/// Pairwise Pearson correlations. An entry is `None` when either column has
/// zero variance (or fewer than two rows are given).
pub fn pearson_matrix(columns: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    let k = columns.len();
    let centered: Vec<Option<(Vec<f64>, f64)>> = columns
        .iter()
        .map(|col| {
            if col.len() < 2 {
                return None;
            }
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let dev: Vec<f64> = col.iter().map(|x| x - mean).collect();
            let ss: f64 = dev.iter().map(|d| d * d).sum();
            (ss > 0.0).then(|| (dev, ss.sqrt()))
        })
        .collect();
    let mut m = vec![vec![None; k]; k];
    for a in 0..k {
        for b in a..k {
            let r = match (&centered[a], &centered[b]) {
                (Some((da, na)), Some((db, nb))) if da.len() == db.len() => {
                    if a == b {
                        Some(1.0)
                    } else {
                        let dot: f64 = da.iter().zip(db).map(|(x, y)| x * y).sum();
                        Some((dot / (na * nb)).clamp(-1.0, 1.0))
                    }
                }
                _ => None,
            };
            m[a][b] = r;
            m[b][a] = r;
        }
    }
    m
}

fn order_rank(name: &str) -> usize {
    FEATURE_ORDER
        .iter()
        .position(|n| *n == name)
        .unwrap_or(FEATURE_ORDER.len())
}

/// Greedily removes columns until no retained pair has |r| ≥ `threshold`.
/// Each round drops the column involved in the most such pairs; ties go to
/// the column that comes later in [`FEATURE_ORDER`] (unknown names after
/// known ones, then by input position). Returns retained names in input
/// order.
pub fn prune_correlated(names: &[String], columns: &[Vec<f64>], threshold: f64) -> Vec<String> {
    let corr = pearson_matrix(columns);
    let k = names.len();
    let mut alive = vec![true; k];
    let high = |a: usize, b: usize| corr[a][b].is_some_and(|r| r.abs() >= threshold);
    loop {
        let counts: Vec<usize> = (0..k)
            .map(|a| {
                if !alive[a] {
                    return 0;
                }
                (0..k).filter(|&b| b != a && alive[b] && high(a, b)).count()
            })
            .collect();
        let victim = (0..k)
            .filter(|&a| counts[a] > 0)
            .max_by_key(|&a| (counts[a], order_rank(&names[a]), a));
        match victim {
            Some(v) => {
                log::debug!("pruning {} ({} correlated pairs)", names[v], counts[v]);
                alive[v] = false;
            }
            None => break,
        }
    }
    names
        .iter()
        .zip(alive)
        .filter(|(_, keep)| *keep)
        .map(|(n, _)| n.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_and_negated() {
        let x = vec![1.0, 2.0, 4.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        let m = pearson_matrix(&[x, y]);
        assert_eq!(m[0][0], Some(1.0));
        assert!((m[0][1].unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_undefined() {
        let m = pearson_matrix(&[vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]]);
        assert_eq!(m[0][1], None);
        assert_eq!(m[1][1], None);
        assert_eq!(m[0][0], Some(1.0));
    }

    #[test]
    fn nothing_to_prune() {
        let names: Vec<String> = vec!["compound".into(), "neg".into()];
        let cols = vec![vec![1.0, 2.0, 3.0, 4.0], vec![1.0, -1.0, -1.0, 1.0]];
        assert_eq!(prune_correlated(&names, &cols, 0.8), names);
    }

    #[test]
    fn tie_drops_later_column() {
        let names: Vec<String> = vec!["neu".into(), "compound".into()];
        let cols = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.5]];
        assert_eq!(prune_correlated(&names, &cols, 0.8), vec!["compound".to_string()]);
    }
}
