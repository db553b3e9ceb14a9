//! Feature selection: recursive elimination and ANOVA F ranking.

use super::{check_xy, fit, take_columns, HyperParams, MlError};

/// One-way ANOVA F statistic of each column between the two classes.
/// Constant columns score 0; a column with zero within-class spread but
/// different class means scores +∞.
pub fn f_scores(x: &[Vec<f64>], y: &[u8]) -> Vec<f64> {
    let f = x.first().map_or(0, Vec::len);
    let n = x.len() as f64;
    (0..f)
        .map(|j| {
            let mut s = [0.0f64; 2];
            let mut c = [0.0f64; 2];
            for (r, &l) in x.iter().zip(y) {
                s[l as usize] += r[j];
                c[l as usize] += 1.0;
            }
            if c[0] == 0.0 || c[1] == 0.0 || n <= 2.0 {
                return 0.0;
            }
            let mean = (s[0] + s[1]) / n;
            let m = [s[0] / c[0], s[1] / c[1]];
            let between: f64 = (0..2).map(|k| c[k] * (m[k] - mean).powi(2)).sum();
            let within: f64 = x
                .iter()
                .zip(y)
                .map(|(r, &l)| (r[j] - m[l as usize]).powi(2))
                .sum();
            if within > 0.0 {
                between / (within / (n - 2.0))
            } else if between > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect()
}

/// Column indices of the `k` highest F scores (ties to the earlier column),
/// returned in ascending column order.
pub fn select_k(x: &[Vec<f64>], y: &[u8], k: usize) -> Result<Vec<usize>, MlError> {
    let scores = f_scores(x, y);
    if k == 0 || k > scores.len() {
        return Err(MlError::Unsupported(format!(
            "cannot select {k} of {} features",
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut keep = order[..k].to_vec();
    keep.sort_unstable();
    Ok(keep)
}

/// Columns in the order RFE removes them, stopping once `min_keep` remain.
/// Each round refits on the surviving columns and drops the least
/// important (ties to the earlier column).
pub fn rfe_elimination_order(
    hp: &HyperParams,
    x: &[Vec<f64>],
    y: &[u8],
    min_keep: usize,
    seed: u64,
) -> Result<Vec<usize>, MlError> {
    if matches!(hp, HyperParams::Knn(_)) {
        return Err(MlError::Unsupported(
            "KNNC exposes no importances; use select_k".into(),
        ));
    }
    let f = check_xy(x, y)?;
    if min_keep == 0 || min_keep > f {
        return Err(MlError::Unsupported(format!(
            "cannot keep {min_keep} of {f} features"
        )));
    }
    let mut alive: Vec<usize> = (0..f).collect();
    let mut removed = Vec::new();
    while alive.len() > min_keep {
        let m = fit(hp, &take_columns(x, &alive), y, seed)?;
        let imp = m.importances().expect("family has importances");
        let worst = (0..alive.len())
            .min_by(|&a, &b| imp[a].total_cmp(&imp[b]).then(a.cmp(&b)))
            .expect("nonempty");
        removed.push(alive.remove(worst));
    }
    Ok(removed)
}

/// The `n_features` columns surviving RFE, ascending.
pub fn rfe(
    hp: &HyperParams,
    x: &[Vec<f64>],
    y: &[u8],
    n_features: usize,
    seed: u64,
) -> Result<Vec<usize>, MlError> {
    let removed = rfe_elimination_order(hp, x, y, n_features, seed)?;
    Ok((0..x[0].len()).filter(|c| !removed.contains(c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::{Family, Params};

    #[test]
    fn separating_column_first_constant_last() {
        let x = vec![
            vec![5.0, 0.0, 1.0],
            vec![5.0, 0.1, 2.0],
            vec![5.0, 1.0, 1.5],
            vec![5.0, 1.1, 2.5],
        ];
        let y = [0, 0, 1, 1];
        let s = f_scores(&x, &y);
        assert_eq!(s[0], 0.0);
        assert!(s[1] > s[2]);
        assert_eq!(select_k(&x, &y, 1).unwrap(), vec![1]);
        assert_eq!(select_k(&x, &y, 3).unwrap(), vec![0, 1, 2]);
        assert!(select_k(&x, &y, 4).is_err());
    }

    #[test]
    fn rfe_identity_and_knn() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 1.0], vec![3.0, 0.5]];
        let y = [0, 0, 1, 1];
        let lrc = HyperParams::parse(Family::Lrc, "LRC", &Params::default()).unwrap();
        assert_eq!(rfe(&lrc, &x, &y, 2, 0).unwrap(), vec![0, 1]);
        assert_eq!(rfe(&lrc, &x, &y, 1, 0).unwrap(), vec![0]);
        let knn = HyperParams::parse(Family::Knnc, "KNNC", &Params::default()).unwrap();
        assert!(matches!(rfe(&knn, &x, &y, 1, 0), Err(MlError::Unsupported(_))));
    }
}
