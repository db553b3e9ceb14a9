//! Expanding-window folds and exhaustive grid search with per-fold feature
//! selection.

use std::ops::Range;

use rayon::prelude::*;

use super::select::{rfe_elimination_order, select_k};
use super::{
    fit, take_columns, take_rows, Family, HyperParams, MlError, Model, ModelSpec, ParamValue, Params,
    RFE_KEY, SELECTOR_KEY,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Range<usize>,
    pub validation: Range<usize>,
}

/// Fold i (1-based) trains on the first i·b rows and validates on the next
/// b, with b = ⌊n / (k+1)⌋. Trailing rows beyond (k+1)·b are unused.
pub fn ts_cv_folds(n: usize, k: usize) -> Result<Vec<Fold>, MlError> {
    if k == 0 {
        return Err(MlError::Unsupported("at least one fold is required".into()));
    }
    if n < k + 1 {
        return Err(MlError::TooFew {
            needed: k + 1,
            got: n,
        });
    }
    let b = n / (k + 1);
    Ok((1..=k)
        .map(|i| Fold {
            train: 0..i * b,
            validation: i * b..(i + 1) * b,
        })
        .collect())
}

/// Best grid candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Full candidate, including the feature-count key when declared.
    pub params: Params,
    pub hyper: HyperParams,
    /// Requested feature count after clamping; `None` keeps every column.
    pub n_features: Option<usize>,
    /// Validation accuracy per fold.
    pub cv_scores: Vec<f64>,
    pub mean_score: f64,
    /// Position in enumeration order.
    pub candidate_index: usize,
    pub candidates: usize,
    pub failed: usize,
}

/// A family refitted on the full training block with its chosen settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub name: String,
    pub family: Family,
    pub model: Model,
    /// Selected input columns, ascending.
    pub features: Vec<usize>,
    pub params: Params,
    pub cv_trace: Vec<f64>,
    pub seed: u64,
}

impl TrainedClassifier {
    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<u8> {
        self.model.predict(&take_columns(x, &self.features))
    }
}

/// Grid values with feature counts clamped to `n_features` and repeated
/// values removed (first occurrence kept).
fn effective_grid(spec: &ModelSpec, n_features: usize) -> Vec<(String, Vec<ParamValue>)> {
    spec.grid
        .iter()
        .map(|(k, vals)| {
            if k != RFE_KEY && k != SELECTOR_KEY {
                return (k.clone(), vals.clone());
            }
            let mut out: Vec<ParamValue> = Vec::new();
            for v in vals {
                let ParamValue::Int(n) = v else {
                    unreachable!("validated")
                };
                let c = ParamValue::Int((*n).min(n_features as i64));
                if !out.contains(&c) {
                    out.push(c);
                }
            }
            (k.clone(), out)
        })
        .collect()
}

/// Cartesian product with the first key outermost.
fn enumerate(grid: &[(String, Vec<ParamValue>)]) -> Vec<Params> {
    let mut out = vec![Params::default()];
    for (k, vals) in grid {
        out = out
            .into_iter()
            .flat_map(|p| {
                vals.iter().map(move |v| {
                    let mut q = p.clone();
                    q.0.push((k.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    out
}

fn split_candidate(p: &Params) -> (Params, Option<usize>) {
    let mut rest = Params::default();
    let mut n = None;
    for (k, v) in &p.0 {
        match (k.as_str(), v) {
            (RFE_KEY | SELECTOR_KEY, ParamValue::Int(c)) => n = Some(*c as usize),
            _ => rest.0.push((k.clone(), v.clone())),
        }
    }
    (rest, n)
}

/// Feature subsets for each requested size, computed on one block of rows.
fn subsets(
    spec: &ModelSpec,
    hp: &HyperParams,
    x: &[Vec<f64>],
    y: &[u8],
    sizes: &[Option<usize>],
    seed: u64,
) -> Result<Vec<Vec<usize>>, MlError> {
    let f = x[0].len();
    let all: Vec<usize> = (0..f).collect();
    if spec.family == Family::Knnc {
        return sizes
            .iter()
            .map(|s| match s {
                Some(k) => select_k(x, y, *k),
                None => Ok(all.clone()),
            })
            .collect();
    }
    let min_keep = sizes.iter().flatten().copied().min();
    let removed = match min_keep {
        Some(m) if m < f => rfe_elimination_order(hp, x, y, m, seed)?,
        _ => Vec::new(),
    };
    Ok(sizes
        .iter()
        .map(|s| match s {
            Some(k) => {
                let gone = &removed[..f - k];
                all.iter().copied().filter(|c| !gone.contains(c)).collect()
            }
            None => all.clone(),
        })
        .collect())
}

fn fold_scores(
    spec: &ModelSpec,
    hp: &HyperParams,
    sizes: &[Option<usize>],
    x: &[Vec<f64>],
    y: &[u8],
    folds: &[Fold],
    seed: u64,
) -> Vec<Result<Vec<f64>, MlError>> {
    let mut per_size: Vec<Result<Vec<f64>, MlError>> = vec![Ok(Vec::new()); sizes.len()];
    for fold in folds {
        let tr: Vec<usize> = fold.train.clone().collect();
        let va: Vec<usize> = fold.validation.clone().collect();
        let (xt, yt) = (take_rows(x, &tr), take_rows(y, &tr));
        let (xv, yv) = (take_rows(x, &va), take_rows(y, &va));
        let subs = match subsets(spec, hp, &xt, &yt, sizes, seed) {
            Ok(s) => s,
            Err(e) => return vec![Err(e); sizes.len()],
        };
        for (slot, cols) in per_size.iter_mut().zip(subs) {
            let Ok(scores) = slot else { continue };
            match fit(hp, &take_columns(&xt, &cols), &yt, seed) {
                Ok(m) => {
                    let pred = m.predict(&take_columns(&xv, &cols));
                    let hits = pred.iter().zip(&yv).filter(|(p, t)| p == t).count();
                    scores.push(hits as f64 / yv.len() as f64);
                }
                Err(e) => *slot = Err(e),
            }
        }
    }
    per_size
}

/// Candidate index and requested feature count.
type Member = (usize, Option<usize>);

/// Scores every candidate by mean validation accuracy over `folds` and
/// returns the best; ties go to the earlier candidate. Candidates that fail
/// to fit are logged and skipped.
pub fn grid_search(
    spec: &ModelSpec,
    x: &[Vec<f64>],
    y: &[u8],
    folds: &[Fold],
    seed: u64,
) -> Result<SearchResult, MlError> {
    if x.is_empty() || folds.is_empty() {
        return Err(MlError::Empty);
    }
    for fold in folds {
        if fold.train.end > fold.validation.start || fold.validation.end > x.len() {
            return Err(MlError::Shape("fold leaks or exceeds the data".into()));
        }
    }
    let f = x[0].len();
    let grid = effective_grid(spec, f);
    let candidates = enumerate(&grid);
    let total = candidates.len();

    // Candidates differing only in feature count share a selection path.
    let mut groups: Vec<(Params, Vec<Member>)> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let (rest, n) = split_candidate(c);
        match groups.iter_mut().find(|(r, _)| *r == rest) {
            Some((_, members)) => members.push((i, n)),
            None => groups.push((rest, vec![(i, n)])),
        }
    }

    let mut results: Vec<(usize, Result<Vec<f64>, MlError>)> = groups
        .par_iter()
        .flat_map_iter(|(rest, members)| {
            let sizes: Vec<Option<usize>> = members.iter().map(|m| m.1).collect();
            let scored = match HyperParams::parse(spec.family, &spec.name, rest) {
                Ok(hp) => fold_scores(spec, &hp, &sizes, x, y, folds, seed),
                Err(e) => vec![Err(e); sizes.len()],
            };
            members.iter().map(|m| m.0).zip(scored).collect::<Vec<_>>()
        })
        .collect();
    results.sort_by_key(|r| r.0);

    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    let mut failed = 0;
    let mut first_error = None;
    for (i, r) in results {
        match r {
            Ok(scores) => {
                let mean = scores.iter().sum::<f64>() / scores.len() as f64;
                if best.as_ref().is_none_or(|b| mean > b.2) {
                    best = Some((i, scores, mean));
                }
            }
            Err(e) => {
                log::warn!("{} candidate {} skipped: {e}", spec.name, candidates[i]);
                failed += 1;
                first_error.get_or_insert(e);
            }
        }
    }
    let (i, cv_scores, mean_score) =
        best.ok_or_else(|| MlError::NoCandidate(first_error.map(|e| e.to_string()).unwrap_or_default()))?;
    let (rest, n_features) = split_candidate(&candidates[i]);
    Ok(SearchResult {
        params: candidates[i].clone(),
        hyper: HyperParams::parse(spec.family, &spec.name, &rest)?,
        n_features,
        cv_scores,
        mean_score,
        candidate_index: i,
        candidates: total,
        failed,
    })
}

/// Repeats feature selection and fitting on all of `x` with the chosen
/// candidate.
pub fn refit(
    spec: &ModelSpec,
    best: &SearchResult,
    x: &[Vec<f64>],
    y: &[u8],
    seed: u64,
) -> Result<TrainedClassifier, MlError> {
    let features = subsets(spec, &best.hyper, x, y, &[best.n_features], seed)?.remove(0);
    let model = fit(&best.hyper, &take_columns(x, &features), y, seed)?;
    Ok(TrainedClassifier {
        name: spec.name.clone(),
        family: spec.family,
        model,
        features,
        params: best.params.clone(),
        cv_trace: best.cv_scores.clone(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_for_twelve() {
        let f = ts_cv_folds(12, 5).unwrap();
        let sizes: Vec<usize> = f.iter().map(|x| x.train.len()).collect();
        assert_eq!(sizes, vec![2, 4, 6, 8, 10]);
        assert!(f
            .iter()
            .all(|x| x.validation.len() == 2 && x.train.end <= x.validation.start));
        assert_eq!(
            ts_cv_folds(10, 1).unwrap(),
            vec![Fold {
                train: 0..5,
                validation: 5..10
            }]
        );
        assert!(ts_cv_folds(5, 5).is_err());
    }

    #[test]
    fn enumeration_order() {
        let grid = vec![
            ("a".to_string(), vec![ParamValue::Int(1), ParamValue::Int(2)]),
            (
                "b".to_string(),
                vec![ParamValue::Str("x".into()), ParamValue::Str("y".into())],
            ),
        ];
        let names: Vec<String> = enumerate(&grid).iter().map(|p| p.to_string()).collect();
        assert_eq!(names, vec!["a=1;b=x", "a=1;b=y", "a=2;b=x", "a=2;b=y"]);
    }

    #[test]
    fn clamped_feature_counts() {
        let spec = ModelSpec::new(
            "RFC",
            vec![(RFE_KEY.into(), (4..=9).map(ParamValue::Int).collect())],
        )
        .unwrap();
        let g = effective_grid(&spec, 5);
        assert_eq!(g[0].1, vec![ParamValue::Int(4), ParamValue::Int(5)]);
    }
}
