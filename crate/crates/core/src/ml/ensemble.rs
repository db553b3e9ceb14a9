//! Bagged and boosted tree ensembles.

use rand::{seq::index::sample, Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tree::{Splitter, Tree, TreeConfig};
use super::{normalized, AbcParams, ForestParams, GbcParams, MlError};

/// Random forest (bootstrap, best splits) or extra trees (no bootstrap,
/// random thresholds). Both examine ⌊√F⌋ features per split.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    pub importances: Vec<f64>,
}

impl Forest {
    pub fn fit(x: &[Vec<f64>], y: &[u8], p: &ForestParams, extra: bool, seed: u64) -> Self {
        let n = x.len();
        let f = x[0].len();
        let yf: Vec<f64> = y.iter().map(|&l| l as f64).collect();
        let cfg = TreeConfig {
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            min_samples_leaf: p.min_samples_leaf,
            max_features: Some(((f as f64).sqrt() as usize).max(1)),
            splitter: if extra { Splitter::Random } else { Splitter::Best },
        };
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let mut trees = Vec::with_capacity(p.n_estimators);
        let mut imp = vec![0.0; f];
        for _ in 0..p.n_estimators {
            let mut rng = ChaCha8Rng::seed_from_u64(master.next_u64());
            let mut w = vec![1.0; n];
            if !extra {
                w = vec![0.0; n];
                for _ in 0..n {
                    w[rng.random_range(0..n)] += 1.0;
                }
            }
            let idx: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
            let t = Tree::fit(x, &yf, &w, idx, cfg, &mut rng);
            for (a, b) in imp.iter_mut().zip(normalized(t.importances.clone())) {
                *a += b;
            }
            trees.push(t);
        }
        Forest {
            trees,
            importances: normalized(imp),
        }
    }

    pub fn proba(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<u8> {
        x.iter().map(|r| u8::from(self.proba(r) > 0.5)).collect()
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Mean binomial deviance / 2, i.e. mean negative log-likelihood.
pub(crate) fn log_loss(y: &[u8], raw: &[f64]) -> f64 {
    y.iter()
        .zip(raw)
        .map(|(&l, &f)| {
            let t = if l == 1 { f } else { -f };
            if t > 0.0 {
                (-t).exp().ln_1p()
            } else {
                -t + t.exp().ln_1p()
            }
        })
        .sum::<f64>()
        / y.len() as f64
}

/// Gradient boosting on the logistic loss with Newton leaf values. A round
/// whose full step would raise the training loss has its step halved until
/// it does not (or is zero).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoosting {
    init: f64,
    stages: Vec<(Tree, f64)>,
    pub importances: Vec<f64>,
    /// Training loss before the first round and after each round.
    pub loss_trace: Vec<f64>,
}

impl GradientBoosting {
    pub fn fit(x: &[Vec<f64>], y: &[u8], p: &GbcParams, seed: u64) -> Self {
        let n = x.len();
        let f = x[0].len();
        let pos = y.iter().filter(|&&l| l == 1).count() as f64 / n as f64;
        let init = (pos / (1.0 - pos)).ln();
        let mut raw = vec![init; n];
        let mut loss = log_loss(y, &raw);
        let mut trace = vec![loss];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = TreeConfig {
            max_depth: Some(p.max_depth),
            ..TreeConfig::default()
        };
        let n_in = ((p.subsample * n as f64) as usize).clamp(1, n);
        let ones = vec![1.0; n];
        let mut stages = Vec::with_capacity(p.n_estimators);
        let mut imp = vec![0.0; f];
        for _ in 0..p.n_estimators {
            let prob: Vec<f64> = raw.iter().map(|&r| sigmoid(r)).collect();
            let resid: Vec<f64> = y.iter().zip(&prob).map(|(&l, &q)| l as f64 - q).collect();
            let mut idx: Vec<usize> = if n_in < n {
                sample(&mut rng, n, n_in).into_vec()
            } else {
                (0..n).collect()
            };
            idx.sort_unstable();
            let mut tree = Tree::fit(x, &resid, &ones, idx.clone(), cfg, &mut rng);

            let mut num = std::collections::BTreeMap::<usize, (f64, f64)>::new();
            for &i in &idx {
                let e = num.entry(tree.leaf_id(&x[i])).or_default();
                e.0 += resid[i];
                e.1 += prob[i] * (1.0 - prob[i]);
            }
            for leaf in tree.leaf_ids() {
                let (s, h) = num.get(&leaf).copied().unwrap_or((0.0, 0.0));
                tree.set_leaf_value(leaf, if h.abs() < 1e-150 { 0.0 } else { s / h });
            }

            let delta: Vec<f64> = x.iter().map(|r| tree.predict_row(r)).collect();
            let mut step = p.learning_rate;
            let mut accepted = false;
            for _ in 0..=60 {
                let cand: Vec<f64> = raw.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
                let l = log_loss(y, &cand);
                if l <= loss {
                    raw = cand;
                    loss = l;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                step = 0.0;
            }
            trace.push(loss);
            for (a, b) in imp.iter_mut().zip(&tree.importances) {
                *a += b;
            }
            stages.push((tree, step));
        }
        GradientBoosting {
            init,
            stages,
            importances: normalized(imp),
            loss_trace: trace,
        }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.init
            + self
                .stages
                .iter()
                .map(|(t, s)| s * t.predict_row(row))
                .sum::<f64>()
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<u8> {
        x.iter().map(|r| u8::from(self.decision(r) > 0.0)).collect()
    }
}

/// SAMME with depth-1 stumps.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoost {
    stumps: Vec<(Tree, f64)>,
    pub importances: Vec<f64>,
}

impl AdaBoost {
    pub fn fit(x: &[Vec<f64>], y: &[u8], p: &AbcParams, seed: u64) -> Result<Self, MlError> {
        let n = x.len();
        let f = x[0].len();
        let yf: Vec<f64> = y.iter().map(|&l| l as f64).collect();
        let mut w = vec![1.0 / n as f64; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = TreeConfig {
            max_depth: Some(1),
            ..TreeConfig::default()
        };
        let mut stumps: Vec<(Tree, f64)> = Vec::new();
        for _ in 0..p.n_estimators {
            let idx: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
            let t = Tree::fit(x, &yf, &w, idx, cfg, &mut rng);
            let wrong: Vec<bool> = x
                .iter()
                .zip(y)
                .map(|(r, &l)| u8::from(t.predict_row(r) > 0.5) != l)
                .collect();
            let total: f64 = w.iter().sum();
            let err = w
                .iter()
                .zip(&wrong)
                .filter(|(_, b)| **b)
                .map(|(a, _)| a)
                .sum::<f64>()
                / total;
            if err <= 0.0 {
                stumps.push((t, 1.0));
                break;
            }
            if err >= 0.5 {
                if stumps.is_empty() {
                    return Err(MlError::Fit("first stump is no better than chance".into()));
                }
                break;
            }
            let alpha = p.learning_rate * ((1.0 - err) / err).ln();
            for (wi, bad) in w.iter_mut().zip(&wrong) {
                if *bad {
                    *wi *= alpha.exp();
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
            stumps.push((t, alpha));
        }
        let mut imp = vec![0.0; f];
        let wsum: f64 = stumps.iter().map(|(_, a)| a).sum();
        for (t, a) in &stumps {
            for (acc, v) in imp.iter_mut().zip(normalized(t.importances.clone())) {
                *acc += a * v / wsum;
            }
        }
        Ok(AdaBoost {
            stumps,
            importances: imp,
        })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.stumps
            .iter()
            .map(|(t, a)| if t.predict_row(row) > 0.5 { *a } else { -*a })
            .sum()
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<u8> {
        x.iter().map(|r| u8::from(self.decision(r) > 0.0)).collect()
    }
}
