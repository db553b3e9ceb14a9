//! LDA by collapsed Gibbs sampling, topic keyword tables and a 2-D
//! intertopic distance map.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopicsError {
    #[error("empty vocabulary")]
    EmptyVocabulary,
    #[error("all documents are empty")]
    NoTokens,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

/// Sparse document-term counts over a sorted vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocTermMatrix {
    pub vocabulary: Vec<String>,
    /// Per document: (term index, count), ascending by term index.
    pub docs: Vec<Vec<(usize, u32)>>,
}

impl DocTermMatrix {
    pub fn from_token_docs<S: AsRef<str>>(docs: &[Vec<S>]) -> Self {
        let mut counts: Vec<BTreeMap<&str, u32>> = Vec::with_capacity(docs.len());
        let mut vocab: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let mut c = BTreeMap::new();
            for t in doc {
                *c.entry(t.as_ref()).or_insert(0) += 1;
                vocab.insert(t.as_ref(), 0);
            }
            counts.push(c);
        }
        for (i, v) in vocab.values_mut().enumerate() {
            *v = i;
        }
        DocTermMatrix {
            vocabulary: vocab.keys().map(|s| s.to_string()).collect(),
            docs: counts
                .into_iter()
                .map(|c| c.into_iter().map(|(w, n)| (vocab[w], n)).collect())
                .collect(),
        }
    }

    pub fn total_tokens(&self) -> u64 {
        self.docs.iter().flatten().map(|(_, n)| *n as u64).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means 50 / K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        LdaConfig {
            k,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            seed,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub vocabulary: Vec<String>,
    /// K × V topic-term distributions.
    pub phi: Vec<Vec<f64>>,
    /// D × K document-topic distributions.
    pub theta: Vec<Vec<f64>>,
    /// Tokens assigned to each topic in the final state.
    pub topic_tokens: Vec<u64>,
    /// Joint log-likelihood log p(w, z) after each sweep.
    pub log_likelihood: Vec<f64>,
}

/// Sampler state; exposed so callers can observe each sweep.
pub struct LdaSampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    words: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    n_dk: Vec<Vec<u32>>,
    n_kw: Vec<Vec<u32>>,
    n_k: Vec<u64>,
    rng: ChaCha8Rng,
    probs: Vec<f64>,
}

impl LdaSampler {
    pub fn new(dtm: &DocTermMatrix, cfg: &LdaConfig) -> Result<Self, TopicsError> {
        if dtm.vocabulary.is_empty() {
            return Err(TopicsError::EmptyVocabulary);
        }
        if dtm.total_tokens() == 0 {
            return Err(TopicsError::NoTokens);
        }
        if cfg.k == 0 {
            return Err(TopicsError::InvalidParameter("K must be at least 1".into()));
        }
        let alpha = cfg.alpha();
        if !(alpha > 0.0 && alpha.is_finite() && cfg.beta > 0.0 && cfg.beta.is_finite()) {
            return Err(TopicsError::InvalidParameter(
                "alpha and beta must be positive".into(),
            ));
        }
        let (k, v) = (cfg.k, dtm.vocabulary.len());
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let words: Vec<Vec<usize>> = dtm
            .docs
            .iter()
            .map(|d| {
                d.iter()
                    .flat_map(|&(w, n)| std::iter::repeat_n(w, n as usize))
                    .collect()
            })
            .collect();
        let mut n_dk = vec![vec![0u32; k]; words.len()];
        let mut n_kw = vec![vec![0u32; v]; k];
        let mut n_k = vec![0u64; k];
        let z = words
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = rng.random_range(0..k);
                        n_dk[d][t] += 1;
                        n_kw[t][w] += 1;
                        n_k[t] += 1;
                        t
                    })
                    .collect()
            })
            .collect();
        Ok(LdaSampler {
            k,
            v,
            alpha,
            beta: cfg.beta,
            words,
            z,
            n_dk,
            n_kw,
            n_k,
            rng,
            probs: vec![0.0; k],
        })
    }

    /// One pass over every token.
    pub fn sweep(&mut self) {
        let vbeta = self.v as f64 * self.beta;
        for d in 0..self.words.len() {
            for i in 0..self.words[d].len() {
                let w = self.words[d][i];
                let old = self.z[d][i];
                self.n_dk[d][old] -= 1;
                self.n_kw[old][w] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..self.k {
                    let p = (self.n_dk[d][t] as f64 + self.alpha) * (self.n_kw[t][w] as f64 + self.beta)
                        / (self.n_k[t] as f64 + vbeta);
                    total += p;
                    self.probs[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.probs.iter().position(|&c| u < c).unwrap_or(self.k - 1);

                self.z[d][i] = new;
                self.n_dk[d][new] += 1;
                self.n_kw[new][w] += 1;
                self.n_k[new] += 1;
            }
        }
    }

    /// Sum of the topic-term count table.
    pub fn assigned_tokens(&self) -> u64 {
        self.n_kw.iter().flatten().map(|&c| c as u64).sum()
    }

    pub fn log_likelihood(&self) -> f64 {
        let lg = libm::lgamma;
        let (k, v) = (self.k as f64, self.v as f64);
        let mut ll = k * (lg(v * self.beta) - v * lg(self.beta));
        for t in 0..self.k {
            ll += self.n_kw[t]
                .iter()
                .map(|&c| lg(c as f64 + self.beta))
                .sum::<f64>()
                - lg(self.n_k[t] as f64 + v * self.beta);
        }
        ll += self.words.len() as f64 * (lg(k * self.alpha) - k * lg(self.alpha));
        for (d, doc) in self.words.iter().enumerate() {
            ll += self.n_dk[d]
                .iter()
                .map(|&c| lg(c as f64 + self.alpha))
                .sum::<f64>()
                - lg(doc.len() as f64 + k * self.alpha);
        }
        ll
    }

    fn estimate(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let vbeta = self.v as f64 * self.beta;
        let phi = (0..self.k)
            .map(|t| {
                let denom = self.n_k[t] as f64 + vbeta;
                self.n_kw[t]
                    .iter()
                    .map(|&c| (c as f64 + self.beta) / denom)
                    .collect()
            })
            .collect();
        let kalpha = self.k as f64 * self.alpha;
        let theta = self
            .n_dk
            .iter()
            .zip(&self.words)
            .map(|(row, doc)| {
                let denom = doc.len() as f64 + kalpha;
                row.iter().map(|&c| (c as f64 + self.alpha) / denom).collect()
            })
            .collect();
        (phi, theta)
    }
}

/// Fits LDA. Deterministic for identical inputs and seed.
pub fn fit_lda(dtm: &DocTermMatrix, cfg: &LdaConfig) -> Result<LdaModel, TopicsError> {
    if cfg.iterations == 0 {
        return Err(TopicsError::InvalidParameter(
            "iterations must be at least 1".into(),
        ));
    }
    let mut s = LdaSampler::new(dtm, cfg)?;
    let mut trace = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        s.sweep();
        trace.push(s.log_likelihood());
    }
    let (phi, theta) = s.estimate();
    Ok(LdaModel {
        k: cfg.k,
        alpha: s.alpha,
        beta: s.beta,
        seed: cfg.seed,
        iterations: cfg.iterations,
        vocabulary: dtm.vocabulary.clone(),
        phi,
        theta,
        topic_tokens: s.n_k.clone(),
        log_likelihood: trace,
    })
}

/// The `n` most probable words per topic (`n` is capped at V); ties are
/// broken lexicographically.
pub fn top_words(model: &LdaModel, n: usize) -> Vec<Vec<(String, f64)>> {
    model
        .phi
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&a, &b| {
                row[b]
                    .total_cmp(&row[a])
                    .then_with(|| model.vocabulary[a].cmp(&model.vocabulary[b]))
            });
            idx.into_iter()
                .take(n)
                .map(|i| (model.vocabulary[i].clone(), row[i]))
                .collect()
        })
        .collect()
}

fn kl(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, mi)| pi * (pi / mi).ln())
        .sum()
}

/// Jensen–Shannon divergence in nats.
pub fn js_divergence(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    (0.5 * kl(p, &m) + 0.5 * kl(q, &m)).max(0.0)
}

/// Classical multidimensional scaling of a distance matrix into two
/// dimensions. Axis signs are canonicalized: the first point with a
/// non-negligible coordinate on an axis gets a positive value there.
pub fn classical_mds(dist: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n = dist.len();
    if n == 0 {
        return Vec::new();
    }
    let d2 = DMatrix::from_fn(n, n, |i, j| dist[i][j] * dist[i][j]);
    let j = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let b = -0.5 * &j * d2 * &j;
    let b = 0.5 * (&b + b.transpose());
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&c)));
    let axis = |r: usize| -> Vec<f64> {
        match order.get(r) {
            Some(&col) => {
                let scale = eig.eigenvalues[col].max(0.0).sqrt();
                let mut v: Vec<f64> = eig.eigenvectors.column(col).iter().map(|x| x * scale).collect();
                if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
                    if *first < 0.0 {
                        v.iter_mut().for_each(|x| *x = -*x);
                    }
                }
                v
            }
            None => vec![0.0; n],
        }
    };
    let (xs, ys) = (axis(0), axis(1));
    xs.into_iter().zip(ys).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicPoint {
    pub topic: usize,
    pub x: f64,
    pub y: f64,
    /// Share of corpus tokens assigned to the topic.
    pub weight: f64,
}

/// Pairwise JS divergence between topics, embedded in 2-D.
pub fn intertopic_map(model: &LdaModel) -> Result<Vec<TopicPoint>, TopicsError> {
    if model.k < 2 {
        return Err(TopicsError::InvalidParameter(
            "intertopic map needs at least 2 topics".into(),
        ));
    }
    let dist: Vec<Vec<f64>> = model
        .phi
        .iter()
        .map(|p| model.phi.iter().map(|q| js_divergence(p, q)).collect())
        .collect();
    let total: u64 = model.topic_tokens.iter().sum();
    Ok(classical_mds(&dist)
        .into_iter()
        .enumerate()
        .map(|(topic, (x, y))| TopicPoint {
            topic,
            x,
            y,
            weight: model.topic_tokens[topic] as f64 / total.max(1) as f64,
        })
        .collect())
}

/// `topic,rank,word,probability`, rank starting at 1.
pub fn write_topics_csv<W: Write>(table: &[Vec<(String, f64)>], output: W) -> Result<(), TopicsError> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(["topic", "rank", "word", "probability"])?;
    for (t, words) in table.iter().enumerate() {
        for (r, (word, p)) in words.iter().enumerate() {
            w.write_record([t.to_string(), (r + 1).to_string(), word.clone(), p.to_string()])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `topic,x,y,weight`.
pub fn write_map_csv<W: Write>(points: &[TopicPoint], output: W) -> Result<(), TopicsError> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(["topic", "x", "y", "weight"])?;
    for p in points {
        w.write_record([
            p.topic.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            p.weight.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(v: &[&str]) -> Vec<Vec<String>> {
        v.iter()
            .map(|d| d.split_whitespace().map(str::to_owned).collect())
            .collect()
    }

    #[test]
    fn dtm_construction() {
        let dtm = DocTermMatrix::from_token_docs(&docs(&["b a b", "c"]));
        assert_eq!(dtm.vocabulary, vec!["a", "b", "c"]);
        assert_eq!(dtm.docs[0], vec![(0, 1), (1, 2)]);
        assert_eq!(dtm.total_tokens(), 4);
    }

    #[test]
    fn input_errors() {
        let empty = DocTermMatrix::from_token_docs::<String>(&[vec![], vec![]]);
        assert!(matches!(
            fit_lda(&empty, &LdaConfig::new(2, 1)),
            Err(TopicsError::EmptyVocabulary)
        ));
        let dtm = DocTermMatrix::from_token_docs(&docs(&["a b"]));
        assert!(fit_lda(
            &dtm,
            &LdaConfig {
                iterations: 0,
                ..LdaConfig::new(2, 1)
            }
        )
        .is_err());
        assert!(fit_lda(&dtm, &LdaConfig::new(0, 1)).is_err());
        assert!(fit_lda(
            &dtm,
            &LdaConfig {
                beta: 0.0,
                ..LdaConfig::new(2, 1)
            }
        )
        .is_err());
    }

    #[test]
    fn single_topic_is_smoothed_frequency() {
        let dtm = DocTermMatrix::from_token_docs(&docs(&["a a b", "a c", "c"]));
        let cfg = LdaConfig {
            iterations: 5,
            ..LdaConfig::new(1, 3)
        };
        let m = fit_lda(&dtm, &cfg).unwrap();
        let (n, v, b) = (6.0, 3.0, 0.01);
        let want = [
            (3.0 + b) / (n + v * b),
            (1.0 + b) / (n + v * b),
            (2.0 + b) / (n + v * b),
        ];
        for (g, w) in m.phi[0].iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn distributions_are_normalized() {
        let dtm = DocTermMatrix::from_token_docs(&docs(&["a b c a", "d e f d", "a d"]));
        let m = fit_lda(
            &dtm,
            &LdaConfig {
                iterations: 20,
                ..LdaConfig::new(3, 9)
            },
        )
        .unwrap();
        for row in m.phi.iter().chain(&m.theta) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|x| *x >= 0.0));
        }
        assert_eq!(m.log_likelihood.len(), 20);
    }

    #[test]
    fn likelihood_settles_upward() {
        let words = |p: &str| (0..15).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        let (a, b) = (words("a"), words("b"));
        let corpus: Vec<Vec<String>> = (0..60)
            .map(|d| {
                let v = if d % 2 == 0 { &a } else { &b };
                (0..30).map(|i| v[(d * 7 + i * 3) % v.len()].clone()).collect()
            })
            .collect();
        let dtm = DocTermMatrix::from_token_docs(&corpus);
        let m = fit_lda(
            &dtm,
            &LdaConfig {
                iterations: 300,
                ..LdaConfig::new(2, 4)
            },
        )
        .unwrap();
        let ll = &m.log_likelihood;
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        // Final 20%: above the start, and not trending down beyond noise.
        let tail = &ll[240..];
        assert!(mean(tail) > ll[0]);
        let (first, second) = tail.split_at(tail.len() / 2);
        let spread =
            tail.iter().map(|x| (x - mean(tail)).powi(2)).sum::<f64>().sqrt() / (tail.len() as f64).sqrt();
        assert!(mean(second) >= mean(first) - spread);
    }

    #[test]
    fn sweeps_preserve_token_count() {
        let dtm = DocTermMatrix::from_token_docs(&docs(&["a b c a", "d e f d", "a d"]));
        let mut s = LdaSampler::new(&dtm, &LdaConfig::new(2, 4)).unwrap();
        for _ in 0..10 {
            s.sweep();
            assert_eq!(s.assigned_tokens(), dtm.total_tokens());
        }
    }

    #[test]
    fn top_word_ties_are_lexicographic() {
        let m = LdaModel {
            k: 1,
            alpha: 1.0,
            beta: 0.1,
            seed: 0,
            iterations: 1,
            vocabulary: vec!["b".into(), "a".into(), "c".into()],
            phi: vec![vec![0.25, 0.25, 0.5]],
            theta: vec![],
            topic_tokens: vec![4],
            log_likelihood: vec![],
        };
        let top = top_words(&m, 3);
        let names: Vec<&str> = top[0].iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(names, vec!["c", "a", "b"]);
        assert_eq!(top_words(&m, 10)[0].len(), 3);
    }

    #[test]
    fn js_extremes() {
        assert_eq!(js_divergence(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        let d = js_divergence(&[1.0, 0.0], &[0.0, 1.0]);
        assert!((d - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn mds_reproduces_planar_distances() {
        // Right triangle with legs 3 and 4.
        let pts = [(0.0, 0.0), (3.0, 0.0), (0.0, 4.0)];
        let dist: Vec<Vec<f64>> = pts
            .iter()
            .map(|a: &(f64, f64)| {
                pts.iter()
                    .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                    .collect()
            })
            .collect();
        let out = classical_mds(&dist);
        for i in 0..3 {
            for j in 0..3 {
                let d = ((out[i].0 - out[j].0).powi(2) + (out[i].1 - out[j].1).powi(2)).sqrt();
                assert!((d - dist[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn identical_topics_coincide() {
        let m = LdaModel {
            k: 2,
            alpha: 1.0,
            beta: 0.1,
            seed: 0,
            iterations: 1,
            vocabulary: vec!["a".into(), "b".into()],
            phi: vec![vec![0.3, 0.7], vec![0.3, 0.7]],
            theta: vec![],
            topic_tokens: vec![1, 3],
            log_likelihood: vec![],
        };
        let pts = intertopic_map(&m).unwrap();
        assert!((pts[0].x - pts[1].x).abs() < 1e-12 && (pts[0].y - pts[1].y).abs() < 1e-12);
        assert_eq!((pts[0].weight, pts[1].weight), (0.25, 0.75));
    }
}
