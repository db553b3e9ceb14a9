//! CART trees on a squared-error criterion. For 0/1 targets this is Gini
//! impurity up to a constant factor, so one builder serves classification
//! (leaf value = weighted share of class 1) and regression.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitter {
    /// Best midpoint threshold per candidate feature.
    Best,
    /// One uniform random threshold per candidate feature.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
    pub splitter: Splitter,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: None,
            splitter: Splitter::Best,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    /// Weighted impurity decrease per feature, unnormalized.
    pub importances: Vec<f64>,
}

#[derive(Clone, Copy, Default)]
struct Stats {
    w: f64,
    wy: f64,
    wyy: f64,
}

impl Stats {
    fn add(&mut self, w: f64, y: f64) {
        self.w += w;
        self.wy += w * y;
        self.wyy += w * y * y;
    }

    fn sub(&self, o: &Stats) -> Stats {
        Stats {
            w: self.w - o.w,
            wy: self.wy - o.wy,
            wyy: self.wyy - o.wyy,
        }
    }

    /// Weighted sum of squared deviations.
    fn sse(&self) -> f64 {
        if self.w <= 0.0 {
            0.0
        } else {
            (self.wyy - self.wy * self.wy / self.w).max(0.0)
        }
    }

    /// Larger is better; equals constant − children SSE.
    fn proxy(&self) -> f64 {
        if self.w <= 0.0 {
            0.0
        } else {
            self.wy * self.wy / self.w
        }
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    w: &'a [f64],
    cfg: TreeConfig,
    n_features: usize,
    nodes: Vec<Node>,
    importances: Vec<f64>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Tree {
    /// Grows a tree on the rows in `idx` (rows with zero weight must be
    /// excluded by the caller).
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        w: &[f64],
        idx: Vec<usize>,
        cfg: TreeConfig,
        rng: &mut ChaCha8Rng,
    ) -> Tree {
        let n_features = x.first().map_or(0, Vec::len);
        let mut b = Builder {
            x,
            y,
            w,
            cfg,
            n_features,
            nodes: Vec::new(),
            importances: vec![0.0; n_features],
        };
        b.grow(idx, 0, rng);
        Tree {
            nodes: b.nodes,
            importances: b.importances,
        }
    }

    fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.nodes[self.leaf_index(row)] {
            Node::Leaf { value } => *value,
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Leaf node id reached by `row`; stable across calls.
    pub fn leaf_id(&self, row: &[f64]) -> usize {
        self.leaf_index(row)
    }

    pub fn set_leaf_value(&mut self, leaf: usize, value: f64) {
        if let Node::Leaf { value: v } = &mut self.nodes[leaf] {
            *v = value;
        }
    }

    pub fn leaf_ids(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i], Node::Leaf { .. }))
            .collect()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

impl Builder<'_> {
    fn stats(&self, idx: &[usize]) -> Stats {
        let mut s = Stats::default();
        for &i in idx {
            s.add(self.w[i], self.y[i]);
        }
        s
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        let total = self.stats(&idx);
        self.nodes.push(Node::Leaf {
            value: if total.w > 0.0 { total.wy / total.w } else { 0.0 },
        });
        let n = idx.len();
        let stop = self.cfg.max_depth.is_some_and(|d| depth >= d)
            || n < self.cfg.min_samples_split
            || n < 2 * self.cfg.min_samples_leaf
            || total.sse() <= 1e-12 * total.w.max(1.0);
        if stop {
            return id;
        }
        let Some(best) = self.find_split(&idx, &total, rng) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x[i][best.feature] <= best.threshold);
        let (ls, rs) = (self.stats(&l), self.stats(&r));
        self.importances[best.feature] += (total.sse() - ls.sse() - rs.sse()).max(0.0);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Visits features in random order until `max_features` non-constant
    /// ones have been examined.
    fn find_split(&self, idx: &[usize], total: &Stats, rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let max_features = self.cfg.max_features.unwrap_or(self.n_features).max(1);
        let mut order: Vec<usize> = (0..self.n_features).collect();
        let mut best: Option<Candidate> = None;
        let mut examined = 0;
        for pos in 0..self.n_features {
            if examined >= max_features {
                break;
            }
            let j = rng.random_range(pos..self.n_features);
            order.swap(pos, j);
            let f = order[pos];
            let (lo, hi) = idx
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(self.x[i][f]), hi.max(self.x[i][f]))
                });
            if hi <= lo {
                continue;
            }
            examined += 1;
            let cand = match self.cfg.splitter {
                Splitter::Best => self.best_threshold(idx, f, total),
                Splitter::Random => self.random_threshold(idx, f, lo, hi, total, rng),
            };
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.score > b.score) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn best_threshold(&self, idx: &[usize], f: usize, total: &Stats) -> Option<Candidate> {
        let mut sorted = idx.to_vec();
        sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
        let msl = self.cfg.min_samples_leaf;
        let mut left = Stats::default();
        let mut best: Option<Candidate> = None;
        for k in 0..sorted.len() - 1 {
            let i = sorted[k];
            left.add(self.w[i], self.y[i]);
            let (a, b) = (self.x[i][f], self.x[sorted[k + 1]][f]);
            if b <= a || k + 1 < msl || sorted.len() - k - 1 < msl {
                continue;
            }
            let score = left.proxy() + total.sub(&left).proxy();
            if best.as_ref().is_none_or(|c| score > c.score) {
                let mid = a + (b - a) / 2.0;
                let threshold = if mid >= b { a } else { mid };
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }
        best
    }

    fn random_threshold(
        &self,
        idx: &[usize],
        f: usize,
        lo: f64,
        hi: f64,
        total: &Stats,
        rng: &mut ChaCha8Rng,
    ) -> Option<Candidate> {
        let mut threshold = lo + rng.random::<f64>() * (hi - lo);
        if threshold >= hi {
            threshold = lo;
        }
        let mut left = Stats::default();
        let mut n_left = 0;
        for &i in idx {
            if self.x[i][f] <= threshold {
                left.add(self.w[i], self.y[i]);
                n_left += 1;
            }
        }
        let msl = self.cfg.min_samples_leaf;
        if n_left < msl || idx.len() - n_left < msl {
            return None;
        }
        Some(Candidate {
            feature: f,
            threshold,
            score: left.proxy() + total.sub(&left).proxy(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn fit(x: &[Vec<f64>], y: &[f64], cfg: TreeConfig) -> Tree {
        let w = vec![1.0; y.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Tree::fit(x, y, &w, (0..y.len()).collect(), cfg, &mut rng)
    }

    #[test]
    fn stump_finds_midpoint() {
        let x: Vec<Vec<f64>> = [1.0, 2.0, 3.0, 10.0, 11.0].iter().map(|v| vec![*v]).collect();
        let y = [0.0, 0.0, 0.0, 1.0, 1.0];
        let t = fit(
            &x,
            &y,
            TreeConfig {
                max_depth: Some(1),
                ..Default::default()
            },
        );
        assert_eq!(t.depth(), 1);
        assert_eq!(t.predict_row(&[6.4]), 0.0);
        assert_eq!(t.predict_row(&[6.6]), 1.0);
        assert!(t.importances[0] > 0.0);
    }

    #[test]
    fn unlimited_depth_memorizes_unique_points() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, ((i * 7) % 11) as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| ((i * 13 + 5) % 3 == 0) as u8 as f64).collect();
        let t = fit(&x, &y, TreeConfig::default());
        for (r, l) in x.iter().zip(&y) {
            assert_eq!(t.predict_row(r), *l);
        }
    }

    #[test]
    fn min_samples_leaf_respected() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let y = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let t = fit(
            &x,
            &y,
            TreeConfig {
                min_samples_leaf: 2,
                ..Default::default()
            },
        );
        // The lone positive cannot be isolated.
        assert!(t.predict_row(&[0.0]) < 1.0);
    }

    #[test]
    fn constant_features_give_a_leaf() {
        let x = vec![vec![1.0]; 4];
        let t = fit(&x, &[0.0, 1.0, 0.0, 1.0], TreeConfig::default());
        assert_eq!(t.depth(), 0);
        assert_eq!(t.predict_row(&[1.0]), 0.5);
    }
}
