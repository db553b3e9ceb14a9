//! k-nearest neighbours with Minkowski p ∈ {1, 2}.

use super::{KnnParams, MlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weights {
    Uniform,
    /// Inverse distance; exact matches take all the weight.
    Distance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    x: Vec<Vec<f64>>,
    y: Vec<u8>,
    params: KnnParams,
}

impl Knn {
    pub fn fit(x: &[Vec<f64>], y: &[u8], p: &KnnParams) -> Result<Self, MlError> {
        if p.n_neighbors > x.len() {
            return Err(MlError::InvalidParam {
                family: "KNNC".into(),
                name: "n_neighbors".into(),
                message: format!("{} exceeds {} training rows", p.n_neighbors, x.len()),
            });
        }
        Ok(Knn {
            x: x.to_vec(),
            y: y.to_vec(),
            params: *p,
        })
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let it = a.iter().zip(b).map(|(u, v)| (u - v).abs());
        if self.params.p == 1 {
            it.sum()
        } else {
            it.map(|d| d * d).sum::<f64>().sqrt()
        }
    }

    fn predict_row(&self, row: &[f64]) -> u8 {
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, r)| (self.distance(row, r), i))
            .collect();
        let k = self.params.n_neighbors;
        d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let near = &d[..k];
        let mut votes = [0.0f64; 2];
        let exact = near.iter().any(|(dist, _)| *dist == 0.0);
        for &(dist, i) in near {
            let w = match self.params.weights {
                Weights::Uniform => 1.0,
                Weights::Distance if exact => f64::from(u8::from(dist == 0.0)),
                Weights::Distance => 1.0 / dist,
            };
            votes[self.y[i] as usize] += w;
        }
        u8::from(votes[1] > votes[0])
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<u8> {
        x.iter().map(|r| self.predict_row(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn knn(k: usize, weights: Weights, p: u8) -> KnnParams {
        KnnParams {
            n_neighbors: k,
            weights,
            p,
        }
    }

    #[test]
    fn one_neighbor_memorizes() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y: Vec<u8> = (0..10).map(|i| (i % 3 == 0) as u8).collect();
        let m = Knn::fit(&x, &y, &knn(1, Weights::Uniform, 2)).unwrap();
        assert_eq!(m.predict(&x), y);
    }

    #[test]
    fn tie_goes_to_class_zero() {
        let x = vec![vec![0.0], vec![2.0]];
        let m = Knn::fit(&x, &[1, 0], &knn(2, Weights::Uniform, 1)).unwrap();
        assert_eq!(m.predict(&[vec![1.0]]), vec![0]);
    }

    #[test]
    fn distance_weighting() {
        let x = vec![vec![0.0], vec![3.0], vec![3.5]];
        let m = Knn::fit(&x, &[1, 0, 0], &knn(3, Weights::Distance, 2)).unwrap();
        // 1/0.5 = 2 for class 1 against 1/2.5 + 1/3 for class 0.
        assert_eq!(m.predict(&[vec![0.5]]), vec![1]);
        let u = Knn::fit(&x, &[1, 0, 0], &knn(3, Weights::Uniform, 2)).unwrap();
        assert_eq!(u.predict(&[vec![0.5]]), vec![0]);
    }

    #[test]
    fn too_many_neighbors() {
        assert!(Knn::fit(&[vec![0.0]], &[1], &knn(2, Weights::Uniform, 2)).is_err());
    }
}
