//! L2-regularized logistic regression in the liblinear formulation: the
//! intercept is an extra constant feature and is penalized like the weights.

use nalgebra::{DMatrix, DVector};

use super::{LrcParams, MlError};

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

/// log(1 + e^(−t)) without overflow.
fn log1pexp_neg(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

struct Problem<'a> {
    x: &'a [Vec<f64>],
    y: Vec<f64>,
    c: f64,
}

impl Problem<'_> {
    fn margin(&self, w: &DVector<f64>, i: usize) -> f64 {
        let d = w.len() - 1;
        self.x[i].iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>() + w[d]
    }

    fn objective(&self, w: &DVector<f64>) -> f64 {
        let loss: f64 = (0..self.x.len())
            .map(|i| log1pexp_neg(self.y[i] * self.margin(w, i)))
            .sum();
        0.5 * w.dot(w) + self.c * loss
    }

    fn grad_hess(&self, w: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = w.len();
        let mut g = w.clone();
        let mut h = DMatrix::identity(n, n);
        let mut xi = DVector::zeros(n);
        for i in 0..self.x.len() {
            for (j, v) in self.x[i].iter().enumerate() {
                xi[j] = *v;
            }
            xi[n - 1] = 1.0;
            let z = self.y[i] * self.margin(w, i);
            let s = sigmoid(z);
            g.axpy(self.c * (s - 1.0) * self.y[i], &xi, 1.0);
            h.ger(self.c * s * (1.0 - s), &xi, &xi, 1.0);
        }
        (g, h)
    }
}

impl LogisticRegression {
    /// Minimizes ½‖w‖² + C Σ log(1 + exp(−yᵢ wᵀx̃ᵢ)) with x̃ = (x, 1) by
    /// damped Newton iterations.
    pub fn fit(x: &[Vec<f64>], y: &[u8], p: &LrcParams) -> Result<Self, MlError> {
        let d = x[0].len();
        let prob = Problem {
            x,
            y: y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect(),
            c: p.c,
        };
        let mut w = DVector::zeros(d + 1);
        let mut f = prob.objective(&w);
        let mut g0 = None;
        for _ in 0..p.max_iter {
            let (g, h) = prob.grad_hess(&w);
            let gn = g.norm();
            let g0n = *g0.get_or_insert(gn);
            if gn <= 1e-10 * g0n.max(1.0) {
                break;
            }
            let Some(chol) = h.cholesky() else {
                return Err(MlError::Fit("singular Hessian".into()));
            };
            let step = chol.solve(&(-&g));
            let slope = g.dot(&step);
            let mut t = 1.0;
            loop {
                let cand = &w + t * &step;
                let fc = prob.objective(&cand);
                if fc <= f + 1e-4 * t * slope {
                    w = cand;
                    f = fc;
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    return Ok(Self::from_w(&w));
                }
            }
        }
        Ok(Self::from_w(&w))
    }

    fn from_w(w: &DVector<f64>) -> Self {
        let d = w.len() - 1;
        LogisticRegression {
            coef: w.iter().take(d).copied().collect(),
            intercept: w[d],
        }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>() + self.intercept
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<u8> {
        x.iter().map(|r| u8::from(self.decision(r) > 0.0)).collect()
    }
}
