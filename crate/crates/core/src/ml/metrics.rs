//! Accuracy and support-weighted precision, recall and F1.

use serde::{Deserialize, Serialize};

use super::MlError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Per-class scores averaged with weights equal to each class's share of
/// the true labels. Undefined per-class values count as 0.
pub fn evaluate(pred: &[u8], truth: &[u8]) -> Result<Metrics, MlError> {
    if truth.is_empty() {
        return Err(MlError::Empty);
    }
    if pred.len() != truth.len() {
        return Err(MlError::Shape(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    let n = truth.len();
    let correct = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    let (mut precision, mut recall, mut f1) = (0.0, 0.0, 0.0);
    for class in [0u8, 1] {
        let support = truth.iter().filter(|&&t| t == class).count();
        let predicted = pred.iter().filter(|&&p| p == class).count();
        let tp = pred
            .iter()
            .zip(truth)
            .filter(|(p, t)| **p == class && **t == class)
            .count();
        let (p, r) = (ratio(tp, predicted), ratio(tp, support));
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        let w = support as f64 / n as f64;
        precision += w * p;
        recall += w * r;
        f1 += w * f;
    }
    Ok(Metrics {
        accuracy: correct as f64 / n as f64,
        precision,
        recall,
        f1,
    })
}

/// Majority class of the training labels; an even split picks 1.
pub fn majority(labels: &[u8]) -> u8 {
    let ones = labels.iter().filter(|&&l| l == 1).count();
    u8::from(2 * ones >= labels.len())
}

/// (random-guess accuracy, lucky-guess metrics). The random guess is the
/// fixed 0.5 reference; the lucky guess predicts the training majority for
/// every test example.
pub fn baselines(train: &[u8], test: &[u8]) -> Result<(f64, Metrics, u8), MlError> {
    if train.is_empty() {
        return Err(MlError::Empty);
    }
    let m = majority(train);
    let lucky = evaluate(&vec![m; test.len()], test)?;
    Ok((0.5, lucky, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_inverted() {
        let y = [0, 1, 1, 0, 1];
        let m = evaluate(&y, &y).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        let inv: Vec<u8> = y.iter().map(|l| 1 - l).collect();
        assert_eq!(evaluate(&inv, &y).unwrap().accuracy, 0.0);
        assert!(evaluate(&[], &[]).is_err());
        assert!(evaluate(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn baseline_cases() {
        let (rg, m, maj) = baselines(&[1, 1, 0], &[0, 1, 0, 1]).unwrap();
        assert_eq!((rg, maj, m.accuracy), (0.5, 1, 0.5));
        let (_, m, _) = baselines(&[0, 0, 1], &[1, 1, 1]).unwrap();
        assert_eq!(m.accuracy, 0.0);
        assert_eq!(majority(&[0, 1]), 1);
    }
}
