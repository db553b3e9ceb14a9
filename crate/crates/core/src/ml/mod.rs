//! Classifier families, time-series cross-validation, grid search with
//! feature selection, metrics and the experiment report.

mod ensemble;
mod experiment;
mod knn;
mod linear;
mod metrics;
mod search;
mod select;
pub mod tree;

pub use ensemble::{AdaBoost, Forest, GradientBoosting};
pub use experiment::{
    default_grids, parse_grids, render_table, run_experiments, write_report_csv, ExperimentOptions,
    FamilyResult, FeatureConfig, MetricsReport, ReportRow,
};
pub use knn::{Knn, Weights};
pub use linear::LogisticRegression;
pub use metrics::{baselines, evaluate, majority, Metrics};
pub use search::{grid_search, refit, ts_cv_folds, Fold, SearchResult, TrainedClassifier};
pub use select::{f_scores, rfe, rfe_elimination_order, select_k};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlError {
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("{family}: invalid {name}: {message}")]
    InvalidParam {
        family: String,
        name: String,
        message: String,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty input")]
    Empty,
    #[error("need at least {needed} examples, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Fit(String),
    #[error("no grid candidate could be fitted: {0}")]
    NoCandidate(String),
    #[error("grid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Lrc,
    Knnc,
    Rfc,
    Etc,
    Gbc,
    Abc,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Lrc => "LRC",
            Family::Knnc => "KNNC",
            Family::Rfc => "RFC",
            Family::Etc => "ETC",
            Family::Gbc => "GBC",
            Family::Abc => "ABC",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = MlError;

    /// "XGBC" maps to the native gradient-boosting family.
    fn from_str(s: &str) -> Result<Self, MlError> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "LRC" => Family::Lrc,
            "KNNC" => Family::Knnc,
            "RFC" => Family::Rfc,
            "ETC" => Family::Etc,
            "GBC" | "XGBC" => Family::Gbc,
            "ABC" => Family::Abc,
            other => return Err(MlError::Config(format!("unknown model family {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    None,
    Int(i64),
    Float(f64),
    Str(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::None => f.write_str("None"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Str(s) => f.write_str(s),
        }
    }
}

/// Hyperparameters in declaration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Params(pub Vec<(String, ParamValue)>);

impl Params {
    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.0.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Grid key holding RFE target sizes.
pub const RFE_KEY: &str = "rfe_n_features_to_select";
/// Grid key holding ANOVA selector sizes (KNNC).
pub const SELECTOR_KEY: &str = "selector_k";

/// A named model family with its search grid. The feature-count key, if
/// present, is part of `grid` at its declared position.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub family: Family,
    pub grid: Vec<(String, Vec<ParamValue>)>,
}

impl ModelSpec {
    pub fn new(name: &str, grid: Vec<(String, Vec<ParamValue>)>) -> Result<Self, MlError> {
        let family: Family = name.parse()?;
        let spec = ModelSpec {
            name: name.to_owned(),
            family,
            grid,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), MlError> {
        let bad = |name: &str, message: &str| MlError::InvalidParam {
            family: self.name.clone(),
            name: name.to_owned(),
            message: message.to_owned(),
        };
        for (i, (k, vals)) in self.grid.iter().enumerate() {
            if vals.is_empty() {
                return Err(bad(k, "empty value list"));
            }
            if self.grid[..i].iter().any(|(p, _)| p == k) {
                return Err(bad(k, "declared twice"));
            }
            if k == RFE_KEY || k == SELECTOR_KEY {
                if (k == RFE_KEY) == (self.family == Family::Knnc) {
                    return Err(bad(k, "not available for this family"));
                }
                for v in vals {
                    if !matches!(v, ParamValue::Int(n) if *n >= 1) {
                        return Err(bad(k, "feature counts must be positive integers"));
                    }
                }
            } else {
                for v in vals {
                    let p = Params(vec![(k.clone(), v.clone())]);
                    HyperParams::parse(self.family, &self.name, &p)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrcParams {
    pub c: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnParams {
    pub n_neighbors: usize,
    pub weights: Weights,
    pub p: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbcParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub subsample: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
}

/// Typed hyperparameters. Keys not given take the usual library defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HyperParams {
    Lrc(LrcParams),
    Knn(KnnParams),
    Rfc(ForestParams),
    Etc(ForestParams),
    Gbc(GbcParams),
    Abc(AbcParams),
}

struct Reader<'a> {
    family: &'a str,
    params: &'a Params,
}

impl Reader<'_> {
    fn err(&self, name: &str, message: impl Into<String>) -> MlError {
        MlError::InvalidParam {
            family: self.family.to_owned(),
            name: name.to_owned(),
            message: message.into(),
        }
    }

    fn count(&self, name: &str, default: usize, min: usize) -> Result<usize, MlError> {
        match self.params.get(name) {
            None => Ok(default),
            Some(ParamValue::Int(n)) if *n >= min as i64 => Ok(*n as usize),
            Some(v) => Err(self.err(name, format!("expected integer ≥ {min}, got {v}"))),
        }
    }

    fn opt_count(&self, name: &str) -> Result<Option<usize>, MlError> {
        match self.params.get(name) {
            None | Some(ParamValue::None) => Ok(None),
            Some(ParamValue::Int(n)) if *n >= 1 => Ok(Some(*n as usize)),
            Some(v) => Err(self.err(name, format!("expected None or positive integer, got {v}"))),
        }
    }

    fn real(&self, name: &str, default: f64, ok: impl Fn(f64) -> bool) -> Result<f64, MlError> {
        let x = match self.params.get(name) {
            None => return Ok(default),
            Some(ParamValue::Int(n)) => *n as f64,
            Some(ParamValue::Float(x)) => *x,
            Some(v) => return Err(self.err(name, format!("expected a number, got {v}"))),
        };
        if ok(x) {
            Ok(x)
        } else {
            Err(self.err(name, format!("{x} out of range")))
        }
    }

    fn text(&self, name: &str) -> Option<String> {
        self.params.get(name).map(|v| v.to_string())
    }

    fn only(&self, allowed: &[&str]) -> Result<(), MlError> {
        for (k, _) in &self.params.0 {
            if !allowed.contains(&k.as_str()) && k != RFE_KEY && k != SELECTOR_KEY {
                return Err(self.err(k, "unknown hyperparameter"));
            }
        }
        Ok(())
    }
}

impl HyperParams {
    pub fn parse(family: Family, name: &str, params: &Params) -> Result<Self, MlError> {
        let r = Reader { family: name, params };
        let pos = |x: f64| x > 0.0 && x.is_finite();
        Ok(match family {
            Family::Lrc => {
                r.only(&["C", "solver", "max_iter"])?;
                if let Some(s) = r.text("solver") {
                    if s != "liblinear" {
                        return Err(r.err("solver", format!("only liblinear is available, got {s}")));
                    }
                }
                HyperParams::Lrc(LrcParams {
                    c: r.real("C", 1.0, pos)?,
                    max_iter: r.count("max_iter", 100, 1)?,
                })
            }
            Family::Knnc => {
                r.only(&["n_neighbors", "weights", "p"])?;
                let weights = match r.text("weights").as_deref() {
                    None | Some("uniform") => Weights::Uniform,
                    Some("distance") => Weights::Distance,
                    Some(o) => return Err(r.err("weights", format!("unknown weighting {o}"))),
                };
                let p = r.count("p", 2, 1)?;
                if p > 2 {
                    return Err(r.err("p", "only 1 and 2 are supported"));
                }
                HyperParams::Knn(KnnParams {
                    n_neighbors: r.count("n_neighbors", 5, 1)?,
                    weights,
                    p: p as u8,
                })
            }
            Family::Rfc | Family::Etc => {
                r.only(&[
                    "n_estimators",
                    "max_depth",
                    "min_samples_split",
                    "min_samples_leaf",
                ])?;
                let fp = ForestParams {
                    n_estimators: r.count("n_estimators", 100, 1)?,
                    max_depth: r.opt_count("max_depth")?,
                    min_samples_split: r.count("min_samples_split", 2, 2)?,
                    min_samples_leaf: r.count("min_samples_leaf", 1, 1)?,
                };
                if family == Family::Rfc {
                    HyperParams::Rfc(fp)
                } else {
                    HyperParams::Etc(fp)
                }
            }
            Family::Gbc => {
                r.only(&["n_estimators", "learning_rate", "max_depth", "subsample"])?;
                HyperParams::Gbc(GbcParams {
                    n_estimators: r.count("n_estimators", 100, 1)?,
                    learning_rate: r.real("learning_rate", 0.1, pos)?,
                    max_depth: r.count("max_depth", 3, 1)?,
                    subsample: r.real("subsample", 1.0, |x| x > 0.0 && x <= 1.0)?,
                })
            }
            Family::Abc => {
                r.only(&["n_estimators", "learning_rate"])?;
                HyperParams::Abc(AbcParams {
                    n_estimators: r.count("n_estimators", 50, 1)?,
                    learning_rate: r.real("learning_rate", 1.0, pos)?,
                })
            }
        })
    }
}

/// A fitted classifier of any family.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Lrc(LogisticRegression),
    Knn(Knn),
    Forest(Forest),
    Gbc(GradientBoosting),
    Abc(AdaBoost),
}

pub(crate) fn check_xy(x: &[Vec<f64>], y: &[u8]) -> Result<usize, MlError> {
    if x.is_empty() {
        return Err(MlError::Empty);
    }
    if x.len() != y.len() {
        return Err(MlError::Shape(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let f = x[0].len();
    if x.iter().any(|r| r.len() != f) {
        return Err(MlError::Shape("ragged feature rows".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MlError::Shape("non-finite feature value".into()));
    }
    if y.iter().any(|&l| l > 1) {
        return Err(MlError::Shape("labels must be 0 or 1".into()));
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(MlError::SingleClass);
    }
    Ok(f)
}

/// Fits one family with typed hyperparameters; deterministic under `seed`.
pub fn fit(hp: &HyperParams, x: &[Vec<f64>], y: &[u8], seed: u64) -> Result<Model, MlError> {
    check_xy(x, y)?;
    Ok(match hp {
        HyperParams::Lrc(p) => Model::Lrc(LogisticRegression::fit(x, y, p)?),
        HyperParams::Knn(p) => Model::Knn(Knn::fit(x, y, p)?),
        HyperParams::Rfc(p) => Model::Forest(Forest::fit(x, y, p, false, seed)),
        HyperParams::Etc(p) => Model::Forest(Forest::fit(x, y, p, true, seed)),
        HyperParams::Gbc(p) => Model::Gbc(GradientBoosting::fit(x, y, p, seed)),
        HyperParams::Abc(p) => Model::Abc(AdaBoost::fit(x, y, p, seed)?),
    })
}

impl Model {
    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<u8> {
        match self {
            Model::Lrc(m) => m.predict(x),
            Model::Knn(m) => m.predict(x),
            Model::Forest(m) => m.predict(x),
            Model::Gbc(m) => m.predict(x),
            Model::Abc(m) => m.predict(x),
        }
    }

    /// Per-feature importances used by RFE; KNN has none.
    pub fn importances(&self) -> Option<Vec<f64>> {
        match self {
            Model::Lrc(m) => Some(m.coef.iter().map(|c| c.abs()).collect()),
            Model::Knn(_) => None,
            Model::Forest(m) => Some(m.importances.clone()),
            Model::Gbc(m) => Some(m.importances.clone()),
            Model::Abc(m) => Some(m.importances.clone()),
        }
    }
}

pub(crate) fn take_columns(x: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    x.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect()
}

pub(crate) fn take_rows<T: Clone>(v: &[T], rows: &[usize]) -> Vec<T> {
    rows.iter().map(|&i| v[i].clone()).collect()
}

/// Normalizes to sum 1; an all-zero vector is returned unchanged.
pub(crate) fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(kv: &[(&str, ParamValue)]) -> Params {
        Params(kv.iter().map(|(k, v)| (k.to_string(), v.clone())).collect())
    }

    #[test]
    fn family_names() {
        assert_eq!("xgbc".parse::<Family>().unwrap(), Family::Gbc);
        assert!("SVC".parse::<Family>().is_err());
    }

    #[test]
    fn param_parsing() {
        let hp = HyperParams::parse(
            Family::Rfc,
            "RFC",
            &p(&[
                ("max_depth", ParamValue::None),
                ("n_estimators", ParamValue::Int(10)),
            ]),
        )
        .unwrap();
        assert_eq!(
            hp,
            HyperParams::Rfc(ForestParams {
                n_estimators: 10,
                max_depth: None,
                min_samples_split: 2,
                min_samples_leaf: 1
            })
        );
        assert!(HyperParams::parse(Family::Lrc, "LRC", &p(&[("C", ParamValue::Float(-1.0))])).is_err());
        assert!(HyperParams::parse(Family::Lrc, "LRC", &p(&[("gamma", ParamValue::Int(1))])).is_err());
        assert!(HyperParams::parse(Family::Knnc, "KNNC", &p(&[("p", ParamValue::Int(3))])).is_err());
        assert_eq!(
            p(&[
                ("C", ParamValue::Float(0.1)),
                ("solver", ParamValue::Str("liblinear".into()))
            ])
            .to_string(),
            "C=0.1;solver=liblinear"
        );
    }

    #[test]
    fn spec_validation() {
        let ok = ModelSpec::new("KNNC", vec![(SELECTOR_KEY.into(), vec![ParamValue::Int(4)])]);
        assert!(ok.is_ok());
        let wrong_key = ModelSpec::new("KNNC", vec![(RFE_KEY.into(), vec![ParamValue::Int(4)])]);
        assert!(wrong_key.is_err());
        let empty = ModelSpec::new("RFC", vec![("n_estimators".into(), vec![])]);
        assert!(empty.is_err());
    }

    #[test]
    fn single_class_rejected() {
        let hp = HyperParams::parse(Family::Lrc, "LRC", &Params::default()).unwrap();
        assert_eq!(
            fit(&hp, &[vec![1.0], vec![2.0]], &[1, 1], 0),
            Err(MlError::SingleClass)
        );
    }
}
