//! Feature configurations, the per-currency experiment and its report.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{baselines, evaluate, Metrics};
use super::search::{grid_search, refit, ts_cv_folds};
use super::{take_columns, take_rows, MlError, ModelSpec, ParamValue, RFE_KEY, SELECTOR_KEY};
use crate::dataset::{class_balance, split_point, DatasetTable, PRICE_FEATURES, RAW_PREFIX};
use crate::sentiment::{prune_correlated, BASE_FEATURES};
use crate::txdecoder::Chain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureConfig {
    Price,
    Sentiment,
    SentimentPrice,
    RawSentiment,
    RawSentimentPrice,
}

impl FeatureConfig {
    pub const ALL: [FeatureConfig; 5] = [
        FeatureConfig::Price,
        FeatureConfig::Sentiment,
        FeatureConfig::SentimentPrice,
        FeatureConfig::RawSentiment,
        FeatureConfig::RawSentimentPrice,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FeatureConfig::Price => "Price",
            FeatureConfig::Sentiment => "Sentiment",
            FeatureConfig::SentimentPrice => "Sentiment+Price",
            FeatureConfig::RawSentiment => "Raw Sentiment",
            FeatureConfig::RawSentimentPrice => "Raw Sentiment+Price",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        let norm = |t: &str| t.to_ascii_lowercase().replace(['_', '-', ' '], "");
        Self::ALL.into_iter().find(|c| norm(c.label()) == norm(s))
    }

    fn uses_price(self) -> bool {
        matches!(
            self,
            FeatureConfig::Price | FeatureConfig::SentimentPrice | FeatureConfig::RawSentimentPrice
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    pub train_fraction: f64,
    pub folds: usize,
    /// Pairs with |r| at or above this are pruned.
    pub correlation_threshold: f64,
    pub configs: Vec<FeatureConfig>,
    pub seed: u64,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            train_fraction: 0.85,
            folds: 5,
            correlation_threshold: 0.8,
            configs: FeatureConfig::ALL.to_vec(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub config: String,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub selected_features: Vec<String>,
    pub best_params: String,
    pub cv_accuracy: Option<f64>,
    pub error: Option<String>,
}

impl ReportRow {
    fn blank(model: &str, config: &str) -> Self {
        ReportRow {
            model: model.to_owned(),
            config: config.to_owned(),
            accuracy: None,
            precision: None,
            recall: None,
            f1: None,
            selected_features: Vec::new(),
            best_params: String::new(),
            cv_accuracy: None,
            error: None,
        }
    }

    fn with_metrics(mut self, m: &Metrics) -> Self {
        self.accuracy = Some(m.accuracy);
        self.precision = Some(m.precision);
        self.recall = Some(m.recall);
        self.f1 = Some(m.f1);
        self
    }

    pub fn is_baseline(&self) -> bool {
        self.config == "baseline"
    }

    /// Table label such as `RFC+Sentiment+Price`.
    pub fn label(&self) -> String {
        if self.is_baseline() {
            self.model.clone()
        } else {
            format!("{}+{}", self.model, self.config)
        }
    }
}

/// Search outcome of one family under one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyResult {
    pub config: String,
    pub model: String,
    pub cv_accuracy: Option<f64>,
    pub cv_scores: Vec<f64>,
    pub test: Option<Metrics>,
    pub selected_features: Vec<String>,
    pub best_params: String,
    pub candidates: usize,
    pub failed_candidates: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub target: Chain,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub train_period: (String, String),
    pub test_period: (String, String),
    /// Shares of (0, 1) labels.
    pub train_balance: (f64, f64),
    pub test_balance: (f64, f64),
    /// Continuous sentiment columns removed for collinearity.
    pub pruned_features: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub families: Vec<FamilyResult>,
}

fn int_list(v: &[i64]) -> Vec<ParamValue> {
    v.iter().map(|&i| ParamValue::Int(i)).collect()
}

fn float_list(v: &[f64]) -> Vec<ParamValue> {
    v.iter().map(|&x| ParamValue::Float(x)).collect()
}

/// The full default search space. Support vector machines are not
/// available and the XGBoost rows run on the native gradient booster.
pub fn default_grids() -> Vec<ModelSpec> {
    let rfe = || (RFE_KEY.to_string(), int_list(&[4, 5, 6, 7, 8, 9]));
    let n_est = || ("n_estimators".to_string(), int_list(&[100, 200, 300, 400, 500]));
    let split_leaf = || {
        [
            ("min_samples_split".to_string(), int_list(&[2, 5, 10])),
            ("min_samples_leaf".to_string(), int_list(&[1, 2, 4])),
        ]
    };
    let depths = |v: &[i64], none: bool| {
        let mut out = if none { vec![ParamValue::None] } else { Vec::new() };
        out.extend(int_list(v));
        ("max_depth".to_string(), out)
    };
    let specs = vec![
        ("RFC", {
            let mut g = vec![n_est(), depths(&[5, 10, 15, 20], true)];
            g.extend(split_leaf());
            g.push(rfe());
            g
        }),
        (
            "XGBC",
            vec![
                n_est(),
                depths(&[3, 6, 10, 15, 20], false),
                ("learning_rate".into(), float_list(&[0.001, 0.01, 0.1])),
                ("subsample".into(), float_list(&[0.6, 0.8, 1.0])),
                rfe(),
            ],
        ),
        (
            "KNNC",
            vec![
                ("n_neighbors".into(), int_list(&[2, 3, 5, 7])),
                (
                    "weights".into(),
                    vec![
                        ParamValue::Str("uniform".into()),
                        ParamValue::Str("distance".into()),
                    ],
                ),
                ("p".into(), int_list(&[1, 2])),
                (SELECTOR_KEY.into(), int_list(&[4, 5, 6, 7, 8, 9])),
            ],
        ),
        (
            "LRC",
            vec![
                ("C".into(), float_list(&[0.01, 0.1, 1.0, 10.0, 50.0, 100.0])),
                ("solver".into(), vec![ParamValue::Str("liblinear".into())]),
            ],
        ),
        (
            "GBC",
            vec![
                n_est(),
                ("learning_rate".into(), float_list(&[0.001, 0.01, 0.1, 0.2])),
                depths(&[3, 5, 7], false),
                rfe(),
            ],
        ),
        (
            "ABC",
            vec![
                n_est(),
                ("learning_rate".into(), float_list(&[0.001, 0.01, 0.1, 1.0])),
                rfe(),
            ],
        ),
        ("ETC", {
            let mut g = vec![n_est(), depths(&[10, 20, 30], true)];
            g.extend(split_leaf());
            g.push(rfe());
            g
        }),
    ];
    specs
        .into_iter()
        .map(|(n, g)| ModelSpec::new(n, g).expect("default grid is valid"))
        .collect()
}

fn param_value(family: &str, key: &str, v: &toml::Value) -> Result<ParamValue, MlError> {
    Ok(match v {
        toml::Value::Integer(i) => ParamValue::Int(*i),
        toml::Value::Float(x) => ParamValue::Float(*x),
        toml::Value::String(s) if s.eq_ignore_ascii_case("none") => ParamValue::None,
        toml::Value::String(s) => ParamValue::Str(s.clone()),
        other => {
            return Err(MlError::Config(format!(
                "{family}.{key}: unsupported value {other}"
            )))
        }
    })
}

/// One table per model family, each key holding a value list (a scalar is
/// a one-element list). `"None"` stands for an unset depth. Declaration
/// order of tables and keys is kept.
pub fn parse_grids(table: &toml::Table) -> Result<Vec<ModelSpec>, MlError> {
    let mut specs = Vec::new();
    for (name, body) in table {
        let toml::Value::Table(body) = body else {
            return Err(MlError::Config(format!("{name}: expected a table")));
        };
        let mut grid = Vec::new();
        for (key, v) in body {
            let vals = match v {
                toml::Value::Array(a) => a
                    .iter()
                    .map(|x| param_value(name, key, x))
                    .collect::<Result<Vec<_>, _>>()?,
                scalar => vec![param_value(name, key, scalar)?],
            };
            grid.push((key.clone(), vals));
        }
        specs.push(ModelSpec::new(name, grid)?);
    }
    if specs.is_empty() {
        return Err(MlError::Config("no model families declared".into()));
    }
    Ok(specs)
}

fn has_nan(table: &DatasetTable, col: usize) -> bool {
    table.rows.iter().any(|r| r[col].is_nan())
}

/// Splits the table, prunes collinear sentiment columns on the training
/// block, then searches every family under every configuration. The
/// family with the best mean CV accuracy represents each configuration.
pub fn run_experiments(
    table: &DatasetTable,
    target: Chain,
    specs: &[ModelSpec],
    opts: &ExperimentOptions,
) -> Result<MetricsReport, MlError> {
    let n_train =
        split_point(&table.dates, opts.train_fraction).map_err(|e| MlError::Unsupported(e.to_string()))?;
    let n = table.len();
    if table.dates[n_train - 1] >= table.dates[n_train] {
        return Err(MlError::Shape("train and test periods overlap".into()));
    }
    let folds = ts_cv_folds(n_train, opts.folds)?;
    let (y_train, y_test) = table.labels.split_at(n_train);
    let train_rows = &table.rows[..n_train];

    let col = |name: &str| table.column_index(name);
    let continuous = |prefix: &str| -> Vec<String> {
        BASE_FEATURES
            .iter()
            .map(|b| format!("{prefix}{b}"))
            .filter(|c| col(c).is_some())
            .collect()
    };
    let prune = |names: Vec<String>, prefix: &str| -> Vec<String> {
        let stripped: Vec<String> = names.iter().map(|s| s[prefix.len()..].to_string()).collect();
        let cols: Vec<Vec<f64>> = names
            .iter()
            .map(|c| {
                let j = col(c).expect("present");
                train_rows.iter().map(|r| r[j]).collect()
            })
            .collect();
        prune_correlated(&stripped, &cols, opts.correlation_threshold)
            .into_iter()
            .map(|s| format!("{prefix}{s}"))
            .collect()
    };
    let base = continuous("");
    let raw = continuous(RAW_PREFIX);
    let kept_base = prune(base.clone(), "");
    let kept_raw = prune(raw.clone(), RAW_PREFIX);
    let pruned: Vec<String> = base
        .iter()
        .chain(&raw)
        .filter(|c| !kept_base.contains(c) && !kept_raw.contains(c))
        .cloned()
        .collect();
    if !pruned.is_empty() {
        log::info!("pruned collinear columns: {}", pruned.join(", "));
    }
    let external: Vec<String> = table
        .columns
        .iter()
        .filter(|c| {
            !PRICE_FEATURES.contains(&c.as_str())
                && !BASE_FEATURES.contains(&c.as_str())
                && !c.starts_with(RAW_PREFIX)
        })
        .filter(|c| {
            let missing = has_nan(table, col(c).expect("present"));
            if missing {
                log::warn!("column {c} has missing values and is not used");
            }
            !missing
        })
        .cloned()
        .collect();
    let price: Vec<String> = PRICE_FEATURES
        .iter()
        .map(|s| s.to_string())
        .filter(|c| col(c).is_some())
        .collect();

    let (rg, lucky, majority) = baselines(y_train, y_test)?;
    let mut rows = vec![
        ReportRow {
            accuracy: Some(rg),
            ..ReportRow::blank("Random Guess", "baseline")
        },
        ReportRow {
            best_params: format!("predict={majority}"),
            ..ReportRow::blank("Lucky Guess", "baseline").with_metrics(&lucky)
        },
    ];
    let mut families = Vec::new();

    for &config in &opts.configs {
        let mut names: Vec<String> = match config {
            FeatureConfig::Price => Vec::new(),
            FeatureConfig::Sentiment | FeatureConfig::SentimentPrice => {
                kept_base.iter().chain(&external).cloned().collect()
            }
            FeatureConfig::RawSentiment | FeatureConfig::RawSentimentPrice => kept_raw.clone(),
        };
        if config.uses_price() {
            names.extend(price.iter().cloned());
        }
        let idx: Vec<usize> = names.iter().map(|c| col(c).expect("present")).collect();
        let x = take_columns(&table.rows, &idx);
        let (x_train, x_test) = x.split_at(n_train);

        let mut best: Option<(f64, ReportRow)> = None;
        let mut errors = Vec::new();
        for spec in specs {
            let mut fr = FamilyResult {
                config: config.label().into(),
                model: spec.name.clone(),
                cv_accuracy: None,
                cv_scores: Vec::new(),
                test: None,
                selected_features: Vec::new(),
                best_params: String::new(),
                candidates: 0,
                failed_candidates: 0,
                error: None,
            };
            let outcome = if names.is_empty() {
                Err(MlError::Unsupported("no feature columns available".into()))
            } else {
                grid_search(spec, x_train, y_train, &folds, opts.seed).and_then(|s| {
                    let t = refit(spec, &s, x_train, y_train, opts.seed)?;
                    let m = evaluate(&t.predict(x_test), y_test)?;
                    Ok((s, t, m))
                })
            };
            match outcome {
                Ok((s, t, m)) => {
                    fr.cv_accuracy = Some(s.mean_score);
                    fr.cv_scores = s.cv_scores.clone();
                    fr.test = Some(m);
                    fr.selected_features = take_rows(&names, &t.features);
                    fr.best_params = s.params.to_string();
                    fr.candidates = s.candidates;
                    fr.failed_candidates = s.failed;
                    log::info!(
                        "{} {}: cv {:.4}, test {:.4} ({})",
                        config.label(),
                        spec.name,
                        s.mean_score,
                        m.accuracy,
                        fr.best_params
                    );
                    if best.as_ref().is_none_or(|b| s.mean_score > b.0) {
                        let row = ReportRow {
                            selected_features: fr.selected_features.clone(),
                            best_params: fr.best_params.clone(),
                            cv_accuracy: Some(s.mean_score),
                            ..ReportRow::blank(&spec.name, config.label()).with_metrics(&m)
                        };
                        best = Some((s.mean_score, row));
                    }
                }
                Err(e) => {
                    log::warn!("{} {} failed: {e}", config.label(), spec.name);
                    errors.push(format!("{}: {e}", spec.name));
                    fr.error = Some(e.to_string());
                }
            }
            families.push(fr);
        }
        rows.push(match best {
            Some((_, row)) => row,
            None => ReportRow {
                error: Some(errors.join("; ")),
                ..ReportRow::blank("-", config.label())
            },
        });
    }

    let period = |a: usize, b: usize| (table.dates[a].to_string(), table.dates[b].to_string());
    Ok(MetricsReport {
        target,
        seed: opts.seed,
        n_train,
        n_test: n - n_train,
        train_period: period(0, n_train - 1),
        test_period: period(n_train, n - 1),
        train_balance: class_balance(y_train),
        test_balance: class_balance(y_test),
        pruned_features: pruned,
        rows,
        families,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `model,config,accuracy,precision,recall,f1,selected_features,best_params`;
/// list fields are `;`-separated.
pub fn write_report_csv<W: Write>(report: &MetricsReport, output: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record([
        "model",
        "config",
        "accuracy",
        "precision",
        "recall",
        "f1",
        "selected_features",
        "best_params",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.model.clone(),
            r.config.clone(),
            opt(r.accuracy),
            opt(r.precision),
            opt(r.recall),
            opt(r.f1),
            r.selected_features.join(";"),
            r.best_params.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn currency_title(c: Chain) -> &'static str {
    match c {
        Chain::Btc => "Bitcoin Results",
        Chain::Eth => "Ethereum Results",
    }
}

/// Aligned text tables, one block per report: accuracy with two decimals,
/// the other metrics as whole percentages.
pub fn render_table(reports: &[MetricsReport]) -> String {
    let pct = |v: Option<f64>, d: usize| match v {
        Some(x) => format!("{:.*}%", d, 100.0 * x),
        None => "-".to_string(),
    };
    let mut out = String::new();
    for (i, rep) in reports.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let labels: Vec<String> = rep.rows.iter().map(ReportRow::label).collect();
        let width = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0).max(5);
        let _ = writeln!(out, "{}", currency_title(rep.target));
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>9}  {:>6}  {:>8}",
            "Model", "Accuracy", "Precision", "Recall", "F1-Score"
        );
        let _ = writeln!(out, "{}", "-".repeat(width + 41));
        for (row, label) in rep.rows.iter().zip(&labels) {
            let acc = if row.error.is_some() {
                "failed".to_string()
            } else {
                pct(row.accuracy, 2)
            };
            let _ = writeln!(
                out,
                "{:<width$}  {:>8}  {:>9}  {:>6}  {:>8}",
                label,
                acc,
                pct(row.precision, 0),
                pct(row.recall, 0),
                pct(row.f1, 0)
            );
        }
    }
    out
}
