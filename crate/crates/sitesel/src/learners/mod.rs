//! Binary classifiers for suitability learning: CART decision tree, random
//! forest, and logistic regression, plus the evaluation metrics, probability
//! outputs, feature importances, and model selection rule shared by all three.
//!
//! A fitted [`TrainedModel`] is a plain serializable document (versioned JSON
//! on disk): kind, hyperparameters, fitted state, and the normalized
//! [`ImportanceVector`] computed at fit time. Importance is mean decrease in
//! impurity for trees and forests, and normalized absolute standardized
//! coefficients for logistic regression.

mod forest;
mod logistic;
mod tree;

pub use forest::{train_forest, ForestConfig, ForestModel};
pub use logistic::{loss_and_gradient, sigmoid, train_logistic, LogisticConfig, LogisticModel};
pub use tree::{train_tree, Node, Tree, TreeConfig, TreeModel};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::SampleSet;
use crate::error::{Error, Result};
use crate::fs_util::write_atomic;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Probability cut for turning a likelihood into a class prediction.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tree,
    Forest,
    Logistic,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Logistic => "logistic",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fitted state of one classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Tree(TreeModel),
    Forest(ForestModel),
    Logistic(LogisticModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    /// Column order the model expects; also the importance ordering.
    pub feature_names: Vec<String>,
    pub params: ModelParams,
    pub importance: ImportanceVector,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::Tree(_) => ModelKind::Tree,
            ModelParams::Forest(_) => ModelKind::Forest,
            ModelParams::Logistic(_) => ModelKind::Logistic,
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = serde_json::to_vec(self)
            .map_err(|e| Error::Model(format!("serialization failed: {e}")))?;
        write_atomic(path.as_ref(), &bytes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TrainedModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let model: TrainedModel = serde_json::from_str(&text)
            .map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
                model.version
            )));
        }
        if model.importance.scores().len() != model.feature_names.len() {
            return Err(Error::Model(
                "importance length does not match feature names".into(),
            ));
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub name: String,
    pub importance: f64,
}

/// Per-feature importance scores, nonnegative and normalized to sum 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImportanceVector {
    scores: Vec<FeatureImportance>,
}

impl ImportanceVector {
    /// Normalize raw nonnegative scores to sum 1; an all-zero vector (a
    /// constant model) becomes the uniform vector.
    pub fn from_raw(names: &[String], raw: &[f64]) -> ImportanceVector {
        assert_eq!(names.len(), raw.len());
        let total: f64 = raw.iter().sum();
        let k = names.len() as f64;
        let scores = names
            .iter()
            .zip(raw)
            .map(|(name, &r)| FeatureImportance {
                name: name.clone(),
                importance: if total > 0.0 { r / total } else { 1.0 / k },
            })
            .collect();
        ImportanceVector { scores }
    }

    pub fn scores(&self) -> &[FeatureImportance] {
        &self.scores
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.scores
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.importance)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scores.is_empty() {
            return Err(Error::Model("importance vector is empty".into()));
        }
        let mut sum = 0.0;
        for s in &self.scores {
            if !s.importance.is_finite() || s.importance < 0.0 {
                return Err(Error::Model(format!(
                    "importance for `{}` must be a nonnegative real, got {}",
                    s.name, s.importance
                )));
            }
            sum += s.importance;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Model(format!(
                "importances must sum to 1 within 1e-9, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Likelihoods of class 1 for each row of `x` (columns must match the model's
/// feature order). A label prediction is 1 iff the likelihood reaches
/// [`DECISION_THRESHOLD`].
pub fn predict_proba(model: &TrainedModel, x: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = model.n_features();
    if let Some((i, row)) = x.iter().enumerate().find(|(_, row)| row.len() != k) {
        return Err(Error::Model(format!(
            "row {i} has {} features, model expects {k}",
            row.len()
        )));
    }
    Ok(match &model.params {
        ModelParams::Tree(m) => x.iter().map(|r| m.tree.predict_row(r)).collect(),
        ModelParams::Forest(m) => x.iter().map(|r| m.predict_row(r)).collect(),
        ModelParams::Logistic(m) => x.iter().map(|r| m.predict_row(r)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

/// Metrics from confusion counts. Precision and recall are 0 when their
/// denominator is 0, and F1 is 0 when precision + recall is 0.
pub fn metrics_from_confusion(confusion: Confusion) -> MetricsReport {
    let Confusion { tp, fp, fn_, tn } = confusion;
    let total = (tp + fp + fn_ + tn) as f64;
    let accuracy = if total > 0.0 { (tp + tn) as f64 / total } else { 0.0 };
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    MetricsReport {
        accuracy,
        precision,
        recall,
        f1,
        confusion,
    }
}

/// Score a model on held-out data at the 0.5 decision threshold.
pub fn evaluate(model: &TrainedModel, test: &SampleSet) -> Result<MetricsReport> {
    if test.is_empty() {
        return Err(Error::InvalidInput("evaluate: empty test set".into()));
    }
    let proba = predict_proba(model, &test.x)?;
    let mut confusion = Confusion {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
    };
    for (p, &label) in proba.iter().zip(&test.y) {
        let predicted = *p >= DECISION_THRESHOLD;
        match (predicted, label) {
            (true, 1) => confusion.tp += 1,
            (true, _) => confusion.fp += 1,
            (false, 1) => confusion.fn_ += 1,
            (false, _) => confusion.tn += 1,
        }
    }
    Ok(metrics_from_confusion(confusion))
}

/// Pick the winner: highest F1, ties broken by accuracy, then precision, then
/// recall, then earliest list position.
pub fn select_best(candidates: &[(TrainedModel, MetricsReport)]) -> Result<&TrainedModel> {
    let mut best: Option<&(TrainedModel, MetricsReport)> = None;
    for cand in candidates {
        let better = match best {
            None => true,
            Some(incumbent) => {
                let a = &cand.1;
                let b = &incumbent.1;
                (a.f1, a.accuracy, a.precision, a.recall)
                    > (b.f1, b.accuracy, b.precision, b.recall)
            }
        };
        if better {
            best = Some(cand);
        }
    }
    best.map(|(model, _)| model)
        .ok_or_else(|| Error::InvalidInput("select_best: empty model list".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(x: Vec<Vec<f64>>, y: Vec<u8>) -> SampleSet {
        let k = x[0].len();
        let cells = (0..x.len()).map(|i| (i, 0)).collect();
        SampleSet {
            feature_names: (0..k).map(|j| format!("f{j}")).collect(),
            x,
            y,
            cells,
        }
    }

    fn sign_model(weight: f64) -> TrainedModel {
        // predicts 1 iff the single raw feature is >= 0
        TrainedModel {
            version: MODEL_FORMAT_VERSION,
            feature_names: vec!["f0".into()],
            params: ModelParams::Logistic(LogisticModel {
                config: LogisticConfig::default(),
                weights: vec![weight],
                bias: 0.0,
                means: vec![0.0],
                scales: vec![1.0],
            }),
            importance: ImportanceVector::from_raw(&["f0".into()], &[1.0]),
        }
    }

    #[test]
    fn hand_computed_confusion_metrics() {
        let m = metrics_from_confusion(Confusion { tp: 2, fp: 1, fn_: 1, tn: 6 });
        assert!((m.accuracy - 0.8).abs() < 1e-12);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_degenerate_metrics() {
        let perfect = metrics_from_confusion(Confusion { tp: 5, fp: 0, fn_: 0, tn: 5 });
        assert_eq!(
            (perfect.accuracy, perfect.precision, perfect.recall, perfect.f1),
            (1.0, 1.0, 1.0, 1.0)
        );
        // positives exist but none are predicted
        let silent = metrics_from_confusion(Confusion { tp: 0, fp: 0, fn_: 3, tn: 7 });
        assert_eq!((silent.precision, silent.recall, silent.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn evaluate_reproduces_confusion_counts() {
        let model = sign_model(10.0);
        // 2 tp, 1 fp, 1 fn, 6 tn
        let test = set(
            vec![
                vec![1.0],
                vec![2.0], // tp
                vec![3.0], // fp
                vec![-1.0], // fn
                vec![-1.0],
                vec![-2.0],
                vec![-3.0],
                vec![-4.0],
                vec![-5.0],
                vec![-6.0], // tn x6
            ],
            vec![1, 1, 0, 1, 0, 0, 0, 0, 0, 0],
        );
        let m = evaluate(&model, &test).unwrap();
        assert_eq!(m.confusion, Confusion { tp: 2, fp: 1, fn_: 1, tn: 6 });
        assert!((m.accuracy - 0.8).abs() < 1e-12);
    }

    #[test]
    fn predict_proba_checks_width() {
        let model = sign_model(1.0);
        assert!(predict_proba(&model, &[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn leaf_fraction_is_the_predicted_probability() {
        let tree = Tree {
            nodes: vec![
                Node::Split { feature: 0, threshold: 0.0, left: 1, right: 2 },
                Node::Leaf { class1_fraction: 0.25 },
                Node::Leaf { class1_fraction: 0.75 },
            ],
        };
        assert_eq!(tree.predict_row(&[-1.0]), 0.25);
        assert_eq!(tree.predict_row(&[1.0]), 0.75);
    }

    #[test]
    fn select_best_tie_break_chain() {
        let m = |f1: f64, acc: f64| {
            let mut report = metrics_from_confusion(Confusion { tp: 1, fp: 0, fn_: 0, tn: 1 });
            report.f1 = f1;
            report.accuracy = acc;
            report.precision = 0.5;
            report.recall = 0.5;
            (sign_model(1.0), report)
        };
        // strict argmax by F1
        let list = vec![m(0.9, 0.1), m(0.8, 0.9), m(0.7, 0.9)];
        assert!(std::ptr::eq(select_best(&list).unwrap(), &list[0].0));
        // F1 tie falls through to accuracy
        let list = vec![m(0.8, 0.8), m(0.8, 0.9)];
        assert!(std::ptr::eq(select_best(&list).unwrap(), &list[1].0));
        // full tie keeps list order
        let list = vec![m(0.8, 0.8), m(0.8, 0.8)];
        assert!(std::ptr::eq(select_best(&list).unwrap(), &list[0].0));
    }

    #[test]
    fn importance_normalization_and_uniform_fallback() {
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string(), "d".to_string()];
        let v = ImportanceVector::from_raw(&names, &[3.0, 1.0, 0.0, 0.0]);
        v.validate().unwrap();
        assert_eq!(v.get("a"), Some(0.75));
        let uniform = ImportanceVector::from_raw(&names, &[0.0; 4]);
        uniform.validate().unwrap();
        assert_eq!(uniform.get("c"), Some(0.25));
    }

    #[test]
    fn importance_driven_by_the_label_feature() {
        use rand::Rng;
        let mut rng = crate::rng::from_seed(14);
        let x: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..4).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let mut sorted: Vec<f64> = x.iter().map(|r| r[0]).collect();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[150];
        let y: Vec<u8> = x.iter().map(|r| (r[0] > median) as u8).collect();
        let s = set(x, y);

        for model in [
            train_tree(&s, &TreeConfig::default()).unwrap(),
            train_forest(&s, &ForestConfig { n_trees: 30, ..ForestConfig::default() }).unwrap(),
            train_logistic(&s, &LogisticConfig::default()).unwrap(),
        ] {
            model.importance.validate().unwrap();
            let scores = model.importance.scores();
            let top = scores
                .iter()
                .max_by(|a, b| a.importance.total_cmp(&b.importance))
                .unwrap();
            assert_eq!(top.name, "f0", "{:?}", model.kind());
            assert!(top.importance > 0.5, "{:?}: {}", model.kind(), top.importance);
        }
    }

    #[test]
    fn model_json_roundtrip() {
        use rand::Rng;
        let mut rng = crate::rng::from_seed(5);
        let x: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
            .collect();
        let y: Vec<u8> = x.iter().map(|r| (r[0] > 0.5) as u8).collect();
        let s = set(x.clone(), y);
        let dir = tempfile::tempdir().unwrap();
        for model in [
            train_tree(&s, &TreeConfig::default()).unwrap(),
            train_forest(&s, &ForestConfig { n_trees: 5, ..ForestConfig::default() }).unwrap(),
            train_logistic(&s, &LogisticConfig::default()).unwrap(),
        ] {
            let path = dir.path().join(format!("{}.json", model.kind()));
            model.save(&path).unwrap();
            let back = TrainedModel::load(&path).unwrap();
            assert_eq!(back, model);
            assert_eq!(predict_proba(&back, &x).unwrap(), predict_proba(&model, &x).unwrap());
        }
    }

    #[test]
    fn version_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut model = sign_model(1.0);
        model.version = 99;
        model.save(&path).unwrap();
        assert!(matches!(TrainedModel::load(&path), Err(Error::Model(_))));
    }
}
