//! The iterative learning-based weighting loop (LB-MCDM) and candidate ranking.
//!
//! One run proceeds in two stages. Stage 1 reclassifies the criterion layers
//! and overlays them with equal weights. Stage 2 repeats up to `max_iters`
//! times: threshold the current map into labels, sample labeled points, train
//! the tree, forest, and logistic classifiers, pick the best by F1, and adopt
//! its feature importances as the next weight vector. The loop stops early
//! when the max-norm weight change drops below `weight_tol`. Finally the
//! winning classifier kind is retrained on a fresh sample from the final map
//! and every candidate cell is scored and ranked by its suitability
//! likelihood.
//!
//! All randomness is derived from `sampling.seed` (two streams per iteration,
//! via `rng::derive_seed`), so identical configs produce identical runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::location;
use crate::dataset::{sample_points, train_test_split, SampleSet};
use crate::error::{Error, Result};
use crate::fs_util::write_atomic;
use crate::learners::{
    evaluate, predict_proba, select_best, train_forest, train_logistic, train_tree,
    ForestConfig, ImportanceVector, LogisticConfig, MetricsReport, ModelKind, TrainedModel,
    TreeConfig,
};
use crate::overlay::{
    extract_candidates, quantile_labels, threshold_labels, weighted_sum, CandidateMode,
    CandidateSet, WeightVector,
};
use crate::raster::{check_aligned, read_ascii_grid, reclassify, write_ascii_grid, RasterGrid,
    ReclassTable};
use crate::rng::derive_seed;

/// One criterion layer: where to read it and how to score it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub name: String,
    pub path: PathBuf,
    pub reclass: ReclassTable,
}

/// How the suitability map is cut into binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LabelRuleRaw", into = "LabelRuleRaw")]
pub enum LabelRule {
    /// 1 where the map value reaches `tau`.
    Threshold { tau: f64 },
    /// 1 on the top `q` fraction of data cells; guarantees both classes.
    Quantile { q: f64 },
}

impl LabelRule {
    pub(crate) fn default_rule() -> LabelRule {
        LabelRule::Quantile { q: 0.3 }
    }

    pub fn apply(&self, suitability: &RasterGrid) -> Result<RasterGrid> {
        match self {
            LabelRule::Threshold { tau } => Ok(threshold_labels(suitability, *tau)),
            LabelRule::Quantile { q } => quantile_labels(suitability, *q),
        }
    }
}

#[derive(Serialize, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct LabelRuleRaw {
    mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
}

impl TryFrom<LabelRuleRaw> for LabelRule {
    type Error = String;

    fn try_from(raw: LabelRuleRaw) -> std::result::Result<Self, String> {
        match raw.mode.as_str() {
            "threshold" => {
                if raw.q.is_some() {
                    return Err("threshold mode does not take `q`".into());
                }
                // default cut on the 0..10 scale
                Ok(LabelRule::Threshold { tau: raw.tau.unwrap_or(6.0) })
            }
            "quantile" => {
                if raw.tau.is_some() {
                    return Err("quantile mode does not take `tau`".into());
                }
                Ok(LabelRule::Quantile { q: raw.q.unwrap_or(0.3) })
            }
            other => Err(format!("unknown label mode `{other}` (expected threshold or quantile)")),
        }
    }
}

impl From<LabelRule> for LabelRuleRaw {
    fn from(rule: LabelRule) -> Self {
        match rule {
            LabelRule::Threshold { tau } => LabelRuleRaw {
                mode: "threshold".into(),
                tau: Some(tau),
                q: None,
            },
            LabelRule::Quantile { q } => LabelRuleRaw {
                mode: "quantile".into(),
                tau: None,
                q: Some(q),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    /// Points sampled per iteration.
    pub n: usize,
    pub stratified: bool,
    /// Master seed for sampling and splitting (streams derived per iteration).
    pub seed: u64,
    pub test_fraction: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            n: 5000,
            stratified: true,
            seed: 0,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterationConfig {
    /// Training/reweighting passes; 1 reproduces the single-refinement flow.
    pub max_iters: usize,
    /// Early-stop tolerance on the max-norm weight change.
    pub weight_tol: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            max_iters: 2,
            weight_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub tree: TreeConfig,
    pub forest: ForestConfig,
    pub logistic: LogisticConfig,
}

fn default_candidate_mode() -> CandidateMode {
    CandidateMode::AllCells
}

/// Everything a full run needs. Serializable as the strict JSON config schema
/// (see `configs/example.json`); unspecified sections take the documented
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub layers: Vec<LayerSpec>,
    #[serde(default = "LabelRule::default_rule")]
    pub labels: LabelRule,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub iteration: IterationConfig,
    #[serde(default = "default_candidate_mode")]
    pub candidates: CandidateMode,
    /// Optional explicit weights for the standalone `overlay` command.
    /// The pipeline itself always starts from equal weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightVector>,
    /// Default output directory; a CLI `--out` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl PipelineConfig {
    /// Semantic validation with config-path-labeled errors.
    pub fn validate(&self) -> Result<()> {
        if self.layers.len() < 2 {
            return Err(location(".layers", "at least 2 layers are required"));
        }
        for (i, spec) in self.layers.iter().enumerate() {
            if spec.name.is_empty() {
                return Err(location(&format!(".layers[{i}].name"), "layer name is empty"));
            }
            if self.layers[..i].iter().any(|other| other.name == spec.name) {
                return Err(location(
                    &format!(".layers[{i}].name"),
                    &format!("duplicate layer name `{}`", spec.name),
                ));
            }
            spec.reclass
                .validate()
                .map_err(|e| location(&format!(".layers[{i}].reclass"), &e.to_string()))?;
        }
        match &self.labels {
            LabelRule::Threshold { tau } => {
                if !tau.is_finite() {
                    return Err(location(".labels.tau", "must be finite"));
                }
            }
            LabelRule::Quantile { q } => {
                if q.is_nan() || *q <= 0.0 || *q >= 1.0 {
                    return Err(location(".labels.q", "must lie in (0, 1)"));
                }
            }
        }
        if self.sampling.n < 2 {
            return Err(location(".sampling.n", "must be at least 2"));
        }
        let tf = self.sampling.test_fraction;
        if tf.is_nan() || tf <= 0.0 || tf >= 1.0 {
            return Err(location(".sampling.test_fraction", "must lie in (0, 1)"));
        }
        if self.iteration.max_iters < 1 {
            return Err(location(".iteration.max_iters", "must be at least 1"));
        }
        if !self.iteration.weight_tol.is_finite() || self.iteration.weight_tol <= 0.0 {
            return Err(location(".iteration.weight_tol", "must be a positive real"));
        }
        let t = &self.training;
        if t.tree.max_depth < 1 {
            return Err(location(".training.tree.max_depth", "must be at least 1"));
        }
        if t.tree.min_samples_leaf < 1 {
            return Err(location(".training.tree.min_samples_leaf", "must be at least 1"));
        }
        if t.forest.n_trees < 1 {
            return Err(location(".training.forest.n_trees", "must be at least 1"));
        }
        if t.forest.max_depth < 1 {
            return Err(location(".training.forest.max_depth", "must be at least 1"));
        }
        if t.forest.min_samples_leaf < 1 {
            return Err(location(".training.forest.min_samples_leaf", "must be at least 1"));
        }
        if let Some(mtry) = t.forest.max_features {
            if mtry < 1 || mtry > self.layers.len() {
                return Err(location(
                    ".training.forest.max_features",
                    &format!("must lie in 1..={}", self.layers.len()),
                ));
            }
        }
        if t.logistic.learning_rate.is_nan() || t.logistic.learning_rate <= 0.0 {
            return Err(location(".training.logistic.learning_rate", "must be positive"));
        }
        if t.logistic.epochs < 1 {
            return Err(location(".training.logistic.epochs", "must be at least 1"));
        }
        if t.logistic.l2 < 0.0 {
            return Err(location(".training.logistic.l2", "must be nonnegative"));
        }
        match &self.candidates {
            CandidateMode::TopFraction { fraction } => {
                if fraction.is_nan() || *fraction <= 0.0 || *fraction > 1.0 {
                    return Err(location(".candidates.fraction", "must lie in (0, 1]"));
                }
            }
            CandidateMode::Explicit { cells } => {
                if cells.is_empty() {
                    return Err(location(".candidates.cells", "explicit candidate list is empty"));
                }
            }
            CandidateMode::AllCells => {}
        }
        if let Some(weights) = &self.weights {
            weights
                .validate()
                .map_err(|e| location(".weights", &e.to_string()))?;
            let mut names: Vec<&str> = weights.names().collect();
            names.sort_unstable();
            let mut layer_names: Vec<&str> = self.layers.iter().map(|l| l.name.as_str()).collect();
            layer_names.sort_unstable();
            if names != layer_names {
                return Err(location(".weights", "weight names must match the layer names"));
            }
        }
        Ok(())
    }

    pub fn layer_names(&self) -> Vec<String> {
        self.layers.iter().map(|l| l.name.clone()).collect()
    }
}

/// Equal weights `1/K` for each named layer.
pub fn initial_weights(names: &[String]) -> Result<WeightVector> {
    if names.is_empty() {
        return Err(Error::InvalidInput("initial_weights: no layers".into()));
    }
    let w = 1.0 / names.len() as f64;
    WeightVector::new(names.iter().map(|n| (n.clone(), w)))
}

/// Adopt a model's (already normalized) importances as layer weights,
/// preserving the given layer order by name.
pub fn weights_from_importance(imp: &ImportanceVector, layer_names: &[String]) -> Result<WeightVector> {
    imp.validate()?;
    if imp.scores().len() != layer_names.len() {
        return Err(Error::InvalidInput(format!(
            "importance has {} entries but there are {} layers",
            imp.scores().len(),
            layer_names.len()
        )));
    }
    let pairs: Result<Vec<(String, f64)>> = layer_names
        .iter()
        .map(|name| {
            imp.get(name)
                .map(|w| (name.clone(), w))
                .ok_or_else(|| Error::InvalidInput(format!("importance missing layer `{name}`")))
        })
        .collect();
    WeightVector::new(pairs?)
}

/// Read and reclassify every configured layer, returning `(names, grids)`
/// aligned and in config order.
pub fn load_reclassified_layers(cfg: &PipelineConfig) -> Result<(Vec<String>, Vec<RasterGrid>)> {
    let mut names = Vec::with_capacity(cfg.layers.len());
    let mut grids = Vec::with_capacity(cfg.layers.len());
    for spec in &cfg.layers {
        let raw = read_ascii_grid(&spec.path)?;
        grids.push(reclassify(&raw, &spec.reclass)?);
        names.push(spec.name.clone());
    }
    check_aligned(grids.iter())?;
    Ok((names, grids))
}

/// One ranked candidate site.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedCandidate {
    pub rank: usize,
    pub id: usize,
    pub row: usize,
    pub col: usize,
    pub x: f64,
    pub y: f64,
    /// Model likelihood of suitability at this cell.
    pub likelihood: f64,
    /// Weighted-sum suitability score at this cell (tie-breaker).
    pub suitability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRanking {
    pub rows: Vec<RankedCandidate>,
}

impl CandidateRanking {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Score candidates with a trained model and sort them: likelihood descending,
/// suitability descending, then candidate id. Candidates whose cell is NODATA
/// in any feature layer are dropped with a warning.
pub fn rank_candidates(
    model: &TrainedModel,
    layers: &[RasterGrid],
    suitability: &RasterGrid,
    candidates: &CandidateSet,
) -> Result<CandidateRanking> {
    if layers.len() != model.n_features() {
        return Err(Error::Model(format!(
            "model expects {} feature layers, got {}",
            model.n_features(),
            layers.len()
        )));
    }
    check_aligned(layers.iter().chain(std::iter::once(suitability)))?;

    let mut kept = Vec::with_capacity(candidates.len());
    let mut features = Vec::with_capacity(candidates.len());
    'candidates: for cand in &candidates.candidates {
        let mut row = Vec::with_capacity(layers.len());
        for (layer, spec_name) in layers.iter().zip(&model.feature_names) {
            let v = layer.value(cand.row, cand.col);
            if layer.is_nodata(v) {
                log::warn!(
                    "dropping candidate {} at ({}, {}): NODATA in layer `{spec_name}`",
                    cand.id,
                    cand.row,
                    cand.col
                );
                continue 'candidates;
            }
            row.push(v);
        }
        let suit = suitability.value(cand.row, cand.col);
        if suitability.is_nodata(suit) {
            log::warn!(
                "dropping candidate {} at ({}, {}): NODATA in the suitability map",
                cand.id,
                cand.row,
                cand.col
            );
            continue;
        }
        features.push(row);
        kept.push((cand.clone(), suit));
    }

    let likelihoods = predict_proba(model, &features)?;
    let mut rows: Vec<RankedCandidate> = kept
        .into_iter()
        .zip(likelihoods)
        .map(|((cand, suit), likelihood)| RankedCandidate {
            rank: 0,
            id: cand.id,
            row: cand.row,
            col: cand.col,
            x: cand.x,
            y: cand.y,
            likelihood,
            suitability: suit,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.likelihood
            .total_cmp(&a.likelihood)
            .then_with(|| b.suitability.total_cmp(&a.suitability))
            .then_with(|| a.id.cmp(&b.id))
    });
    for (i, row) in rows.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    Ok(CandidateRanking { rows })
}

/// Serialize a ranking as CSV with the stable header
/// `rank,id,row,col,x,y,likelihood,suitability`.
pub fn format_ranking_csv(ranking: &CandidateRanking) -> String {
    let mut out = String::from("rank,id,row,col,x,y,likelihood,suitability\n");
    for r in &ranking.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.rank, r.id, r.row, r.col, r.x, r.y, r.likelihood, r.suitability
        );
    }
    out
}

pub fn write_ranking_csv(ranking: &CandidateRanking, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), format_ranking_csv(ranking).as_bytes())
}

/// Record of one training/reweighting pass.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub index: usize,
    /// Weights that produced this iteration's suitability map.
    pub weights: WeightVector,
    /// Held-out metrics per classifier kind, in training order.
    pub metrics: Vec<(ModelKind, MetricsReport)>,
    pub winner: ModelKind,
    pub winner_metrics: MetricsReport,
    /// Weights adopted from the winner's importances.
    pub new_weights: WeightVector,
    /// Max-norm change from `weights` to `new_weights`.
    pub weight_delta: f64,
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub final_weights: WeightVector,
    pub final_suitability: RasterGrid,
    pub final_model: TrainedModel,
    /// Held-out metrics of the final retrained model on its fresh sample.
    pub final_metrics: MetricsReport,
    pub history: Vec<IterationRecord>,
    pub ranking: CandidateRanking,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    iterations: usize,
    winner: ModelKind,
    /// Held-out F1 of the winner in the last loop iteration.
    final_iteration_f1: f64,
    final_model_metrics: &'a MetricsReport,
    final_weights: &'a WeightVector,
    candidates_ranked: usize,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::Model(format!("serialization failed: {e}")))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Run the full loop, writing per-iteration and final artifacts under `out_dir`:
/// `iter_<i>/{weights.json, suitability.asc, labels.asc, metrics_<kind>.json,
/// model_<kind>.json}` and `final/{weights.json, suitability.asc, labels.asc,
/// model.json, metrics.json, ranking.csv, summary.json}`.
pub fn run_lb_mcdm(cfg: &PipelineConfig, out_dir: &Path) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let (names, layers) = load_reclassified_layers(cfg)?;
    let seed = cfg.sampling.seed;

    let mut weights = initial_weights(&names)?;
    let mut history: Vec<IterationRecord> = Vec::new();

    for iter in 0..cfg.iteration.max_iters {
        let stage = |e: Error, s: &str| e.in_stage(iter, s);
        let iter_dir = out_dir.join(format!("iter_{iter}"));

        let suitability = weighted_sum(&layers, &weights).map_err(|e| stage(e, "overlay"))?;
        let labels = cfg.labels.apply(&suitability).map_err(|e| stage(e, "labeling"))?;
        write_json(&iter_dir.join("weights.json"), &weights)?;
        write_ascii_grid(&suitability, iter_dir.join("suitability.asc"))?;
        write_ascii_grid(&labels, iter_dir.join("labels.asc"))?;

        let sample = sample_points(
            &layers,
            &names,
            &labels,
            cfg.sampling.n,
            cfg.sampling.stratified,
            derive_seed(seed, 2 * iter as u64),
        )
        .map_err(|e| stage(e, "sampling"))?;
        let (train, test) = train_test_split(
            &sample,
            cfg.sampling.test_fraction,
            derive_seed(seed, 2 * iter as u64 + 1),
        )
        .map_err(|e| stage(e, "splitting"))?;

        let mut scored: Vec<(TrainedModel, MetricsReport)> = Vec::with_capacity(3);
        for (kind, fit) in train_all(&cfg.training) {
            let model = fit(&train).map_err(|e| stage(e, &format!("training {kind}")))?;
            let metrics = evaluate(&model, &test).map_err(|e| stage(e, &format!("evaluating {kind}")))?;
            write_json(&iter_dir.join(format!("metrics_{kind}.json")), &metrics)?;
            scored.push((model, metrics));
        }

        let winner = select_best(&scored).map_err(|e| stage(e, "selection"))?;
        let winner_kind = winner.kind();
        let winner_metrics = scored
            .iter()
            .find(|(m, _)| m.kind() == winner_kind)
            .map(|(_, r)| *r)
            .expect("winner came from this list");
        winner.save(iter_dir.join(format!("model_{winner_kind}.json")))?;

        let new_weights = weights_from_importance(&winner.importance, &names)
            .map_err(|e| stage(e, "reweighting"))?;
        let weight_delta = new_weights.max_abs_delta(&weights)?;
        history.push(IterationRecord {
            index: iter,
            weights: weights.clone(),
            metrics: scored.iter().map(|(m, r)| (m.kind(), *r)).collect(),
            winner: winner_kind,
            winner_metrics,
            new_weights: new_weights.clone(),
            weight_delta,
        });
        weights = new_weights;

        if weight_delta < cfg.iteration.weight_tol {
            log::info!("weights converged after iteration {iter} (delta {weight_delta:.2e})");
            break;
        }
    }

    // final pass: overlay with the adopted weights, retrain the winning kind
    // on a fresh sample, then score and rank the candidates
    let iters_done = history.len();
    let last = history.last().expect("max_iters >= 1 guarantees one iteration");
    let final_dir = out_dir.join("final");
    let stage = |e: Error, s: &str| e.in_stage(iters_done, s);

    let final_suitability = weighted_sum(&layers, &weights).map_err(|e| stage(e, "final overlay"))?;
    let final_labels = cfg.labels.apply(&final_suitability).map_err(|e| stage(e, "final labeling"))?;
    let sample = sample_points(
        &layers,
        &names,
        &final_labels,
        cfg.sampling.n,
        cfg.sampling.stratified,
        derive_seed(seed, 2 * iters_done as u64),
    )
    .map_err(|e| stage(e, "final sampling"))?;
    let (train, test) = train_test_split(
        &sample,
        cfg.sampling.test_fraction,
        derive_seed(seed, 2 * iters_done as u64 + 1),
    )
    .map_err(|e| stage(e, "final splitting"))?;
    let final_model = match last.winner {
        ModelKind::Tree => train_tree(&train, &cfg.training.tree),
        ModelKind::Forest => train_forest(&train, &cfg.training.forest),
        ModelKind::Logistic => train_logistic(&train, &cfg.training.logistic),
    }
    .map_err(|e| stage(e, "final training"))?;
    let final_metrics = evaluate(&final_model, &test).map_err(|e| stage(e, "final evaluation"))?;

    let candidates = extract_candidates(&final_suitability, &cfg.candidates)
        .map_err(|e| stage(e, "candidate extraction"))?;
    let ranking = rank_candidates(&final_model, &layers, &final_suitability, &candidates)
        .map_err(|e| stage(e, "ranking"))?;

    write_json(&final_dir.join("weights.json"), &weights)?;
    write_ascii_grid(&final_suitability, final_dir.join("suitability.asc"))?;
    write_ascii_grid(&final_labels, final_dir.join("labels.asc"))?;
    final_model.save(final_dir.join("model.json"))?;
    write_json(&final_dir.join("metrics.json"), &final_metrics)?;
    write_ranking_csv(&ranking, final_dir.join("ranking.csv"))?;
    write_json(
        &final_dir.join("summary.json"),
        &RunSummary {
            iterations: iters_done,
            winner: last.winner,
            final_iteration_f1: last.winner_metrics.f1,
            final_model_metrics: &final_metrics,
            final_weights: &weights,
            candidates_ranked: ranking.len(),
        },
    )?;

    Ok(PipelineOutcome {
        final_weights: weights,
        final_suitability,
        final_model,
        final_metrics,
        history,
        ranking,
    })
}

type FitFn<'a> = Box<dyn Fn(&SampleSet) -> Result<TrainedModel> + 'a>;

/// The classifier family, in fixed training (and tie-break) order.
fn train_all(training: &TrainingSection) -> Vec<(ModelKind, FitFn<'_>)> {
    vec![
        (
            ModelKind::Tree,
            Box::new(move |s: &SampleSet| train_tree(s, &training.tree)),
        ),
        (
            ModelKind::Forest,
            Box::new(move |s: &SampleSet| train_forest(s, &training.forest)),
        ),
        (
            ModelKind::Logistic,
            Box::new(move |s: &SampleSet| train_logistic(s, &training.logistic)),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ModelParams, LogisticModel};

    #[test]
    fn equal_weights_for_six_layers() {
        let names: Vec<String> = (0..6).map(|i| format!("l{i}")).collect();
        let w = initial_weights(&names).unwrap();
        for e in w.entries() {
            assert_eq!(e.weight, 1.0 / 6.0);
        }
        let single = initial_weights(&["only".to_string()]).unwrap();
        assert_eq!(single.entries()[0].weight, 1.0);
    }

    #[test]
    fn equal_weights_sum_close_to_one() {
        for k in [2usize, 3, 7, 100, 10_000] {
            let names: Vec<String> = (0..k).map(|i| format!("l{i}")).collect();
            let w = initial_weights(&names).unwrap();
            assert!((w.sum() - 1.0).abs() < 1e-12, "K={k}: {}", w.sum());
        }
    }

    #[test]
    fn importance_weights_preserve_values_and_order() {
        let names: Vec<String> = ["slope", "road", "landcover", "rail", "urban", "supply"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let raw = [0.3955, 0.2406, 0.2035, 0.0953, 0.0525, 0.0126];
        let imp = ImportanceVector::from_raw(&names, &raw);
        // reversed layer order: weights must follow the layer order by name
        let reversed: Vec<String> = names.iter().rev().cloned().collect();
        let w = weights_from_importance(&imp, &reversed).unwrap();
        assert_eq!(w.entries()[0].name, "supply");
        assert!((w.entries()[0].weight - 0.0126).abs() < 1e-9);
        assert_eq!(w.entries()[5].name, "slope");
        assert!((w.entries()[5].weight - 0.3955).abs() < 1e-9);
        assert!(w.is_normalized());
    }

    #[test]
    fn importance_name_mismatch_rejected() {
        let imp = ImportanceVector::from_raw(&["a".to_string(), "b".to_string()], &[0.5, 0.5]);
        let err = weights_from_importance(&imp, &["a".to_string(), "c".to_string()]).unwrap_err();
        assert!(err.to_string().contains("missing layer `c`"), "{err}");
    }

    #[test]
    fn uniform_importance_is_a_fixed_point() {
        let names: Vec<String> = (0..4).map(|i| format!("l{i}")).collect();
        let imp = ImportanceVector::from_raw(&names, &[1.0; 4]);
        let w = weights_from_importance(&imp, &names).unwrap();
        assert_eq!(w, initial_weights(&names).unwrap());
    }

    fn dummy_model(likelihood_weight: f64) -> TrainedModel {
        TrainedModel {
            version: crate::learners::MODEL_FORMAT_VERSION,
            feature_names: vec!["a".into(), "b".into()],
            params: ModelParams::Logistic(LogisticModel {
                config: LogisticConfig::default(),
                weights: vec![likelihood_weight, 0.0],
                bias: 0.0,
                means: vec![0.0, 0.0],
                scales: vec![1.0, 1.0],
            }),
            importance: ImportanceVector::from_raw(&["a".into(), "b".into()], &[1.0, 1.0]),
        }
    }

    fn grid(values: Vec<f64>, ncols: usize, nrows: usize) -> RasterGrid {
        RasterGrid::new(ncols, nrows, 0.0, 0.0, 10.0, -9999.0, values).unwrap()
    }

    #[test]
    fn ranking_sorts_by_likelihood_then_suitability_then_id() {
        let a = grid(vec![2.0, -1.0, 0.0, 2.0], 2, 2);
        let b = grid(vec![0.0, 0.0, 0.0, 0.0], 2, 2);
        let suit = grid(vec![7.1, 6.4, 6.4, 5.0], 2, 2);
        let model = dummy_model(3.0);
        let candidates = extract_candidates(&suit, &CandidateMode::AllCells).unwrap();
        let ranking = rank_candidates(&model, &[a, b], &suit, &candidates).unwrap();
        // cells 0 and 3 share likelihood sigmoid(6); 1 and 2 share sigmoid(-3);
        // suitability breaks the first tie, id the second
        let order: Vec<usize> = ranking.rows.iter().map(|r| r.id).collect();
        assert_eq!(order, vec![0, 3, 2, 1]);
        assert_eq!(ranking.rows[0].rank, 1);
        assert!((1..ranking.len()).all(|i| {
            let (p, q) = (&ranking.rows[i - 1], &ranking.rows[i]);
            p.likelihood > q.likelihood
                || (p.likelihood == q.likelihood && p.suitability >= q.suitability)
        }));
    }

    #[test]
    fn ranking_invariant_under_monotone_transform_of_likelihoods() {
        let a = grid(vec![1.5, -0.5, 2.5, 0.25], 2, 2);
        let b = grid(vec![0.1, 0.9, 0.4, 0.6], 2, 2);
        let suit = grid(vec![5.0, 6.0, 7.0, 8.0], 2, 2);
        let model = dummy_model(2.0);
        let candidates = extract_candidates(&suit, &CandidateMode::AllCells).unwrap();
        let ranking = rank_candidates(&model, &[a, b], &suit, &candidates).unwrap();
        let mut transformed: Vec<(f64, usize)> = ranking
            .rows
            .iter()
            .map(|r| (r.likelihood.powi(3), r.id))
            .collect();
        transformed.sort_by(|x, y| y.0.total_cmp(&x.0));
        let re_sorted: Vec<usize> = transformed.into_iter().map(|(_, id)| id).collect();
        let original: Vec<usize> = ranking.rows.iter().map(|r| r.id).collect();
        assert_eq!(re_sorted, original);
    }

    #[test]
    fn nodata_candidate_dropped_not_fatal() {
        let mut a = grid(vec![1.0, 1.0, 1.0, 1.0], 2, 2);
        a.set(0, 1, -9999.0);
        let b = grid(vec![0.0, 0.0, 0.0, 0.0], 2, 2);
        let suit = grid(vec![5.0, 6.0, 7.0, 8.0], 2, 2);
        let model = dummy_model(1.0);
        // explicit candidates are validated against the suitability map only,
        // so the NODATA feature cell surfaces here as a dropped candidate
        let candidates = extract_candidates(
            &suit,
            &CandidateMode::Explicit { cells: vec![(0, 0), (0, 1), (1, 1)] },
        )
        .unwrap();
        let ranking = rank_candidates(&model, &[a, b], &suit, &candidates).unwrap();
        assert_eq!(ranking.len(), 2);
        assert!(ranking.rows.iter().all(|r| (r.row, r.col) != (0, 1)));
    }

    #[test]
    fn csv_format_is_stable() {
        let ranking = CandidateRanking {
            rows: vec![RankedCandidate {
                rank: 1,
                id: 4,
                row: 2,
                col: 3,
                x: 105.0,
                y: 45.0,
                likelihood: 0.875,
                suitability: 6.25,
            }],
        };
        assert_eq!(
            format_ranking_csv(&ranking),
            "rank,id,row,col,x,y,likelihood,suitability\n1,4,2,3,105,45,0.875,6.25\n"
        );
    }
}
