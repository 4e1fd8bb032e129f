//! Random forest: bagged CART trees with per-split feature subsampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::SampleSet;
use crate::error::{Error, Result};
use crate::learners::tree::{require_both_classes, Tree, TreeGrower};
use crate::learners::{ImportanceVector, ModelParams, TrainedModel, MODEL_FORMAT_VERSION};
use crate::rng::from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features considered per split; `None` means `ceil(sqrt(K))`.
    pub max_features: Option<usize>,
    pub seed: u64,
    /// Bagging switch; turning it off trains every tree on the full sample,
    /// which makes a 1-tree, all-features forest coincide with a plain tree.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 12,
            min_samples_leaf: 2,
            max_features: None,
            seed: 0,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    /// Seed that drove each member's bootstrap and feature subsampling.
    pub tree_seeds: Vec<u64>,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Probability of class 1: arithmetic mean of the member trees' leaf fractions.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }
}

pub fn train_forest(train: &SampleSet, cfg: &ForestConfig) -> Result<TrainedModel> {
    require_both_classes(train)?;
    if cfg.n_trees == 0 {
        return Err(Error::Training("forest needs at least one tree".into()));
    }
    let k = train.n_features();
    let mtry = cfg
        .max_features
        .unwrap_or_else(|| (k as f64).sqrt().ceil() as usize);
    if mtry == 0 || mtry > k {
        return Err(Error::Training(format!(
            "max_features must lie in 1..={k}, got {mtry}"
        )));
    }

    let mut master = from_seed(cfg.seed);
    let tree_seeds: Vec<u64> = (0..cfg.n_trees).map(|_| master.gen()).collect();

    let n = train.len();
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut importance_sum = vec![0.0f64; k];
    for &tree_seed in &tree_seeds {
        let mut rng = from_seed(tree_seed);
        let indices: Vec<usize> = if cfg.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut pool: Vec<usize> = (0..k).collect();
        let grower = TreeGrower::new(
            &train.x,
            &train.y,
            k,
            cfg.max_depth,
            cfg.min_samples_leaf,
            |scratch: &mut Vec<usize>| {
                scratch.clear();
                if mtry == k {
                    scratch.extend(0..k);
                    return;
                }
                // partial Fisher-Yates, then ascending order for the
                // deterministic split tie-break
                for j in 0..mtry {
                    let swap = j + rng.gen_range(0..k - j);
                    pool.swap(j, swap);
                }
                scratch.extend_from_slice(&pool[..mtry]);
                scratch.sort_unstable();
            },
        );
        let (tree, raw) = grower.fit(indices);
        for (acc, r) in importance_sum.iter_mut().zip(&raw) {
            *acc += r;
        }
        trees.push(tree);
    }

    let averaged: Vec<f64> = importance_sum
        .iter()
        .map(|s| s / cfg.n_trees as f64)
        .collect();
    Ok(TrainedModel {
        version: MODEL_FORMAT_VERSION,
        feature_names: train.feature_names.clone(),
        params: ModelParams::Forest(ForestModel {
            config: *cfg,
            tree_seeds,
            trees,
        }),
        importance: ImportanceVector::from_raw(&train.feature_names, &averaged),
    })
}
