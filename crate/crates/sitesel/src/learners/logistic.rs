//! L2-regularized logistic regression trained by full-batch gradient descent
//! on standardized features.

use serde::{Deserialize, Serialize};

use crate::dataset::SampleSet;
use crate::learners::tree::require_both_classes;
use crate::learners::{ImportanceVector, ModelParams, TrainedModel, MODEL_FORMAT_VERSION};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub config: LogisticConfig,
    /// Coefficients in standardized feature space.
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Standardization parameters captured at fit time.
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl LogisticModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut z = self.bias;
        for (j, &v) in row.iter().enumerate() {
            z += self.weights[j] * (v - self.means[j]) / self.scales[j];
        }
        sigmoid(z)
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Regularized logistic loss and its analytic gradient on standardized data.
///
/// `loss = mean_i BCE(sigmoid(x_i . w + bias), y_i) + (l2/2) * |w|^2`, with the
/// cross-entropy evaluated in its logit form for numerical stability. The bias
/// is not regularized. Returns `(loss, d loss/d w, d loss/d bias)`.
pub fn loss_and_gradient(
    x: &[Vec<f64>],
    y: &[u8],
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0f64;
    let mut grad_w = vec![0.0f64; weights.len()];
    let mut grad_b = 0.0f64;
    for (row, &yi) in x.iter().zip(y) {
        let mut z = bias;
        for j in 0..weights.len() {
            z += weights[j] * row[j];
        }
        let yf = yi as f64;
        loss += z.max(0.0) - z * yf + (-z.abs()).exp().ln_1p();
        let residual = sigmoid(z) - yf;
        for j in 0..weights.len() {
            grad_w[j] += residual * row[j];
        }
        grad_b += residual;
    }
    loss /= n;
    grad_b /= n;
    for j in 0..weights.len() {
        grad_w[j] = grad_w[j] / n + l2 * weights[j];
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad_w, grad_b)
}

/// Population mean and standard deviation per feature; a zero-variance
/// feature gets scale 1 so its (useless) weight stays trainable.
fn standardization(x: &[Vec<f64>], k: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let mut means = vec![0.0f64; k];
    for row in x {
        for j in 0..k {
            means[j] += row[j];
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut scales = vec![0.0f64; k];
    for row in x {
        for j in 0..k {
            let d = row[j] - means[j];
            scales[j] += d * d;
        }
    }
    for s in &mut scales {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    (means, scales)
}

pub fn train_logistic(train: &SampleSet, cfg: &LogisticConfig) -> Result<TrainedModel> {
    require_both_classes(train)?;
    let k = train.n_features();
    let (means, scales) = standardization(&train.x, k);
    let x_std: Vec<Vec<f64>> = train
        .x
        .iter()
        .map(|row| (0..k).map(|j| (row[j] - means[j]) / scales[j]).collect())
        .collect();

    let mut weights = vec![0.0f64; k];
    let mut bias = 0.0f64;
    for _ in 0..cfg.epochs {
        let (_, grad_w, grad_b) = loss_and_gradient(&x_std, &train.y, &weights, bias, cfg.l2);
        for j in 0..k {
            weights[j] -= cfg.learning_rate * grad_w[j];
        }
        bias -= cfg.learning_rate * grad_b;
    }

    let magnitudes: Vec<f64> = weights.iter().map(|w| w.abs()).collect();
    Ok(TrainedModel {
        version: MODEL_FORMAT_VERSION,
        feature_names: train.feature_names.clone(),
        params: ModelParams::Logistic(LogisticModel {
            config: *cfg,
            weights,
            bias,
            means,
            scales,
        }),
        importance: ImportanceVector::from_raw(&train.feature_names, &magnitudes),
    })
}
