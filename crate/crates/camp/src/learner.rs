//! A small multiclass classifier trained by full-batch gradient descent with
//! an adaptive-moment update rule, shared by the context selector and the
//! policy-learning baselines.

use crate::error::{CampError, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Hidden layer widths used by every classifier in the pipeline.
pub const HIDDEN_SIZES: [usize; 3] = [50, 32, 10];

/// Fully connected network with rectified-linear hidden activations and
/// linear class scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classifier {
    /// All layer widths: input, hidden layers, classes.
    pub layer_sizes: Vec<usize>,
    /// Row-major `out x in` weight matrices per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Classifier {
    /// Network with the pipeline's hidden sizes.
    pub fn new(inputs: usize, classes: usize, rng: &mut ChaCha8Rng) -> Self {
        Self::with_hidden(inputs, &HIDDEN_SIZES, classes, rng)
    }

    /// Network with custom hidden sizes (used by small-network tests).
    pub fn with_hidden(
        inputs: usize,
        hidden: &[usize],
        classes: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut layer_sizes = vec![inputs];
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(classes);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.gen_range(-bound..=bound))
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        Self { layer_sizes, weights, biases }
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Class scores (pre-softmax logits).
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_inputs() {
            return Err(CampError::DimensionMismatch { expected: self.n_inputs(), got: x.len() });
        }
        let mut activ = x.to_vec();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let n_in = self.layer_sizes[l];
            let n_out = self.layer_sizes[l + 1];
            let mut next = vec![0.0; n_out];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut sum = b[o];
                for (wi, xi) in row.iter().zip(&activ) {
                    sum += wi * xi;
                }
                next[o] = if l < last { sum.max(0.0) } else { sum };
            }
            activ = next;
        }
        Ok(activ)
    }

    /// Argmax class, ties broken by lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let scores = self.scores(x)?;
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, &s) in scores.iter().enumerate() {
            if s > best_score {
                best_score = s;
                best = i;
            }
        }
        Ok(best)
    }

    /// Mean cross-entropy over the dataset.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let scores = self.scores(x)?;
            total += cross_entropy(&scores, y);
        }
        Ok(total / xs.len() as f64)
    }

    /// Mean cross-entropy and its gradient with respect to every parameter,
    /// flattened in the same order as [`Classifier::params`].
    pub fn loss_and_grads(&self, xs: &[Vec<f64>], ys: &[usize]) -> Result<(f64, Vec<f64>)> {
        let n_layers = self.weights.len();
        let mut grad_w: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut grad_b: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        let mut total_loss = 0.0;
        let scale = 1.0 / xs.len() as f64;

        for (x, &y) in xs.iter().zip(ys) {
            if x.len() != self.n_inputs() {
                return Err(CampError::DimensionMismatch {
                    expected: self.n_inputs(),
                    got: x.len(),
                });
            }
            // forward, keeping activations
            let mut activations: Vec<Vec<f64>> = vec![x.clone()];
            for l in 0..n_layers {
                let n_in = self.layer_sizes[l];
                let n_out = self.layer_sizes[l + 1];
                let prev = &activations[l];
                let mut next = vec![0.0; n_out];
                for o in 0..n_out {
                    let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                    let mut sum = self.biases[l][o];
                    for (wi, xi) in row.iter().zip(prev) {
                        sum += wi * xi;
                    }
                    next[o] = if l < n_layers - 1 { sum.max(0.0) } else { sum };
                }
                activations.push(next);
            }
            let scores = activations.last().unwrap();
            total_loss += cross_entropy(scores, y);

            // backward: delta = softmax(scores) - onehot(y)
            let probs = softmax(scores);
            let mut delta: Vec<f64> = probs;
            delta[y] -= 1.0;
            for l in (0..n_layers).rev() {
                let n_in = self.layer_sizes[l];
                let n_out = self.layer_sizes[l + 1];
                let prev = &activations[l];
                for o in 0..n_out {
                    grad_b[l][o] += scale * delta[o];
                    for i in 0..n_in {
                        grad_w[l][o * n_in + i] += scale * delta[o] * prev[i];
                    }
                }
                if l > 0 {
                    let mut prev_delta = vec![0.0; n_in];
                    for i in 0..n_in {
                        if activations[l][i] > 0.0 {
                            let mut sum = 0.0;
                            for o in 0..n_out {
                                sum += self.weights[l][o * n_in + i] * delta[o];
                            }
                            prev_delta[i] = sum;
                        }
                    }
                    delta = prev_delta;
                }
            }
        }

        let mut flat = Vec::new();
        for (w, b) in grad_w.iter().zip(&grad_b) {
            flat.extend_from_slice(w);
            flat.extend_from_slice(b);
        }
        Ok((total_loss * scale, flat))
    }

    /// All parameters flattened: per layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            flat.extend_from_slice(w);
            flat.extend_from_slice(b);
        }
        flat
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        let mut i = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            let nw = w.len();
            w.copy_from_slice(&flat[i..i + nw]);
            i += nw;
            let nb = b.len();
            b.copy_from_slice(&flat[i..i + nb]);
            i += nb;
        }
        debug_assert_eq!(i, flat.len());
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ClassifierFile { version: 1, classifier: self.clone() };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ClassifierFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(file.classifier)
    }
}

#[derive(Serialize, Deserialize)]
struct ClassifierFile {
    version: u32,
    classifier: Classifier,
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn cross_entropy(scores: &[f64], target: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln() + max;
    log_sum - scores[target]
}

/// Training settings: learning rate 1e-4 until the training loss reaches
/// 1e-3, with a plateau guard at the epoch cap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub loss_target: f64,
    pub max_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 1e-4, loss_target: 1e-3, max_epochs: 50_000 }
    }
}

/// A trained classifier with its final loss and convergence flag.
pub struct Trained {
    pub classifier: Classifier,
    pub final_loss: f64,
    /// False when the loss target was not reached within the epoch cap; the
    /// best weights seen are returned regardless.
    pub converged: bool,
}

/// Full-batch training with adaptive-moment updates. Any loss increase
/// rejects the step, halves the learning rate, and restores the optimizer
/// state, so the training loss is non-increasing across epochs.
pub fn train_classifier(
    xs: &[Vec<f64>],
    ys: &[usize],
    mut classifier: Classifier,
    cfg: &TrainConfig,
) -> Result<Trained> {
    assert!(!xs.is_empty() && xs.len() == ys.len(), "need a non-empty dataset");
    let n_classes = classifier.n_classes();
    for &y in ys {
        assert!(y < n_classes, "class index {y} out of range {n_classes}");
    }

    let mut params = classifier.params();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut lr = cfg.lr;
    let mut t: i32 = 0;
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    let (mut loss, mut grads) = classifier.loss_and_grads(xs, ys)?;
    for epoch in 0..cfg.max_epochs {
        if !loss.is_finite() {
            return Err(CampError::Divergence { epoch });
        }
        if loss <= cfg.loss_target {
            return Ok(Trained { classifier, final_loss: loss, converged: true });
        }
        // adaptive-moment step
        let (m_prev, v_prev, t_prev) = (m.clone(), v.clone(), t);
        t += 1;
        let mut candidate = params.clone();
        for i in 0..params.len() {
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * grads[i];
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * grads[i] * grads[i];
            let m_hat = m[i] / (1.0 - BETA1.powi(t));
            let v_hat = v[i] / (1.0 - BETA2.powi(t));
            candidate[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
        }
        classifier.set_params(&candidate);
        let (new_loss, new_grads) = classifier.loss_and_grads(xs, ys)?;
        if new_loss > loss + 1e-12 {
            // reject: restore weights and moments, halve the rate
            classifier.set_params(&params);
            m = m_prev;
            v = v_prev;
            t = t_prev;
            lr *= 0.5;
            if lr < 1e-15 {
                break;
            }
        } else {
            params = candidate;
            loss = new_loss;
            grads = new_grads;
        }
    }
    Ok(Trained { classifier, final_loss: loss, converged: loss <= cfg.loss_target })
}
