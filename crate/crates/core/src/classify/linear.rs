//! Linear scorers shared by softmax regression and the one-vs-rest SVM,
//! with their losses and (sub)gradients.

use serde::{Deserialize, Serialize};

use crate::classify::{softmax, N_CLASSES};

/// One weight row and bias per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(n_features: usize) -> Self {
        LinearModel {
            weights: vec![vec![0.0; n_features]; N_CLASSES],
            bias: vec![0.0; N_CLASSES],
        }
    }

    pub fn n_features(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn margins(&self, x: &[f64]) -> [f64; N_CLASSES] {
        let mut z = [0.0; N_CLASSES];
        for (c, z) in z.iter_mut().enumerate() {
            *z = self.bias[c] + self.weights[c].iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        z
    }

    pub fn probabilities(&self, x: &[f64]) -> [f64; N_CLASSES] {
        let p = softmax(&self.margins(x));
        let mut out = [0.0; N_CLASSES];
        out.copy_from_slice(&p);
        out
    }

    /// Parameters as one vector: weights row-major, then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        self.weights.iter().flatten().chain(&self.bias).copied().collect()
    }

    pub fn from_flat(flat: &[f64], n_features: usize) -> Self {
        let (w, b) = flat.split_at(N_CLASSES * n_features);
        LinearModel {
            weights: w.chunks(n_features).map(<[f64]>::to_vec).collect(),
            bias: b.to_vec(),
        }
    }

    fn step(&mut self, grad: &LinearModel, lr: f64) {
        for (row, g) in self.weights.iter_mut().zip(&grad.weights) {
            for (w, g) in row.iter_mut().zip(g) {
                *w -= lr * g;
            }
        }
        for (b, g) in self.bias.iter_mut().zip(&grad.bias) {
            *b -= lr * g;
        }
    }
}

/// Mean cross-entropy of softmax outputs and its gradient.
pub fn logreg_loss_grad(model: &LinearModel, x: &[Vec<f64>], y: &[usize]) -> (f64, LinearModel) {
    let n = x.len() as f64;
    let mut grad = LinearModel::zeros(model.n_features());
    let mut loss = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let p = model.probabilities(xi);
        loss -= p[yi].max(f64::MIN_POSITIVE).ln();
        for c in 0..N_CLASSES {
            let err = p[c] - f64::from(u8::from(c == yi));
            for (g, v) in grad.weights[c].iter_mut().zip(xi) {
                *g += err * v;
            }
            grad.bias[c] += err;
        }
    }
    scale(&mut grad, 1.0 / n);
    (loss / n, grad)
}

/// One-vs-rest hinge objective summed over classes. Per class:
/// `||w||^2 / (2 C n) + mean(max(0, 1 - t (w.x + b)))` with `t = +1` for the
/// class and `-1` otherwise. The bias is not regularized.
pub fn svm_loss_grad(model: &LinearModel, x: &[Vec<f64>], y: &[usize], c_reg: f64) -> (f64, LinearModel) {
    let n = x.len() as f64;
    let lambda = 1.0 / (c_reg * n);
    let mut grad = LinearModel::zeros(model.n_features());
    let mut loss = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let z = model.margins(xi);
        for c in 0..N_CLASSES {
            let t = if c == yi { 1.0 } else { -1.0 };
            let slack = 1.0 - t * z[c];
            if slack > 0.0 {
                loss += slack / n;
                for (g, v) in grad.weights[c].iter_mut().zip(xi) {
                    *g -= t * v / n;
                }
                grad.bias[c] -= t / n;
            }
        }
    }
    for (row, g) in model.weights.iter().zip(grad.weights.iter_mut()) {
        for (w, g) in row.iter().zip(g.iter_mut()) {
            loss += 0.5 * lambda * w * w;
            *g += lambda * w;
        }
    }
    (loss, grad)
}

fn scale(m: &mut LinearModel, k: f64) {
    m.weights.iter_mut().flatten().for_each(|w| *w *= k);
    m.bias.iter_mut().for_each(|b| *b *= k);
}

/// Full-batch gradient descent from zero weights.
pub fn fit_logreg(x: &[Vec<f64>], y: &[usize], lr: f64, epochs: usize) -> LinearModel {
    let mut m = LinearModel::zeros(x[0].len());
    for _ in 0..epochs {
        let (_, g) = logreg_loss_grad(&m, x, y);
        m.step(&g, lr);
    }
    m
}

/// Full-batch subgradient descent from zero weights.
pub fn fit_svm(x: &[Vec<f64>], y: &[usize], lr: f64, epochs: usize, c_reg: f64) -> LinearModel {
    let mut m = LinearModel::zeros(x[0].len());
    for _ in 0..epochs {
        let (_, g) = svm_loss_grad(&m, x, y, c_reg);
        m.step(&g, lr);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> (Vec<Vec<f64>>, Vec<usize>) {
        let centres = [[-3.0, 0.0], [3.0, 0.0], [0.0, 3.0], [0.0, -3.0]];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (c, ctr) in centres.iter().enumerate() {
            for k in 0..10 {
                let j = (k as f64 - 4.5) * 0.05;
                x.push(vec![ctr[0] + j, ctr[1] - j]);
                y.push(c);
            }
        }
        (x, y)
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = LinearModel::zeros(3);
        assert_eq!(m.probabilities(&[1.0, 2.0, 3.0]), [0.25; 4]);
        let (x, y) = blobs();
        let (loss, _) = logreg_loss_grad(&LinearModel::zeros(2), &x, &y);
        assert!((loss - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn flat_round_trip() {
        let m = LinearModel {
            weights: vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0], vec![7.0, 8.0]],
            bias: vec![9.0, 10.0, 11.0, 12.0],
        };
        assert_eq!(LinearModel::from_flat(&m.to_flat(), 2), m);
    }

    #[test]
    fn both_fit_separable_blobs() {
        let (x, y) = blobs();
        for m in [fit_logreg(&x, &y, 0.1, 500), fit_svm(&x, &y, 0.01, 500, 1.0)] {
            let correct = x
                .iter()
                .zip(&y)
                .filter(|(xi, &yi)| {
                    let z = m.margins(xi);
                    (0..N_CLASSES).fold(0, |b, i| if z[i] > z[b] { i } else { b }) == yi
                })
                .count();
            assert_eq!(correct, x.len());
        }
    }

    #[test]
    fn svm_loss_at_zero_is_one_per_class() {
        let (x, y) = blobs();
        let (loss, _) = svm_loss_grad(&LinearModel::zeros(2), &x, &y, 1.0);
        assert!((loss - 4.0).abs() < 1e-12);
    }
}
