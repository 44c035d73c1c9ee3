use super::{check_binary, check_xy};
use crate::dataframe::Matrix;
use crate::error::Result;
use crate::model::Classifier;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean cross-entropy of `sigmoid(x.w + b)` against `y`, with its gradient
/// `(X^T (p - y) / n, mean(p - y))`.
pub fn logistic_loss_and_grad(weights: &[f64], bias: f64, x: &Matrix, y: &[usize]) -> (f64, Vec<f64>, f64) {
    let n = x.n_rows() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, &label) in x.rows_iter().zip(y) {
        let z = bias + row.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>();
        let t = label as f64;
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for (g, &v) in grad.iter_mut().zip(row) {
            *g += r * v;
        }
        grad_b += r;
    }
    grad.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad, grad_b / n)
}

/// Full-batch gradient descent from zero weights.
pub fn fit_logistic(x: &Matrix, y: &[usize], learning_rate: f64, epochs: usize) -> Result<LogisticModel> {
    check_xy(x, y)?;
    check_binary(y)?;
    let mut weights = vec![0.0; x.n_cols()];
    let mut bias = 0.0;
    for _ in 0..epochs {
        let (_, grad, grad_b) = logistic_loss_and_grad(&weights, bias, x, y);
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= learning_rate * g;
        }
        bias -= learning_rate * grad_b;
    }
    Ok(LogisticModel {
        weights,
        bias,
        learning_rate,
        epochs,
    })
}

impl Classifier for LogisticModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn n_classes(&self) -> usize {
        2
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let z = self.bias + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>();
        let p = sigmoid(z);
        Ok(vec![1.0 - p, p])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_point_problem_is_learned() {
        let x = Matrix::from_rows(&[[-1.0], [1.0]]);
        let model = fit_logistic(&x, &[0, 1], 0.5, 200).unwrap();
        assert_eq!(model.predict(&[-1.0]).unwrap().class, 0);
        assert_eq!(model.predict(&[1.0]).unwrap().class, 1);
    }

    #[test]
    fn zero_epochs_gives_half() {
        let x = Matrix::from_rows(&[[-1.0, 2.0], [1.0, 0.0]]);
        let model = fit_logistic(&x, &[0, 1], 0.5, 0).unwrap();
        assert_eq!(model.weights, vec![0.0, 0.0]);
        let p = model.predict_proba(&[3.0, -7.0]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rows: Vec<[f64; 3]> = (0..5).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let x = Matrix::from_rows(&rows);
        let y = [0, 1, 1, 0, 1];
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = 0.3;
        let (_, grad, grad_b) = logistic_loss_and_grad(&w, b, &x, &y);
        let h = 1e-6;
        for j in 0..3 {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[j] += h;
            wm[j] -= h;
            let fd = (logistic_loss_and_grad(&wp, b, &x, &y).0 - logistic_loss_and_grad(&wm, b, &x, &y).0) / (2.0 * h);
            assert!((fd - grad[j]).abs() / fd.abs().max(grad[j].abs()) < 1e-5, "{fd} vs {}", grad[j]);
        }
        let fd_b = (logistic_loss_and_grad(&w, b + h, &x, &y).0 - logistic_loss_and_grad(&w, b - h, &x, &y).0) / (2.0 * h);
        assert!((fd_b - grad_b).abs() / fd_b.abs().max(grad_b.abs()) < 1e-5);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!(softplus(-1000.0).is_finite() && softplus(1000.0) == 1000.0);
    }
}
