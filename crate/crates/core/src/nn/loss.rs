use ndarray::Array1;

use crate::error::{Error, Result};

pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exp = logits.mapv(|v| (v - max).exp());
    let z = exp.sum();
    exp / z
}

pub fn log_softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lse = max + logits.mapv(|v| (v - max).exp()).sum().ln();
    logits.mapv(|v| v - lse)
}

/// `-log softmax(logits)[target]` and its gradient `softmax - onehot`.
pub fn cross_entropy(logits: &Array1<f64>, target: usize) -> Result<(f64, Array1<f64>)> {
    if target >= logits.len() {
        return Err(Error::shape(format!("target < {}", logits.len()), target));
    }
    if !logits.iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite logits {logits}")));
    }
    let value = -log_softmax(logits)[target];
    let mut grad = softmax(logits);
    grad[target] -= 1.0;
    Ok((value, grad))
}

/// `x ln x` with the `0 ln 0 = 0` convention.
fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Shannon entropy (nats) of a probability vector.
pub fn entropy(probabilities: &[f64]) -> f64 {
    -probabilities.iter().map(|&p| xlogx(p)).sum::<f64>()
}

/// Entropy of a Bernoulli variable with success probability `p`.
pub fn bernoulli_entropy(p: f64) -> f64 {
    -xlogx(p) - xlogx(1.0 - p)
}

/// Derivative of [`bernoulli_entropy`]: `ln((1 - p) / p)`.
///
/// Infinite at the endpoints; callers only evaluate it on sigmoid outputs,
/// which stay in the open interval for finite inputs.
pub fn bernoulli_entropy_grad(p: f64) -> f64 {
    (1.0 - p).ln() - p.ln()
}

/// Entropy of `softmax(logits)` and its gradient w.r.t. the logits:
/// `dH/dy_i = -p_i (ln p_i + H)`.
pub fn softmax_entropy(logits: &Array1<f64>) -> (f64, Array1<f64>) {
    let p = softmax(logits);
    let logp = log_softmax(logits);
    let h = -(&p * &logp).sum();
    let grad = Array1::from_shape_fn(p.len(), |i| -p[i] * (logp[i] + h));
    (h, grad)
}

/// `KL(softmax(teacher) || softmax(student))` and its gradient w.r.t. the
/// student logits, `softmax(student) - softmax(teacher)`.
pub fn kl_divergence(teacher: &Array1<f64>, student: &Array1<f64>) -> (f64, Array1<f64>) {
    let pt = softmax(teacher);
    let lt = log_softmax(teacher);
    let ls = log_softmax(student);
    let value = pt
        .iter()
        .zip(lt.iter().zip(&ls))
        .map(|(&p, (&a, &b))| if p > 0.0 { p * (a - b) } else { 0.0 })
        .sum();
    (value, softmax(student) - pt)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn non_finite_logits_are_numeric_errors() {
        for bad in [f64::NAN, f64::INFINITY] {
            let err = cross_entropy(&Array1::from(vec![0.0, bad]), 0).unwrap_err();
            assert!(err.is_numeric());
        }
    }

    #[test]
    fn uniform_logits_cross_entropy_is_ln_classes() {
        let (ce, grad) = cross_entropy(&Array1::zeros(3), 1).unwrap();
        assert_abs_diff_eq!(ce, 3f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(ce, 1.0986, epsilon = 1e-4);
        assert_abs_diff_eq!(grad.sum(), 0.0, epsilon = 1e-15);
        assert!(cross_entropy(&Array1::zeros(3), 3).is_err());
    }

    #[test]
    fn bernoulli_entropy_endpoints_and_midpoint() {
        assert_eq!(bernoulli_entropy(0.0), 0.0);
        assert_eq!(bernoulli_entropy(1.0), 0.0);
        assert_abs_diff_eq!(bernoulli_entropy(0.5), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn entropy_of_distribution() {
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
        assert_abs_diff_eq!(entropy(&[0.25; 4]), 4f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn softmax_entropy_gradient_matches_differences() {
        let y = Array1::from(vec![0.3, -1.2, 2.0]);
        let (_, g) = softmax_entropy(&y);
        for i in 0..3 {
            let mut a = y.clone();
            let mut b = y.clone();
            a[i] += 1e-6;
            b[i] -= 1e-6;
            let fd = (softmax_entropy(&a).0 - softmax_entropy(&b).0) / 2e-6;
            assert_abs_diff_eq!(g[i], fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn kl_is_zero_for_identical_logits() {
        let y = Array1::from(vec![1.0, 2.0, -0.5]);
        let (v, g) = kl_divergence(&y, &y);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        assert!(g.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }
}
