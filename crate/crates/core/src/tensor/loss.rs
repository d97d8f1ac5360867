use super::Tensor;
use crate::error::{Error, Result};

/// Mean squared error and its gradient `2 (pred - target) / count`.
pub fn mse_loss(prediction: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if prediction.shape() != target.shape() {
        return Err(Error::Usage(format!(
            "loss shapes differ: {:?} vs {:?}",
            prediction.shape(),
            target.shape()
        )));
    }
    let n = prediction.numel() as f64;
    let mut grad = Tensor::zeros(prediction.shape());
    let mut sum = 0.0;
    for ((g, p), t) in grad.data_mut().iter_mut().zip(prediction.data()).zip(target.data()) {
        let d = p - t;
        sum += d * d;
        *g = 2.0 * d / n;
    }
    Ok((sum / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let p = Tensor::new(vec![2], vec![1.0, 1.0]).unwrap();
        let t = Tensor::zeros(&[2]);
        assert_eq!(mse_loss(&p, &p).unwrap().0, 0.0);
        let (l, g) = mse_loss(&p, &t).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g.data(), [1.0, 1.0]);
        assert!(mse_loss(&p, &Tensor::zeros(&[3])).is_err());
    }
}
