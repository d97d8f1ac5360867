//! Per-channel batch normalization over every axis except the last.

use super::Tensor;
use crate::error::{Error, Result};

pub const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    /// Batch statistics; running statistics updated with momentum.
    Train,
    /// Running statistics.
    Infer,
}

#[derive(Debug, Clone)]
pub struct BnCache {
    normalized: Vec<f64>,
    inv_std: Vec<f64>,
    mode: BnMode,
}

#[derive(Debug)]
pub struct BnGrads {
    pub input: Tensor,
    pub scale: Tensor,
    pub shift: Tensor,
}

pub struct BnState<'a> {
    pub scale: &'a Tensor,
    pub shift: &'a Tensor,
    pub running_mean: &'a mut Tensor,
    pub running_var: &'a mut Tensor,
    pub momentum: f64,
}

fn channels(input: &Tensor, scale: &Tensor) -> Result<usize> {
    let c = *input.shape().last().unwrap_or(&0);
    if scale.shape() != [c] {
        return Err(Error::Config(format!(
            "batch norm over {c} channels given scale of shape {:?}",
            scale.shape()
        )));
    }
    Ok(c)
}

pub fn batchnorm_forward(input: &Tensor, st: BnState<'_>, mode: BnMode) -> Result<(Tensor, BnCache)> {
    let c = channels(input, st.scale)?;
    let m = input.numel() / c;
    let (mean, var) = match mode {
        BnMode::Train => {
            let mut mean = vec![0.0; c];
            for px in input.data().chunks_exact(c) {
                for (a, v) in mean.iter_mut().zip(px) {
                    *a += v;
                }
            }
            mean.iter_mut().for_each(|v| *v /= m as f64);
            let mut var = vec![0.0; c];
            for px in input.data().chunks_exact(c) {
                for ((a, v), mu) in var.iter_mut().zip(px).zip(&mean) {
                    *a += (v - mu) * (v - mu);
                }
            }
            var.iter_mut().for_each(|v| *v /= m as f64);
            let unbias = if m > 1 { m as f64 / (m - 1) as f64 } else { 1.0 };
            let mom = st.momentum;
            for k in 0..c {
                let rm = &mut st.running_mean.data_mut()[k];
                *rm = (1.0 - mom) * *rm + mom * mean[k];
                let rv = &mut st.running_var.data_mut()[k];
                *rv = (1.0 - mom) * *rv + mom * var[k] * unbias;
            }
            (mean, var)
        }
        BnMode::Infer => (st.running_mean.data().to_vec(), st.running_var.data().to_vec()),
    };
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let mut normalized = vec![0.0; input.numel()];
    let mut out = Tensor::zeros(input.shape());
    for ((px, nx), o) in input
        .data()
        .chunks_exact(c)
        .zip(normalized.chunks_exact_mut(c))
        .zip(out.data_mut().chunks_exact_mut(c))
    {
        for k in 0..c {
            nx[k] = (px[k] - mean[k]) * inv_std[k];
            o[k] = st.scale.data()[k] * nx[k] + st.shift.data()[k];
        }
    }
    Ok((out, BnCache { normalized, inv_std, mode }))
}

pub fn batchnorm_backward(grad_out: &Tensor, cache: &BnCache, scale: &Tensor) -> Result<BnGrads> {
    let c = channels(grad_out, scale)?;
    if grad_out.numel() != cache.normalized.len() {
        return Err(Error::Internal("batch norm gradient does not match cached forward".into()));
    }
    let m = (grad_out.numel() / c) as f64;
    let mut gscale = vec![0.0; c];
    let mut gshift = vec![0.0; c];
    for (g, nx) in grad_out.data().chunks_exact(c).zip(cache.normalized.chunks_exact(c)) {
        for k in 0..c {
            gshift[k] += g[k];
            gscale[k] += g[k] * nx[k];
        }
    }
    let mut gin = Tensor::zeros(grad_out.shape());
    for ((g, nx), gi) in grad_out
        .data()
        .chunks_exact(c)
        .zip(cache.normalized.chunks_exact(c))
        .zip(gin.data_mut().chunks_exact_mut(c))
    {
        for k in 0..c {
            let gamma = scale.data()[k];
            gi[k] = match cache.mode {
                BnMode::Infer => g[k] * gamma * cache.inv_std[k],
                BnMode::Train => {
                    gamma * cache.inv_std[k] * (g[k] - gshift[k] / m - nx[k] * gscale[k] / m)
                }
            };
        }
    }
    Ok(BnGrads {
        input: gin,
        scale: Tensor::new(vec![c], gscale)?,
        shift: Tensor::new(vec![c], gshift)?,
    })
}
