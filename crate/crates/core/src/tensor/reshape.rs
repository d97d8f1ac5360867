//! Pure re-indexing layers: frequency flattening and time reversal.

use super::Tensor;
use crate::error::Result;

/// `[B, F, T, C] -> [B, 1, T, F*C]`, new channel index `f * C + c`.
pub fn frequency_flatten(input: &Tensor) -> Result<Tensor> {
    let [b, f, t, c] = input.dims4()?;
    let mut out = Tensor::zeros(&[b, 1, t, f * c]);
    let src = input.data();
    let dst = out.data_mut();
    for bi in 0..b {
        for fi in 0..f {
            for ti in 0..t {
                let s = ((bi * f + fi) * t + ti) * c;
                let d = (bi * t + ti) * f * c + fi * c;
                dst[d..d + c].copy_from_slice(&src[s..s + c]);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`frequency_flatten`] for a known frequency extent.
pub fn frequency_unflatten(input: &Tensor, freq: usize) -> Result<Tensor> {
    let [b, one, t, fc] = input.dims4()?;
    if one != 1 || fc % freq != 0 {
        return Err(crate::Error::Usage(format!(
            "cannot unflatten {:?} into {freq} frequency bins",
            input.shape()
        )));
    }
    let c = fc / freq;
    let mut out = Tensor::zeros(&[b, freq, t, c]);
    let src = input.data();
    let dst = out.data_mut();
    for bi in 0..b {
        for fi in 0..freq {
            for ti in 0..t {
                let d = ((bi * freq + fi) * t + ti) * c;
                let s = (bi * t + ti) * fc + fi * c;
                dst[d..d + c].copy_from_slice(&src[s..s + c]);
            }
        }
    }
    Ok(out)
}

/// Mirrors the time axis: index `l` maps to `T - 1 - l`. Self-inverse.
pub fn time_flip(input: &Tensor) -> Result<Tensor> {
    let [b, f, t, c] = input.dims4()?;
    let mut out = Tensor::zeros(input.shape());
    let src = input.data();
    let dst = out.data_mut();
    for row in 0..b * f {
        for ti in 0..t {
            let s = (row * t + ti) * c;
            let d = (row * t + (t - 1 - ti)) * c;
            dst[d..d + c].copy_from_slice(&src[s..s + c]);
        }
    }
    Ok(out)
}
