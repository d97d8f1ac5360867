//! Single-layer LSTM over the time axis of a frequency-singleton tensor.
//!
//! Input `[B, 1, T, N]`, output `[B, 1, T, U]`, zero initial state. Gate
//! blocks are ordered input, forget, candidate, output in all parameters:
//! `w_x: [N, 4U]`, `w_h: [U, 4U]`, `b: [4U]`.

use rayon::prelude::*;

use super::{ordered_sum, Tensor, REDUCE_CHUNK};
use crate::error::{Error, Result};

#[derive(Debug)]
pub struct LstmParams<'a> {
    pub w_x: &'a Tensor,
    pub w_h: &'a Tensor,
    pub bias: &'a Tensor,
}

/// Per-step activations kept for backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmCache {
    /// `[B, T, 4U]` post-nonlinearity gate values (i, f, g, o).
    gates: Vec<f64>,
    /// `[B, T, U]` cell states.
    cells: Vec<f64>,
    /// `[B, T, U]` tanh of cell states.
    cell_tanh: Vec<f64>,
}

#[derive(Debug)]
pub struct LstmGrads {
    pub input: Tensor,
    pub w_x: Tensor,
    pub w_h: Tensor,
    pub bias: Tensor,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dims(input: &Tensor, p: &LstmParams<'_>) -> Result<(usize, usize, usize, usize)> {
    let [b, f, t, n] = input.dims4()?;
    if f != 1 {
        return Err(Error::Usage(format!("LSTM expects a frequency-singleton input, got {:?}", input.shape())));
    }
    let u = p.w_h.shape()[0];
    if p.w_x.shape() != [n, 4 * u] || p.w_h.shape() != [u, 4 * u] || p.bias.shape() != [4 * u] {
        return Err(Error::Config(format!(
            "LSTM parameter shapes {:?}/{:?}/{:?} do not fit {n} inputs",
            p.w_x.shape(),
            p.w_h.shape(),
            p.bias.shape()
        )));
    }
    Ok((b, t, n, u))
}

/// out[j] += sum_k v[k] * m[k, j]
#[inline]
fn vec_mat_acc(v: &[f64], m: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (k, &vk) in v.iter().enumerate() {
        if vk == 0.0 {
            continue;
        }
        for (o, &mv) in out.iter_mut().zip(&m[k * cols..][..cols]) {
            *o += vk * mv;
        }
    }
}

/// out[k] += sum_j m[k, j] * v[j]
#[inline]
fn mat_vec_acc(m: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = v.len();
    for (k, o) in out.iter_mut().enumerate() {
        *o += m[k * cols..][..cols].iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    }
}

pub fn lstm_forward(input: &Tensor, p: &LstmParams<'_>) -> Result<(Tensor, LstmCache)> {
    let (batch, steps, n, u) = dims(input, p)?;
    let mut out = vec![0.0; batch * steps * u];
    let mut gates = vec![0.0; batch * steps * 4 * u];
    let mut cells = vec![0.0; batch * steps * u];
    let mut cell_tanh = vec![0.0; batch * steps * u];
    out.par_chunks_mut(steps * u)
        .zip(gates.par_chunks_mut(steps * 4 * u))
        .zip(cells.par_chunks_mut(steps * u))
        .zip(cell_tanh.par_chunks_mut(steps * u))
        .zip(input.data().par_chunks(steps * n))
        .for_each(|((((h_all, g_all), c_all), ct_all), x_all)| {
            let mut z = vec![0.0; 4 * u];
            let mut h_prev = vec![0.0; u];
            let mut c_prev = vec![0.0; u];
            for t in 0..steps {
                z.copy_from_slice(p.bias.data());
                vec_mat_acc(&x_all[t * n..][..n], p.w_x.data(), &mut z);
                vec_mat_acc(&h_prev, p.w_h.data(), &mut z);
                let g = &mut g_all[t * 4 * u..][..4 * u];
                for k in 0..u {
                    let ig = sigmoid(z[k]);
                    let fg = sigmoid(z[u + k]);
                    let cg = z[2 * u + k].tanh();
                    let og = sigmoid(z[3 * u + k]);
                    g[k] = ig;
                    g[u + k] = fg;
                    g[2 * u + k] = cg;
                    g[3 * u + k] = og;
                    let c = fg * c_prev[k] + ig * cg;
                    let ct = c.tanh();
                    c_all[t * u + k] = c;
                    ct_all[t * u + k] = ct;
                    h_all[t * u + k] = og * ct;
                }
                h_prev.copy_from_slice(&h_all[t * u..][..u]);
                c_prev.copy_from_slice(&c_all[t * u..][..u]);
            }
        });
    Ok((
        Tensor::new(vec![batch, 1, steps, u], out)?,
        LstmCache {
            gates,
            cells,
            cell_tanh,
        },
    ))
}

pub fn lstm_backward(
    grad_out: &Tensor,
    saved_input: &Tensor,
    saved_output: &Tensor,
    cache: &LstmCache,
    p: &LstmParams<'_>,
) -> Result<LstmGrads> {
    let (batch, steps, n, u) = dims(saved_input, p)?;
    if grad_out.shape() != [batch, 1, steps, u] || saved_output.shape() != grad_out.shape() {
        return Err(Error::Internal(format!("LSTM gradient shape {:?} does not match forward", grad_out.shape())));
    }
    let g4 = 4 * u;
    let mut gin = vec![0.0; batch * steps * n];
    let n_wx = n * g4;
    let n_wh = u * g4;
    let parts: Vec<Vec<f64>> = gin
        .par_chunks_mut(REDUCE_CHUNK * steps * n)
        .enumerate()
        .map(|(chunk, gin_chunk)| {
            let mut acc = vec![0.0; n_wx + n_wh + g4];
            let (gwx, rest) = acc.split_at_mut(n_wx);
            let (gwh, gb) = rest.split_at_mut(n_wh);
            let b0 = chunk * REDUCE_CHUNK;
            let mut dz = vec![0.0; g4];
            for (bi, gx_all) in gin_chunk.chunks_mut(steps * n).enumerate() {
                let b = b0 + bi;
                let x_all = &saved_input.data()[b * steps * n..][..steps * n];
                let h_all = &saved_output.data()[b * steps * u..][..steps * u];
                let go = &grad_out.data()[b * steps * u..][..steps * u];
                let gates = &cache.gates[b * steps * g4..][..steps * g4];
                let cells = &cache.cells[b * steps * u..][..steps * u];
                let ctanh = &cache.cell_tanh[b * steps * u..][..steps * u];
                let mut dh_next = vec![0.0; u];
                let mut dc_next = vec![0.0; u];
                for t in (0..steps).rev() {
                    let g = &gates[t * g4..][..g4];
                    for k in 0..u {
                        let (ig, fg, cg, og) = (g[k], g[u + k], g[2 * u + k], g[3 * u + k]);
                        let ct = ctanh[t * u + k];
                        let c_prev = if t > 0 { cells[(t - 1) * u + k] } else { 0.0 };
                        let dh = go[t * u + k] + dh_next[k];
                        let dc = dh * og * (1.0 - ct * ct) + dc_next[k];
                        dz[k] = dc * cg * ig * (1.0 - ig);
                        dz[u + k] = dc * c_prev * fg * (1.0 - fg);
                        dz[2 * u + k] = dc * ig * (1.0 - cg * cg);
                        dz[3 * u + k] = dh * ct * og * (1.0 - og);
                        dc_next[k] = dc * fg;
                    }
                    let x_t = &x_all[t * n..][..n];
                    for (k, &xv) in x_t.iter().enumerate() {
                        for (gw, &d) in gwx[k * g4..][..g4].iter_mut().zip(&dz) {
                            *gw += xv * d;
                        }
                    }
                    if t > 0 {
                        let h_prev = &h_all[(t - 1) * u..][..u];
                        for (k, &hv) in h_prev.iter().enumerate() {
                            for (gw, &d) in gwh[k * g4..][..g4].iter_mut().zip(&dz) {
                                *gw += hv * d;
                            }
                        }
                    }
                    for (a, &d) in gb.iter_mut().zip(&dz) {
                        *a += d;
                    }
                    mat_vec_acc(p.w_x.data(), &dz, &mut gx_all[t * n..][..n]);
                    dh_next.fill(0.0);
                    mat_vec_acc(p.w_h.data(), &dz, &mut dh_next);
                }
            }
            acc
        })
        .collect();
    let acc = ordered_sum(parts, n_wx + n_wh + g4);
    Ok(LstmGrads {
        input: Tensor::new(saved_input.shape().to_vec(), gin)?,
        w_x: Tensor::new(vec![n, g4], acc[..n_wx].to_vec())?,
        w_h: Tensor::new(vec![u, g4], acc[n_wx..n_wx + n_wh].to_vec())?,
        bias: Tensor::new(vec![g4], acc[n_wx + n_wh..].to_vec())?,
    })
}
