//! Complex slot matrices to and from the stacked real layout.
//!
//! `x[b, k, l, 0] = Re H[k, l] / s` and `x[b, k, l, 1] = Im H[k, l] / s`,
//! where `s` makes the stacked input have unit mean square. Targets are
//! divided by their input's `s` too, so the mean-squared error over a
//! sample equals `||H_pred - H||^2 / ||H_in||^2`.

use num_complex::Complex64;

use crate::cmatrix::CMatrix;
use crate::tensor::Tensor;

pub fn norm_scale(m: &CMatrix) -> f64 {
    let n = 2 * m.rows() * m.cols();
    let p = if n == 0 { 0.0 } else { m.energy() / n as f64 };
    if p > 0.0 && p.is_finite() {
        p.sqrt()
    } else {
        1.0
    }
}

pub fn stack(ms: &[&CMatrix], scales: &[f64]) -> Tensor {
    let (f, t) = ms.first().map_or((0, 0), |m| (m.rows(), m.cols()));
    let mut data = Vec::with_capacity(ms.len() * f * t * 2);
    for (m, &s) in ms.iter().zip(scales) {
        for v in m.data() {
            data.push(v.re / s);
            data.push(v.im / s);
        }
    }
    Tensor::new(vec![ms.len(), f, t, 2], data).expect("consistent stacked shape")
}

pub fn unstack(t: &Tensor, b: usize, scale: f64) -> CMatrix {
    let (f, l) = (t.shape()[1], t.shape()[2]);
    let per = f * l * 2;
    let chunk = &t.data()[b * per..(b + 1) * per];
    let mut m = CMatrix::zeros(f, l);
    for (dst, pair) in m.data_mut().iter_mut().zip(chunk.chunks_exact(2)) {
        *dst = Complex64::new(pair[0] * scale, pair[1] * scale);
    }
    m
}
