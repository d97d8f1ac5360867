//! Strided 2-D cross-correlation and its transpose over `[B, F, T, C]`.
//!
//! Kernel layout for both is `[kf, kt, a, b]` where a convolution maps `a`
//! input channels to `b` outputs and a transposed convolution maps `b` input
//! channels to `a` outputs. With that layout a transposed convolution is the
//! exact adjoint of the convolution sharing its kernel, padding and stride.

use rayon::prelude::*;

use super::{ordered_sum, LayerKind, LayerSpec, Tensor, REDUCE_CHUNK};
use crate::error::{Error, Result};

#[derive(Debug)]
pub struct ConvGrads {
    pub input: Tensor,
    pub weight: Tensor,
    pub bias: Tensor,
}

/// Index geometry shared by both directions.
#[derive(Clone, Copy)]
struct Geometry {
    /// Extents on the "conv input" side (padded domain is implicit).
    xf: usize,
    xt: usize,
    xc: usize,
    /// Extents on the "conv output" side.
    yf: usize,
    yt: usize,
    yc: usize,
    kf: usize,
    kt: usize,
    sf: usize,
    st: usize,
    top: usize,
    left: usize,
}

impl Geometry {
    /// Input-side position hit by output `(i, j)` and tap `(u, v)`, if inside.
    #[inline]
    fn tap(&self, i: usize, j: usize, u: usize, v: usize) -> Option<(usize, usize)> {
        let f = (i * self.sf + u).checked_sub(self.top)?;
        let t = (j * self.st + v).checked_sub(self.left)?;
        (f < self.xf && t < self.xt).then_some((f, t))
    }

    fn x_len(&self) -> usize {
        self.xf * self.xt * self.xc
    }

    fn y_len(&self) -> usize {
        self.yf * self.yt * self.yc
    }

    /// y[i,j,:] += sum over taps of x[f,t,:] . W[u,v]  (W is xc x yc)
    fn correlate(&self, x: &[f64], w: &[f64], y: &mut [f64]) {
        let (xc, yc) = (self.xc, self.yc);
        for i in 0..self.yf {
            for j in 0..self.yt {
                let out = &mut y[(i * self.yt + j) * yc..][..yc];
                for u in 0..self.kf {
                    for v in 0..self.kt {
                        let Some((f, t)) = self.tap(i, j, u, v) else { continue };
                        let xin = &x[(f * self.xt + t) * xc..][..xc];
                        let wb = &w[(u * self.kt + v) * xc * yc..][..xc * yc];
                        for (n, &xv) in xin.iter().enumerate() {
                            let row = &wb[n * yc..][..yc];
                            for (o, &wv) in out.iter_mut().zip(row) {
                                *o += xv * wv;
                            }
                        }
                    }
                }
            }
        }
    }

    /// x[f,t,:] += sum over taps of W[u,v] . y[i,j,:]  (adjoint of `correlate`)
    fn scatter(&self, y: &[f64], w: &[f64], x: &mut [f64]) {
        let (xc, yc) = (self.xc, self.yc);
        for i in 0..self.yf {
            for j in 0..self.yt {
                let yin = &y[(i * self.yt + j) * yc..][..yc];
                for u in 0..self.kf {
                    for v in 0..self.kt {
                        let Some((f, t)) = self.tap(i, j, u, v) else { continue };
                        let xo = &mut x[(f * self.xt + t) * xc..][..xc];
                        let wb = &w[(u * self.kt + v) * xc * yc..][..xc * yc];
                        for (n, xv) in xo.iter_mut().enumerate() {
                            let row = &wb[n * yc..][..yc];
                            *xv += row.iter().zip(yin).map(|(a, b)| a * b).sum::<f64>();
                        }
                    }
                }
            }
        }
    }

    /// gW[u,v,n,c] += x[f,t,n] * y[i,j,c]
    fn weight_grad(&self, x: &[f64], y: &[f64], gw: &mut [f64]) {
        let (xc, yc) = (self.xc, self.yc);
        for i in 0..self.yf {
            for j in 0..self.yt {
                let yin = &y[(i * self.yt + j) * yc..][..yc];
                for u in 0..self.kf {
                    for v in 0..self.kt {
                        let Some((f, t)) = self.tap(i, j, u, v) else { continue };
                        let xin = &x[(f * self.xt + t) * xc..][..xc];
                        let gb = &mut gw[(u * self.kt + v) * xc * yc..][..xc * yc];
                        for (n, &xv) in xin.iter().enumerate() {
                            let row = &mut gb[n * yc..][..yc];
                            for (g, &yv) in row.iter_mut().zip(yin) {
                                *g += xv * yv;
                            }
                        }
                    }
                }
            }
        }
    }
}

fn expect_kind(spec: &LayerSpec, kind: LayerKind) -> Result<()> {
    spec.validate()?;
    if spec.kind != kind {
        return Err(Error::Config(format!(
            "layer {} is {:?}, expected {kind:?}",
            spec.name, spec.kind
        )));
    }
    Ok(())
}

fn check_weight(spec: &LayerSpec, weight: &Tensor, bias: &Tensor, a: usize, b: usize) -> Result<()> {
    let want = [spec.kernel.0, spec.kernel.1, a, b];
    if weight.shape() != want {
        return Err(Error::Config(format!(
            "layer {}: kernel shape {:?}, expected {want:?}",
            spec.name,
            weight.shape()
        )));
    }
    let nb = if spec.kind == LayerKind::Conv2D { b } else { a };
    if bias.shape() != [nb] {
        return Err(Error::Config(format!(
            "layer {}: bias shape {:?}, expected [{nb}]",
            spec.name,
            bias.shape()
        )));
    }
    Ok(())
}

fn conv_geometry(spec: &LayerSpec, input: &Tensor) -> Result<(usize, Geometry)> {
    let [batch, lf, lt, n] = input.dims4()?;
    let (yf, yt) = spec.output_extent(lf, lt)?;
    let [top, _, left, _] = spec.pad_or_crop;
    Ok((
        batch,
        Geometry {
            xf: lf,
            xt: lt,
            xc: n,
            yf,
            yt,
            yc: spec.filters_or_units,
            kf: spec.kernel.0,
            kt: spec.kernel.1,
            sf: spec.stride.0,
            st: spec.stride.1,
            top,
            left,
        },
    ))
}

fn tconv_geometry(spec: &LayerSpec, input: &Tensor) -> Result<(usize, Geometry)> {
    let [batch, lf, lt, c] = input.dims4()?;
    let (of, ot) = spec.output_extent(lf, lt)?;
    let [top, _, left, _] = spec.pad_or_crop;
    Ok((
        batch,
        Geometry {
            xf: of,
            xt: ot,
            xc: spec.filters_or_units,
            yf: lf,
            yt: lt,
            yc: c,
            kf: spec.kernel.0,
            kt: spec.kernel.1,
            sf: spec.stride.0,
            st: spec.stride.1,
            top,
            left,
        },
    ))
}

fn add_bias(out: &mut [f64], bias: &[f64]) {
    for chunk in out.chunks_exact_mut(bias.len()) {
        for (o, b) in chunk.iter_mut().zip(bias) {
            *o += b;
        }
    }
}

fn bias_grad(grad: &[f64], channels: usize) -> Vec<f64> {
    let mut gb = vec![0.0; channels];
    for chunk in grad.chunks_exact(channels) {
        for (g, v) in gb.iter_mut().zip(chunk) {
            *g += v;
        }
    }
    gb
}

/// Chunked, order-deterministic accumulation of kernel gradients.
fn reduce_weight_grad(geo: Geometry, x: &[f64], y: &[f64], batch: usize, len: usize) -> Vec<f64> {
    let (xl, yl) = (geo.x_len(), geo.y_len());
    let parts: Vec<Vec<f64>> = (0..batch.div_ceil(REDUCE_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut gw = vec![0.0; len];
            let end = ((c + 1) * REDUCE_CHUNK).min(batch);
            for b in c * REDUCE_CHUNK..end {
                geo.weight_grad(&x[b * xl..][..xl], &y[b * yl..][..yl], &mut gw);
            }
            gw
        })
        .collect();
    ordered_sum(parts, len)
}

/// Convolution forward: `[B, Lf, Lt, N] -> [B, Lf', Lt', C]`.
pub fn conv2d_forward(input: &Tensor, spec: &LayerSpec, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    expect_kind(spec, LayerKind::Conv2D)?;
    let (batch, geo) = conv_geometry(spec, input)?;
    check_weight(spec, weight, bias, geo.xc, geo.yc)?;
    let mut out = Tensor::zeros(&[batch, geo.yf, geo.yt, geo.yc]);
    let (xl, yl) = (geo.x_len(), geo.y_len());
    out.data_mut()
        .par_chunks_mut(yl)
        .zip(input.data().par_chunks(xl))
        .for_each(|(y, x)| {
            geo.correlate(x, weight.data(), y);
            add_bias(y, bias.data());
        });
    Ok(out)
}

pub fn conv2d_backward(
    grad_out: &Tensor,
    saved_input: &Tensor,
    spec: &LayerSpec,
    weight: &Tensor,
) -> Result<ConvGrads> {
    expect_kind(spec, LayerKind::Conv2D)?;
    let (batch, geo) = conv_geometry(spec, saved_input)?;
    if grad_out.shape() != [batch, geo.yf, geo.yt, geo.yc] {
        return Err(Error::Internal(format!(
            "layer {}: gradient shape {:?} does not match forward output",
            spec.name,
            grad_out.shape()
        )));
    }
    let (xl, yl) = (geo.x_len(), geo.y_len());
    let mut gin = Tensor::zeros(saved_input.shape());
    gin.data_mut()
        .par_chunks_mut(xl)
        .zip(grad_out.data().par_chunks(yl))
        .for_each(|(gx, gy)| geo.scatter(gy, weight.data(), gx));
    let gw = reduce_weight_grad(geo, saved_input.data(), grad_out.data(), batch, weight.numel());
    Ok(ConvGrads {
        input: gin,
        weight: Tensor::new(weight.shape().to_vec(), gw)?,
        bias: Tensor::new(vec![geo.yc], bias_grad(grad_out.data(), geo.yc))?,
    })
}

/// Transposed convolution forward: `[B, Lf, Lt, C] -> [B, Lf'', Lt'', filters]`
/// with full extents `(L - 1) * stride + kernel` then cropped.
pub fn tconv2d_forward(input: &Tensor, spec: &LayerSpec, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    expect_kind(spec, LayerKind::TConv2D)?;
    let (batch, geo) = tconv_geometry(spec, input)?;
    check_weight(spec, weight, bias, geo.xc, geo.yc)?;
    let mut out = Tensor::zeros(&[batch, geo.xf, geo.xt, geo.xc]);
    let (xl, yl) = (geo.x_len(), geo.y_len());
    out.data_mut()
        .par_chunks_mut(xl)
        .zip(input.data().par_chunks(yl))
        .for_each(|(x, y)| {
            geo.scatter(y, weight.data(), x);
            add_bias(x, bias.data());
        });
    Ok(out)
}

pub fn tconv2d_backward(
    grad_out: &Tensor,
    saved_input: &Tensor,
    spec: &LayerSpec,
    weight: &Tensor,
) -> Result<ConvGrads> {
    expect_kind(spec, LayerKind::TConv2D)?;
    let (batch, geo) = tconv_geometry(spec, saved_input)?;
    if grad_out.shape() != [batch, geo.xf, geo.xt, geo.xc] {
        return Err(Error::Internal(format!(
            "layer {}: gradient shape {:?} does not match forward output",
            spec.name,
            grad_out.shape()
        )));
    }
    let (xl, yl) = (geo.x_len(), geo.y_len());
    let mut gin = Tensor::zeros(saved_input.shape());
    gin.data_mut()
        .par_chunks_mut(yl)
        .zip(grad_out.data().par_chunks(xl))
        .for_each(|(gy, gx)| geo.correlate(gx, weight.data(), gy));
    let gw = reduce_weight_grad(geo, grad_out.data(), saved_input.data(), batch, weight.numel());
    Ok(ConvGrads {
        input: gin,
        weight: Tensor::new(weight.shape().to_vec(), gw)?,
        bias: Tensor::new(vec![geo.xc], bias_grad(grad_out.data(), geo.xc))?,
    })
}

/// Kernel shape `[kf, kt, a, b]` for a layer fed with `in_channels`.
pub fn kernel_shape(spec: &LayerSpec, in_channels: usize) -> [usize; 4] {
    let (kf, kt) = spec.kernel;
    match spec.kind {
        LayerKind::TConv2D => [kf, kt, spec.filters_or_units, in_channels],
        _ => [kf, kt, in_channels, spec.filters_or_units],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};
    use rand::Rng;

    fn random(shape: &[usize], seed: u64) -> Tensor {
        let mut r = stream(seed, Domain::Test, &[]);
        Tensor::from_fn(shape, |_| r.random_range(-1.0..1.0))
    }

    fn table_conv1() -> LayerSpec {
        LayerSpec::conv2d("conv2d_1", 8, (6, 3), (12, 1), [0, 0, 1, 1])
    }

    #[test]
    fn conv2d_1_shape() {
        let spec = table_conv1();
        let out = conv2d_forward(
            &Tensor::zeros(&[1, 48, 14, 2]),
            &spec,
            &Tensor::zeros(&kernel_shape(&spec, 2)),
            &Tensor::zeros(&[8]),
        )
        .unwrap();
        assert_eq!(out.shape(), [1, 4, 14, 8]);
    }

    #[test]
    fn zero_input_zero_bias_gives_zero() {
        let spec = table_conv1();
        let w = random(&kernel_shape(&spec, 2), 1);
        let out = conv2d_forward(&Tensor::zeros(&[2, 48, 14, 2]), &spec, &w, &Tensor::zeros(&[8])).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_kernel_selects_channel() {
        let spec = LayerSpec::conv2d("id", 1, (1, 1), (1, 1), [0; 4]);
        let x = random(&[1, 4, 14, 8], 2);
        let mut w = Tensor::zeros(&[1, 1, 8, 1]);
        w.data_mut()[5] = 1.0;
        let out = conv2d_forward(&x, &spec, &w, &Tensor::zeros(&[1])).unwrap();
        for (k, v) in out.data().iter().enumerate() {
            assert_eq!(*v, x.data()[k * 8 + 5]);
        }
    }

    #[test]
    fn tconv_table_shapes() {
        let t1 = LayerSpec::tconv2d("tconv2d_1", 8, (4, 3), (1, 1), [0, 0, 1, 1]);
        let out = tconv2d_forward(
            &Tensor::zeros(&[1, 1, 14, 16]),
            &t1,
            &Tensor::zeros(&kernel_shape(&t1, 16)),
            &Tensor::zeros(&[8]),
        )
        .unwrap();
        assert_eq!(out.shape(), [1, 4, 14, 8]);
        let t2 = LayerSpec::tconv2d("tconv2d_2", 2, (12, 3), (12, 1), [0, 0, 1, 1]);
        let bias = Tensor::new(vec![2], vec![0.5, -0.25]).unwrap();
        let out = tconv2d_forward(&Tensor::zeros(&[1, 4, 14, 8]), &t2, &Tensor::zeros(&kernel_shape(&t2, 8)), &bias)
            .unwrap();
        assert_eq!(out.shape(), [1, 48, 14, 2]);
        // zero input: output is the bias everywhere
        for px in out.data().chunks(2) {
            assert_eq!(px, [0.5, -0.25]);
        }
    }

    #[test]
    fn scalar_chain_rule() {
        let spec = LayerSpec::conv2d("s", 1, (1, 1), (1, 1), [0; 4]);
        let x = Tensor::new(vec![1, 1, 1, 1], vec![3.0]).unwrap();
        let w = Tensor::new(vec![1, 1, 1, 1], vec![-2.0]).unwrap();
        let g = Tensor::new(vec![1, 1, 1, 1], vec![1.0]).unwrap();
        let grads = conv2d_backward(&g, &x, &spec, &w).unwrap();
        assert_eq!(grads.input.data(), [-2.0]);
        assert_eq!(grads.weight.data(), [3.0]);
        assert_eq!(grads.bias.data(), [1.0]);
    }

    #[test]
    fn zero_grad_out_gives_zero_grads() {
        let spec = table_conv1();
        let x = random(&[1, 48, 14, 2], 3);
        let w = random(&kernel_shape(&spec, 2), 4);
        let grads = conv2d_backward(&Tensor::zeros(&[1, 4, 14, 8]), &x, &spec, &w).unwrap();
        assert!(grads.input.data().iter().chain(grads.weight.data()).chain(grads.bias.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_grad_is_internal_error() {
        let spec = table_conv1();
        let x = random(&[1, 48, 14, 2], 3);
        let w = random(&kernel_shape(&spec, 2), 4);
        let err = conv2d_backward(&Tensor::zeros(&[1, 4, 13, 8]), &x, &spec, &w).unwrap_err();
        assert!(matches!(err, Error::Internal(_)));
    }

    #[test]
    fn wrong_kernel_shape_is_config_error() {
        let spec = table_conv1();
        let err = conv2d_forward(
            &Tensor::zeros(&[1, 48, 14, 3]),
            &spec,
            &Tensor::zeros(&kernel_shape(&spec, 2)),
            &Tensor::zeros(&[8]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn tconv_is_adjoint_of_conv() {
        for (spec, xs) in [
            (LayerSpec::conv2d("a", 8, (12, 3), (12, 1), [0, 0, 1, 1]), [2, 48, 14, 2]),
            (LayerSpec::conv2d("b", 3, (3, 3), (1, 1), [1, 1, 1, 1]), [1, 6, 5, 4]),
            (LayerSpec::conv2d("c", 5, (4, 2), (2, 2), [1, 1, 0, 0]), [2, 8, 6, 3]),
        ] {
            let w = random(&kernel_shape(&spec, xs[3]), 10);
            let x = random(&xs, 11);
            let y_conv = conv2d_forward(&x, &spec, &w, &Tensor::zeros(&[spec.filters_or_units])).unwrap();
            let y = random(y_conv.shape(), 12);
            let mut tspec = spec.clone();
            tspec.kind = LayerKind::TConv2D;
            tspec.filters_or_units = xs[3];
            let x_t = tconv2d_forward(&y, &tspec, &w, &Tensor::zeros(&[xs[3]])).unwrap();
            assert_eq!(x_t.shape(), x.shape());
            let lhs = y_conv.dot(&y);
            let rhs = x.dot(&x_t);
            assert!((lhs - rhs).abs() < 1e-9, "{} vs {}", lhs, rhs);
        }
    }
}
