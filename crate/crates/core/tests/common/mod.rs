//! Independent oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::f64::consts::PI;

use chanpred_core::channel::{cfr_matrix, CfoProcess, FadingState, TdlProfile};
use chanpred_core::predictor::{table_inputs, table_layers, PredictorModel, Unflip, Variant};
use chanpred_core::rng::{stream, Domain};
use chanpred_core::tensor::conv::kernel_shape;
use chanpred_core::tensor::{Graph, LayerKind, LayerSpec, Mode, NodeId, ParamStore, Tensor};
use chanpred_core::{CMatrix, Complex64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

// ---------------------------------------------------------------- gradients

fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

/// Relative error `|a - n| / max(|a|, |n|)` over the sampled coordinates.
/// A tensor whose analytic gradient vanishes (a bias feeding batch norm)
/// passes when the numeric one is rounding noise.
fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    if na < 1e-9 && nn < 1e-5 {
        return 0.0;
    }
    diff / na.max(nn)
}

/// Something with an input tensor and a parameter store whose scalar
/// objective `sum(r . f(x))` can be recorded on a fresh graph.
struct Probe<F: Fn(&mut Graph, &mut ParamStore, NodeId) -> NodeId> {
    x: Tensor,
    params: ParamStore,
    build: F,
    weights: Option<Tensor>,
}

impl<F: Fn(&mut Graph, &mut ParamStore, NodeId) -> NodeId> Probe<F> {
    fn objective(&mut self) -> f64 {
        let mut g = Graph::new(Mode::Train);
        let x = g.input(self.x.clone());
        let out = (self.build)(&mut g, &mut self.params, x);
        let w = self.weights.as_ref().expect("weights");
        g.value(out)
            .data()
            .iter()
            .zip(w.data())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Worst relative error over the input and every parameter tensor.
    fn check(mut self, rng: &mut ChaCha8Rng, samples: usize) -> Vec<(String, f64)> {
        let mut g = Graph::new(Mode::Train);
        let xid = g.input(self.x.clone());
        let out = (self.build)(&mut g, &mut self.params, xid);
        let w = rand_tensor(g.value(out).shape(), rng);
        self.weights = Some(w.clone());
        self.params.zero_grad();
        let grads = g.backward(out, w, &mut self.params).expect("backward");
        let gx = grads.get(xid).map(|t| t.data().to_vec());

        // small enough that a step rarely crosses a leaky-ReLU kink
        let h = 1e-7;
        let mut report = Vec::new();
        let picks = |n: usize, rng: &mut ChaCha8Rng| -> Vec<usize> {
            if n <= samples {
                (0..n).collect()
            } else {
                (0..samples).map(|_| rng.random_range(0..n)).collect()
            }
        };

        if let Some(gx) = gx {
            let idx = picks(self.x.numel(), rng);
            let (mut a, mut n) = (Vec::new(), Vec::new());
            for &i in &idx {
                let orig = self.x.data()[i];
                self.x.data_mut()[i] = orig + h;
                let fp = self.objective();
                self.x.data_mut()[i] = orig - h;
                let fm = self.objective();
                self.x.data_mut()[i] = orig;
                a.push(gx[i]);
                n.push((fp - fm) / (2.0 * h));
            }
            report.push(("input".to_owned(), rel_err(&a, &n)));
        }

        let layers: Vec<(String, usize)> = self
            .params
            .iter()
            .map(|(name, ts)| (name.to_owned(), ts.len()))
            .collect();
        for (layer, count) in layers {
            for j in 0..count {
                let t = &self.params.get(&layer).unwrap()[j];
                let grad = t.grad().expect("parameter gradient").to_vec();
                let idx = picks(t.numel(), rng);
                let (mut a, mut n) = (Vec::new(), Vec::new());
                for &i in &idx {
                    let orig = self.params.get(&layer).unwrap()[j].data()[i];
                    self.params.get_mut(&layer).unwrap()[j].data_mut()[i] = orig + h;
                    let fp = self.objective();
                    self.params.get_mut(&layer).unwrap()[j].data_mut()[i] = orig - h;
                    let fm = self.objective();
                    self.params.get_mut(&layer).unwrap()[j].data_mut()[i] = orig;
                    a.push(grad[i]);
                    n.push((fp - fm) / (2.0 * h));
                }
                report.push((format!("{layer}[{j}]"), rel_err(&a, &n)));
            }
        }
        report
    }
}

fn layer_params(spec: &LayerSpec, c_in: usize, rng: &mut ChaCha8Rng) -> Vec<Tensor> {
    let out = spec.filters_or_units;
    match spec.kind {
        LayerKind::Lstm => vec![
            rand_tensor(&[c_in, 4 * out], rng),
            rand_tensor(&[out, 4 * out], rng),
            rand_tensor(&[4 * out], rng),
        ],
        _ => vec![
            rand_tensor(&kernel_shape(spec, c_in), rng),
            rand_tensor(&[out], rng),
        ],
    }
}

/// Finite-difference check of every table layer at its table input shape,
/// of batch norm in training mode, and of the assembled predictor for each
/// unflip placement. Returns `(case, worst relative error)`.
pub fn gradient_suite(samples: usize) -> Vec<(String, f64)> {
    let mut rng = stream(11, Domain::Test, &[0]);
    let mut results = Vec::new();
    let batch = 2;
    for (spec, [f, t, c]) in table_layers().into_iter().zip(table_inputs()) {
        let mut params = ParamStore::new(0);
        params.insert(&spec.name, layer_params(&spec, c, &mut rng));
        let x = rand_tensor(&[batch, f, t, c], &mut rng);
        let s = spec.clone();
        let probe = Probe {
            x,
            params,
            build: move |g: &mut Graph, p: &mut ParamStore, x| {
                if s.kind == LayerKind::Lstm {
                    g.lstm(p, &s.name, x).unwrap()
                } else {
                    g.conv2d(p, &s, x).unwrap()
                }
            },
            weights: None,
        };
        let worst = probe
            .check(&mut rng, samples)
            .into_iter()
            .map(|r| r.1)
            .fold(0.0, f64::max);
        results.push((spec.name.clone(), worst));
    }

    // batch norm (training mode) and leaky ReLU on the encoder output shape
    let mut params = ParamStore::new(0);
    params.insert(
        "BN",
        vec![rand_tensor(&[8], &mut rng), rand_tensor(&[8], &mut rng)],
    );
    params.insert_buffers("BN", vec![Tensor::zeros(&[8]), Tensor::filled(&[8], 1.0)]);
    let probe = Probe {
        x: rand_tensor(&[batch, 4, 14, 8], &mut rng),
        params,
        build: |g: &mut Graph, p: &mut ParamStore, x| g.batch_norm(p, "BN", x).unwrap(),
        weights: None,
    };
    let worst = probe
        .check(&mut rng, samples)
        .into_iter()
        .map(|r| r.1)
        .fold(0.0, f64::max);
    results.push(("BatchNorm".into(), worst));

    let probe = Probe {
        x: rand_tensor(&[batch, 4, 14, 8], &mut rng),
        params: ParamStore::new(0),
        build: |g: &mut Graph, _: &mut ParamStore, x| g.leaky_relu(x, 0.01),
        weights: None,
    };
    let worst = probe
        .check(&mut rng, samples)
        .into_iter()
        .map(|r| r.1)
        .fold(0.0, f64::max);
    results.push(("LeakyReLU".into(), worst));

    for unflip in [Unflip::Never, Unflip::BeforeDecoder, Unflip::AfterOutput] {
        let variant = Variant {
            unflip,
            ..Variant::default()
        };
        let model = PredictorModel::new(variant.clone(), 5);
        let layers = model.layers.clone();
        let probe = Probe {
            x: rand_tensor(&[batch, 48, 14, 2], &mut rng),
            params: model.params.clone(),
            build: move |g: &mut Graph, p: &mut ParamStore, x| {
                let mut m = PredictorModel {
                    layers: layers.clone(),
                    variant: variant.clone(),
                    params: std::mem::replace(p, ParamStore::new(0)),
                    trained: false,
                };
                let input = g.value(x).clone();
                // re-record on the same graph: the model owns its input node
                let out = m.record(g, input).unwrap();
                *p = m.params;
                out
            },
            weights: None,
        };
        // the model records its own input node, so only parameters are checked
        let worst = probe
            .check(&mut rng, samples)
            .into_iter()
            .map(|r| r.1)
            .fold(0.0, f64::max);
        results.push((format!("model ({unflip:?})"), worst));
    }
    results
}

// ---------------------------------------------------------------- channel

/// Received subcarriers of one CP-OFDM symbol computed in the time domain:
/// IFFT, cyclic prefix, linear convolution with integer-sample taps, CP
/// removal and FFT.
pub fn cp_ofdm_time_domain(
    x: &[Complex64],
    taps: &[(usize, Complex64)],
    cp: usize,
) -> Vec<Complex64> {
    let n = x.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut s = x.to_vec();
    planner.plan_fft_inverse(n).process(&mut s);
    for v in &mut s {
        *v /= n as f64;
    }
    let mut tx: Vec<Complex64> = s[n - cp..].to_vec();
    tx.extend_from_slice(&s);
    let mut rx = vec![Complex64::new(0.0, 0.0); tx.len()];
    for (i, r) in rx.iter_mut().enumerate() {
        for &(d, g) in taps {
            if i >= d {
                *r += g * tx[i - d];
            }
        }
    }
    let mut y = rx[cp..].to_vec();
    planner.plan_fft_forward(n).process(&mut y);
    y
}

/// Max deviation between the frequency-domain pipeline and the time-domain
/// oracle on a static `n_sc`-subcarrier instance.
pub fn channel_oracle_deviation(n_sc: usize, n_taps: usize, seed: u64) -> f64 {
    let mut rng = stream(seed, Domain::Test, &[n_sc as u64]);
    let df = 15e3;
    let ts = 1.0 / (n_sc as f64 * df);
    let delays: Vec<usize> = (0..n_taps).map(|i| i + i / 2).collect();
    let gains: Vec<Complex64> = (0..n_taps)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let profile = TdlProfile::rayleigh(
        "oracle",
        &delays
            .iter()
            .map(|&d| (d as f64 * ts, 1.0))
            .collect::<Vec<_>>(),
    );
    let mut state = FadingState::constant(&gains);
    let h = cfr_matrix(&mut state, &profile, &CfoProcess::none(), n_sc, df, &[0.0]);
    let x = CMatrix::from_fn(n_sc, 1, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let y_freq = h.entries.hadamard(&x);
    let taps: Vec<(usize, Complex64)> = delays.iter().copied().zip(gains.iter().copied()).collect();
    let cp = delays.iter().max().copied().unwrap_or(0) + 1;
    let y_time = cp_ofdm_time_domain(x.data(), &taps, cp);
    (0..n_sc)
        .map(|k| (y_freq.get(k, 0) - y_time[k]).norm())
        .fold(0.0, f64::max)
}

/// `J0(x) = (1/pi) * integral_0^pi cos(x sin t) dt` by composite Simpson.
pub fn bessel_j0(x: f64) -> f64 {
    let n = 2000;
    let h = PI / n as f64;
    let f = |t: f64| (x * t.sin()).cos();
    let mut s = f(0.0) + f(PI);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0 / PI
}

/// Max |Re R(tau) - J0(2 pi f_d tau)| over the lags, with `R` the ensemble
/// autocorrelation of a unit-power Rayleigh tap over `realizations` draws.
pub fn autocorrelation_deviation(doppler_hz: f64, lags_s: &[f64], realizations: usize) -> f64 {
    let profile = TdlProfile::rayleigh("flat", &[(0.0, 1.0)]);
    let mut acc = vec![Complex64::new(0.0, 0.0); lags_s.len()];
    let mut rng = stream(21, Domain::Test, &[0]);
    for _ in 0..realizations {
        let st = FadingState::new(&profile, doppler_hz, &mut rng);
        let t0 = rng.random_range(0.0..1.0);
        let g0 = st.gains_at(t0)[0];
        for (a, &tau) in acc.iter_mut().zip(lags_s) {
            *a += st.gains_at(t0 + tau)[0] * g0.conj();
        }
    }
    acc.iter()
        .zip(lags_s)
        .map(|(a, &tau)| {
            (a.re / realizations as f64 - bessel_j0(2.0 * PI * doppler_hz * tau)).abs()
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov-Smirnov statistic of tap envelopes against the Rayleigh CDF
/// `1 - exp(-r^2)` (unit power), with `n` independent draws.
pub fn rayleigh_ks_statistic(n: usize, doppler_hz: f64) -> f64 {
    let profile = TdlProfile::rayleigh("flat", &[(0.0, 1.0)]);
    let mut rng = stream(22, Domain::Test, &[0]);
    let mut r: Vec<f64> = (0..n)
        .map(|_| {
            let st = FadingState::new(&profile, doppler_hz, &mut rng);
            st.gains_at(rng.random_range(0.0..1.0))[0].norm()
        })
        .collect();
    r.sort_by(f64::total_cmp);
    r.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-x * x).exp();
            (cdf - i as f64 / n as f64)
                .abs()
                .max(((i + 1) as f64 / n as f64 - cdf).abs())
        })
        .fold(0.0, f64::max)
}

/// Fraction of `n` residual-CFO draws falling within three standard deviations.
pub fn cfo_three_sigma_coverage(sigma_hz: f64, n: usize) -> f64 {
    let mut rng = stream(23, Domain::Test, &[0]);
    let inside = (0..n)
        .filter(|_| CfoProcess::draw(sigma_hz, &mut rng).epsilon_d_hz.abs() <= 3.0 * sigma_hz)
        .count();
    inside as f64 / n as f64
}
