use std::hint::black_box;

use chanpred_core::channel::{cfr_matrix, load_profile, symbol_times, CfoProcess, FadingState};
use chanpred_core::phy::ldpc::code_for_length;
use chanpred_core::predictor::{PredictorModel, Variant};
use chanpred_core::rng::{stream, Domain};
use chanpred_core::{CMatrix, Complex64};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn forward(c: &mut Criterion) {
    let model = PredictorModel::new(Variant::default(), 1);
    let mut rng = stream(7, Domain::Test, &[0]);
    let est = CMatrix::from_fn(48, 14, |_, _| Complex64::new(rng.random(), rng.random()));
    c.bench_function("predict one slot", |b| b.iter(|| model.predict(black_box(&est)).unwrap()));
    let batch: Vec<&CMatrix> = (0..32).map(|_| &est).collect();
    c.bench_function("predict batch of 32", |b| b.iter(|| model.predict_batch(black_box(&batch)).unwrap()));
}

fn ldpc_decode(c: &mut Criterion) {
    for n in [1152, 2304] {
        let code = code_for_length(n).unwrap();
        let mut rng = stream(7, Domain::Test, &[n as u64]);
        // random codeword, BPSK over AWGN at Eb/N0 = 3 dB
        let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
        let sigma2 = 1.0 / (2.0 * 0.75 * 10f64.powf(0.3));
        let llrs: Vec<f64> = code
            .encode(&info)
            .unwrap()
            .iter()
            .map(|&b| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                2.0 * (1.0 - 2.0 * b as f64 + sigma2.sqrt() * noise) / sigma2
            })
            .collect();
        c.bench_function(&format!("ldpc decode n={n}"), |b| {
            b.iter(|| code.decode(black_box(&llrs), 25).unwrap())
        });
    }
}

fn cfr(c: &mut Criterion) {
    let profile = load_profile("NTN-TDL-C").unwrap();
    let times = symbol_times(28, 14, 1e-3, 0.0);
    c.bench_function("cfr 48x28 NTN-TDL-C", |b| {
        b.iter_batched(
            || FadingState::new(&profile, 9.26, &mut stream(7, Domain::Test, &[1])),
            |mut state| cfr_matrix(&mut state, &profile, &CfoProcess::fixed(50.0), 48, 15e3, black_box(&times)),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, forward, ldpc_decode, cfr);
criterion_main!(benches);
