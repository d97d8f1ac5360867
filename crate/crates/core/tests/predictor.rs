use chanpred_core::predictor::{norm_scale, stack, unstack, PredictorModel, SampleSource, Variant};
use chanpred_core::rng::{stream, Domain};
use chanpred_core::sim::ChannelConfig;
use chanpred_core::tensor::checkpoint::Checkpoint;
use chanpred_core::tensor::loss::mse_loss;
use chanpred_core::tensor::reshape::time_flip;
use chanpred_core::tensor::{Adam, Tensor};
use chanpred_core::{nmse, CMatrix, Complex64};
use proptest::prelude::*;
use rand::Rng;

fn random_matrix(seed: u64, scale: f64) -> CMatrix {
    let mut rng = stream(seed, Domain::Test, &[]);
    CMatrix::from_fn(48, 14, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale
    })
}

#[test]
fn normalized_loss_equals_input_relative_error() {
    let source = SampleSource::new(&ChannelConfig::default(), 16).unwrap();
    let model = PredictorModel::new(Variant::default(), 3);
    let samples = source.dataset_at(6.0, 4, Domain::Test, 0, 8).unwrap();
    for s in &samples {
        let pred = model.predict(&s.input).unwrap();
        let scale = norm_scale(&s.input);
        let (loss, _) = mse_loss(&stack(&[&pred], &[scale]), &stack(&[&s.target], &[scale])).unwrap();
        let direct = pred.distance_sq(&s.target) / s.input.energy();
        assert!((loss - direct).abs() <= 1e-12 * direct.max(1.0), "{loss} vs {direct}");
    }
    // with the truth as input the loss is the NMSE itself
    let h = &samples[0].target;
    let g = random_matrix(5, 0.3);
    let scale = norm_scale(h);
    let (loss, _) = mse_loss(&stack(&[&g], &[scale]), &stack(&[h], &[scale])).unwrap();
    assert!((loss - nmse(&g, h)).abs() < 1e-12);
}

#[test]
fn time_flip_reverses_symbol_index() {
    let (b, f, t, c) = (2, 1, 14, 32);
    let x = Tensor::from_fn(&[b, f, t, c], |i| i as f64);
    let y = time_flip(&x).unwrap();
    for bi in 0..b {
        for l in 0..t {
            for ci in 0..c {
                let src = ((bi * f) * t + (t - 1 - l)) * c + ci;
                let dst = ((bi * f) * t + l) * c + ci;
                assert_eq!(y.data()[dst], x.data()[src]);
            }
        }
    }
    assert_eq!(time_flip(&y).unwrap(), x);
}

#[test]
fn prediction_scales_with_input() {
    let model = PredictorModel::new(Variant::default(), 8);
    let e = random_matrix(9, 1.0);
    let base = model.predict(&e).unwrap();
    for alpha in [1e-3, 0.37, 42.0] {
        let p = model.predict(&e.scale(alpha)).unwrap();
        let err = p.max_abs_diff(&base.scale(alpha));
        assert!(err <= 1e-9 * alpha, "alpha {alpha}: {err:e}");
    }
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let model = PredictorModel::new(Variant::default(), 12);
    model.to_checkpoint(&Adam::default(), 7).save(&path).unwrap();
    let back = PredictorModel::from_checkpoint(&Checkpoint::load(&path).unwrap()).unwrap();
    let e = random_matrix(13, 0.5);
    assert_eq!(model.predict(&e).unwrap(), back.predict(&e).unwrap());
}

proptest! {
    #[test]
    fn stacked_input_has_unit_mean_square(seed in 0u64..1000, scale in 1e-6f64..1e6) {
        let m = random_matrix(seed, scale);
        let s = norm_scale(&m);
        let t = stack(&[&m], &[s]);
        let ms = t.data().iter().map(|v| v * v).sum::<f64>() / t.numel() as f64;
        prop_assert!((ms - 1.0).abs() < 1e-12);
        let back = unstack(&t, 0, s);
        prop_assert!(back.max_abs_diff(&m) <= 1e-12 * scale);
    }
}
