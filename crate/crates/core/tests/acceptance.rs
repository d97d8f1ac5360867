//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the report is always printed; exits nonzero if a hard criterion fails.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use chanpred_core::channel::{doppler_from_speed, residual_cfo_sigma};
use chanpred_core::harness::{
    complexity_report, default_architecture, sweep, throughput_estimation, throughput_prediction, MetricsRecord,
    ScenarioConfig, SweepPoint,
};
use chanpred_core::predictor::{prediction_quality, train, PredictorModel, SampleSource, TrainConfig};
use chanpred_core::rng::Domain;
use chanpred_core::tensor::Adam;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// The desk-scale training run shared by the learning and curve-shape
/// criteria, with the number of epochs it ran.
fn trained_model() -> &'static (PredictorModel, usize) {
    static MODEL: OnceLock<(PredictorModel, usize)> = OnceLock::new();
    MODEL.get_or_init(|| {
        // the default run: up to 1000 epochs with early stopping
        let cfg = TrainConfig::default();
        let t = Instant::now();
        let out = train(PredictorModel::new(cfg.variant.clone(), cfg.seed), Adam::default(), &cfg, |log| {
            if log.epoch % 50 == 0 {
                eprintln!("  training epoch {:>4}: val NMSE {:.4} ({:.0} s)", log.epoch, log.val_nmse, t.elapsed().as_secs_f64());
            }
        })
        .expect("training run");
        eprintln!(
            "  trained {} epochs, best val NMSE {:.4} at epoch {}",
            out.history.len(),
            out.best_val_nmse,
            out.best_epoch
        );
        (out.model, out.history.len())
    })
}

fn complexity() -> Outcome {
    let r = complexity_report(&default_architecture()).unwrap();
    // (name, multiplications, parameters) by hand
    let expected: [(&str, u64, u64); 7] = [
        ("Conv2D_1", 4 * 14 * 6 * 3 * 2 * 8, 6 * 3 * 2 * 8 + 8),
        ("Conv2D_S1", 48 * 14 * 3 * 2 * 2, 3 * 2 * 2 + 2),
        ("Conv2D_S2", 4 * 14 * 3 * 8 * 8, 3 * 8 * 8 + 8),
        ("LSTM", 14 * (4 * 16 * (32 + 16) + 3 * 16), 4 * (16 * (32 + 16) + 16)),
        ("TConv2D_1", 14 * 4 * 3 * 16 * 8, 4 * 3 * 16 * 8 + 8),
        ("TConv2D_2", 4 * 14 * 12 * 3 * 8 * 2, 12 * 3 * 8 * 2 + 2),
        ("Conv2D_2", 48 * 14 * 3 * 3 * 2 * 2, 3 * 3 * 2 * 2 + 2),
    ];
    let per_layer = r.layers.len() == 7
        && r.layers
            .iter()
            .zip(expected)
            .all(|(l, (n, m, p))| l.name == n && l.macs == m && l.params == p);
    outcome(
        per_layer && r.total_macs == 156_576 && r.trainable_params == 5_806,
        format!("{} multiplications, {} parameters", r.total_macs, r.trainable_params),
    )
}

fn throughput_peaks() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (m, e_kbps, p_kbps, paper_mbps) in [(2, 864.0, 936.0, 0.94), (4, 1728.0, 1872.0, 1.87), (6, 2592.0, 2808.0, 2.81)] {
        let e = throughput_estimation(0.0, m, 0.75) / 1e3;
        let p = throughput_prediction(0.0, 0.0, m, 0.75) / 1e3;
        let rounded = (p / 1e3 * 100.0).round() / 100.0;
        ok &= (e - e_kbps).abs() < 1e-9 && (p - p_kbps).abs() < 1e-9 && (rounded - paper_mbps).abs() < 1e-9;
        parts.push(format!("{e:.0}/{p:.0} kbps"));
    }
    outcome(ok, parts.join(", "))
}

fn gradients() -> Outcome {
    let t = Instant::now();
    let results = common::gradient_suite(24);
    let (worst_case, worst) = results
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .unwrap();
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst < 1e-4 && secs < 60.0,
        format!("{} cases, worst relative error {worst:.2e} ({worst_case}), {secs:.1} s", results.len()),
    )
}

fn channel_oracle() -> Outcome {
    let dev = (0..4).map(|s| common::channel_oracle_deviation(8, 4, s)).fold(0.0, f64::max);
    outcome(dev < 1e-9, format!("max deviation {dev:.2e} on 8 subcarriers"))
}

fn fading_stats() -> Outcome {
    let t = Instant::now();
    let fd = doppler_from_speed(5.0, 2e9);
    let lags: Vec<f64> = (0..=20).map(|i| i as f64 * 5e-3).collect();
    let j0 = common::autocorrelation_deviation(fd, &lags, 20_000);
    let n = 10_000;
    let ks = common::rayleigh_ks_statistic(n, fd);
    let ks_crit = 1.628 / (n as f64).sqrt();
    let cov = common::cfo_three_sigma_coverage(residual_cfo_sigma(2e9, 0.1), 100_000);
    outcome(
        j0 < 0.03 && ks < ks_crit && (0.995..=0.999).contains(&cov) && t.elapsed().as_secs() < 120,
        format!("J0 deviation {j0:.4}, KS {ks:.4} (< {ks_crit:.4}), 3-sigma coverage {cov:.4}"),
    )
}

fn learning() -> Outcome {
    let (model, epochs) = trained_model();
    let source = SampleSource::new(&TrainConfig::default().channel, 16).unwrap();
    let held_out = source.dataset_at(10.0, 99, Domain::Test, 0, 1000).unwrap();
    let q = prediction_quality(model, &held_out).unwrap();
    let gain = q.gain_db();
    outcome(
        *epochs >= 300 && gain >= 3.0,
        format!(
            "{epochs} epochs; at 10 dB predicted {:.2} dB vs persistence {:.2} dB (gain {gain:.2} dB)",
            10.0 * q.nmse_pred.log10(),
            10.0 * q.nmse_persist.log10()
        ),
    )
}

fn curve_shape() -> Outcome {
    let model = &trained_model().0;
    let base = ScenarioConfig {
        min_iterations: 1000,
        max_iterations: 5000,
        ..ScenarioConfig::default()
    };
    let points: Vec<SweepPoint> = (0..=12).map(|v| SweepPoint::EbN0(v as f64)).collect();
    let recs = sweep(&base, &points, |_| Some(model)).unwrap();
    let ratio_ok = recs.iter().all(|r| r.tp_p_bps >= 0.97 * r.tp_e_bps);
    // the two highest grid points (11 and 12 dB) must beat the estimation peak
    let crossover = recs
        .iter()
        .filter(|r| r.eb_n0_db > 10.0)
        .all(|r| r.tp_p_bps > 1_728_000.0);
    let top: Vec<&MetricsRecord> = recs.iter().filter(|r| r.eb_n0_db >= 10.0).collect();
    let worst_ratio = recs
        .iter()
        .filter(|r| r.tp_e_bps > 0.0)
        .map(|r| r.tp_p_bps / r.tp_e_bps)
        .fold(f64::INFINITY, f64::min);
    let tops: Vec<String> = top
        .iter()
        .map(|r| format!("{:.0} dB: {:.0} kbps (BLER_p {:.3})", r.eb_n0_db, r.tp_p_bps / 1e3, r.bler_p))
        .collect();
    outcome(
        ratio_ok && crossover,
        format!("min TP_p/TP_e {worst_ratio:.3}; top of sweep {}", tops.join(", ")),
    )
}

fn soft_ber_anchor() -> Outcome {
    let cfg = ScenarioConfig {
        eb_n0_db: 8.5,
        data_mod_order: 4,
        min_iterations: 1000,
        max_iterations: 1000,
        ..ScenarioConfig::default()
    };
    let r = chanpred_core::harness::run_scenario(&cfg).unwrap();
    outcome(
        (3e-5..=3e-4).contains(&r.ber_uncoded_est),
        format!(
            "QPSK uncoded BER at 8.5 dB: {:.2e} [{:.2e}, {:.2e}]",
            r.ber_uncoded_est, r.ber_uncoded_est_lo, r.ber_uncoded_est_hi
        ),
    )
}

fn csv_bytes(recs: &[MetricsRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in recs {
        w.serialize(r).unwrap();
    }
    w.into_inner().unwrap()
}

fn determinism() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let base = ScenarioConfig {
        max_iterations: 200,
        ..ScenarioConfig::default()
    };
    let model = PredictorModel::new(Default::default(), 4);
    let points = [SweepPoint::EbN0(6.0), SweepPoint::EbN0(10.0), SweepPoint::ModOrder(64)];
    let run = || pool.install(|| csv_bytes(&sweep(&base, &points, |_| Some(&model)).unwrap()));
    let (a, b) = (run(), run());
    let tiny = TrainConfig {
        max_epochs: 3,
        batch_size: 16,
        validation_size: 16,
        ..TrainConfig::default()
    };
    let train_log = || {
        pool.install(|| {
            let out = train(PredictorModel::new(tiny.variant.clone(), 1), Adam::default(), &tiny, |_| {}).unwrap();
            let mut w = csv::Writer::from_writer(Vec::new());
            for h in &out.history {
                w.serialize(h).unwrap();
            }
            w.into_inner().unwrap()
        })
    };
    let (la, lb) = (train_log(), train_log());
    outcome(
        a == b && la == lb,
        format!("sweep CSV {} bytes, training log {} bytes, identical on rerun", a.len(), la.len()),
    )
}

fn main() {
    // (name, run, hard criterion)
    let criteria: [(&str, fn() -> Outcome, bool); 9] = [
        ("complexity exactness", complexity, true),
        ("throughput peaks", throughput_peaks, true),
        ("gradient suite", gradients, true),
        ("channel oracle", channel_oracle, true),
        ("fading statistics", fading_stats, true),
        ("predictor learning", learning, true),
        ("curve shape", curve_shape, true),
        ("soft BER anchor", soft_ber_anchor, false),
        ("determinism", determinism, true),
    ];
    let mut failed = Vec::new();
    for (name, run, hard) in criteria {
        let t = Instant::now();
        let o = run();
        let tag = match (o.pass, hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "WARN",
        };
        println!("[{tag}] {name}: {} ({:.1} s)", o.detail, t.elapsed().as_secs_f64());
        if !o.pass && hard {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all hard criteria passed");
    } else {
        println!("acceptance: failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
