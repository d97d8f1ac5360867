use std::fs;
use std::path::{Path, PathBuf};

use chanpred_core::harness::{
    complexity_report, default_architecture, model_complexity, sweep, ArchLayer, ComplexityReport, MetricsRecord,
    SweepPoint,
};
use chanpred_core::phy::ldpc;
use chanpred_core::predictor::{train as run_training, PredictorModel};
use chanpred_core::tensor::checkpoint::{blob_path, write_atomic, Checkpoint};
use chanpred_core::tensor::Adam;
use chanpred_core::{Error, Result};

use crate::config::{parse_values, scenario_config, train_config};
use crate::output::{plot_data, svg_chart, write_csv, RunManifest, Series};
use crate::{out_dir, Axis, ComplexityArgs, EvalArgs, GenLdpcArgs, TrainArgs};

pub const PAPER_MACS: u64 = 156_576;
pub const PAPER_PARAMS: u64 = 5_806;

/// Runs `body`, then writes the manifest whether or not it succeeded.
fn with_manifest(
    mut manifest: RunManifest,
    path: PathBuf,
    body: impl FnOnce(&mut RunManifest) -> Result<()>,
) -> Result<()> {
    let result = body(&mut manifest);
    if let Err(e) = &result {
        manifest.extra = serde_json::json!({ "error": e.to_string() });
    }
    let written = manifest.finish(&path);
    result.and(written)
}

fn load_model(path: &Path) -> Result<PredictorModel> {
    PredictorModel::from_checkpoint(&Checkpoint::load(path)?)
}

pub fn train(a: TrainArgs, threads: Option<usize>) -> Result<()> {
    let mut cfg = train_config(a.config.as_deref())?;
    if let Some(e) = a.epochs {
        cfg.max_epochs = e;
    }
    if let Some(b) = a.batch {
        cfg.batch_size = b;
        cfg.validation_size = b;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let dir = out_dir(a.out_dir);
    let manifest = RunManifest::start("train", serde_json::to_value(&cfg)?, vec![cfg.seed], threads);
    with_manifest(manifest, dir.join("manifest_train.json"), |m| {
        let model = PredictorModel::new(cfg.variant.clone(), cfg.seed);
        let outcome = run_training(model, Adam::default(), &cfg, |log| {
            if log.epoch % 10 == 0 {
                eprintln!(
                    "epoch {:>4}  lr {:.5}  train {:.5}  val {:.5}",
                    log.epoch, log.lr, log.train_loss, log.val_nmse
                );
            }
        })?;
        let ckpt = dir.join(&a.checkpoint_name);
        outcome
            .model
            .to_checkpoint(&outcome.adam, outcome.history.len())
            .save(&ckpt)?;
        let log = dir.join("train_log.csv");
        write_csv(&log, &outcome.history)?;
        m.artifacts.extend([ckpt.clone(), blob_path(&ckpt), log]);
        m.extra = serde_json::json!({
            "epochs_run": outcome.history.len(),
            "best_epoch": outcome.best_epoch,
            "best_val_nmse": outcome.best_val_nmse,
            "stopped_early": outcome.stopped_early,
        });
        eprintln!(
            "best validation NMSE {:.5} at epoch {}; checkpoint {}",
            outcome.best_val_nmse,
            outcome.best_epoch,
            ckpt.display()
        );
        Ok(())
    })
}

struct Curve<'m> {
    label: String,
    point: Option<SweepPoint>,
    model: Option<&'m PredictorModel>,
}

pub fn eval(a: EvalArgs, threads: Option<usize>) -> Result<()> {
    let mut base = scenario_config(a.config.as_deref())?;
    if let Some(n) = a.iterations {
        base.max_iterations = n;
    }
    if let Some(s) = a.seed {
        base.seed = s;
    }
    if a.checkpoint.is_some() {
        base.checkpoint = a.checkpoint.clone();
    }
    base.validate()?;
    let model = base.checkpoint.as_deref().map(load_model).transpose()?;
    let values = a.values.as_deref().map(parse_values).transpose()?;
    let grid = match a.axis {
        Axis::Ebn0 => values.clone().unwrap_or_else(|| vec![base.eb_n0_db]),
        _ => match &a.ebn0 {
            Some(s) => parse_values(s)?,
            None => vec![base.eb_n0_db],
        },
    };
    let need_values = |what: &str| {
        values
            .clone()
            .ok_or_else(|| Error::Config(format!("--values is required for the {what} axis")))
    };
    let ckpt_a = a.train_ckpt_a.as_deref().map(load_model).transpose()?;
    let ckpt_c = a.train_ckpt_c.as_deref().map(load_model).transpose()?;
    let curves: Vec<Curve> = match a.axis {
        Axis::Ebn0 => vec![Curve {
            label: base.channel.profile.clone(),
            point: None,
            model: model.as_ref(),
        }],
        Axis::Speed => need_values("speed")?
            .into_iter()
            .map(|v| Curve {
                label: format!("{v} km/h"),
                point: Some(SweepPoint::UeSpeed(v)),
                model: model.as_ref(),
            })
            .collect(),
        Axis::Mod => need_values("modulation")?
            .into_iter()
            .map(|v| Curve {
                label: format!("{v}-QAM"),
                point: Some(SweepPoint::ModOrder(v as usize)),
                model: model.as_ref(),
            })
            .collect(),
        Axis::Channel => {
            let (Some(ma), Some(mc)) = (ckpt_a.as_ref(), ckpt_c.as_ref()) else {
                return Err(Error::Config(
                    "the channel axis needs --train-ckpt-a and --train-ckpt-c".into(),
                ));
            };
            let mut v = Vec::new();
            for test in ["NTN-TDL-A", "NTN-TDL-C"] {
                for (train, m) in [("NTN-TDL-A", ma), ("NTN-TDL-C", mc)] {
                    let point = SweepPoint::Channel {
                        test: test.into(),
                        train: train.into(),
                    };
                    v.push(Curve {
                        label: point.label(),
                        point: Some(point),
                        model: Some(m),
                    });
                }
            }
            v
        }
    };

    let dir = out_dir(a.out_dir);
    let manifest = RunManifest::start("eval", serde_json::to_value(&base)?, vec![base.seed], threads);
    with_manifest(manifest, dir.join(format!("manifest_{}.json", a.name)), |m| {
        let mut records: Vec<MetricsRecord> = Vec::new();
        let mut wall = Vec::new();
        let eb_points: Vec<SweepPoint> = grid.iter().map(|&v| SweepPoint::EbN0(v)).collect();
        for c in &curves {
            let cfg = c.point.as_ref().map_or_else(|| base.clone(), |p| p.apply(&base));
            for mut r in sweep(&cfg, &eb_points, |_| c.model)? {
                r.label = c.label.clone();
                eprintln!(
                    "{:<28} Eb/N0 {:>5.1} dB  BLER e/p {:.4}/{:.4}  TP e/p {:.3}/{:.3} Mbps  NMSE pred {:.2} dB  ({} it)",
                    r.label,
                    r.eb_n0_db,
                    r.bler_e,
                    r.bler_p,
                    r.tp_e_bps / 1e6,
                    r.tp_p_bps / 1e6,
                    r.nmse_pred_db,
                    r.iterations_run
                );
                wall.push(r.wall_time_s);
                records.push(r);
            }
        }
        let csv = dir.join(format!("{}.csv", a.name));
        write_csv(&csv, &records)?;
        m.artifacts.push(csv);

        type Getter = fn(&MetricsRecord) -> f64;
        let groups: [(&str, &str, bool, Vec<(&str, Getter)>); 4] = [
            (
                "ber",
                "uncoded BER",
                true,
                vec![("est", |r| r.ber_uncoded_est), ("pred", |r| r.ber_uncoded_pred)],
            ),
            ("bler", "BLER", true, vec![("est", |r| r.bler_e), ("pred", |r| r.bler_p)]),
            (
                "throughput",
                "throughput [Mbps]",
                false,
                vec![("est", |r| r.tp_e_bps / 1e6), ("pred", |r| r.tp_p_bps / 1e6)],
            ),
            (
                "nmse",
                "NMSE [dB]",
                false,
                vec![
                    ("est", |r| r.nmse_est_db),
                    ("persist", |r| r.nmse_persist_db),
                    ("pred", |r| r.nmse_pred_db),
                ],
            ),
        ];
        for (key, y_label, log_y, getters) in groups {
            let mut series = Vec::new();
            for c in &curves {
                for (suffix, get) in &getters {
                    series.push(Series {
                        label: format!("{} {suffix}", c.label),
                        points: records
                            .iter()
                            .filter(|r| r.label == c.label)
                            .map(|r| (r.eb_n0_db, get(r)))
                            .collect(),
                    });
                }
            }
            let dat = dir.join(format!("{}_{key}.dat", a.name));
            let svg = dir.join(format!("{}_{key}.svg", a.name));
            write_atomic(&dat, plot_data(y_label, &series).as_bytes())?;
            write_atomic(&svg, svg_chart(y_label, y_label, &series, log_y).as_bytes())?;
            m.artifacts.extend([dat, svg]);
        }
        m.extra = serde_json::json!({ "wall_time_per_record_s": wall, "records": records.len() });
        Ok(())
    })
}

fn print_report(r: &ComplexityReport) {
    println!("{:<12} {:<8} {:>12} {:>10}", "layer", "kind", "mults", "params");
    for l in &r.layers {
        println!("{:<12} {:<8} {:>12} {:>10}", l.name, format!("{:?}", l.kind), l.macs, l.params);
    }
    println!("{:<12} {:<8} {:>12} {:>10}", "total", "", r.total_macs, r.trainable_params);
}

pub fn complexity(a: ComplexityArgs, threads: Option<usize>) -> Result<()> {
    let report = if let Some(p) = &a.checkpoint {
        model_complexity(&load_model(p)?)?
    } else if let Some(p) = &a.arch {
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        let arch: Vec<ArchLayer> =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        complexity_report(&arch)?
    } else {
        complexity_report(&default_architecture())?
    };
    let dir = out_dir(a.out_dir);
    let json = a.json.unwrap_or_else(|| dir.join("complexity.json"));
    let config = serde_json::json!({
        "default_arch": a.default_arch || (a.checkpoint.is_none() && a.arch.is_none()),
        "checkpoint": a.checkpoint,
        "arch": a.arch,
        "assert_paper": a.assert_paper,
    });
    let manifest = RunManifest::start("complexity", config, vec![], threads);
    let manifest_path = json.with_file_name("manifest_complexity.json");
    with_manifest(manifest, manifest_path, |m| {
        print_report(&report);
        write_atomic(&json, serde_json::to_string_pretty(&report)?.as_bytes())?;
        m.artifacts.push(json.clone());
        if a.assert_paper && (report.total_macs != PAPER_MACS || report.trainable_params != PAPER_PARAMS) {
            return Err(Error::Config(format!(
                "totals {} / {} differ from {PAPER_MACS} / {PAPER_PARAMS}",
                report.total_macs, report.trainable_params
            )));
        }
        Ok(())
    })
}

pub fn gen_ldpc(a: GenLdpcArgs, threads: Option<usize>) -> Result<()> {
    let lengths: Vec<usize> = if a.lengths.is_empty() {
        ldpc::shipped_lengths().collect()
    } else {
        a.lengths.clone()
    };
    let dir = out_dir(a.out_dir);
    let config = serde_json::json!({
        "lengths": lengths,
        "info_column_weight": ldpc::INFO_COLUMN_WEIGHT,
        "seed": ldpc::PEG_SEED,
    });
    let manifest = RunManifest::start("gen-ldpc", config, vec![ldpc::PEG_SEED], threads);
    with_manifest(manifest, dir.join("manifest_gen_ldpc.json"), |m| {
        for &n in &lengths {
            let pc = ldpc::generate(n)?;
            let path = dir.join(format!("n{n}_k{}.alist", ldpc::dimension(n)?));
            write_atomic(&path, pc.to_alist().as_bytes())?;
            eprintln!("wrote {}", path.display());
            m.artifacts.push(path);
        }
        Ok(())
    })
}
