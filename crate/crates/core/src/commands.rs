//! The command-line operations, callable in-process.
//!
//! Every command is a pure function of its configuration and input files:
//! rerunning it reproduces its outputs byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::RunConfig;
use crate::dataset::{synthesize_with_progress, Label, SynthOutput};
use crate::error::{Error, Result};
use crate::evaluation::{auc_mann_whitney, roc_curve, run_experiment_to_dir, ExperimentReport, FloorStats, RocCurve};
use crate::persistence::report::{auc_summary_lines, create_dir, floor_summary_lines, norm_stats_text, write_text};
use crate::persistence::tables::vae_score_rows;
use crate::persistence::{load_dataset, load_model, read_scores, save_dataset, save_model, write_loss_history, write_roc, write_scores};
use crate::scoring::{score_dataset_with_floor, ScoreRecord};
use crate::vae::{train_with_progress, EpochLoss, MlpVae};

pub const TRAIN_FILE: &str = "train.spgd";
pub const TEST_FILE: &str = "test.spgd";
pub const MODEL_FILE: &str = "model.vaem";
pub const SCORES_FILE: &str = "scores.csv";

/// Generate both dataset splits and write them with the normalization range
/// and a manifest of label counts.
pub fn cmd_synth(config: &RunConfig, out: &Path, log: &mut dyn FnMut(&str)) -> Result<SynthOutput> {
    config.validate()?;
    create_dir(out)?;
    let data = synthesize_with_progress(&config.synth_config(), |done, total| {
        if done % 200 == 0 || done == total {
            log(&format!("{done}/{total} scenes"));
        }
    })?;
    save_dataset(&out.join(TRAIN_FILE), &data.train)?;
    save_dataset(&out.join(TEST_FILE), &data.test)?;
    write_text(&out.join("norm_stats.txt"), &norm_stats_text(&data.stats))?;
    write_text(&out.join("config.txt"), &config.to_text())?;
    let mut manifest = String::new();
    let _ = writeln!(manifest, "seed = {}", config.seed);
    let _ = writeln!(manifest, "epsilon = {}", config.epsilon);
    let _ = writeln!(manifest, "train_file = {TRAIN_FILE}");
    let _ = writeln!(manifest, "train_normal = {}", data.train.count(Label::Normal));
    let _ = writeln!(manifest, "test_file = {TEST_FILE}");
    let _ = writeln!(manifest, "test_normal = {}", data.test.count(Label::Normal));
    let _ = writeln!(manifest, "test_abnormal = {}", data.test.count(Label::Abnormal));
    write_text(&out.join("manifest.txt"), &manifest)?;
    Ok(data)
}

/// Train the VAE on a dataset file; writes the model and its loss history.
pub fn cmd_train(
    config: &RunConfig,
    data: &Path,
    out: &Path,
    log: &mut dyn FnMut(&str),
) -> Result<(MlpVae, Vec<EpochLoss>)> {
    config.validate()?;
    let train = load_dataset(data)?;
    if train.is_empty() {
        return Err(Error::invalid(format!("{}: no samples to train on", data.display())));
    }
    create_dir(out)?;
    let (model, history) = train_with_progress(&train.to_matrix(), &config.plan(), &config.train_config(), |e| {
        log(&format!("epoch {} loss {:.4} (kl {:.4})", e.epoch, e.total, e.kl))
    })?;
    save_model(&out.join(MODEL_FILE), &model)?;
    write_loss_history(&out.join("loss_vae.csv"), &history)?;
    Ok((model, history))
}

/// Score every sample of a dataset with a saved model.
pub fn cmd_score(config: &RunConfig, model: &Path, data: &Path, out: &Path) -> Result<Vec<ScoreRecord>> {
    config.validate()?;
    let vae = load_model(model)?;
    let dataset = load_dataset(data)?;
    create_dir(out)?;
    let records = score_dataset_with_floor(
        &vae,
        &dataset,
        config.latent_mode,
        config.scoring_seed(),
        config.noise_floor_percentile,
    )?;
    write_scores(&out.join(SCORES_FILE), &vae_score_rows(&records))?;
    Ok(records)
}

/// ROC analysis of one detector score read from a scores table.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalEntry {
    pub detector: String,
    pub score_name: String,
    pub roc: RocCurve,
    pub auc_mann_whitney: f64,
}

/// Build ROC curves for every (detector, score) group of a scores table and
/// write them with a summary.
pub fn cmd_eval(scores: &Path, out: &Path) -> Result<Vec<EvalEntry>> {
    let rows = read_scores(scores)?;
    let mut groups: Vec<(String, String)> = Vec::new();
    for r in &rows {
        let key = (r.detector.clone(), r.score_name.clone());
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    if groups.is_empty() {
        return Err(Error::invalid(format!("{}: no scores", scores.display())));
    }
    create_dir(out)?;
    let mut summary = String::new();
    let mut floor_stats = None;
    let mut entries = Vec::new();
    for (detector, score_name) in groups {
        let group: Vec<_> = rows
            .iter()
            .filter(|r| r.detector == detector && r.score_name == score_name)
            .collect();
        let values: Vec<f64> = group.iter().map(|r| r.score).collect();
        let labels: Vec<Label> = group.iter().map(|r| r.label).collect();
        let roc = roc_curve(&values, &labels).map_err(|e| Error::invalid(format!("{detector}/{score_name}: {e}")))?;
        let auc_mw = auc_mann_whitney(&values, &labels)?;
        write_roc(&out.join(format!("roc_{detector}_{score_name}.csv")), &roc)?;
        auc_summary_lines(&mut summary, &detector, &score_name, roc.auc, auc_mw);
        if floor_stats.is_none() && group.iter().all(|r| r.noise_floor_in.is_some() && r.noise_floor_out.is_some()) {
            let records: Vec<ScoreRecord> = group
                .iter()
                .map(|r| ScoreRecord {
                    sample_id: r.sample_id,
                    label: r.label,
                    noise_attention: 0.0,
                    reconstruction_error: 0.0,
                    noise_floor_in: r.noise_floor_in.unwrap_or_default(),
                    noise_floor_out: r.noise_floor_out.unwrap_or_default(),
                })
                .collect();
            floor_stats = Some(FloorStats::from_records(&records)?);
        }
        entries.push(EvalEntry {
            detector,
            score_name,
            roc,
            auc_mann_whitney: auc_mw,
        });
    }
    if let Some(stats) = &floor_stats {
        floor_summary_lines(&mut summary, stats);
    }
    write_text(&out.join("summary.txt"), &summary)?;
    Ok(entries)
}

/// Full experiment; the report lands in `out`.
pub fn cmd_experiment(config: &RunConfig, out: &Path, log: &mut dyn FnMut(&str)) -> Result<ExperimentReport> {
    run_experiment_to_dir(config, out, log)
}

