//! Report directory layout.
//!
//! | file | content |
//! |------|---------|
//! | `config.txt` | the run configuration in canonical form |
//! | `norm_stats.txt` | decibel normalization range |
//! | `scores.csv` | every score of every detector |
//! | `roc_<detector>_<score>.csv` | ROC points |
//! | `hist_<detector>_<score>.csv` | per-class score histogram |
//! | `loss_vae.csv`, `loss_autoencoder.csv` | per-epoch training loss |
//! | `summary.txt` | AUCs and noise-floor statistics as `key = value` |
//! | `FAILED` | present only when the run stopped early; holds the error |

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::{DetectorScores, ExperimentReport, FloorStats, Histogram, HISTOGRAM_BINS};
use crate::persistence::tables::{write_histogram, write_loss_history, write_roc, write_scores, ScoreRow};
use crate::spectrogram::NormStats;

pub const FAILED_MARKER: &str = "FAILED";

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn norm_stats_text(stats: &NormStats) -> String {
    format!("min_db = {}\nmax_db = {}\n", stats.min_db, stats.max_db)
}

pub fn parse_norm_stats(text: &str) -> Result<NormStats> {
    let mut min = None;
    let mut max = None;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format(format!("norm stats line `{line}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::format(format!("norm stats value `{}`", v.trim())))?;
        match k.trim() {
            "min_db" => min = Some(v),
            "max_db" => max = Some(v),
            other => return Err(Error::format(format!("unknown norm stats key `{other}`"))),
        }
    }
    match (min, max) {
        (Some(lo), Some(hi)) => NormStats::new(lo, hi).map_err(|e| Error::format(e.to_string())),
        _ => Err(Error::format("norm stats need min_db and max_db")),
    }
}

pub fn read_norm_stats(path: &Path) -> Result<NormStats> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_norm_stats(&text)
}

/// AUC lines for one detector score.
pub fn auc_summary_lines(out: &mut String, detector: &str, score_name: &str, auc: f64, auc_mw: f64) {
    let _ = writeln!(out, "auc.{detector}.{score_name} = {auc}");
    let _ = writeln!(out, "auc_mann_whitney.{detector}.{score_name} = {auc_mw}");
}

pub fn floor_summary_lines(out: &mut String, stats: &FloorStats) {
    let _ = writeln!(out, "floor.normal_mean_delta = {}", stats.normal_mean_delta);
    let _ = writeln!(out, "floor.abnormal_mean_delta = {}", stats.abnormal_mean_delta);
    let _ = writeln!(out, "floor.abnormal_positive_fraction = {}", stats.abnormal_positive_fraction);
}

/// Parse a `key = value` summary into ordered pairs.
pub fn parse_summary(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::format(format!("summary line `{l}`")))
        })
        .collect()
}

pub fn summary_text(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let normal = report.test_labels.iter().filter(|l| **l == crate::dataset::Label::Normal).count();
    let _ = writeln!(out, "train_count = {}", report.train_count);
    let _ = writeln!(out, "test_normal = {normal}");
    let _ = writeln!(out, "test_abnormal = {}", report.test_labels.len() - normal);
    for d in &report.detectors {
        auc_summary_lines(&mut out, &d.detector, &d.score_name, d.auc(), d.auc_mann_whitney);
    }
    if let Some(stats) = &report.floor_stats {
        floor_summary_lines(&mut out, stats);
    }
    out
}

fn detector_rows(d: &DetectorScores, labels: &[crate::dataset::Label]) -> Vec<ScoreRow> {
    d.scores
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (&score, &label))| {
            let floors = d.floors.as_ref().map(|f| f[i]);
            ScoreRow {
                sample_id: i,
                label,
                detector: d.detector.clone(),
                score_name: d.score_name.clone(),
                score,
                noise_floor_in: floors.map(|f| f.0),
                noise_floor_out: floors.map(|f| f.1),
            }
        })
        .collect()
}

/// Write every part of `report` that has been computed.
pub fn write_report(dir: &Path, report: &ExperimentReport) -> Result<()> {
    create_dir(dir)?;
    write_text(&dir.join("config.txt"), &report.config.to_text())?;
    if let Some(stats) = &report.norm_stats {
        write_text(&dir.join("norm_stats.txt"), &norm_stats_text(stats))?;
    }
    if !report.vae_history.is_empty() {
        write_loss_history(&dir.join("loss_vae.csv"), &report.vae_history)?;
    }
    if !report.autoencoder_history.is_empty() {
        write_loss_history(&dir.join("loss_autoencoder.csv"), &report.autoencoder_history)?;
    }
    let mut rows = Vec::new();
    for d in &report.detectors {
        rows.extend(detector_rows(d, &report.test_labels));
        write_roc(&dir.join(format!("roc_{}.csv", d.key())), &d.roc)?;
        let hist = Histogram::build(&d.scores, &report.test_labels, HISTOGRAM_BINS)?;
        write_histogram(&dir.join(format!("hist_{}.csv", d.key())), &hist)?;
    }
    if !rows.is_empty() {
        write_scores(&dir.join("scores.csv"), &rows)?;
    }
    write_text(&dir.join("summary.txt"), &summary_text(report))
}

pub fn write_failure(dir: &Path, error: &Error) -> Result<()> {
    create_dir(dir)?;
    write_text(&dir.join(FAILED_MARKER), &format!("{error}\n"))
}

pub fn clear_failure(dir: &Path) -> Result<()> {
    let path = dir.join(FAILED_MARKER);
    match std::fs::remove_file(&path) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(Error::io(path, e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_stats_text_round_trip() {
        let stats = NormStats::new(-12.345678901234567, 31.0 / 3.0).unwrap();
        assert_eq!(parse_norm_stats(&norm_stats_text(&stats)).unwrap(), stats);
        assert!(parse_norm_stats("min_db = 1\n").is_err());
        assert!(parse_norm_stats("min_db = 2\nmax_db = 1\n").is_err());
    }

    #[test]
    fn summary_pairs() {
        let pairs = parse_summary("a = 1\n\nb = x y\n").unwrap();
        assert_eq!(pairs, vec![("a".into(), "1".into()), ("b".into(), "x y".into())]);
        assert!(parse_summary("oops").is_err());
    }
}
