//! CSV tables: scores, ROC curves, loss histories and score histograms.
//!
//! Floats are written with their shortest round-tripping decimal form, so
//! reading a table back reproduces every value bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::evaluation::{Histogram, RocCurve, RocPoint};
use crate::scoring::ScoreRecord;
use crate::vae::EpochLoss;

pub const SCORE_HEADER: [&str; 7] = [
    "sample_id",
    "label",
    "detector",
    "score_name",
    "score",
    "noise_floor_in",
    "noise_floor_out",
];
pub const ROC_HEADER: [&str; 3] = ["threshold", "fpr", "tpr"];
pub const LOSS_HEADER: [&str; 4] = ["epoch", "total", "kl", "recon"];
pub const HISTOGRAM_HEADER: [&str; 4] = ["bin_lo", "bin_hi", "normal", "abnormal"];

/// One row of the scores table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub sample_id: usize,
    pub label: Label,
    pub detector: String,
    pub score_name: String,
    pub score: f64,
    /// Empty for detectors without a reconstruction.
    pub noise_floor_in: Option<f64>,
    pub noise_floor_out: Option<f64>,
}

/// Both VAE score rows for every record.
pub fn vae_score_rows(records: &[ScoreRecord]) -> Vec<ScoreRow> {
    let mut rows = Vec::with_capacity(records.len() * 2);
    for (name, pick) in [
        ("noise_attention", (|r: &ScoreRecord| r.noise_attention) as fn(&ScoreRecord) -> f64),
        ("reconstruction_error", |r: &ScoreRecord| r.reconstruction_error),
    ] {
        rows.extend(records.iter().map(|r| ScoreRow {
            sample_id: r.sample_id,
            label: r.label,
            detector: "vae".into(),
            score_name: name.into(),
            score: pick(r),
            noise_floor_in: Some(r.noise_floor_in),
            noise_floor_out: Some(r.noise_floor_out),
        }));
    }
    rows
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(format!("{}: {other:?}", path.display())),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_f64(field: &str, column: &str, line: usize) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::format(format!("line {line}: bad {column} `{field}`")))
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str], path: &Path) -> Result<()> {
    let header = reader.headers().map_err(csv_err(path))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::format(format!(
            "{}: header {:?}, expected {:?}",
            path.display(),
            header.iter().collect::<Vec<_>>(),
            expected
        )));
    }
    Ok(())
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(csv_err(path))
}

fn finish<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_scores(path: &Path, rows: &[ScoreRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SCORE_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.sample_id.to_string(),
            r.label.to_string(),
            r.detector.clone(),
            r.score_name.clone(),
            r.score.to_string(),
            opt(r.noise_floor_in),
            opt(r.noise_floor_out),
        ])
        .map_err(csv_err(path))?;
    }
    finish(w, path)
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    check_header(&mut reader, &SCORE_HEADER, path)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let line = i + 2;
        let label = Label::parse(&rec[1]).ok_or_else(|| Error::format(format!("line {line}: bad label `{}`", &rec[1])))?;
        let floor = |k: usize| -> Result<Option<f64>> {
            if rec[k].is_empty() {
                Ok(None)
            } else {
                parse_f64(&rec[k], SCORE_HEADER[k], line).map(Some)
            }
        };
        rows.push(ScoreRow {
            sample_id: rec[0]
                .parse()
                .map_err(|_| Error::format(format!("line {line}: bad sample_id `{}`", &rec[0])))?,
            label,
            detector: rec[2].to_string(),
            score_name: rec[3].to_string(),
            score: parse_f64(&rec[4], "score", line)?,
            noise_floor_in: floor(5)?,
            noise_floor_out: floor(6)?,
        });
    }
    Ok(rows)
}

pub fn write_roc(path: &Path, roc: &RocCurve) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(ROC_HEADER).map_err(csv_err(path))?;
    for p in &roc.points {
        w.write_record([p.threshold.to_string(), p.fpr.to_string(), p.tpr.to_string()])
            .map_err(csv_err(path))?;
    }
    finish(w, path)
}

pub fn read_roc(path: &Path) -> Result<Vec<RocPoint>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    check_header(&mut reader, &ROC_HEADER, path)?;
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(csv_err(path))?;
            Ok(RocPoint {
                threshold: parse_f64(&rec[0], "threshold", i + 2)?,
                fpr: parse_f64(&rec[1], "fpr", i + 2)?,
                tpr: parse_f64(&rec[2], "tpr", i + 2)?,
            })
        })
        .collect()
}

pub fn write_loss_history(path: &Path, history: &[EpochLoss]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(LOSS_HEADER).map_err(csv_err(path))?;
    for e in history {
        w.write_record([e.epoch.to_string(), e.total.to_string(), e.kl.to_string(), e.recon.to_string()])
            .map_err(csv_err(path))?;
    }
    finish(w, path)
}

pub fn read_loss_history(path: &Path) -> Result<Vec<EpochLoss>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    check_header(&mut reader, &LOSS_HEADER, path)?;
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(csv_err(path))?;
            let line = i + 2;
            Ok(EpochLoss {
                epoch: rec[0]
                    .parse()
                    .map_err(|_| Error::format(format!("line {line}: bad epoch `{}`", &rec[0])))?,
                total: parse_f64(&rec[1], "total", line)?,
                kl: parse_f64(&rec[2], "kl", line)?,
                recon: parse_f64(&rec[3], "recon", line)?,
            })
        })
        .collect()
}

pub fn write_histogram(path: &Path, hist: &Histogram) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(HISTOGRAM_HEADER).map_err(csv_err(path))?;
    for (i, (n, a)) in hist.normal.iter().zip(&hist.abnormal).enumerate() {
        w.write_record([
            hist.edges[i].to_string(),
            hist.edges[i + 1].to_string(),
            n.to_string(),
            a.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        let rows = vec![
            ScoreRow {
                sample_id: 0,
                label: Label::Normal,
                detector: "vae".into(),
                score_name: "noise_attention".into(),
                score: 0.1 + 0.2,
                noise_floor_in: Some(1.0 / 3.0),
                noise_floor_out: Some(2.5e-7),
            },
            ScoreRow {
                sample_id: 1,
                label: Label::Abnormal,
                detector: "lof".into(),
                score_name: "lof".into(),
                score: 1.234_567_890_123_456_7,
                noise_floor_in: None,
                noise_floor_out: None,
            },
        ];
        write_scores(&path, &rows).unwrap();
        assert_eq!(read_scores(&path).unwrap(), rows);
    }

    #[test]
    fn roc_and_loss_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let roc = RocCurve {
            points: vec![
                RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 },
                RocPoint { threshold: 0.3, fpr: 1.0 / 3.0, tpr: 1.0 },
                RocPoint { threshold: 0.1, fpr: 1.0, tpr: 1.0 },
            ],
            auc: 1.0,
        };
        let path = dir.path().join("roc.csv");
        write_roc(&path, &roc).unwrap();
        assert_eq!(read_roc(&path).unwrap(), roc.points);

        let history = vec![EpochLoss { epoch: 1, total: 3.5, kl: 0.25, recon: 3.25 }];
        let path = dir.path().join("loss.csv");
        write_loss_history(&path, &history).unwrap();
        assert_eq!(read_loss_history(&path).unwrap(), history);
    }

    #[test]
    fn wrong_header_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b,c\n1,2,3\n").unwrap();
        assert!(matches!(read_roc(&path), Err(Error::Format(_))));
        assert!(matches!(read_scores(&path), Err(Error::Format(_))));
    }
}
