//! ROC curves and AUC. Higher scores mean "more abnormal".

use crate::dataset::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Samples with `score >= threshold` are flagged abnormal.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

fn class_counts(scores: &[f64], labels: &[Label]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let mut pos = 0;
    let mut neg = 0;
    for l in labels {
        match l {
            Label::Abnormal => pos += 1,
            Label::Normal => neg += 1,
            Label::Unlabeled => return Err(Error::invalid("ROC needs labeled samples")),
        }
    }
    if pos == 0 || neg == 0 {
        return Err(Error::invalid(format!(
            "ROC needs both classes ({pos} abnormal, {neg} normal)"
        )));
    }
    Ok((pos, neg))
}

/// Area under a piecewise-linear curve through `points`.
pub fn trapezoid(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

/// Sweep a threshold over every distinct score. Tied scores move together,
/// producing a diagonal segment.
pub fn roc_curve(scores: &[f64], labels: &[Label]) -> Result<RocCurve> {
    let (pos, neg) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            match labels[order[i]] {
                Label::Abnormal => tp += 1,
                _ => fp += 1,
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    let auc = trapezoid(&points);
    Ok(RocCurve { points, auc })
}

/// Probability that a random abnormal sample outscores a random normal one,
/// ties counted as one half, by direct pair counting.
pub fn auc_mann_whitney(scores: &[f64], labels: &[Label]) -> Result<f64> {
    let (pos, neg) = class_counts(scores, labels)?;
    let abnormal: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == Label::Abnormal)
        .map(|(&s, _)| s)
        .collect();
    let normal: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == Label::Normal)
        .map(|(&s, _)| s)
        .collect();
    let mut wins = 0u64;
    let mut ties = 0u64;
    for &a in &abnormal {
        for &n in &normal {
            if a > n {
                wins += 1;
            } else if a == n {
                ties += 1;
            }
        }
    }
    Ok((wins as f64 + 0.5 * ties as f64) / (pos as f64 * neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Abnormal as A, Normal as N};

    #[test]
    fn worked_example() {
        let scores = [0.1, 0.4, 0.35, 0.8];
        let labels = [N, N, A, A];
        let roc = roc_curve(&scores, &labels).unwrap();
        assert!((roc.auc - 0.75).abs() < 1e-15);
        assert!((auc_mann_whitney(&scores, &labels).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn separation_extremes() {
        let labels = [N, N, A, A];
        assert_eq!(roc_curve(&[1.0, 2.0, 3.0, 4.0], &labels).unwrap().auc, 1.0);
        assert_eq!(auc_mann_whitney(&[1.0, 2.0, 3.0, 4.0], &labels).unwrap(), 1.0);
        assert_eq!(roc_curve(&[4.0, 3.0, 2.0, 1.0], &labels).unwrap().auc, 0.0);
        assert_eq!(auc_mann_whitney(&[4.0, 3.0, 2.0, 1.0], &labels).unwrap(), 0.0);
    }

    #[test]
    fn all_ties_is_chance() {
        let roc = roc_curve(&[0.5; 6], &[N, A, N, A, A, N]).unwrap();
        assert_eq!(roc.auc, 0.5);
        assert_eq!(roc.points.len(), 2);
    }

    #[test]
    fn endpoints_and_monotonicity() {
        let scores = [0.3, 0.1, 0.3, 0.9, 0.5, 0.5, 0.2];
        let labels = [N, N, A, A, N, A, N];
        let roc = roc_curve(&scores, &labels).unwrap();
        let first = roc.points[0];
        let last = *roc.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in roc.points.windows(2) {
            assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            assert!(w[1].threshold < w[0].threshold);
        }
        assert_eq!(roc.auc, trapezoid(&roc.points));
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(matches!(roc_curve(&[0.1, 0.2], &[N, N]), Err(Error::InvalidArgument(_))));
        assert!(auc_mann_whitney(&[0.1, 0.2], &[A, A]).is_err());
        assert!(roc_curve(&[0.1], &[N, A]).is_err());
        assert!(roc_curve(&[f64::NAN, 0.2], &[N, A]).is_err());
        assert!(roc_curve(&[0.1, 0.2], &[N, Label::Unlabeled]).is_err());
    }
}
