//! Exact local outlier factor for novelty scoring.
//!
//! Test points are scored against a fixed training population. Neighborhoods
//! follow the original definition: every point within the k-distance, so ties
//! can make a neighborhood larger than k. Neighbor sums run in ascending
//! training-index order.

use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::spectrogram::{average_pool, Spectrogram, SPEC_SIZE};

/// Floor on mean reachability distance, so duplicated points keep a finite
/// density.
pub const REACH_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    RawPixels,
    /// 4x4 average pooling down to 16x16.
    Pooled16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LofConfig {
    pub k: usize,
    pub feature_mode: FeatureMode,
}

impl Default for LofConfig {
    fn default() -> Self {
        LofConfig {
            k: 20,
            feature_mode: FeatureMode::Pooled16,
        }
    }
}

pub fn features(spec: &Spectrogram, mode: FeatureMode) -> Vec<f64> {
    match mode {
        FeatureMode::RawPixels => spec.to_f64(),
        FeatureMode::Pooled16 => {
            let img = spec.to_array();
            average_pool(img.slice(s![.., ..]), SPEC_SIZE / 16)
                .into_raw_vec_and_offset()
                .0
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn kth_smallest(dists: &[f64], k: usize) -> f64 {
    let mut scratch = dists.to_vec();
    let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// Training population with precomputed k-distances and densities.
#[derive(Debug, Clone)]
pub struct LofModel {
    train: Vec<Vec<f64>>,
    k: usize,
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
}

impl LofModel {
    pub fn fit(train: &[Vec<f64>], k: usize) -> Result<Self> {
        let n = train.len();
        if k == 0 || k >= n {
            return Err(Error::invalid(format!("LOF needs 1 <= k < {n}, got k = {k}")));
        }
        let dim = train[0].len();
        if train.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("training points have inconsistent dimensions"));
        }

        let mut dist = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclidean(&train[i], &train[j]);
                dist[[i, j]] = d;
                dist[[j, i]] = d;
            }
        }

        let others = |i: usize| -> Vec<f64> {
            (0..n).filter(|&j| j != i).map(|j| dist[[i, j]]).collect()
        };
        let k_distance: Vec<f64> = (0..n).map(|i| kth_smallest(&others(i), k)).collect();
        let lrd = (0..n)
            .map(|i| {
                let neighbors = (0..n).filter(|&j| j != i && dist[[i, j]] <= k_distance[i]);
                density(neighbors.map(|j| (j, dist[[i, j]])), &k_distance)
            })
            .collect();
        Ok(LofModel {
            train: train.to_vec(),
            k,
            k_distance,
            lrd,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn train_lrd(&self) -> &[f64] {
        &self.lrd
    }

    pub fn score(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.train[0].len() {
            return Err(Error::invalid(format!(
                "point has {} features, training data has {}",
                point.len(),
                self.train[0].len()
            )));
        }
        let dists: Vec<f64> = self.train.iter().map(|t| euclidean(point, t)).collect();
        let k_dist = kth_smallest(&dists, self.k);
        let neighbors: Vec<usize> = (0..dists.len()).filter(|&j| dists[j] <= k_dist).collect();
        let own = density(neighbors.iter().map(|&j| (j, dists[j])), &self.k_distance);
        let neighbor_sum: f64 = neighbors.iter().map(|&j| self.lrd[j]).sum();
        Ok(neighbor_sum / neighbors.len() as f64 / own)
    }
}

/// Local reachability density from `(neighbor, distance)` pairs.
fn density(neighbors: impl Iterator<Item = (usize, f64)>, k_distance: &[f64]) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for (j, d) in neighbors {
        sum += k_distance[j].max(d);
        count += 1;
    }
    1.0 / (sum / count as f64).max(REACH_FLOOR)
}

/// LOF of each test point against the training population.
pub fn lof_scores(train_points: &[Vec<f64>], test_points: &[Vec<f64>], k: usize) -> Result<Vec<f64>> {
    let model = LofModel::fit(train_points, k)?;
    test_points.iter().map(|p| model.score(p)).collect()
}

/// Feature extraction plus [`lof_scores`].
pub fn lof_spectrogram_scores(train: &[Spectrogram], test: &[Spectrogram], config: &LofConfig) -> Result<Vec<f64>> {
    let tr: Vec<Vec<f64>> = train.iter().map(|s| features(s, config.feature_mode)).collect();
    let te: Vec<Vec<f64>> = test.iter().map(|s| features(s, config.feature_mode)).collect();
    lof_scores(&tr, &te, config.k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(side: usize) -> Vec<Vec<f64>> {
        (0..side * side)
            .map(|i| vec![(i % side) as f64, (i / side) as f64])
            .collect()
    }

    #[test]
    fn k_bounds() {
        let g = grid(3);
        assert!(LofModel::fit(&g, 0).is_err());
        assert!(LofModel::fit(&g, 9).is_err());
        assert!(LofModel::fit(&g, 8).is_ok());
    }

    #[test]
    fn interior_grid_points_are_inliers() {
        let g = grid(10);
        let interior: Vec<Vec<f64>> = g
            .iter()
            .filter(|p| (2.0..=7.0).contains(&p[0]) && (2.0..=7.0).contains(&p[1]))
            .map(|p| vec![p[0] + 0.5, p[1] + 0.5])
            .collect();
        let scores = lof_scores(&g, &interior, 4).unwrap();
        assert!(scores.iter().all(|s| (0.9..=1.1).contains(s)), "{scores:?}");
    }

    #[test]
    fn displaced_point_is_outlier() {
        let g = grid(10);
        let scores = lof_scores(&g, &[vec![4.5, 4.5 + 100.0]], 5).unwrap();
        assert!(scores[0] > 2.0);
    }

    #[test]
    fn duplicate_point_scores_one() {
        let g = grid(20);
        let scores = lof_scores(&g, &[vec![10.0, 10.0]], 4).unwrap();
        assert!((scores[0] - 1.0).abs() < 1e-6, "{}", scores[0]);
    }

    #[test]
    fn all_duplicates_stay_finite() {
        let same = vec![vec![1.0, 1.0]; 6];
        let scores = lof_scores(&same, &[vec![1.0, 1.0]], 2).unwrap();
        assert!(scores[0].is_finite());
        assert!((scores[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch() {
        let g = grid(4);
        assert!(lof_scores(&g, &[vec![1.0]], 3).is_err());
        let mut bad = g.clone();
        bad[2] = vec![0.0; 3];
        assert!(LofModel::fit(&bad, 3).is_err());
    }

    #[test]
    fn pooled_features_have_256_dims() {
        let spec = Spectrogram::from_pixels(vec![0.25; 4096], 1e-3).unwrap();
        let f = features(&spec, FeatureMode::Pooled16);
        assert_eq!(f.len(), 256);
        assert!(f.iter().all(|&v| v == 0.25));
        assert_eq!(features(&spec, FeatureMode::RawPixels).len(), 4096);
    }
}
