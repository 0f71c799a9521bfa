#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use spectrum_anomaly::rng::seeded;
use spectrum_anomaly::vae::{backward_with_noise, LayerPlan, MlpVae};

/// Worst relative disagreement between analytic gradients and central
/// differences over every parameter, with `|a - n| / max(|a|, |n|, floor)`.
pub struct GradCheck {
    pub max_rel: f64,
    pub params: usize,
    /// (layer, index, analytic, numeric) at the worst parameter.
    pub worst: (usize, usize, f64, f64),
}

pub fn gradient_check(plan: &LayerPlan, seed: u64, batch: usize, h: f64, floor: f64) -> GradCheck {
    let mut model = MlpVae::init(plan, seed).unwrap();
    let mut rng = seeded(seed ^ 0x5eed);
    // Nudge biases off zero so every unit is exercised away from its kink.
    for layer in model.layers_mut() {
        for b in layer.bias.iter_mut() {
            *b = rng.random_range(-0.1..0.1);
        }
    }
    let x = Array2::from_shape_fn((batch, plan.input_dim), |_| rng.random_range(0.001..1.0));
    let eps = Array2::from_shape_fn((batch, plan.latent_dim), |_| StandardNormal.sample(&mut rng));
    let (grads, _) = backward_with_noise(&model, &x, &eps).unwrap();

    let loss = |m: &MlpVae| backward_with_noise(m, &x, &eps).unwrap().1.total;
    let mut max_rel: f64 = 0.0;
    let mut params = 0;
    let mut worst = (0, 0, 0.0, 0.0);
    let layer_count = model.layers().len();
    for li in 0..layer_count {
        let (rows, cols) = model.layers()[li].weights.dim();
        for idx in 0..rows * cols + cols {
            let analytic = if idx < rows * cols {
                grads[li].weights[[idx / cols, idx % cols]]
            } else {
                grads[li].bias[idx - rows * cols]
            };
            let probe = |delta: f64, m: &mut MlpVae| {
                let layer = &mut m.layers_mut()[li];
                if idx < rows * cols {
                    layer.weights[[idx / cols, idx % cols]] += delta;
                } else {
                    layer.bias[idx - rows * cols] += delta;
                }
            };
            probe(h, &mut model);
            let up = loss(&model);
            probe(-2.0 * h, &mut model);
            let down = loss(&model);
            probe(h, &mut model);
            let numeric = (up - down) / (2.0 * h);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor);
            if rel > max_rel {
                max_rel = rel;
                worst = (li, idx, analytic, numeric);
            }
            params += 1;
        }
    }
    GradCheck { max_rel, params, worst }
}

/// Independent LOF: distances recomputed on demand, neighbors by full sort.
pub fn reference_lof(train: &[Vec<f64>], test: &[Vec<f64>], k: usize) -> Vec<f64> {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    // Neighbors of a training point exclude the point itself (by index).
    let train_neighbors = |i: usize| -> (f64, Vec<usize>) {
        let mut d: Vec<(f64, usize)> = (0..train.len())
            .filter(|&j| j != i)
            .map(|j| (dist(&train[i], &train[j]), j))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let kd = d[k - 1].0;
        let mut hood: Vec<usize> = d.iter().filter(|e| e.0 <= kd).map(|e| e.1).collect();
        hood.sort();
        (kd, hood)
    };
    let kdist: Vec<f64> = (0..train.len()).map(|i| train_neighbors(i).0).collect();
    let lrd_of = |point: &[f64], hood: &[usize]| -> f64 {
        let mut sum = 0.0;
        for &o in hood {
            sum += kdist[o].max(dist(point, &train[o]));
        }
        1.0 / (sum / hood.len() as f64).max(1e-12)
    };
    let train_lrd: Vec<f64> = (0..train.len())
        .map(|i| lrd_of(&train[i], &train_neighbors(i).1))
        .collect();
    test.iter()
        .map(|p| {
            let mut d: Vec<(f64, usize)> = (0..train.len()).map(|j| (dist(p, &train[j]), j)).collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let kd = d[k - 1].0;
            let mut hood: Vec<usize> = d.iter().filter(|e| e.0 <= kd).map(|e| e.1).collect();
            hood.sort();
            let lrd = lrd_of(p, &hood);
            let mut sum = 0.0;
            for &o in &hood {
                sum += train_lrd[o];
            }
            sum / hood.len() as f64 / lrd
        })
        .collect()
}
