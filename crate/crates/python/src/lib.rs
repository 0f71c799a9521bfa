//! Python bindings for the spectrogram anomaly detector.

use std::path::PathBuf;

use ndarray::Array2;
use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use spectrum_anomaly::baselines::lof_scores as lof_scores_impl;
use spectrum_anomaly::dataset::Label;
use spectrum_anomaly::signal::{gen_chirp, gen_normal_scene, ChirpParams, SceneConfig, FRAME_LEN, SAMPLE_RATE};
use spectrum_anomaly::spectrogram::{frame_to_db, normalize_db, NormStats};
use spectrum_anomaly::{persistence, scoring, Error, IqFrame};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyIOError::new_err(err.to_string()),
        Error::NumericFailure(_) => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn parse_labels(labels: &[String]) -> PyResult<Vec<Label>> {
    labels
        .iter()
        .map(|l| Label::parse(l).ok_or_else(|| PyValueError::new_err(format!("unknown label `{l}`"))))
        .collect()
}

/// A trained or freshly initialized variational autoencoder.
#[pyclass(name = "Vae", module = "spectrum_anomaly_py")]
struct PyVae {
    inner: spectrum_anomaly::MlpVae,
}

#[pymethods]
impl PyVae {
    #[new]
    #[pyo3(signature = (input_dim=4096, hidden=vec![1024, 256, 64], latent_dim=8, seed=0))]
    fn new(input_dim: usize, hidden: Vec<usize>, latent_dim: usize, seed: u64) -> PyResult<Self> {
        let plan = spectrum_anomaly::LayerPlan {
            input_dim,
            hidden,
            latent_dim,
        };
        let inner = spectrum_anomaly::MlpVae::init(&plan, seed).map_err(to_py)?;
        Ok(PyVae { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = persistence::load_model(&path).map_err(to_py)?;
        Ok(PyVae { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        persistence::save_model(&path, &self.inner).map_err(to_py)
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    #[getter]
    fn latent_dim(&self) -> usize {
        self.inner.latent_dim()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    /// Posterior mean and deviation of one input.
    fn encode(&self, x: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        self.inner.encode(&x).map_err(to_py)
    }

    fn decode(&self, z: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.decode(&z).map_err(to_py)
    }

    /// Decode the posterior mean of `x`.
    fn reconstruct(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let (mu, _) = self.inner.encode(&x).map_err(to_py)?;
        self.inner.decode(&mu).map_err(to_py)
    }

    /// Train on the given rows with the standard settings.
    #[staticmethod]
    #[pyo3(signature = (data, hidden=vec![1024, 256, 64], latent_dim=8, epochs=20, batch_size=32, seed=0))]
    fn train(
        py: Python<'_>,
        data: Vec<Vec<f64>>,
        hidden: Vec<usize>,
        latent_dim: usize,
        epochs: usize,
        batch_size: usize,
        seed: u64,
    ) -> PyResult<(Self, Vec<f64>)> {
        let cols = data.first().map_or(0, Vec::len);
        if cols == 0 || data.iter().any(|r| r.len() != cols) {
            return Err(PyValueError::new_err("data must be a non-empty list of equal-length rows"));
        }
        let flat: Vec<f64> = data.into_iter().flatten().collect();
        let rows = flat.len() / cols;
        let matrix = Array2::from_shape_vec((rows, cols), flat).expect("length matches shape");
        let plan = spectrum_anomaly::LayerPlan {
            input_dim: cols,
            hidden,
            latent_dim,
        };
        let config = spectrum_anomaly::TrainConfig {
            epochs,
            batch_size,
            seed,
            ..Default::default()
        };
        let (inner, history) = py
            .detach(|| spectrum_anomaly::vae::train(&matrix, &plan, &config))
            .map_err(to_py)?;
        Ok((PyVae { inner }, history.iter().map(|e| e.total).collect()))
    }
}

/// Complex baseband samples of one normal scene (noise plus bursts).
#[pyfunction]
#[pyo3(signature = (seed, noise_sigma=1.0))]
fn normal_scene(seed: u64, noise_sigma: f64) -> PyResult<Vec<Complex64>> {
    let config = SceneConfig {
        seed,
        noise_sigma,
        ..SceneConfig::default()
    };
    Ok(gen_normal_scene(&config).map_err(to_py)?.into_samples())
}

/// Linear chirp from `f_start` to `f_end` Hz over a full-length frame.
#[pyfunction]
fn chirp(f_start: f64, f_end: f64, t_start: f64, duration: f64, amplitude: f64) -> PyResult<Vec<Complex64>> {
    let p = ChirpParams {
        f_start,
        f_end,
        t_start,
        duration,
        amplitude,
    };
    Ok(gen_chirp(&p, SAMPLE_RATE, FRAME_LEN).map_err(to_py)?.into_samples())
}

/// Normalized 64x64 spectrogram (row-major) of a full-length frame.
#[pyfunction]
#[pyo3(signature = (samples, min_db, max_db, epsilon=1e-3))]
fn spectrogram(samples: Vec<Complex64>, min_db: f64, max_db: f64, epsilon: f64) -> PyResult<Vec<f64>> {
    let frame = IqFrame::new(samples, SAMPLE_RATE).map_err(to_py)?;
    let stats = NormStats::new(min_db, max_db).map_err(to_py)?;
    let db = frame_to_db(&frame).map_err(to_py)?;
    Ok(normalize_db(&db, &stats, epsilon).map_err(to_py)?.to_f64())
}

/// Decibel image (64x64, row-major) before normalization.
#[pyfunction]
fn spectrogram_db(samples: Vec<Complex64>) -> PyResult<Vec<f64>> {
    let frame = IqFrame::new(samples, SAMPLE_RATE).map_err(to_py)?;
    Ok(frame_to_db(&frame).map_err(to_py)?.iter().copied().collect())
}

#[pyfunction]
#[pyo3(signature = (x, x_hat, epsilon=1e-3))]
fn noise_attention(x: Vec<f64>, x_hat: Vec<f64>, epsilon: f64) -> PyResult<f64> {
    scoring::noise_attention(&x, &x_hat, epsilon).map_err(to_py)
}

#[pyfunction]
fn reconstruction_error(x: Vec<f64>, x_hat: Vec<f64>) -> PyResult<f64> {
    scoring::reconstruction_error(&x, &x_hat).map_err(to_py)
}

/// ROC points `(threshold, fpr, tpr)` and trapezoidal AUC.
#[pyfunction]
fn roc_curve(scores: Vec<f64>, labels: Vec<String>) -> PyResult<(Vec<(f64, f64, f64)>, f64)> {
    let labels = parse_labels(&labels)?;
    let roc = spectrum_anomaly::roc_curve(&scores, &labels).map_err(to_py)?;
    let points = roc.points.iter().map(|p| (p.threshold, p.fpr, p.tpr)).collect();
    Ok((points, roc.auc))
}

#[pyfunction]
fn auc_mann_whitney(scores: Vec<f64>, labels: Vec<String>) -> PyResult<f64> {
    let labels = parse_labels(&labels)?;
    spectrum_anomaly::auc_mann_whitney(&scores, &labels).map_err(to_py)
}

#[pyfunction]
fn lof_scores(train: Vec<Vec<f64>>, test: Vec<Vec<f64>>, k: usize) -> PyResult<Vec<f64>> {
    lof_scores_impl(&train, &test, k).map_err(to_py)
}

/// Pixels (one row-major list per sample) and labels of a dataset file.
#[pyfunction]
fn load_dataset(path: PathBuf) -> PyResult<(Vec<Vec<f64>>, Vec<String>)> {
    let data = persistence::load_dataset(&path).map_err(to_py)?;
    let pixels = data.samples.iter().map(|s| s.to_f64()).collect();
    let labels = data.labels.iter().map(|l| l.as_str().to_string()).collect();
    Ok((pixels, labels))
}

/// Write train/test datasets and normalization statistics to `out_dir`.
#[pyfunction]
fn synthesize(py: Python<'_>, config_text: &str, out_dir: PathBuf) -> PyResult<()> {
    let config = spectrum_anomaly::RunConfig::parse(config_text).map_err(to_py)?;
    py.detach(|| spectrum_anomaly::commands::cmd_synth(&config, &out_dir, &mut |_| {}))
        .map_err(to_py)?;
    Ok(())
}

/// Run the full experiment from configuration text; returns AUC per
/// `detector/score` key.
#[pyfunction]
#[pyo3(signature = (config_text, out_dir=None))]
fn run_experiment(py: Python<'_>, config_text: &str, out_dir: Option<PathBuf>) -> PyResult<Vec<(String, f64)>> {
    let config = spectrum_anomaly::RunConfig::parse(config_text).map_err(to_py)?;
    let report = py
        .detach(|| match &out_dir {
            Some(dir) => spectrum_anomaly::evaluation::run_experiment_to_dir(&config, dir, &mut |_| {}),
            None => spectrum_anomaly::run_experiment(&config),
        })
        .map_err(to_py)?;
    Ok(report
        .detectors
        .iter()
        .map(|d| (format!("{}/{}", d.detector, d.score_name), d.auc()))
        .collect())
}

#[pymodule]
fn spectrum_anomaly_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVae>()?;
    m.add_function(wrap_pyfunction!(normal_scene, m)?)?;
    m.add_function(wrap_pyfunction!(chirp, m)?)?;
    m.add_function(wrap_pyfunction!(spectrogram, m)?)?;
    m.add_function(wrap_pyfunction!(spectrogram_db, m)?)?;
    m.add_function(wrap_pyfunction!(noise_attention, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruction_error, m)?)?;
    m.add_function(wrap_pyfunction!(roc_curve, m)?)?;
    m.add_function(wrap_pyfunction!(auc_mann_whitney, m)?)?;
    m.add_function(wrap_pyfunction!(lof_scores, m)?)?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("SAMPLE_RATE", SAMPLE_RATE)?;
    m.add("FRAME_LEN", FRAME_LEN)?;
    Ok(())
}
