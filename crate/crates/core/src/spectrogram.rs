//! IQ frame to 64x64 spectrogram image.
//!
//! Pipeline: 256 non-overlapping rectangular-window 1024-point DFT
//! magnitudes, rows reordered from -fs/2 to +fs/2, central 256 rows cropped,
//! 4x4 average pooling, then decibels mapped affinely onto `[epsilon, 1]`
//! using percentiles fit on the training split.

use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::{IqFrame, FFT_LEN, FRAME_LEN, PIXEL_BINS, SAMPLE_RATE, STFT_FRAMES};

pub const SPEC_SIZE: usize = 64;
pub const SPEC_PIXELS: usize = SPEC_SIZE * SPEC_SIZE;
pub const DEFAULT_EPSILON: f64 = 1e-3;

const CROP_ROWS: usize = SPEC_SIZE * PIXEL_BINS;
const POOL: usize = PIXEL_BINS;
const DB_GUARD: f64 = 1e-12;
const LOW_PERCENTILE: f64 = 1.0;
const HIGH_PERCENTILE: f64 = 99.0;

/// A normalized 64x64 spectrogram. Row index is frequency (low to high),
/// column index is time. Pixels are stored row-major as `f32` so that the
/// on-disk representation is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pixels: Vec<f32>,
    epsilon: f64,
}

impl Spectrogram {
    pub fn from_pixels(pixels: Vec<f32>, epsilon: f64) -> Result<Self> {
        if pixels.len() != SPEC_PIXELS {
            return Err(Error::invalid(format!(
                "spectrogram needs {SPEC_PIXELS} pixels, got {}",
                pixels.len()
            )));
        }
        check_epsilon(epsilon)?;
        if let Some(i) = pixels
            .iter()
            .position(|&p| !(p as f64 >= epsilon && p <= 1.0))
        {
            return Err(Error::invalid(format!(
                "pixel {i} = {} outside [{epsilon}, 1]",
                pixels[i]
            )));
        }
        Ok(Spectrogram { pixels, epsilon })
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64).collect()
    }

    pub fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_vec((SPEC_SIZE, SPEC_SIZE), self.to_f64()).expect("fixed shape")
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.pixels[row * SPEC_SIZE + col]
    }

    /// Hz per frequency row.
    pub fn freq_resolution(&self) -> f64 {
        SAMPLE_RATE / FFT_LEN as f64 * POOL as f64
    }

    /// Seconds per time column.
    pub fn time_resolution(&self) -> f64 {
        (FFT_LEN * POOL) as f64 / SAMPLE_RATE
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 0.1 {
        Ok(())
    } else {
        Err(Error::invalid(format!("epsilon must lie in (0, 0.1], got {epsilon}")))
    }
}

/// Decibel range mapped onto `[epsilon, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub min_db: f64,
    pub max_db: f64,
}

impl NormStats {
    pub fn new(min_db: f64, max_db: f64) -> Result<Self> {
        let stats = NormStats { min_db, max_db };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_db.is_finite() && self.max_db.is_finite() && self.max_db > self.min_db {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "degenerate normalization range [{}, {}] dB",
                self.min_db, self.max_db
            )))
        }
    }
}

/// Magnitude STFT, 1024 rows (frequency, -fs/2 first) by 256 columns.
pub fn stft_magnitude(frame: &IqFrame) -> Result<Array2<f64>> {
    if frame.len() != FRAME_LEN {
        return Err(Error::invalid(format!(
            "STFT expects {FRAME_LEN} samples, got {}",
            frame.len()
        )));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(FFT_LEN);
    let mut out = Array2::zeros((FFT_LEN, STFT_FRAMES));
    let mut block: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); FFT_LEN];
    for (col, chunk) in frame.samples().chunks_exact(FFT_LEN).enumerate() {
        block.copy_from_slice(chunk);
        fft.process(&mut block);
        for (bin, v) in block.iter().enumerate() {
            out[[shifted_row(bin), col]] = v.norm();
        }
    }
    Ok(out)
}

/// Row of DFT bin `bin` after moving negative frequencies first.
pub fn shifted_row(bin: usize) -> usize {
    (bin + FFT_LEN / 2) % FFT_LEN
}

/// Crop the central 256 frequency rows and 4x4 average-pool to 64x64.
pub fn pool_crop(mag: &Array2<f64>) -> Result<Array2<f64>> {
    if mag.dim() != (FFT_LEN, STFT_FRAMES) {
        return Err(Error::invalid(format!(
            "pool_crop expects {FFT_LEN}x{STFT_FRAMES}, got {:?}",
            mag.dim()
        )));
    }
    let first = (FFT_LEN - CROP_ROWS) / 2;
    let crop = mag.slice(s![first..first + CROP_ROWS, ..]);
    Ok(average_pool(crop, POOL))
}

/// Non-overlapping `k`x`k` mean pooling.
pub fn average_pool(input: ArrayView2<f64>, k: usize) -> Array2<f64> {
    let (rows, cols) = input.dim();
    let area = (k * k) as f64;
    Array2::from_shape_fn((rows / k, cols / k), |(r, c)| {
        input
            .slice(s![r * k..(r + 1) * k, c * k..(c + 1) * k])
            .sum()
            / area
    })
}

pub fn to_decibel(mag: &Array2<f64>) -> Array2<f64> {
    mag.mapv(|m| 20.0 * (m + DB_GUARD).log10())
}

/// Full chain from an IQ frame to the pooled 64x64 decibel image.
pub fn frame_to_db(frame: &IqFrame) -> Result<Array2<f64>> {
    Ok(to_decibel(&pool_crop(&stft_magnitude(frame)?)?))
}

fn check_square(m: &Array2<f64>) -> Result<()> {
    if m.dim() != (SPEC_SIZE, SPEC_SIZE) {
        return Err(Error::invalid(format!(
            "expected {SPEC_SIZE}x{SPEC_SIZE}, got {:?}",
            m.dim()
        )));
    }
    Ok(())
}

/// Normalize a pooled decibel image.
pub fn normalize_db(db: &Array2<f64>, stats: &NormStats, epsilon: f64) -> Result<Spectrogram> {
    check_square(db)?;
    stats.validate()?;
    check_epsilon(epsilon)?;
    let span = stats.max_db - stats.min_db;
    let pixels = db
        .iter()
        .map(|&d| {
            let v = epsilon + (d - stats.min_db) / span * (1.0 - epsilon);
            v.clamp(epsilon, 1.0) as f32
        })
        .collect();
    Spectrogram::from_pixels(pixels, epsilon)
}

/// Convert pooled magnitudes to decibels and normalize.
pub fn to_decibel_normalize(mag64: &Array2<f64>, stats: &NormStats, epsilon: f64) -> Result<Spectrogram> {
    check_square(mag64)?;
    normalize_db(&to_decibel(mag64), stats, epsilon)
}

/// Percentile of sorted data with linear interpolation between ranks.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// 1st and 99th percentile of every pixel of the training decibel images.
pub fn fit_norm_stats(train_db: &[Array2<f64>]) -> Result<NormStats> {
    if train_db.is_empty() {
        return Err(Error::invalid("cannot fit normalization on an empty collection"));
    }
    let mut all = Vec::with_capacity(train_db.len() * SPEC_PIXELS);
    for m in train_db {
        check_square(m)?;
        all.extend(m.iter().copied());
    }
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite decibel value in training data"));
    }
    all.sort_by(f64::total_cmp);
    NormStats::new(
        percentile_sorted(&all, LOW_PERCENTILE),
        percentile_sorted(&all, HIGH_PERCENTILE),
    )
}
