//! Synthetic IQ scenes for an unlicensed band.
//!
//! A normal scene is complex white noise plus a random number of band-limited
//! noise bursts placed at random times and frequencies. Anomalies are linear
//! chirps added on top of a normal scene.
//!
//! Power levels are expressed as spectral-density ratios against the white
//! noise: a burst at `snr_db` has that ratio inside its own bandwidth, and a
//! chirp at `snr_db` has it inside one spectrogram frequency pixel
//! ([`PIXEL_BINS`] DFT bins).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, Rng};

/// Receiver sample rate in Hz.
pub const SAMPLE_RATE: f64 = 50e6;
/// STFT block length.
pub const FFT_LEN: usize = 1024;
/// STFT blocks per frame.
pub const STFT_FRAMES: usize = 256;
/// Samples per frame: 256 non-overlapping STFT blocks.
pub const FRAME_LEN: usize = FFT_LEN * STFT_FRAMES;
/// DFT bins merged into one spectrogram frequency pixel.
pub const PIXEL_BINS: usize = 4;
/// Half-width of the imaged band (central 256 of 1024 bins).
pub const IMAGED_HALF_BAND: f64 = SAMPLE_RATE * 128.0 / FFT_LEN as f64;

const BURST_TAPS: usize = 513;

/// Duration of a full frame in seconds.
pub fn frame_duration() -> f64 {
    FRAME_LEN as f64 / SAMPLE_RATE
}

/// A finite run of complex baseband samples at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct IqFrame {
    samples: Vec<Complex64>,
    sample_rate: f64,
}

impl IqFrame {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("IQ frame must contain at least one sample"));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::invalid(format!("sample rate must be positive, got {sample_rate}")));
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(IqFrame {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(n: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); n], sample_rate)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Mean of `|s|^2` over the frame.
    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    fn check_compatible(&self, other: &IqFrame) -> Result<()> {
        if self.len() != other.len() || self.sample_rate != other.sample_rate {
            return Err(Error::invalid(format!(
                "frame mismatch: {} samples @ {} Hz vs {} samples @ {} Hz",
                self.len(),
                self.sample_rate,
                other.len(),
                other.sample_rate
            )));
        }
        Ok(())
    }

    /// Element-wise sum.
    pub fn add(&self, other: &IqFrame) -> Result<IqFrame> {
        self.check_compatible(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        IqFrame::new(samples, self.sample_rate)
    }

    /// Element-wise difference.
    pub fn sub(&self, other: &IqFrame) -> Result<IqFrame> {
        self.check_compatible(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a - b)
            .collect();
        IqFrame::new(samples, self.sample_rate)
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: PartialOrd + Copy + std::fmt::Display> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Interval { lo, hi }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.lo <= self.hi {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{name}: empty interval [{}, {}]",
                self.lo, self.hi
            )))
        }
    }
}

impl Interval<f64> {
    fn sample(&self, rng: &mut Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

/// Parameters of a random normal scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub burst_count_range: Interval<u32>,
    /// Burst center frequencies, Hz.
    pub burst_center_range: Interval<f64>,
    pub burst_bandwidth_range: Interval<f64>,
    pub burst_duration_range: Interval<f64>,
    pub burst_snr_range: Interval<f64>,
    /// Per-component standard deviation of the background noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            burst_count_range: Interval::new(2, 5),
            burst_center_range: Interval::new(-5.0e6, 5.0e6),
            burst_bandwidth_range: Interval::new(0.5e6, 3.0e6),
            burst_duration_range: Interval::new(0.2e-3, 2.0e-3),
            burst_snr_range: Interval::new(10.0, 25.0),
            noise_sigma: 1.0,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        self.burst_count_range.validate("burst_count_range")?;
        self.burst_center_range.validate("burst_center_range")?;
        self.burst_bandwidth_range.validate("burst_bandwidth_range")?;
        self.burst_duration_range.validate("burst_duration_range")?;
        self.burst_snr_range.validate("burst_snr_range")?;
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "noise_sigma must be positive, got {}",
                self.noise_sigma
            )));
        }
        if self.burst_bandwidth_range.lo <= 0.0 {
            return Err(Error::invalid("burst bandwidth must be positive"));
        }
        let widest = self.burst_center_range.lo.abs().max(self.burst_center_range.hi.abs())
            + self.burst_bandwidth_range.hi / 2.0;
        if widest > SAMPLE_RATE / 2.0 {
            return Err(Error::invalid(format!(
                "bursts may extend to {widest} Hz, beyond the Nyquist limit"
            )));
        }
        if self.burst_duration_range.lo < 0.0 || self.burst_duration_range.hi > frame_duration() {
            return Err(Error::invalid("burst durations must lie within the frame"));
        }
        Ok(())
    }
}

/// One band-limited noise burst.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstParams {
    pub f_center: f64,
    pub bandwidth: f64,
    pub t_start: f64,
    pub duration: f64,
    /// Average power inside the gate (linear).
    pub power: f64,
}

/// A linear chirp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpParams {
    pub f_start: f64,
    pub f_end: f64,
    pub t_start: f64,
    pub duration: f64,
    pub amplitude: f64,
}

impl ChirpParams {
    pub fn validate(&self, sample_rate: f64, n: usize) -> Result<()> {
        let nyquist = sample_rate / 2.0;
        let frame = n as f64 / sample_rate;
        let values = [self.f_start, self.f_end, self.t_start, self.duration, self.amplitude];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("chirp parameters must be finite"));
        }
        if self.f_start.abs() > nyquist || self.f_end.abs() > nyquist {
            return Err(Error::invalid(format!(
                "chirp sweep {}..{} Hz exceeds +/-{nyquist} Hz",
                self.f_start, self.f_end
            )));
        }
        if self.t_start < 0.0 || self.duration < 0.0 || !within_frame(self.t_start + self.duration, frame) {
            return Err(Error::invalid(format!(
                "chirp window [{}, {}] s outside frame of {frame} s",
                self.t_start,
                self.t_start + self.duration
            )));
        }
        if self.amplitude < 0.0 {
            return Err(Error::invalid("chirp amplitude must be non-negative"));
        }
        Ok(())
    }
}

/// Ranges for drawing random test-set chirps.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpRanges {
    /// Swept bandwidth |f_end - f_start|, Hz.
    pub sweep: Interval<f64>,
    /// Duration as a fraction of the frame.
    pub duration_frac: Interval<f64>,
    /// Level above the noise floor per spectrogram frequency pixel, dB.
    pub snr_db: Interval<f64>,
}

impl Default for ChirpRanges {
    fn default() -> Self {
        ChirpRanges {
            sweep: Interval::new(1e6, 10e6),
            duration_frac: Interval::new(0.2, 0.8),
            snr_db: Interval::new(5.0, 15.0),
        }
    }
}

impl ChirpRanges {
    pub fn validate(&self) -> Result<()> {
        self.sweep.validate("chirp sweep")?;
        self.duration_frac.validate("chirp duration fraction")?;
        self.snr_db.validate("chirp snr")?;
        if self.sweep.lo < 0.0 || self.sweep.hi > 2.0 * IMAGED_HALF_BAND {
            return Err(Error::invalid("chirp sweep must fit inside the imaged band"));
        }
        if self.duration_frac.lo < 0.0 || self.duration_frac.hi > 1.0 {
            return Err(Error::invalid("chirp duration fraction must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Draw a chirp that stays inside the imaged band, sweeping up or down.
    pub fn sample(&self, noise_sigma: f64, rng: &mut Rng) -> ChirpParams {
        let sweep = self.sweep.sample(rng);
        let low = rng.random_range(-IMAGED_HALF_BAND..=(IMAGED_HALF_BAND - sweep));
        let (f_start, f_end) = if rng.random_bool(0.5) {
            (low, low + sweep)
        } else {
            (low + sweep, low)
        };
        let frame = frame_duration();
        let duration = self.duration_frac.sample(rng) * frame;
        let t_start = rng.random_range(0.0..=(frame - duration));
        let snr_db = self.snr_db.sample(rng);
        ChirpParams {
            f_start,
            f_end,
            t_start,
            duration,
            amplitude: chirp_amplitude_for_snr(noise_sigma, snr_db, chirp_pixel_spread(sweep, duration)),
        }
    }
}

/// Number of frequency pixels a chirp crosses during one spectrogram time
/// pixel (at least one).
pub fn chirp_pixel_spread(sweep: f64, duration: f64) -> f64 {
    if duration <= 0.0 {
        return 1.0;
    }
    let pixel_time = (PIXEL_BINS * FFT_LEN) as f64 / SAMPLE_RATE;
    let pixel_band = PIXEL_BINS as f64 * SAMPLE_RATE / FFT_LEN as f64;
    (sweep.abs() / duration * pixel_time / pixel_band).max(1.0)
}

/// Chirp amplitude whose power, shared among the `spread` frequency pixels
/// it crosses per time pixel, sits `snr_db` above the noise power collected
/// by each of those pixels.
pub fn chirp_amplitude_for_snr(noise_sigma: f64, snr_db: f64, spread: f64) -> f64 {
    let pixel_noise = 2.0 * noise_sigma * noise_sigma * PIXEL_BINS as f64 / FFT_LEN as f64;
    (pixel_noise * spread * 10f64.powf(snr_db / 10.0)).sqrt()
}

/// Burst power whose in-band density sits `snr_db` above the noise density.
pub fn burst_power_for_snr(noise_sigma: f64, bandwidth: f64, snr_db: f64) -> f64 {
    2.0 * noise_sigma * noise_sigma * (bandwidth / SAMPLE_RATE) * 10f64.powf(snr_db / 10.0)
}

fn within_frame(t_end: f64, frame: f64) -> bool {
    t_end <= frame * (1.0 + 1e-12)
}

/// Sample index range covered by `[t_start, t_start + duration]`.
fn gate(t_start: f64, duration: f64, sample_rate: f64, n: usize) -> (usize, usize) {
    let start = ((t_start * sample_rate).round() as usize).min(n);
    let len = ((duration * sample_rate).round() as usize).min(n - start);
    (start, len)
}

fn white_noise(n: usize, sigma: f64, rng: &mut Rng) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect()
}

/// Complex white Gaussian noise with per-component standard deviation `sigma`.
pub fn gen_noise(n: usize, sigma: f64, seed: u64) -> Result<IqFrame> {
    gen_noise_at(n, sigma, seed, SAMPLE_RATE)
}

pub fn gen_noise_at(n: usize, sigma: f64, seed: u64, sample_rate: f64) -> Result<IqFrame> {
    if n == 0 {
        return Err(Error::invalid("noise length must be positive"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("noise sigma must be positive, got {sigma}")));
    }
    let mut rng = seeded(seed);
    IqFrame::new(white_noise(n, sigma, &mut rng), sample_rate)
}

/// Hamming-windowed sinc low-pass with cutoff `cutoff` Hz.
fn lowpass_taps(cutoff: f64, sample_rate: f64, taps: usize) -> Vec<f64> {
    let norm = 2.0 * cutoff / sample_rate;
    let mid = (taps - 1) as f64 / 2.0;
    (0..taps)
        .map(|m| {
            let x = m as f64 - mid;
            let sinc = if x == 0.0 {
                1.0
            } else {
                (PI * norm * x).sin() / (PI * norm * x)
            };
            let window = 0.54 - 0.46 * (2.0 * PI * m as f64 / (taps - 1) as f64).cos();
            norm * sinc * window
        })
        .collect()
}

/// Linear convolution of `signal` with `taps`, keeping only the fully
/// overlapped ("valid") outputs.
fn fft_filter_valid(signal: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let valid = signal.len() + 1 - taps.len();
    let size = signal.len().next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let mut a = signal.to_vec();
    a.resize(size, Complex64::new(0.0, 0.0));
    let mut b: Vec<Complex64> = taps.iter().map(|&t| Complex64::new(t, 0.0)).collect();
    b.resize(size, Complex64::new(0.0, 0.0));
    forward.process(&mut a);
    forward.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inverse.process(&mut a);
    let scale = 1.0 / size as f64;
    a[taps.len() - 1..taps.len() - 1 + valid]
        .iter()
        .map(|v| v * scale)
        .collect()
}

/// Band-limited noise burst in a full-length frame at [`SAMPLE_RATE`].
pub fn gen_burst(p: &BurstParams, seed: u64) -> Result<IqFrame> {
    gen_burst_in(p, seed, SAMPLE_RATE, FRAME_LEN)
}

/// Band-limited noise burst: white noise through a windowed-sinc low-pass of
/// the requested bandwidth, shifted to `f_center`, gated in time and scaled to
/// the requested mean in-gate power.
pub fn gen_burst_in(p: &BurstParams, seed: u64, sample_rate: f64, n: usize) -> Result<IqFrame> {
    let nyquist = sample_rate / 2.0;
    if !(p.bandwidth > 0.0) || p.f_center.abs() + p.bandwidth / 2.0 > nyquist {
        return Err(Error::invalid(format!(
            "burst band {} +/- {} Hz outside +/-{nyquist} Hz",
            p.f_center,
            p.bandwidth / 2.0
        )));
    }
    let frame = n as f64 / sample_rate;
    if !(p.t_start >= 0.0 && p.duration >= 0.0) || !within_frame(p.t_start + p.duration, frame) {
        return Err(Error::invalid(format!(
            "burst window [{}, {}] s outside frame of {frame} s",
            p.t_start,
            p.t_start + p.duration
        )));
    }
    if !(p.power >= 0.0 && p.power.is_finite()) {
        return Err(Error::invalid("burst power must be non-negative"));
    }

    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let (start, len) = gate(p.t_start, p.duration, sample_rate, n);
    if len == 0 || p.power == 0.0 {
        return IqFrame::new(out, sample_rate);
    }

    let mut rng = seeded(seed);
    let raw = white_noise(len + BURST_TAPS - 1, 1.0, &mut rng);
    let taps = lowpass_taps(p.bandwidth / 2.0, sample_rate, BURST_TAPS);
    let filtered = fft_filter_valid(&raw, &taps);

    let step = 2.0 * PI * p.f_center / sample_rate;
    let mut energy = 0.0;
    for (i, v) in filtered.iter().enumerate() {
        let idx = start + i;
        let shifted = v * Complex64::from_polar(1.0, step * idx as f64);
        energy += shifted.norm_sqr();
        out[idx] = shifted;
    }
    let scale = (p.power * len as f64 / energy).sqrt();
    for v in &mut out[start..start + len] {
        *v *= scale;
    }
    IqFrame::new(out, sample_rate)
}

/// Draw the bursts of a normal scene.
pub fn draw_bursts(config: &SceneConfig, rng: &mut Rng) -> Vec<BurstParams> {
    let count = rng.random_range(config.burst_count_range.lo..=config.burst_count_range.hi);
    let frame = frame_duration();
    (0..count)
        .map(|_| {
            let bandwidth = config.burst_bandwidth_range.sample(rng);
            let f_center = config.burst_center_range.sample(rng);
            let duration = config.burst_duration_range.sample(rng);
            let t_start = rng.random_range(0.0..=(frame - duration));
            let snr = config.burst_snr_range.sample(rng);
            BurstParams {
                f_center,
                bandwidth,
                t_start,
                duration,
                power: burst_power_for_snr(config.noise_sigma, bandwidth, snr),
            }
        })
        .collect()
}

/// A normal scene: background noise plus random bursts, determined by the
/// config (including its seed).
pub fn gen_normal_scene(config: &SceneConfig) -> Result<IqFrame> {
    config.validate()?;
    let mut rng = seeded(derive_seed(config.seed, 0));
    let bursts = draw_bursts(config, &mut rng);
    let mut samples = gen_noise(FRAME_LEN, config.noise_sigma, derive_seed(config.seed, 1))?.into_samples();
    for (i, burst) in bursts.iter().enumerate() {
        let frame = gen_burst(burst, derive_seed(config.seed, 2 + i as u64))?;
        for (acc, v) in samples.iter_mut().zip(frame.samples()) {
            *acc += v;
        }
    }
    IqFrame::new(samples, SAMPLE_RATE)
}

/// Complex linear chirp, zero outside its gate.
pub fn gen_chirp(p: &ChirpParams, sample_rate: f64, n: usize) -> Result<IqFrame> {
    if n == 0 {
        return Err(Error::invalid("chirp length must be positive"));
    }
    p.validate(sample_rate, n)?;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let (start, len) = gate(p.t_start, p.duration, sample_rate, n);
    let rate = if p.duration > 0.0 {
        (p.f_end - p.f_start) / p.duration
    } else {
        0.0
    };
    for (i, v) in out[start..start + len].iter_mut().enumerate() {
        let t = i as f64 / sample_rate;
        let phase = 2.0 * PI * (p.f_start * t + 0.5 * rate * t * t);
        *v = Complex64::from_polar(p.amplitude, phase);
    }
    IqFrame::new(out, sample_rate)
}

/// Add a chirp to an existing frame.
pub fn inject_anomaly(frame: &IqFrame, p: &ChirpParams) -> Result<IqFrame> {
    let chirp = gen_chirp(p, frame.sample_rate(), frame.len())?;
    frame.add(&chirp)
}
