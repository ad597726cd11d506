//! FMCW chirp synthesis and range processing.
//!
//! A chirp sweeps `bandwidth` Hz in `chirp_duration` seconds starting at
//! `f0`. Mixing the transmit chirp with a delayed echo leaves a tone at the
//! IF frequency `tau * slope`, which [`estimate_range`] maps back to range.
//!
//! Only single-chirp (fast-time) processing is modelled.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::units::SPEED_OF_LIGHT;
use crate::{Error, Result};

/// Ratio between the default sampling rate and the largest expected IF tone.
pub const DEFAULT_OVERSAMPLING: f64 = 4.0;

/// Zero-padding factor applied before the range FFT.
pub const RANGE_FFT_PADDING: usize = 4;

/// Minimum series length accepted by the range estimators.
pub const MIN_RANGE_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChirpConfig {
    f0: f64,
    bandwidth: f64,
    chirp_duration: f64,
    chirps_per_frame: usize,
    sample_rate: f64,
}

impl ChirpConfig {
    pub fn new(
        f0: f64,
        bandwidth: f64,
        chirp_duration: f64,
        chirps_per_frame: usize,
        sample_rate: f64,
    ) -> Result<Self> {
        if !(f0 >= 0.0 && f0.is_finite()) {
            return Err(Error::domain(format!("start frequency must be >= 0, got {f0}")));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::domain(format!("bandwidth must be > 0, got {bandwidth}")));
        }
        if !(chirp_duration > 0.0 && chirp_duration.is_finite()) {
            return Err(Error::domain(format!(
                "chirp duration must be > 0, got {chirp_duration}"
            )));
        }
        if chirps_per_frame == 0 {
            return Err(Error::domain("a frame needs at least one chirp"));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::domain(format!("sample rate must be > 0, got {sample_rate}")));
        }
        Ok(Self {
            f0,
            bandwidth,
            chirp_duration,
            chirps_per_frame,
            sample_rate,
        })
    }

    /// Builds a config whose sampling rate is [`DEFAULT_OVERSAMPLING`] times the
    /// IF frequency of a target at `max_range`.
    pub fn for_max_range(
        f0: f64,
        bandwidth: f64,
        chirp_duration: f64,
        chirps_per_frame: usize,
        max_range: f64,
    ) -> Result<Self> {
        if !(max_range > 0.0 && max_range.is_finite()) {
            return Err(Error::domain(format!("max range must be > 0, got {max_range}")));
        }
        let slope = bandwidth / chirp_duration;
        let fs = DEFAULT_OVERSAMPLING * 2.0 * max_range / SPEED_OF_LIGHT * slope;
        Self::new(f0, bandwidth, chirp_duration, chirps_per_frame, fs)
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn chirp_duration(&self) -> f64 {
        self.chirp_duration
    }

    pub fn chirps_per_frame(&self) -> usize {
        self.chirps_per_frame
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Chirp slope S = B / Tc (Hz/s).
    pub fn slope(&self) -> f64 {
        self.bandwidth / self.chirp_duration
    }

    /// Number of samples that fit in one chirp.
    pub fn samples_per_chirp(&self) -> usize {
        // Tc*fs is often an integer up to rounding noise.
        (self.chirp_duration * self.sample_rate * (1.0 + 1e-12)).floor() as usize
    }

    /// Largest range whose IF tone stays below Nyquist.
    pub fn max_unambiguous_range(&self) -> f64 {
        self.sample_rate / 2.0 * SPEED_OF_LIGHT / (2.0 * self.slope())
    }

    /// Transmit phase `2*pi*f0*t + pi*S*t^2` (rad).
    pub fn tx_phase(&self, t: f64) -> f64 {
        2.0 * PI * self.f0 * t + PI * self.slope() * t * t
    }

    /// Measurement time of one frame (s).
    pub fn frame_time(&self) -> f64 {
        self.chirps_per_frame as f64 * self.chirp_duration
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSampleSeries {
    samples: Vec<Complex64>,
    sample_rate: f64,
    t0: f64,
}

impl ComplexSampleSeries {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, t0: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::shape("sample series must hold at least one sample"));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::domain(format!("sample rate must be > 0, got {sample_rate}")));
        }
        Ok(Self {
            samples,
            sample_rate,
            t0,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.sample_rate
    }

    /// Elementwise sum, used to superpose echoes.
    pub fn superpose(&self, other: &ComplexSampleSeries) -> Result<ComplexSampleSeries> {
        check_compatible(self, other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        ComplexSampleSeries::new(samples, self.sample_rate, self.t0)
    }
}

/// Round-trip delay of a reflector at `range` metres.
pub fn round_trip_delay(range: f64) -> f64 {
    2.0 * range / SPEED_OF_LIGHT
}

fn check_sample_count(cfg: &ChirpConfig, n_samples: usize) -> Result<()> {
    let available = cfg.samples_per_chirp();
    if n_samples > available {
        return Err(Error::DurationOverflow {
            requested: n_samples,
            available,
        });
    }
    if n_samples == 0 {
        return Err(Error::shape("n_samples must be >= 1"));
    }
    Ok(())
}

/// Unit-amplitude transmit chirp sampled at `k / fs`.
pub fn tx_chirp(cfg: &ChirpConfig, n_samples: usize) -> Result<ComplexSampleSeries> {
    check_sample_count(cfg, n_samples)?;
    let fs = cfg.sample_rate();
    let samples = (0..n_samples)
        .map(|k| Complex64::cis(cfg.tx_phase(k as f64 / fs)))
        .collect();
    ComplexSampleSeries::new(samples, fs, 0.0)
}

/// Echo from a point reflector: the transmit chirp delayed by `2 * range / c`.
///
/// The delayed chirp expression is evaluated for every sample, including
/// `t < tau`, so the echo has the same support as the transmit series.
pub fn rx_echo(
    cfg: &ChirpConfig,
    range: f64,
    amplitude: f64,
    n_samples: usize,
) -> Result<ComplexSampleSeries> {
    if !(range >= 0.0 && range.is_finite()) {
        return Err(Error::domain(format!("range must be >= 0, got {range}")));
    }
    check_sample_count(cfg, n_samples)?;
    let fs = cfg.sample_rate();
    let tau = round_trip_delay(range);
    let samples = (0..n_samples)
        .map(|k| amplitude * Complex64::cis(cfg.tx_phase(k as f64 / fs - tau)))
        .collect();
    ComplexSampleSeries::new(samples, fs, 0.0)
}

fn check_compatible(a: &ComplexSampleSeries, b: &ComplexSampleSeries) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(format!(
            "series lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.sample_rate != b.sample_rate {
        return Err(Error::shape(format!(
            "sample rates differ: {} vs {}",
            a.sample_rate, b.sample_rate
        )));
    }
    Ok(())
}

/// Mixes the echo down to IF: `tx[k] * conj(rx[k])`.
///
/// For an echo delayed by `tau` the result is
/// `a * exp(j(w0*tau - pi*S*tau^2 + 2*pi*S*tau*t))`, a tone at `+S*tau`.
/// The bandpass filter is ideal and the constant phase is kept.
pub fn dechirp(tx: &ComplexSampleSeries, rx: &ComplexSampleSeries) -> Result<ComplexSampleSeries> {
    check_compatible(tx, rx)?;
    let samples = tx
        .samples
        .iter()
        .zip(&rx.samples)
        .map(|(t, r)| t * r.conj())
        .collect();
    ComplexSampleSeries::new(samples, tx.sample_rate, tx.t0)
}

/// IF (beat) frequency of a reflector at `range`.
pub fn if_frequency(cfg: &ChirpConfig, range: f64) -> Result<f64> {
    if !(range >= 0.0 && range.is_finite()) {
        return Err(Error::domain(format!("range must be >= 0, got {range}")));
    }
    Ok(round_trip_delay(range) * cfg.slope())
}

/// Range that produces IF frequency `f_if`.
pub fn range_from_if(cfg: &ChirpConfig, f_if: f64) -> f64 {
    f_if * SPEED_OF_LIGHT / (2.0 * cfg.slope())
}

/// Smallest separation of two resolvable reflectors, `c / (2B)`.
pub fn range_resolution(bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::domain(format!("bandwidth must be > 0, got {bandwidth}")));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * bandwidth))
}

/// Zero-padded magnitude spectrum of an IF series.
#[derive(Debug, Clone, Serialize)]
pub struct IfSpectrum {
    /// Frequency of each bin (Hz), covering `[0, fs/2]`.
    pub frequencies: Vec<f64>,
    /// |X(f)| normalised by the unpadded series length.
    pub magnitudes: Vec<f64>,
    #[serde(skip)]
    full: Vec<f64>,
    bin_width: f64,
}

impl IfSpectrum {
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Peak frequency after parabolic interpolation on the log magnitude.
    fn interpolated_frequency(&self, bin: usize) -> f64 {
        let n = self.full.len();
        let at = |i: usize| self.full[i].max(f64::MIN_POSITIVE).ln();
        let left = at((bin + n - 1) % n);
        let mid = at(bin);
        let right = at((bin + 1) % n);
        let denom = left - 2.0 * mid + right;
        let offset = if denom < 0.0 {
            (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        (bin as f64 + offset) * self.bin_width
    }
}

/// FFT of the IF series zero-padded by [`RANGE_FFT_PADDING`] (to a power of two).
pub fn if_spectrum(if_series: &ComplexSampleSeries) -> Result<IfSpectrum> {
    let n = if_series.len();
    if n < MIN_RANGE_SAMPLES {
        return Err(Error::shape(format!(
            "range processing needs at least {MIN_RANGE_SAMPLES} samples, got {n}"
        )));
    }
    let n_fft = n.next_power_of_two() * RANGE_FFT_PADDING;
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    buf[..n].copy_from_slice(if_series.samples());
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);

    let full: Vec<f64> = buf.iter().map(|c| c.norm() / n as f64).collect();
    let bin_width = if_series.sample_rate() / n_fft as f64;
    let half = n_fft / 2;
    Ok(IfSpectrum {
        frequencies: (0..=half).map(|k| k as f64 * bin_width).collect(),
        magnitudes: full[..=half].to_vec(),
        full,
        bin_width,
    })
}

/// Range of the strongest reflector in a dechirped series.
pub fn estimate_range(if_series: &ComplexSampleSeries, cfg: &ChirpConfig) -> Result<f64> {
    let spectrum = if_spectrum(if_series)?;
    let (peak, _) = spectrum
        .magnitudes
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &m)| {
            if m > best.1 {
                (k, m)
            } else {
                best
            }
        });
    let f = spectrum.interpolated_frequency(peak);
    Ok(range_from_if(cfg, f).max(0.0))
}

/// Ranges of the `count` strongest spectral peaks, sorted by increasing range.
pub fn estimate_ranges(
    if_series: &ComplexSampleSeries,
    cfg: &ChirpConfig,
    count: usize,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let spectrum = if_spectrum(if_series)?;
    let mags = &spectrum.magnitudes;
    let full = &spectrum.full;
    let n = full.len();
    let mut peaks: Vec<(usize, f64)> = (0..mags.len())
        .filter(|&k| {
            let left = full[(k + n - 1) % n];
            let right = full[(k + 1) % n];
            mags[k] > left && mags[k] >= right
        })
        .map(|k| (k, mags[k]))
        .collect();
    if peaks.len() < count {
        return Err(Error::DegenerateSpectrum {
            found: peaks.len(),
            requested: count,
        });
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut ranges: Vec<f64> = peaks[..count]
        .iter()
        .map(|&(k, _)| range_from_if(cfg, spectrum.interpolated_frequency(k)).max(0.0))
        .collect();
    ranges.sort_by(f64::total_cmp);
    Ok(ranges)
}
