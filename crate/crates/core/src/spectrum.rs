//! FFT spectra and the triangular mel filterbank.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Smallest power of two ≥ `2 * frame_len`.
pub fn fft_size_for(frame_len: usize) -> usize {
    (2 * frame_len.max(1)).next_power_of_two()
}

/// One-sided complex spectrum (bins `0..=fft_size/2`) of a zero-padded frame.
pub fn spectrum(samples: &[f64], fft_size: usize) -> Result<Vec<Complex<f64>>> {
    if fft_size < samples.len() || fft_size == 0 {
        return Err(Error::InvalidParameter(format!(
            "FFT size {fft_size} shorter than frame of {} samples",
            samples.len()
        )));
    }
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    buf.resize(fft_size, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(fft_size).process(&mut buf);
    buf.truncate(fft_size / 2 + 1);
    Ok(buf)
}

/// `|X(k)|²` for bins `0..=fft_size/2`.
pub fn power_spectrum(samples: &[f64], fft_size: usize) -> Result<Vec<f64>> {
    Ok(spectrum(samples, fft_size)?.iter().map(|c| c.norm_sqr()).collect())
}

pub fn magnitude_spectrum(samples: &[f64], fft_size: usize) -> Result<Vec<f64>> {
    Ok(spectrum(samples, fft_size)?.iter().map(|c| c.norm()).collect())
}

pub fn bin_frequency(bin: usize, fft_size: usize, sample_rate: u32) -> f64 {
    bin as f64 * f64::from(sample_rate) / fft_size as f64
}

/// Power-weighted mean frequency over `0..=fs/2`.
pub fn centroid_of_power(power: &[f64], fft_size: usize, sample_rate: u32) -> Option<f64> {
    let total: f64 = power.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let weighted: f64 = power
        .iter()
        .enumerate()
        .map(|(k, p)| bin_frequency(k, fft_size, sample_rate) * p)
        .sum();
    Some(weighted / total)
}

/// Sub-bin peak offset in (-0.5, 0.5) from a parabola through three values.
pub fn parabolic_offset(left: f64, center: f64, right: f64) -> f64 {
    let denom = left - 2.0 * center + right;
    if denom.abs() < 1e-300 {
        0.0
    } else {
        (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

pub const MEL_FILTERS: usize = 24;

/// Unit-peak triangular filters with centres equally spaced in mel over
/// `[0, fs/2]`; each triangle spans its two neighbouring centres.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub n_filters: usize,
    pub fft_size: usize,
    pub sample_rate: u32,
    /// `(left, center, right)` edge frequencies in Hz.
    pub triangles: Vec<(f64, f64, f64)>,
    /// Per filter: first bin and weights of the bins it covers.
    weights: Vec<(usize, Vec<f64>)>,
}

impl MelFilterbank {
    pub fn new(n_filters: usize, fft_size: usize, sample_rate: u32) -> Result<Self> {
        if n_filters == 0 || fft_size < 2 || sample_rate == 0 {
            return Err(Error::InvalidParameter("filterbank needs filters, bins and a rate".into()));
        }
        let nyquist = f64::from(sample_rate) / 2.0;
        let top = hz_to_mel(nyquist);
        let points: Vec<f64> = (0..n_filters + 2)
            .map(|i| mel_to_hz(top * i as f64 / (n_filters + 1) as f64))
            .collect();
        let n_bins = fft_size / 2 + 1;
        let mut triangles = Vec::with_capacity(n_filters);
        let mut weights = Vec::with_capacity(n_filters);
        for i in 0..n_filters {
            let (l, c, r) = (points[i], points[i + 1], points[i + 2]);
            triangles.push((l, c, r));
            let mut first = None;
            let mut w = Vec::new();
            for k in 0..n_bins {
                let f = bin_frequency(k, fft_size, sample_rate);
                let v = if f > l && f <= c {
                    (f - l) / (c - l)
                } else if f > c && f < r {
                    (r - f) / (r - c)
                } else {
                    0.0
                };
                if v > 0.0 {
                    first.get_or_insert(k);
                    w.push(v);
                } else if first.is_some() {
                    break;
                }
            }
            weights.push((first.unwrap_or(0), w));
        }
        Ok(Self {
            n_filters,
            fft_size,
            sample_rate,
            triangles,
            weights,
        })
    }

    /// Standard 24-filter bank for a frame of `frame_len` samples.
    pub fn for_frame(frame_len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(MEL_FILTERS, fft_size_for(frame_len), sample_rate)
    }

    /// Weight of filter `i` at bin `k`.
    pub fn weight(&self, i: usize, k: usize) -> f64 {
        let (first, w) = &self.weights[i];
        k.checked_sub(*first).and_then(|j| w.get(j)).copied().unwrap_or(0.0)
    }

    /// `Σ_k W_i(k) P(k)` for every filter.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|(first, w)| w.iter().zip(&power[*first..]).map(|(a, b)| a * b).sum())
            .collect()
    }
}
