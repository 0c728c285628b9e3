//! Speech-spectrum features: mel-band balances, centroid, HNR and the
//! maximum voiced frequency.

use serde::Serialize;

use crate::audio::{hann_window, AnalysisFrame};
use crate::error::{Error, Result};
use crate::spectrum::{
    bin_frequency, centroid_of_power, fft_size_for, magnitude_spectrum, parabolic_offset, power_spectrum,
    MelFilterbank, MEL_FILTERS,
};
use crate::stats::median;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Balances {
    pub bal1: f64,
    pub bal2: f64,
    pub bal3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralBalances {
    pub bal1: f64,
    pub bal2: f64,
    pub bal3: f64,
    pub cog: f64,
}

/// `PE(i) = Σ_k W_i(k) |X(k)|²` of already windowed samples.
pub fn perceptive_energies_of(samples: &[f64], fb: &MelFilterbank) -> Result<Vec<f64>> {
    let power = power_spectrum(samples, fb.fft_size)?;
    Ok(fb.apply(&power))
}

pub fn perceptive_energies(frame: &AnalysisFrame, fb: &MelFilterbank) -> Result<Vec<f64>> {
    perceptive_energies_of(&frame.samples, fb)
}

/// Energy shares of mel bands 1-4, 5-12 and 13-24.
pub fn spectral_balances(pe: &[f64]) -> Result<Balances> {
    if pe.len() != MEL_FILTERS {
        return Err(Error::InvalidParameter(format!("expected {MEL_FILTERS} band energies, got {}", pe.len())));
    }
    let total: f64 = pe.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Degenerate("zero spectral energy".into()));
    }
    let bal1 = pe[..4].iter().sum::<f64>() / total;
    let bal2 = pe[4..12].iter().sum::<f64>() / total;
    Ok(Balances {
        bal1,
        bal2,
        bal3: 1.0 - bal1 - bal2,
    })
}

pub fn spectral_centroid_of(samples: &[f64], sample_rate: u32) -> Result<f64> {
    let fft_size = fft_size_for(samples.len());
    let power = power_spectrum(samples, fft_size)?;
    centroid_of_power(&power, fft_size, sample_rate).ok_or_else(|| Error::Degenerate("zero frame".into()))
}

pub fn spectral_centroid(frame: &AnalysisFrame) -> Result<f64> {
    spectral_centroid_of(&frame.samples, frame.sample_rate)
}

/// Balances and centroid of windowed samples using the standard filterbank.
pub fn spectral_shape(samples: &[f64], sample_rate: u32) -> Result<SpectralBalances> {
    let fb = MelFilterbank::for_frame(samples.len(), sample_rate)?;
    let power = power_spectrum(samples, fb.fft_size)?;
    let b = spectral_balances(&fb.apply(&power))?;
    let cog = centroid_of_power(&power, fb.fft_size, sample_rate).ok_or_else(|| Error::Degenerate("zero frame".into()))?;
    Ok(SpectralBalances {
        bal1: b.bal1,
        bal2: b.bal2,
        bal3: b.bal3,
        cog,
    })
}

/// Half-width in samples of the windowed-sinc interpolator for fractional lags.
const SINC_HALF: usize = 16;
const LAG_STEP: f64 = 0.05;
/// Half-width in samples of the fine lag search around the best integer lag.
const FINE_REACH: f64 = 1.5;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
    }
}

/// `x` delayed by the fractional lag `tau` (band-limited interpolation),
/// evaluated for `n` in `0..count`.
fn shifted(x: &[f64], tau: f64, count: usize) -> Vec<f64> {
    let h = SINC_HALF as f64;
    let base = tau.floor();
    let frac = tau - base;
    let base = base as usize;
    // Taps for m = n + base + 1 - SINC_HALF ..= n + base + SINC_HALF.
    let taps: Vec<f64> = (0..2 * SINC_HALF)
        .map(|j| {
            let d = frac + SINC_HALF as f64 - 1.0 - j as f64;
            sinc(d) * (0.5 + 0.5 * (std::f64::consts::PI * d / h).cos())
        })
        .collect();
    (0..count)
        .map(|n| {
            let first = n + base + 1 - SINC_HALF;
            x[first..first + 2 * SINC_HALF].iter().zip(&taps).map(|(a, b)| a * b).sum()
        })
        .collect()
}

fn normalized_correlation(a: &[f64], b: &[f64]) -> f64 {
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (p, q) in a.iter().zip(b) {
        xy += p * q;
        xx += p * p;
        yy += q * q;
    }
    if xx <= 0.0 || yy <= 0.0 {
        0.0
    } else {
        xy / (xx * yy).sqrt()
    }
}

/// Harmonics-to-noise ratio in dB from the peak normalized autocorrelation
/// of the unwindowed frame near one period.
pub fn hnr(frame: &AnalysisFrame, f0: f64) -> Result<f64> {
    hnr_of(&frame.raw, f0, frame.sample_rate)
}

/// The lag is searched over `[0.9, 1.1]` periods, refined in steps of 0.05
/// samples using band-limited interpolation, so non-integer periods are not
/// penalised.
pub fn hnr_of(raw: &[f64], f0: f64, sample_rate: u32) -> Result<f64> {
    if !(f0 > 0.0) {
        return Err(Error::InvalidParameter(format!("f0 must be positive, got {f0}")));
    }
    let period = f64::from(sample_rate) / f0;
    let lag_lo = (0.9 * period).max(SINC_HALF as f64);
    let lag_hi = 1.1 * period;
    let count = raw.len() as f64 - lag_hi.ceil() - SINC_HALF as f64 - 1.0;
    if raw.len() < 2 * period.round() as usize || count < period * 0.5 {
        return Err(Error::InvalidParameter("frame shorter than two periods".into()));
    }
    let count = count as usize;
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let x: Vec<f64> = raw.iter().map(|v| v - mean).collect();
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("zero frame".into()));
    }
    let head = &x[..count];
    let ncc_at = |tau: f64| normalized_correlation(head, &shifted(&x, tau, count));

    // Integer lags first, then a fine search around the best one.
    let coarse = (lag_lo.ceil() as usize..=lag_hi.floor() as usize)
        .map(|l| (l as f64, normalized_correlation(head, &x[l..l + count])))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(0.5 * (lag_lo + lag_hi), |(l, _)| l);
    let fine_lo = (coarse - FINE_REACH).max(lag_lo);
    let fine_hi = (coarse + FINE_REACH).min(lag_hi);
    let steps = ((fine_hi - fine_lo) / LAG_STEP).ceil() as usize;
    let r: Vec<f64> = (0..=steps).map(|i| ncc_at((fine_lo + i as f64 * LAG_STEP).min(fine_hi))).collect();
    let mut best_i = 0;
    for i in 1..r.len() {
        if r[i] > r[best_i] {
            best_i = i;
        }
    }
    let mut best = r[best_i];
    if best_i > 0 && best_i + 1 < r.len() {
        let (l, c, rr) = (r[best_i - 1], r[best_i], r[best_i + 1]);
        best = c - 0.25 * (l - rr) * parabolic_offset(l, c, rr);
    }
    let r = best.clamp(1e-6, 1.0 - 1e-6);
    Ok(10.0 * (r / (1.0 - r)).log10())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxVoicedFrequency {
    pub fm: f64,
    pub low_confidence: bool,
    /// `(harmonic number, peak frequency, peak magnitude, local floor)` for
    /// every scanned harmonic, detected or not.
    pub scanned: Vec<HarmonicProbe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicProbe {
    pub k: usize,
    pub freq: f64,
    pub magnitude: f64,
    pub floor: f64,
    pub detected: bool,
}

/// Hann-windowed magnitude spectrum used for harmonic detection, with its FFT size.
pub fn harmonic_spectrum(raw: &[f64]) -> Result<(Vec<f64>, usize)> {
    let w = hann_window(raw.len());
    let x: Vec<f64> = raw.iter().zip(&w).map(|(a, b)| a * b).collect();
    let fft_size = fft_size_for(raw.len());
    Ok((magnitude_spectrum(&x, fft_size)?, fft_size))
}

fn interpolated(mag: &[f64], pos: f64) -> f64 {
    let i = pos.floor() as usize;
    if i + 1 >= mag.len() {
        return mag[mag.len() - 1];
    }
    let t = pos - i as f64;
    mag[i] * (1.0 - t) + mag[i + 1] * t
}

/// Spacing of the five points averaged around each inter-harmonic midpoint
/// (so each floor sample covers `±0.15·f0`).
const MIDPOINT_STEP: f64 = 0.075;

/// Last detected harmonic before two consecutive misses.
///
/// Harmonic `k` counts as detected when the largest magnitude within
/// `±f0/4` of `k·f0` is a local peak at least 6 dB above the local floor.
/// The floor is the median, over the inter-harmonic midpoints within
/// `±3·f0`, of the RMS magnitude in `±0.15·f0` around each midpoint.
pub fn max_voiced_frequency(frame: &AnalysisFrame, f0: f64) -> Result<MaxVoicedFrequency> {
    max_voiced_frequency_of(&frame.raw, f0, frame.sample_rate)
}

pub fn max_voiced_frequency_of(raw: &[f64], f0: f64, sample_rate: u32) -> Result<MaxVoicedFrequency> {
    if !(f0 > 0.0) {
        return Err(Error::InvalidParameter(format!("f0 must be positive, got {f0}")));
    }
    let (mag, fft_size) = harmonic_spectrum(raw)?;
    let hz_per_bin = f64::from(sample_rate) / fft_size as f64;
    let nyquist = f64::from(sample_rate) / 2.0;
    let global_max = mag.iter().cloned().fold(0.0, f64::max);
    let floor_min = global_max * 1e-5;

    let probe = |k: usize| -> Option<HarmonicProbe> {
        let center = k as f64 * f0;
        let lo = ((center - f0 / 4.0) / hz_per_bin).ceil().max(1.0) as usize;
        let hi = ((center + f0 / 4.0) / hz_per_bin).floor() as usize;
        if hi >= mag.len() - 1 || lo > hi {
            return None;
        }
        let mut best = lo;
        for b in lo..=hi {
            if mag[b] > mag[best] {
                best = b;
            }
        }
        let d = parabolic_offset(mag[best - 1], mag[best], mag[best + 1]);
        let mids: Vec<f64> = [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]
            .iter()
            .map(|m| center + m * f0)
            .filter(|&f| f > 0.0 && f < nyquist)
            .map(|f| {
                let ms: f64 = (-2..=2)
                    .map(|j| {
                        let g = (f + f64::from(j) * MIDPOINT_STEP * f0).clamp(0.0, nyquist);
                        interpolated(&mag, g / hz_per_bin).powi(2)
                    })
                    .sum::<f64>()
                    / 5.0;
                ms.sqrt()
            })
            .collect();
        let floor = median(&mids).max(floor_min);
        let magnitude = mag[best];
        let is_peak = magnitude >= mag[best - 1] && magnitude >= mag[best + 1];
        Some(HarmonicProbe {
            k,
            freq: (best as f64 + d) * hz_per_bin,
            magnitude,
            floor,
            detected: global_max > 0.0 && is_peak && magnitude >= 2.0 * floor,
        })
    };

    let mut scanned = Vec::new();
    let Some(first) = probe(1) else {
        return Ok(MaxVoicedFrequency {
            fm: f0,
            low_confidence: true,
            scanned,
        });
    };
    scanned.push(first);
    if !first.detected {
        return Ok(MaxVoicedFrequency {
            fm: f0,
            low_confidence: true,
            scanned,
        });
    }
    let mut fm = first.freq;
    let mut misses = 0;
    let mut k = 2;
    while let Some(p) = probe(k) {
        scanned.push(p);
        if p.detected {
            fm = p.freq;
            misses = 0;
        } else {
            misses += 1;
            if misses == 2 {
                break;
            }
        }
        k += 1;
    }
    Ok(MaxVoicedFrequency {
        fm: fm.max(f0),
        low_confidence: false,
        scanned,
    })
}

/// Frequencies of the bins of `harmonic_spectrum`.
pub fn harmonic_spectrum_frequencies(fft_size: usize, sample_rate: u32) -> Vec<f64> {
    (0..=fft_size / 2).map(|k| bin_frequency(k, fft_size, sample_rate)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeechFeatures {
    pub bal1: f64,
    pub bal2: f64,
    pub bal3: f64,
    pub cog: f64,
    pub hnr: f64,
    pub fm: f64,
}

/// All speech-spectrum features of one 30 ms frame.
pub fn speech_features(frame: &AnalysisFrame) -> Result<SpeechFeatures> {
    let shape = spectral_shape(&frame.samples, frame.sample_rate)?;
    let f0 = frame.f0_at_frame;
    Ok(SpeechFeatures {
        bal1: shape.bal1,
        bal2: shape.bal2,
        bal3: shape.bal3,
        cog: shape.cog,
        hnr: hnr(frame, f0)?,
        fm: max_voiced_frequency(frame, f0)?.fm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balance_examples() {
        let mut pe = vec![0.0; 24];
        pe[..4].fill(1.0);
        let b = spectral_balances(&pe).unwrap();
        assert_eq!((b.bal1, b.bal2, b.bal3), (1.0, 0.0, 0.0));
        let b = spectral_balances(&[1.0; 24]).unwrap();
        assert_eq!((b.bal1, b.bal2, b.bal3), (4.0 / 24.0, 8.0 / 24.0, 12.0 / 24.0));
        assert!(matches!(spectral_balances(&[0.0; 24]), Err(Error::Degenerate(_))));
        assert!(spectral_balances(&[1.0; 5]).is_err());
    }

    #[test]
    fn zero_frame_energies_are_zero() {
        let fb = MelFilterbank::for_frame(481, 16000).unwrap();
        let pe = perceptive_energies_of(&[0.0; 481], &fb).unwrap();
        assert!(pe.iter().all(|v| *v == 0.0));
        assert!(spectral_centroid_of(&[0.0; 481], 16000).is_err());
    }

    #[test]
    fn hnr_rejects_bad_inputs() {
        assert!(hnr_of(&[0.0; 481], 100.0, 16000).is_err());
        assert!(hnr_of(&[1.0; 200], 100.0, 16000).is_err());
        assert!(hnr_of(&[1.0; 481], 0.0, 16000).is_err());
    }
}
