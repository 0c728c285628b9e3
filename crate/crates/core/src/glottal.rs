//! Glottal-source features: glottal formant, closure discontinuity and
//! spectral shape of the source frames.

use serde::Serialize;

use crate::audio::blackman_window;
use crate::error::{Error, Result};
use crate::iaif::GlottalSourceFrame;
use crate::spectrum::{magnitude_spectrum, parabolic_offset};
use crate::speech::{spectral_shape, SpectralBalances};

/// Minimum FFT size for the glottal formant spectrum.
const FORMANT_FFT_MIN: usize = 8192;
/// Length of the fade applied where the frame is cut at the GCI.
const CUT_TAPER_S: f64 = 0.0005;
const FALLBACK_MAX_HZ: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlottalFormant {
    pub fg: f64,
    pub bw: f64,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlottalFeatures {
    pub fg: f64,
    pub bw: f64,
    pub min_gci: f64,
    pub g_bal1: f64,
    pub g_bal2: f64,
    pub g_bal3: f64,
    pub g_cog: f64,
}

/// The open-phase part of a frame: samples up to and including the GCI with
/// a falling half-Blackman fade over the last `CUT_TAPER_S` seconds.
pub fn left_part(frame: &GlottalSourceFrame) -> Vec<f64> {
    let mid = frame.half_len();
    let mut left = frame.samples[..=mid].to_vec();
    let taper = ((CUT_TAPER_S * f64::from(frame.sample_rate)).round() as usize).clamp(1, left.len());
    if let Ok(w) = blackman_window(2 * taper + 1) {
        let n = left.len();
        for (v, g) in left[n - taper..].iter_mut().zip(&w[taper + 1..]) {
            *v *= g;
        }
    }
    left
}

/// Largest spectral peak of the left part between `f0/2` and `3·f0`, and
/// its -3 dB width.
pub fn glottal_formant(frame: &GlottalSourceFrame) -> Result<GlottalFormant> {
    let left = left_part(frame);
    if left.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("zero open-phase segment".into()));
    }
    let fft_size = (4 * left.len()).next_power_of_two().max(FORMANT_FFT_MIN);
    let mag = magnitude_spectrum(&left, fft_size)?;
    let hz = f64::from(frame.sample_rate) / fft_size as f64;
    let limit = |f: f64| ((f / hz).floor() as usize).min(mag.len() - 2);

    let floor_bin = ((0.5 * frame.f0_at_frame / hz).ceil() as usize).max(1);
    let strongest_peak = |hi: usize| {
        (floor_bin..=hi)
            .filter(|&k| mag[k] >= mag[k - 1] && mag[k] >= mag[k + 1] && mag[k] > 0.0)
            .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
    };
    let (k, low_confidence) = match strongest_peak(limit(3.0 * frame.f0_at_frame)) {
        Some(k) => (k, false),
        None => {
            let hi = limit(FALLBACK_MAX_HZ).max(1);
            let k = (1..=hi).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap_or(1);
            (k, true)
        }
    };

    let (l, c, r) = (mag[k - 1], mag[k], mag[k + 1]);
    let d = parabolic_offset(l, c, r);
    let fg = (k as f64 + d) * hz;
    let level = (c - 0.25 * (l - r) * d) / std::f64::consts::SQRT_2;

    let mut j = k;
    while j > 0 && mag[j] >= level {
        j -= 1;
    }
    let left_edge = (mag[j] < level).then(|| (j as f64 + (level - mag[j]) / (mag[j + 1] - mag[j])) * hz);
    let mut j = k;
    while j + 1 < mag.len() && mag[j] >= level {
        j += 1;
    }
    let right_edge = (mag[j] < level).then(|| (j as f64 - (level - mag[j]) / (mag[j - 1] - mag[j])) * hz);

    let bw = match (left_edge, right_edge) {
        (Some(a), Some(b)) => b - a,
        (None, Some(b)) => 2.0 * (b - fg),
        (Some(a), None) => 2.0 * (fg - a),
        (None, None) => return Err(Error::Degenerate("no -3 dB crossing around the glottal formant".into())),
    };
    Ok(GlottalFormant {
        fg,
        bw,
        low_confidence,
    })
}

/// Minimum of the unit-energy frame within ±1 ms of the GCI.
pub fn min_at_gci(frame: &GlottalSourceFrame) -> Result<f64> {
    gci_minimum(frame).map(|(_, v)| v)
}

/// Index into the frame and unit-energy value of the minimum near the GCI.
pub fn gci_minimum(frame: &GlottalSourceFrame) -> Result<(usize, f64)> {
    let energy = frame.samples.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::Degenerate("zero-energy glottal frame".into()));
    }
    let mid = frame.half_len();
    let reach = (0.001 * f64::from(frame.sample_rate)).round() as usize;
    let lo = mid.saturating_sub(reach);
    let hi = (mid + reach).min(frame.samples.len() - 1);
    let at = (lo..=hi)
        .min_by(|&a, &b| frame.samples[a].total_cmp(&frame.samples[b]))
        .unwrap_or(mid);
    Ok((at, frame.samples[at] / energy))
}

pub fn glottal_spectral_features(frame: &GlottalSourceFrame) -> Result<SpectralBalances> {
    spectral_shape(&frame.samples, frame.sample_rate)
}

pub fn glottal_features(frame: &GlottalSourceFrame) -> Result<GlottalFeatures> {
    let formant = glottal_formant(frame)?;
    let shape = glottal_spectral_features(frame)?;
    Ok(GlottalFeatures {
        fg: formant.fg,
        bw: formant.bw,
        min_gci: min_at_gci(frame)?,
        g_bal1: shape.bal1,
        g_bal2: shape.bal2,
        g_bal3: shape.bal3,
        g_cog: shape.cog,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_frame_is_degenerate() {
        let f = GlottalSourceFrame::new(vec![0.0; 321], 100.0, 16000);
        assert!(glottal_formant(&f).is_err());
        assert!(min_at_gci(&f).is_err());
        assert!(glottal_spectral_features(&f).is_err());
    }

    #[test]
    fn impulse_at_center() {
        let mut s = vec![1e-6; 321];
        s[160] = -1.0;
        let f = GlottalSourceFrame::new(s, 100.0, 16000);
        let m = min_at_gci(&f).unwrap();
        assert!((m + 1.0).abs() < 1e-3, "{m}");
    }

    #[test]
    fn min_is_scale_invariant() {
        let s: Vec<f64> = (0..321).map(|i| ((i as f64) * 0.37).sin() - 0.2).collect();
        let a = min_at_gci(&GlottalSourceFrame::new(s.clone(), 100.0, 16000)).unwrap();
        let b = min_at_gci(&GlottalSourceFrame::new(s.iter().map(|v| v * 5.0).collect(), 100.0, 16000)).unwrap();
        assert!((a - b).abs() < 1e-15);
    }
}
