//! Normalized-autocorrelation pitch tracker with voicing decision.

use std::io::Write;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::stats::median;

#[derive(Debug, Clone, PartialEq)]
pub struct PitchConfig {
    pub f0_min: f64,
    pub f0_max: f64,
    /// Minimum normalized autocorrelation peak for a hop to be voiced.
    pub voicing_threshold: f64,
    pub hop_s: f64,
    pub window_s: f64,
    /// Low-pass cutoff applied before correlation; `None` disables it.
    pub lowpass_hz: Option<f64>,
    /// Hops quieter than this fraction of the loudest hop are unvoiced.
    pub silence_ratio: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            f0_min: 60.0,
            f0_max: 400.0,
            voicing_threshold: 0.45,
            hop_s: 0.010,
            window_s: 0.040,
            lowpass_hz: Some(1000.0),
            silence_ratio: 1e-6,
        }
    }
}

/// Per-hop F0 and voicing over one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    pub hop_size: usize,
    pub window_size: usize,
    pub sample_rate: u32,
    /// Length of the analysed buffer in samples.
    pub n_samples: usize,
    /// Hz per hop, 0 where unvoiced.
    pub f0: Vec<f64>,
    pub voiced: Vec<bool>,
    pub f0_median_voiced: f64,
}

impl PitchTrack {
    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    /// Sample index at the centre of hop `k`'s analysis window.
    pub fn hop_center(&self, k: usize) -> usize {
        k * self.hop_size + self.window_size / 2
    }

    fn ownership_offset(&self) -> usize {
        (self.window_size / 2).saturating_sub(self.hop_size / 2)
    }

    /// Hop whose centre is closest to `sample` (clamped to the track).
    pub fn hop_at(&self, sample: usize) -> Option<usize> {
        if self.is_empty() {
            return None;
        }
        let offset = self.ownership_offset();
        let k = if sample < offset {
            0
        } else {
            (sample - offset) / self.hop_size
        };
        Some(k.min(self.len() - 1))
    }

    pub fn is_voiced_sample(&self, sample: usize) -> bool {
        self.hop_at(sample).is_some_and(|k| self.voiced[k])
    }

    /// True when every sample in `start..=end` belongs to a voiced hop.
    pub fn is_voiced_range(&self, start: usize, end: usize) -> bool {
        match (self.hop_at(start), self.hop_at(end)) {
            (Some(a), Some(b)) => self.voiced[a..=b].iter().all(|&v| v),
            _ => false,
        }
    }

    /// Maximal voiced sample ranges `(start, end_inclusive)`.
    pub fn voiced_segments(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let offset = self.ownership_offset();
        let mut segments = Vec::new();
        let mut k = 0;
        while k < n {
            if !self.voiced[k] {
                k += 1;
                continue;
            }
            let a = k;
            while k + 1 < n && self.voiced[k + 1] {
                k += 1;
            }
            let b = k;
            let start = if a == 0 { 0 } else { offset + a * self.hop_size };
            let end = if b == n - 1 {
                self.n_samples.saturating_sub(1)
            } else {
                offset + (b + 1) * self.hop_size - 1
            };
            if start <= end {
                segments.push((start, end));
            }
            k += 1;
        }
        segments
    }

    /// F0 at a sample, linearly interpolated between neighbouring voiced hop
    /// centres. `None` when the owning hop is unvoiced.
    pub fn f0_at_sample(&self, sample: usize) -> Option<f64> {
        let owner = self.hop_at(sample)?;
        if !self.voiced[owner] {
            return None;
        }
        let pos = (sample as f64 - (self.window_size / 2) as f64) / self.hop_size as f64;
        if pos <= 0.0 || pos >= (self.len() - 1) as f64 {
            return Some(self.f0[owner]);
        }
        let k0 = pos.floor() as usize;
        let k1 = k0 + 1;
        if self.voiced[k0] && self.voiced[k1] {
            let t = pos - k0 as f64;
            Some(self.f0[k0] * (1.0 - t) + self.f0[k1] * t)
        } else {
            Some(self.f0[owner])
        }
    }

    /// Debug dump with columns `hop_index,time_s,f0_hz,voiced`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "hop_index,time_s,f0_hz,voiced")?;
        let sr = f64::from(self.sample_rate);
        for k in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{}",
                k,
                self.hop_center(k) as f64 / sr,
                self.f0[k],
                u8::from(self.voiced[k])
            )?;
        }
        Ok(())
    }
}

/// Tracks pitch with default settings and the given search range.
pub fn track_pitch(buf: &AudioBuffer, f0_min: f64, f0_max: f64) -> Result<PitchTrack> {
    track_pitch_with(
        buf,
        &PitchConfig {
            f0_min,
            f0_max,
            ..PitchConfig::default()
        },
    )
}

/// Linear-phase low-pass FIR (Blackman-windowed sinc), applied without delay.
pub(crate) fn lowpass(x: &[f64], sample_rate: u32, cutoff_hz: f64) -> Vec<f64> {
    let sr = f64::from(sample_rate);
    let taps = crate::audio::odd_length(0.008 * sr).max(3);
    let half = (taps / 2) as isize;
    let fc = cutoff_hz / sr;
    let window = crate::audio::blackman_window(taps).expect("odd tap count");
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let m = (i as isize - half) as f64;
            let sinc = if m == 0.0 {
                2.0 * fc
            } else {
                (2.0 * std::f64::consts::PI * fc * m).sin() / (std::f64::consts::PI * m)
            };
            sinc * window[i]
        })
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= dc);
    let n = x.len() as isize;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, hj) in h.iter().enumerate() {
                let idx = i + half - j as isize;
                if idx >= 0 && idx < n {
                    acc += hj * x[idx as usize];
                }
            }
            acc
        })
        .collect()
}

pub fn track_pitch_with(buf: &AudioBuffer, cfg: &PitchConfig) -> Result<PitchTrack> {
    let sr = f64::from(buf.sample_rate);
    if !(cfg.f0_min > 0.0 && cfg.f0_min < cfg.f0_max && cfg.f0_max < sr / 4.0) {
        return Err(Error::InvalidParameter(format!(
            "pitch range [{}, {}] Hz invalid at {} Hz",
            cfg.f0_min, cfg.f0_max, buf.sample_rate
        )));
    }
    let hop = ((cfg.hop_s * sr).round() as usize).max(1);
    let win = ((cfg.window_s * sr).round() as usize).max(2);
    let lag_min = ((sr / cfg.f0_max).floor() as usize).max(2);
    let lag_max = (sr / cfg.f0_min).ceil() as usize;
    let empty = PitchTrack {
        hop_size: hop,
        window_size: win,
        sample_rate: buf.sample_rate,
        n_samples: buf.len(),
        f0: Vec::new(),
        voiced: Vec::new(),
        f0_median_voiced: 0.0,
    };
    if buf.len() < win || lag_max + 2 >= win {
        return Ok(empty);
    }

    let signal = match cfg.lowpass_hz {
        Some(fc) if fc < sr / 2.0 => lowpass(&buf.samples, buf.sample_rate, fc),
        _ => buf.samples.clone(),
    };
    let n_hops = (buf.len() - win) / hop + 1;

    let energies: Vec<f64> = (0..n_hops)
        .map(|k| {
            let seg = &signal[k * hop..k * hop + win];
            let mean = seg.iter().sum::<f64>() / win as f64;
            seg.iter().map(|v| (v - mean).powi(2)).sum()
        })
        .collect();
    let max_energy = energies.iter().cloned().fold(0.0, f64::max);

    let mut f0 = vec![0.0; n_hops];
    let mut voiced = vec![false; n_hops];
    let mut frame = vec![0.0; win];
    let mut prefix = vec![0.0; win + 1];
    for k in 0..n_hops {
        if energies[k] <= 0.0 || energies[k] < cfg.silence_ratio * max_energy {
            continue;
        }
        let seg = &signal[k * hop..k * hop + win];
        let mean = seg.iter().sum::<f64>() / win as f64;
        for (dst, v) in frame.iter_mut().zip(seg) {
            *dst = v - mean;
        }
        for i in 0..win {
            prefix[i + 1] = prefix[i] + frame[i] * frame[i];
        }
        let corr = |lag: usize| -> f64 {
            let n = win - lag;
            let num: f64 = frame[..n].iter().zip(&frame[lag..]).map(|(a, b)| a * b).sum();
            let e1 = prefix[n];
            let e2 = prefix[win] - prefix[lag];
            let den = (e1 * e2).sqrt();
            if den > 0.0 {
                num / den
            } else {
                0.0
            }
        };
        let r: Vec<f64> = (lag_min - 1..=lag_max + 1).map(corr).collect();
        let at = |lag: usize| r[lag + 1 - lag_min];

        let peaks: Vec<usize> = (lag_min..=lag_max)
            .filter(|&l| at(l) >= at(l - 1) && at(l) > at(l + 1))
            .collect();
        let Some(best) = peaks.iter().map(|&l| at(l)).reduce(f64::max) else {
            continue;
        };
        if best < cfg.voicing_threshold {
            continue;
        }
        // Prefer the shortest lag that is nearly as strong as the best one.
        let lag = *peaks
            .iter()
            .find(|&&l| at(l) >= 0.9 * best)
            .expect("best peak is in the list");
        let (ym, y0, yp) = (at(lag - 1), at(lag), at(lag + 1));
        let denom = ym - 2.0 * y0 + yp;
        let delta = if denom.abs() > 1e-18 {
            (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        f0[k] = (sr / (lag as f64 + delta)).clamp(cfg.f0_min, cfg.f0_max);
        voiced[k] = true;
    }

    // Octave-error suppression: voiced values far from the length-5 median of
    // their voiced neighbours are replaced by that median.
    let raw = f0.clone();
    for k in 0..n_hops {
        if !voiced[k] {
            continue;
        }
        let lo = k.saturating_sub(2);
        let hi = (k + 2).min(n_hops - 1);
        let neighbours: Vec<f64> = (lo..=hi).filter(|&j| voiced[j]).map(|j| raw[j]).collect();
        if neighbours.len() >= 3 {
            let m = median(&neighbours);
            if (raw[k] - m).abs() > 0.2 * m {
                f0[k] = m;
            }
        }
    }

    let voiced_f0: Vec<f64> = f0.iter().zip(&voiced).filter(|(_, &v)| v).map(|(f, _)| *f).collect();
    let f0_median_voiced = if voiced_f0.is_empty() {
        0.0
    } else {
        median(&voiced_f0)
    };
    Ok(PitchTrack {
        f0,
        voiced,
        f0_median_voiced,
        ..empty
    })
}
