//! Glottal closure instant detection by peak picking on the LP residual.

use std::io::Write;

use crate::audio::{hann_window, AudioBuffer};
use crate::lpc::lp_coefficients;
use crate::pitch::PitchTrack;

/// Strictly increasing GCI sample indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GciSequence {
    pub instants: Vec<usize>,
}

impl GciSequence {
    pub fn new(mut instants: Vec<usize>) -> Self {
        instants.sort_unstable();
        instants.dedup();
        Self { instants }
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W, sample_rate: u32) -> std::io::Result<()> {
        writeln!(out, "index,sample,time_s")?;
        for (i, &s) in self.instants.iter().enumerate() {
            writeln!(out, "{},{},{}", i, s, s as f64 / f64::from(sample_rate))?;
        }
        Ok(())
    }
}

/// Default LP order for a sampling rate: `fs/1000 + 2` (18 at 16 kHz).
pub fn default_lp_order(sample_rate: u32) -> usize {
    (sample_rate as usize / 1000) + 2
}

/// Prediction residual from 25 ms Hann-windowed autocorrelation LP frames
/// at 50% overlap. Each frame's inverse filter covers the central half of
/// its span; frames with no LP model contribute zeros.
pub fn lp_residual(buf: &AudioBuffer, order: usize) -> Vec<f64> {
    let n = buf.len();
    let x = &buf.samples;
    let frame_len = ((0.025 * f64::from(buf.sample_rate)).round() as usize).max(3 * order + 2);
    let hop = (frame_len / 2).max(1);
    let window = hann_window(frame_len);
    let mut residual = vec![0.0; n];
    if n == 0 {
        return residual;
    }
    let mut start = 0usize;
    loop {
        let end = (start + frame_len).min(n);
        let first = start == 0;
        let last = end == n;
        let cover_lo = if first { 0 } else { start + hop / 2 };
        let cover_hi = if last { n } else { (start + hop / 2 + hop).min(n) };
        if end - start > 3 * order {
            let framed: Vec<f64> = x[start..end].iter().zip(&window).map(|(a, w)| a * w).collect();
            if let Ok(a) = lp_coefficients(&framed, order) {
                for i in cover_lo..cover_hi {
                    let mut acc = 0.0;
                    for (k, ak) in a.iter().enumerate() {
                        if k > i {
                            break;
                        }
                        acc += ak * x[i - k];
                    }
                    residual[i] = acc;
                }
            }
        }
        if last {
            break;
        }
        start += hop;
    }
    residual
}

fn skewness(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (mut n, mut sum) = (0.0, 0.0);
    for v in values.clone() {
        n += 1.0;
        sum += v;
    }
    if n < 3.0 {
        return 0.0;
    }
    let mean = sum / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 <= 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

fn argmax(e: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo..=hi {
        if e[i] > e[best] {
            best = i;
        }
    }
    best
}

/// Locates one GCI per pitch period in each voiced segment.
///
/// The residual polarity is taken from its skewness over voiced samples, so
/// the dominant excitation peaks are picked whichever sign they carry (for
/// speech this is the negative closure peak).
pub fn detect_gci(buf: &AudioBuffer, pitch: &PitchTrack) -> GciSequence {
    detect_gci_with_order(buf, pitch, default_lp_order(buf.sample_rate))
}

pub fn detect_gci_with_order(buf: &AudioBuffer, pitch: &PitchTrack, order: usize) -> GciSequence {
    let segments = pitch.voiced_segments();
    if segments.is_empty() || buf.is_empty() {
        return GciSequence::default();
    }
    let residual = lp_residual(buf, order);
    let voiced_values = segments
        .iter()
        .flat_map(|&(a, b)| residual[a..=b.min(residual.len() - 1)].iter().copied());
    let polarity = if skewness(voiced_values) > 0.0 { 1.0 } else { -1.0 };
    let e: Vec<f64> = residual.iter().map(|v| polarity * v).collect();
    let sr = f64::from(buf.sample_rate);

    let mut instants = Vec::new();
    for &(start, end) in &segments {
        let end = end.min(e.len() - 1);
        if end <= start || e[start..=end].iter().all(|v| *v == 0.0) {
            continue;
        }
        let period_at = |s: usize| {
            let f = pitch.f0_at_sample(s).unwrap_or(pitch.f0_median_voiced);
            if f > 0.0 {
                sr / f
            } else {
                f64::INFINITY
            }
        };
        let anchor = argmax(&e, start, end);
        let mut found = vec![anchor];

        let mut g = anchor;
        loop {
            let t = period_at(g);
            if !t.is_finite() {
                break;
            }
            let lo = g + (0.5 * t).ceil() as usize;
            let hi = g + (1.5 * t).floor() as usize;
            if hi > end || lo > hi {
                break;
            }
            g = argmax(&e, lo, hi);
            found.push(g);
        }

        g = anchor;
        loop {
            let t = period_at(g);
            if !t.is_finite() {
                break;
            }
            let back_far = (1.5 * t).floor() as usize;
            let back_near = (0.5 * t).ceil() as usize;
            if g < start + back_far || back_near > back_far {
                break;
            }
            g = argmax(&e, g - back_far, g - back_near);
            found.push(g);
        }
        instants.extend(found);
    }
    GciSequence::new(instants)
}
