//! Iterative adaptive inverse filtering of voiced segments.

use crate::audio::{blackman_window, hann_window, AudioBuffer, FrameKind};
use crate::error::{Error, Result};
use crate::gci::{default_lp_order, GciSequence};
use crate::lpc::{fir_filter, leaky_integrate, lp_coefficients};
use crate::pitch::PitchTrack;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IaifConfig {
    /// Vocal-tract order; `None` means `fs/1000 + 2`.
    pub vt_order: Option<usize>,
    pub glottal_order: usize,
    pub leak: f64,
}

impl Default for IaifConfig {
    fn default() -> Self {
        Self {
            vt_order: None,
            glottal_order: 4,
            leak: 0.99,
        }
    }
}

/// Glottal flow derivative estimate around one GCI, Blackman-windowed over
/// two pitch periods.
#[derive(Debug, Clone, PartialEq)]
pub struct GlottalSourceFrame {
    pub samples: Vec<f64>,
    pub center_gci: usize,
    pub f0_at_frame: f64,
    /// L2 norm of `samples`.
    pub energy: f64,
    pub sample_rate: u32,
    pub gci_index: usize,
}

impl GlottalSourceFrame {
    pub fn new(samples: Vec<f64>, f0_at_frame: f64, sample_rate: u32) -> Self {
        let energy = samples.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            center_gci: samples.len() / 2,
            samples,
            f0_at_frame,
            energy,
            sample_rate,
            gci_index: 0,
        }
    }

    pub fn half_len(&self) -> usize {
        self.samples.len() / 2
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IaifOutput {
    pub frames: Vec<GlottalSourceFrame>,
    /// GCIs that produced no frame because LP analysis of their segment failed.
    pub skipped: usize,
}

/// Source estimates of one stretch of signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceEstimate {
    pub flow_derivative: Vec<f64>,
    pub flow: Vec<f64>,
}

fn lp_windowed(x: &[f64], order: usize) -> Result<Vec<f64>> {
    let w = hann_window(x.len());
    let framed: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
    lp_coefficients(&framed, order)
}

/// Runs the IAIF chain on `x[start..]`; samples before `start` only serve as
/// filter memory. LP models are fitted to `x[start..]` alone.
pub fn iaif_span(x: &[f64], start: usize, sample_rate: u32, cfg: &IaifConfig) -> Result<SourceEstimate> {
    let vt_order = cfg.vt_order.unwrap_or_else(|| default_lp_order(sample_rate));
    if start >= x.len() {
        return Err(Error::InvalidParameter("empty IAIF span".into()));
    }
    let seg = &x[start..];
    let trim = |v: Vec<f64>| v[start..].to_vec();

    let g1 = lp_windowed(seg, 1)?;
    let y1 = trim(fir_filter(&g1, x));
    let vt1 = lp_windowed(&y1, vt_order)?;
    let flow1 = trim(leaky_integrate(&fir_filter(&vt1, x), cfg.leak));

    let g2 = lp_windowed(&flow1, cfg.glottal_order)?;
    let y2 = trim(leaky_integrate(&fir_filter(&g2, x), cfg.leak));
    let vt2 = lp_windowed(&y2, vt_order)?;

    let flow_derivative = trim(fir_filter(&vt2, x));
    let flow = leaky_integrate(&flow_derivative, cfg.leak);
    Ok(SourceEstimate { flow_derivative, flow })
}

pub fn iaif_analyze(buf: &AudioBuffer, gcis: &GciSequence, pitch: &PitchTrack) -> IaifOutput {
    iaif_with(buf, gcis, pitch, &IaifConfig::default())
}

/// Inverse-filters each voiced segment as a whole, then cuts a two-period
/// Blackman frame around every GCI whose frame fits inside the segment.
pub fn iaif_with(buf: &AudioBuffer, gcis: &GciSequence, pitch: &PitchTrack, cfg: &IaifConfig) -> IaifOutput {
    let mut out = IaifOutput::default();
    let vt_order = cfg.vt_order.unwrap_or_else(|| default_lp_order(buf.sample_rate));
    let mut windows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (seg_start, seg_end) in pitch.voiced_segments() {
        let seg_end = seg_end.min(buf.len().saturating_sub(1));
        let members: Vec<(usize, usize)> = gcis
            .instants
            .iter()
            .enumerate()
            .filter(|(_, &g)| g >= seg_start && g <= seg_end)
            .map(|(i, &g)| (i, g))
            .collect();
        if members.is_empty() {
            continue;
        }
        let pad = seg_start.min(vt_order + 1);
        let from = seg_start - pad;
        let estimate = match iaif_span(&buf.samples[from..=seg_end], pad, buf.sample_rate, cfg) {
            Ok(e) => e,
            Err(_) => {
                out.skipped += members.len();
                continue;
            }
        };
        let dg = &estimate.flow_derivative;
        for (gci_index, g) in members {
            let Some(f0) = pitch.f0_at_sample(g) else {
                continue;
            };
            let len = FrameKind::TwoPitchPeriods.length(buf.sample_rate, f0);
            let half = len / 2;
            if g < seg_start + half || g + half > seg_end {
                continue;
            }
            let window = match windows.iter().find(|(l, _)| *l == len) {
                Some((_, w)) => w,
                None => match blackman_window(len) {
                    Ok(w) => {
                        windows.push((len, w));
                        &windows.last().expect("just pushed").1
                    }
                    Err(_) => continue,
                },
            };
            let offset = g - half - seg_start;
            let samples: Vec<f64> = dg[offset..offset + len].iter().zip(window).map(|(a, b)| a * b).collect();
            let mut frame = GlottalSourceFrame::new(samples, f0, buf.sample_rate);
            frame.center_gci = g;
            frame.gci_index = gci_index;
            out.frames.push(frame);
        }
    }
    out
}
