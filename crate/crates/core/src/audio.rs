//! Audio ingestion, resampling, windows and GCI-centred frame extraction.

use std::f64::consts::PI;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::gci::GciSequence;
use crate::pitch::PitchTrack;

/// Mono sample sequence with its sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Returns a copy scaled so that the largest absolute sample is 1.
    /// An all-zero buffer is returned unchanged.
    pub fn normalized(&self) -> Self {
        let peak = self.peak();
        if peak == 0.0 {
            return self.clone();
        }
        Self {
            samples: self.samples.iter().map(|x| x / peak).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|x| x * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Reads a RIFF/WAVE file. Integer PCM is scaled by `1 / 2^(bits-1)`, IEEE
/// float is taken as is. Multi-channel files keep only the first channel.
pub fn load_audio(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let mut reader = WavReader::open(path.as_ref())?;
    let spec = reader.spec();
    if spec.sample_rate == 0 {
        return Err(Error::Format("sample rate is zero".into()));
    }
    let channels = usize::from(spec.channels.max(1));
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / f64::from(1u32 << (bits - 1));
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) * scale))
                .collect::<std::result::Result<_, _>>()?
        }
        (fmt, bits) => {
            return Err(Error::Format(format!(
                "{bits}-bit {fmt:?} samples are not supported"
            )))
        }
    };
    let samples = interleaved.into_iter().step_by(channels).collect();
    Ok(AudioBuffer::new(samples, spec.sample_rate))
}

/// Writes a mono 32-bit float WAV file.
pub fn write_wav(path: impl AsRef<Path>, buf: &AudioBuffer) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path.as_ref(), spec)?;
    for &s in &buf.samples {
        writer.write_sample(s as f32)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Writes a mono 16-bit PCM WAV file, clipping to the representable range.
pub fn write_wav_pcm16(path: impl AsRef<Path>, buf: &AudioBuffer) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path.as_ref(), spec)?;
    for &s in &buf.samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v)?;
    }
    writer.finalize()?;
    Ok(())
}

// Resampler parameters: passband edge at 90% of the lower Nyquist, 48 zero
// crossings of the sinc on each side, Kaiser beta 8.6 (about 86 dB stopband).
const RESAMPLE_CUTOFF: f64 = 0.9;
const RESAMPLE_ZERO_CROSSINGS: f64 = 48.0;
const RESAMPLE_KAISER_BETA: f64 = 8.6;
const MAX_TABLE_PHASES: usize = 4096;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..200 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

struct SincKernel {
    /// Normalized cutoff in cycles per input sample, times two.
    bandwidth: f64,
    half_width: f64,
    i0_beta: f64,
}

impl SincKernel {
    fn eval(&self, u: f64) -> f64 {
        let r = u / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let arg = PI * self.bandwidth * u;
        let sinc = if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
        let window = bessel_i0(RESAMPLE_KAISER_BETA * (1.0 - r * r).sqrt()) / self.i0_beta;
        self.bandwidth * sinc * window
    }
}

/// Band-limited sample-rate conversion with a Kaiser-windowed sinc kernel
/// evaluated in polyphase form. Identical rates return the input unchanged.
pub fn resample(buf: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    if target_rate == 0 {
        return Err(Error::InvalidParameter("target rate must be positive".into()));
    }
    if target_rate == buf.sample_rate || buf.is_empty() {
        return Ok(AudioBuffer::new(buf.samples.clone(), target_rate.max(1)));
    }
    let in_rate = u64::from(buf.sample_rate);
    let out_rate = u64::from(target_rate);
    let g = gcd(in_rate, out_rate);
    // Output sample n sits at input position n * step / phases.
    let phases = (out_rate / g) as usize;
    let step = (in_rate / g) as usize;

    let cutoff_hz = RESAMPLE_CUTOFF * 0.5 * in_rate.min(out_rate) as f64;
    let bandwidth = 2.0 * cutoff_hz / in_rate as f64;
    let half_width = RESAMPLE_ZERO_CROSSINGS / bandwidth;
    let kernel = SincKernel {
        bandwidth,
        half_width,
        i0_beta: bessel_i0(RESAMPLE_KAISER_BETA),
    };
    let taps_each_side = half_width.ceil() as isize;
    let n_taps = (2 * taps_each_side) as usize;

    // Tap j of phase p multiplies x[q - taps_each_side + 1 + j] where q is
    // the integer part of the output position.
    let table: Option<Vec<f64>> = (phases <= MAX_TABLE_PHASES).then(|| {
        let mut t = Vec::with_capacity(phases * n_taps);
        for p in 0..phases {
            let frac = p as f64 / phases as f64;
            for j in 0..n_taps {
                let offset = (j as isize - taps_each_side + 1) as f64;
                t.push(kernel.eval(frac - offset));
            }
        }
        t
    });

    let n_in = buf.len();
    let n_out = ((n_in as u128 * out_rate as u128 + in_rate as u128 / 2) / in_rate as u128) as usize;
    let x = &buf.samples;
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out {
        let pos = n as u128 * step as u128;
        let q = (pos / phases as u128) as isize;
        let p = (pos % phases as u128) as usize;
        let first = q - taps_each_side + 1;
        let mut acc = 0.0;
        for j in 0..n_taps {
            let idx = first + j as isize;
            if idx < 0 || idx as usize >= n_in {
                continue;
            }
            let h = match &table {
                Some(t) => t[p * n_taps + j],
                None => {
                    let frac = p as f64 / phases as f64;
                    kernel.eval(frac - (j as isize - taps_each_side + 1) as f64)
                }
            };
            acc += h * x[idx as usize];
        }
        out.push(acc);
    }
    Ok(AudioBuffer::new(out, target_rate))
}

/// Nearest odd integer to `x`; exact ties and even roundings go up.
pub fn odd_length(x: f64) -> usize {
    let n = x.round().max(1.0) as usize;
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

fn check_odd_window(length: usize) -> Result<()> {
    if length < 3 || length % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "window length must be odd and at least 3, got {length}"
        )));
    }
    Ok(())
}

/// Classic Blackman window (0.42, 0.5, 0.08), exactly symmetric.
pub fn blackman_window(length: usize) -> Result<Vec<f64>> {
    check_odd_window(length)?;
    Ok(symmetric_window(length, |phase| {
        (0.42 + 0.08 * (4.0 * PI * phase).cos()) - 0.5 * (2.0 * PI * phase).cos()
    }))
}

/// Symmetric Hann window of any length ≥ 2.
pub fn hann_window(length: usize) -> Vec<f64> {
    if length < 2 {
        return vec![1.0; length];
    }
    symmetric_window(length, |phase| 0.5 - 0.5 * (2.0 * PI * phase).cos())
}

fn symmetric_window(length: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let denom = (length - 1) as f64;
    let mut w = vec![0.0; length];
    for i in 0..length.div_ceil(2) {
        let v = f(i as f64 / denom);
        w[i] = v;
        w[length - 1 - i] = v;
    }
    if length % 2 == 1 {
        w[length / 2] = f(0.5);
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameKind {
    FixedLength30ms,
    TwoPitchPeriods,
}

impl FrameKind {
    /// Odd frame length for this kind at the given rate and local pitch.
    pub fn length(self, sample_rate: u32, f0: f64) -> usize {
        match self {
            FrameKind::FixedLength30ms => odd_length(0.030 * f64::from(sample_rate)),
            FrameKind::TwoPitchPeriods => odd_length(2.0 * f64::from(sample_rate) / f0),
        }
    }
}

/// A Blackman-windowed slice of the signal centred on one GCI.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisFrame {
    /// Windowed samples; `samples.len()` is odd and the middle sample is the GCI.
    pub samples: Vec<f64>,
    /// The same slice before windowing.
    pub raw: Vec<f64>,
    pub center_gci: usize,
    pub kind: FrameKind,
    pub f0_at_frame: f64,
    pub sample_rate: u32,
    /// Position of the GCI inside the source `GciSequence`.
    pub gci_index: usize,
}

impl AnalysisFrame {
    /// Builds a frame from an odd-length unwindowed slice, applying the
    /// Blackman window. `center_gci` is set to the slice midpoint.
    pub fn from_raw(raw: Vec<f64>, kind: FrameKind, f0_at_frame: f64, sample_rate: u32) -> Result<Self> {
        let window = blackman_window(raw.len())?;
        let samples = raw.iter().zip(&window).map(|(x, w)| x * w).collect();
        Ok(Self {
            center_gci: raw.len() / 2,
            samples,
            raw,
            kind,
            f0_at_frame,
            sample_rate,
            gci_index: 0,
        })
    }

    pub fn half_len(&self) -> usize {
        self.samples.len() / 2
    }

    pub fn raw_energy(&self) -> f64 {
        self.raw.iter().map(|x| x * x).sum()
    }
}

/// Cuts one windowed frame per GCI. Frames whose support leaves the buffer or
/// crosses an unvoiced hop are dropped.
pub fn extract_frames(
    buf: &AudioBuffer,
    gcis: &GciSequence,
    pitch: &PitchTrack,
    kind: FrameKind,
) -> Vec<AnalysisFrame> {
    let mut frames = Vec::new();
    let mut windows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (gci_index, &center) in gcis.instants.iter().enumerate() {
        let Some(f0) = pitch.f0_at_sample(center) else {
            continue;
        };
        let len = kind.length(buf.sample_rate, f0);
        let half = len / 2;
        if center < half || center + half >= buf.len() {
            continue;
        }
        let (start, end) = (center - half, center + half);
        if !pitch.is_voiced_range(start, end) {
            continue;
        }
        let window = match windows.iter().find(|(l, _)| *l == len) {
            Some((_, w)) => w.clone(),
            None => match blackman_window(len) {
                Ok(w) => {
                    windows.push((len, w.clone()));
                    w
                }
                Err(_) => continue,
            },
        };
        let raw = buf.samples[start..=end].to_vec();
        let samples = raw.iter().zip(&window).map(|(x, w)| x * w).collect();
        frames.push(AnalysisFrame {
            samples,
            raw,
            center_gci: center,
            kind,
            f0_at_frame: f0,
            sample_rate: buf.sample_rate,
            gci_index,
        });
    }
    frames
}
