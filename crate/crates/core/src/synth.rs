//! Synthetic sustained vowels with known glottal source and closure instants.
//!
//! The excitation is the time derivative of a Rosenberg-style flow pulse whose
//! closing edge is blended between an abrupt cosine quarter (derivative jumps
//! to zero at closure) and a smooth raised cosine (derivative returns to zero
//! continuously). Sharper pulses are also more skewed: the opening takes 2/3
//! of the open phase for an abrupt closure and 1/2 for a smooth one. The
//! derivative train drives an all-pole vocal tract.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::audio::{resample, write_wav, AudioBuffer};
use crate::error::{Error, Result};
use crate::gci::GciSequence;
use crate::infotheory::ClassLabel;
use crate::lpc::all_pole_filter;

const OVERSAMPLE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub sample_rate: u32,
    pub f0: f64,
    pub vibrato_depth_hz: f64,
    pub vibrato_rate_hz: f64,
    /// Relative standard deviation of each period.
    pub jitter: f64,
    /// Relative standard deviation of each pulse amplitude.
    pub shimmer: f64,
    /// Open phase as a fraction of the period, in (0, 1).
    pub open_quotient: f64,
    /// 1 is an abrupt closure, 0 a fully smooth one.
    pub closure_sharpness: f64,
    /// Vocal-tract resonances as (frequency Hz, bandwidth Hz).
    pub tract_poles: Vec<(f64, f64)>,
    /// Harmonic-to-noise ratio of the added noise, measured on the speech
    /// signal; `None` is noise free.
    pub hnr_target: Option<f64>,
    pub noise: NoiseKind,
    pub duration_s: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            sample_rate: 16000,
            f0: 100.0,
            vibrato_depth_hz: 0.0,
            vibrato_rate_hz: 5.0,
            jitter: 0.0,
            shimmer: 0.0,
            open_quotient: 0.6,
            closure_sharpness: 1.0,
            tract_poles: vowel_formants(Vowel::A).to_vec(),
            hnr_target: None,
            noise: NoiseKind::White,
            duration_s: 1.0,
            seed: 0,
        }
    }
}

/// Where the noise enters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum NoiseKind {
    /// White noise added to the speech signal.
    #[default]
    White,
    /// White noise added at the glottis, so it is shaped by the tract like
    /// breath noise.
    Aspiration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vowel {
    A,
    E,
    I,
    O,
    U,
}

pub const VOWELS: [Vowel; 5] = [Vowel::A, Vowel::E, Vowel::I, Vowel::O, Vowel::U];

/// Typical adult formant frequencies and bandwidths.
pub fn vowel_formants(v: Vowel) -> [(f64, f64); 4] {
    match v {
        Vowel::A => [(730.0, 90.0), (1090.0, 110.0), (2440.0, 170.0), (3400.0, 250.0)],
        Vowel::E => [(530.0, 70.0), (1840.0, 110.0), (2480.0, 160.0), (3400.0, 250.0)],
        Vowel::I => [(270.0, 60.0), (2290.0, 100.0), (3010.0, 170.0), (3600.0, 250.0)],
        Vowel::O => [(570.0, 70.0), (840.0, 90.0), (2410.0, 160.0), (3400.0, 250.0)],
        Vowel::U => [(300.0, 60.0), (870.0, 90.0), (2240.0, 150.0), (3300.0, 250.0)],
    }
}

pub struct SynthOutput {
    pub speech: AudioBuffer,
    /// Noise-free glottal flow derivative that excited the tract.
    pub true_source: AudioBuffer,
    pub true_gcis: GciSequence,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let nyquist = f64::from(self.sample_rate) / 2.0;
        if self.sample_rate == 0 {
            return Err(Error::InvalidParameter("sample rate must be positive".into()));
        }
        if !(60.0..=400.0).contains(&self.f0) {
            return Err(Error::InvalidParameter(format!("f0 {} outside [60, 400] Hz", self.f0)));
        }
        if !(self.open_quotient > 0.0 && self.open_quotient < 1.0) {
            return Err(Error::InvalidParameter("open quotient must lie in (0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.closure_sharpness) {
            return Err(Error::InvalidParameter("closure sharpness must lie in [0, 1]".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::InvalidParameter("duration must be positive".into()));
        }
        for &(f, bw) in &self.tract_poles {
            if !(f > 0.0 && f < nyquist && bw > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "unstable or out-of-band tract pole ({f} Hz, {bw} Hz)"
                )));
            }
        }
        Ok(())
    }

    /// Inverse-filter polynomial of the tract, `[1, a1, ..]`.
    pub fn tract_polynomial(&self) -> Vec<f64> {
        let sr = f64::from(self.sample_rate);
        let mut poly = vec![1.0];
        for &(f, bw) in &self.tract_poles {
            let r = (-PI * bw / sr).exp();
            let section = [1.0, -2.0 * r * (2.0 * PI * f / sr).cos(), r * r];
            let mut next = vec![0.0; poly.len() + 2];
            for (i, p) in poly.iter().enumerate() {
                for (j, s) in section.iter().enumerate() {
                    next[i + j] += p * s;
                }
            }
            poly = next;
        }
        poly
    }
}

/// Derivative of one flow pulse at time `u` seconds after its onset.
fn pulse_derivative(u: f64, open: f64, sharpness: f64) -> f64 {
    let opening = open * (0.5 + sharpness / 6.0);
    let closing = open - opening;
    if u < 0.0 || u >= open {
        0.0
    } else if u < opening {
        0.5 * PI / opening * (PI * u / opening).sin()
    } else {
        let v = (u - opening) / closing;
        -(sharpness * 0.5 * PI * (0.5 * PI * v).sin() + (1.0 - sharpness) * 0.5 * PI * (PI * v).sin())
            / closing
    }
}

/// Generates a sustained vowel together with its true source and GCIs.
pub fn synth_vowel(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let sr = f64::from(spec.sample_rate);
    let n = (spec.duration_s * sr).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // Pulses are drawn at a higher rate and decimated so the closure jump is
    // band-limited and every period is a true fractional delay of the last.
    let hi_rate = sr * OVERSAMPLE as f64;
    let n_hi = n * OVERSAMPLE;
    let mut source_hi = vec![0.0; n_hi];
    let mut pulses = Vec::new();

    let mut onset = 0.0_f64;
    while onset < spec.duration_s {
        let f0 = spec.f0 + spec.vibrato_depth_hz * (2.0 * PI * spec.vibrato_rate_hz * onset).sin();
        let jitter: f64 = rng.sample(StandardNormal);
        let shimmer: f64 = rng.sample(StandardNormal);
        let period = (1.0 + spec.jitter * jitter).clamp(0.5, 1.5) / f0;
        let amplitude = (1.0 + spec.shimmer * shimmer).max(0.1);
        let open = spec.open_quotient * period;
        let first = (onset * hi_rate).ceil() as usize;
        let last = ((onset + open) * hi_rate).ceil() as usize;
        if (onset + open) * sr + 2.0 >= n as f64 {
            break;
        }
        for (i, v) in source_hi.iter_mut().enumerate().take(last).skip(first) {
            *v = amplitude * pulse_derivative(i as f64 / hi_rate - onset, open, spec.closure_sharpness) / sr;
        }
        pulses.push((onset * sr, (onset + open) * sr));
        onset += period;
    }
    let source = resample(&AudioBuffer::new(source_hi, hi_rate as u32), spec.sample_rate)?.samples;
    let gcis = pulses
        .iter()
        .map(|&(a, b)| {
            let lo = a.floor() as usize;
            let hi = (b.ceil() as usize + 1).min(n - 1);
            (lo..=hi).min_by(|&x, &y| source[x].total_cmp(&source[y])).unwrap_or(lo)
        })
        .collect();

    let tract = spec.tract_polynomial();
    let mut speech = all_pole_filter(&tract, &source);
    let peak = speech.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        speech.iter_mut().for_each(|v| *v *= 0.5 / peak);
    }
    if let Some(hnr) = spec.hnr_target.filter(|h| h.is_finite()) {
        let white: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let noise = match spec.noise {
            NoiseKind::White => white,
            NoiseKind::Aspiration => all_pole_filter(&tract, &white),
        };
        let power = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64;
        let noise_power = power(&noise);
        if noise_power > 0.0 {
            let gain = (power(&speech) / 10f64.powf(hnr / 10.0) / noise_power).sqrt();
            for (v, z) in speech.iter_mut().zip(&noise) {
                *v += gain * z;
            }
        }
    }
    Ok(SynthOutput {
        speech: AudioBuffer::new(speech, spec.sample_rate),
        true_source: AudioBuffer::new(source, spec.sample_rate),
        true_gcis: GciSequence::new(gcis),
    })
}

/// One generated corpus file.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub path: PathBuf,
    pub label: ClassLabel,
    pub spec: SynthSpec,
}

pub const MANIFEST_NAME: &str = "manifest.csv";

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Draws the synthesis parameters of one corpus file.
///
/// Normal voices: abrupt closure, HNR 25–35 dB, jitter below 0.3%.
/// Pathological voices: smooth closure, HNR 2–12 dB, jitter 1–3%.
pub fn corpus_spec(label: ClassLabel, rng: &mut ChaCha8Rng) -> SynthSpec {
    let vowel = VOWELS[rng.random_range(0..VOWELS.len())];
    let f0 = uniform(rng, 90.0, 200.0);
    let seed = rng.random::<u64>();
    let (sharpness, hnr, jitter, shimmer, oq) = match label {
        ClassLabel::Normal => (
            uniform(rng, 0.9, 1.0),
            uniform(rng, 25.0, 35.0),
            uniform(rng, 0.0, 0.003),
            uniform(rng, 0.0, 0.02),
            uniform(rng, 0.45, 0.6),
        ),
        ClassLabel::Pathological => (
            uniform(rng, 0.0, 0.2),
            uniform(rng, 2.0, 12.0),
            uniform(rng, 0.01, 0.03),
            uniform(rng, 0.04, 0.1),
            uniform(rng, 0.65, 0.8),
        ),
    };
    SynthSpec {
        f0,
        jitter,
        shimmer,
        open_quotient: oq,
        closure_sharpness: sharpness,
        tract_poles: vowel_formants(vowel).to_vec(),
        hnr_target: Some(hnr),
        noise: NoiseKind::Aspiration,
        duration_s: 1.0,
        seed,
        ..SynthSpec::default()
    }
}

/// Writes `n_per_class` WAV files per class plus a manifest with columns
/// `path,label,true_f0,hnr_target,sharpness` (paths relative to `out_dir`).
pub fn synth_corpus(out_dir: impl AsRef<Path>, n_per_class: usize, seed: u64) -> Result<Vec<CorpusEntry>> {
    if n_per_class < 10 {
        return Err(Error::InvalidParameter(format!(
            "corpus needs at least 10 files per class, got {n_per_class}"
        )));
    }
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(2 * n_per_class);
    for label in [ClassLabel::Normal, ClassLabel::Pathological] {
        for i in 0..n_per_class {
            let spec = corpus_spec(label, &mut rng);
            let name = format!("{}_{:04}.wav", label, i);
            let out = synth_vowel(&spec)?;
            write_wav(out_dir.join(&name), &out.speech)?;
            entries.push(CorpusEntry {
                path: PathBuf::from(name),
                label,
                spec,
            });
        }
    }
    let mut manifest = std::io::BufWriter::new(std::fs::File::create(out_dir.join(MANIFEST_NAME))?);
    writeln!(manifest, "path,label,true_f0,hnr_target,sharpness")?;
    for e in &entries {
        writeln!(
            manifest,
            "{},{},{},{},{}",
            e.path.display(),
            e.label,
            e.spec.f0,
            e.spec.hnr_target.unwrap_or(f64::INFINITY),
            e.spec.closure_sharpness
        )?;
    }
    manifest.flush()?;
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_hertz_second_has_hundred_pulses() {
        let out = synth_vowel(&SynthSpec::default()).unwrap();
        let n = out.true_gcis.len();
        assert!((99..=100).contains(&n), "{n} GCIs");
    }

    #[test]
    fn gcis_sit_on_derivative_minimum() {
        for sharpness in [1.0, 0.5, 0.0] {
            let out = synth_vowel(&SynthSpec {
                closure_sharpness: sharpness,
                f0: 123.0,
                ..SynthSpec::default()
            })
            .unwrap();
            let src = &out.true_source.samples;
            let period = (16000.0 / 123.0) as usize;
            for &g in &out.true_gcis.instants {
                let lo = g.saturating_sub(period / 2);
                let hi = (g + period / 2).min(src.len() - 1);
                let m = (lo..=hi).min_by(|&a, &b| src[a].total_cmp(&src[b])).unwrap();
                assert!(m.abs_diff(g) <= 1, "sharpness {sharpness}: {m} vs {g}");
            }
        }
    }

    #[test]
    fn same_seed_same_signal() {
        let spec = SynthSpec {
            hnr_target: Some(10.0),
            jitter: 0.02,
            seed: 42,
            ..SynthSpec::default()
        };
        let a = synth_vowel(&spec).unwrap();
        let b = synth_vowel(&spec).unwrap();
        assert_eq!(a.speech, b.speech);
        assert_eq!(a.true_gcis, b.true_gcis);
    }

    #[test]
    fn rejects_unstable_poles() {
        let spec = SynthSpec {
            tract_poles: vec![(500.0, -20.0)],
            ..SynthSpec::default()
        };
        assert!(synth_vowel(&spec).is_err());
        let spec = SynthSpec {
            tract_poles: vec![(9000.0, 50.0)],
            ..SynthSpec::default()
        };
        assert!(synth_vowel(&spec).is_err());
    }

    #[test]
    fn noise_hits_target_hnr() {
        let clean = synth_vowel(&SynthSpec::default()).unwrap().speech;
        let noisy = synth_vowel(&SynthSpec {
            hnr_target: Some(10.0),
            ..SynthSpec::default()
        })
        .unwrap()
        .speech;
        let p_signal: f64 = clean.samples.iter().map(|v| v * v).sum();
        let p_noise: f64 = clean.samples.iter().zip(&noisy.samples).map(|(a, b)| (a - b).powi(2)).sum();
        let hnr = 10.0 * (p_signal / p_noise).log10();
        assert!((hnr - 10.0).abs() < 0.3, "{hnr}");
    }

    #[test]
    fn corpus_too_small_is_rejected() {
        let dir = std::env::temp_dir().join("phonia-synth-small");
        assert!(synth_corpus(&dir, 5, 1).is_err());
    }
}
