//! Per-utterance feature extraction: resample, normalize, track pitch,
//! detect GCIs, inverse filter, and compute all frame features.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::audio::{extract_frames, load_audio, resample, AnalysisFrame, AudioBuffer, FrameKind};
use crate::error::{Error, Result};
use crate::gci::{default_lp_order, detect_gci_with_order, GciSequence};
use crate::glottal::glottal_features;
use crate::iaif::{iaif_with, IaifConfig, IaifOutput};
use crate::infotheory::DEFAULT_BINS;
use crate::pitch::{track_pitch_with, PitchConfig, PitchTrack};
use crate::prosody::prosody_features;
use crate::speech::speech_features;

pub const FEATURE_NAMES: [&str; 15] = [
    "S_Bal1", "S_Bal2", "S_Bal3", "S_CoG", "S_HNR", "S_Fm", "G_Fg", "G_Bw", "G_minGCI", "G_Bal1", "G_Bal2",
    "G_Bal3", "G_CoG", "P_DeltaF0", "P_DeltaE",
];

pub const DEFAULT_RATE: u32 = 16000;

/// Every tunable of the analysis chain.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub target_rate: u32,
    /// Scale each file to a peak of 1 before analysis.
    pub normalize: bool,
    pub pitch: PitchConfig,
    /// LP order for the GCI residual; `None` means `fs/1000 + 2`.
    pub gci_lp_order: Option<usize>,
    pub iaif: IaifConfig,
    pub bins: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            target_rate: DEFAULT_RATE,
            normalize: true,
            pitch: PitchConfig::default(),
            gci_lp_order: None,
            iaif: IaifConfig::default(),
            bins: DEFAULT_BINS,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("config line {line}: bad value {value:?} for {key}")))
}

fn parse_order(key: &str, value: &str, line: usize) -> Result<Option<usize>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_value(key, value, line).map(Some)
    }
}

impl AnalysisConfig {
    /// Reads `key = value` lines; `#` starts a comment. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("config line {line}: expected key = value")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "rate" => cfg.target_rate = parse_value(key, value, line)?,
                "normalize" => cfg.normalize = parse_value(key, value, line)?,
                "f0_min" => cfg.pitch.f0_min = parse_value(key, value, line)?,
                "f0_max" => cfg.pitch.f0_max = parse_value(key, value, line)?,
                "voicing_threshold" => cfg.pitch.voicing_threshold = parse_value(key, value, line)?,
                "pitch_hop_s" => cfg.pitch.hop_s = parse_value(key, value, line)?,
                "pitch_window_s" => cfg.pitch.window_s = parse_value(key, value, line)?,
                "pitch_lowpass_hz" => {
                    cfg.pitch.lowpass_hz = if value == "none" { None } else { Some(parse_value(key, value, line)?) }
                }
                "gci_lp_order" => cfg.gci_lp_order = parse_order(key, value, line)?,
                "iaif_vt_order" => cfg.iaif.vt_order = parse_order(key, value, line)?,
                "iaif_glottal_order" => cfg.iaif.glottal_order = parse_value(key, value, line)?,
                "iaif_leak" => cfg.iaif.leak = parse_value(key, value, line)?,
                "bins" => cfg.bins = parse_value(key, value, line)?,
                _ => return Err(Error::InvalidParameter(format!("config line {line}: unknown key {key:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_rate < 8000 {
            return Err(Error::InvalidParameter(format!("rate {} below 8000 Hz", self.target_rate)));
        }
        if self.bins < 2 {
            return Err(Error::InvalidParameter("bins must be at least 2".into()));
        }
        if self.iaif.glottal_order == 0 || !(self.iaif.leak > 0.0 && self.iaif.leak < 1.0) {
            return Err(Error::InvalidParameter("IAIF glottal order must be > 0 and leak in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Features of one GCI that survived every stage.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures {
    /// Index of the GCI in the file's GCI sequence.
    pub gci_index: usize,
    pub center_gci: usize,
    pub values: [f64; 15],
}

/// Why GCIs produced no row.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DropCounts {
    pub reasons: BTreeMap<&'static str, usize>,
}

impl DropCounts {
    fn add(&mut self, reason: &'static str) {
        *self.reasons.entry(reason).or_default() += 1;
    }

    pub fn total(&self) -> usize {
        self.reasons.values().sum()
    }
}

impl fmt::Display for DropCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.reasons.is_empty() {
            return write!(f, "none");
        }
        let parts: Vec<String> = self.reasons.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Intermediate products of the front end, kept for diagnostics and dumps.
#[derive(Debug, Clone)]
pub struct FrontEnd {
    pub buffer: AudioBuffer,
    pub pitch: PitchTrack,
    pub gcis: GciSequence,
    pub speech_frames: Vec<AnalysisFrame>,
    pub glottal: IaifOutput,
}

#[derive(Debug, Clone)]
pub struct FileFeatures {
    pub frames: Vec<FrameFeatures>,
    pub n_gcis: usize,
    pub drops: DropCounts,
}

/// Resamples to the configured rate and optionally peak-normalizes.
pub fn prepare(buf: &AudioBuffer, cfg: &AnalysisConfig) -> Result<AudioBuffer> {
    let b = resample(buf, cfg.target_rate)?;
    Ok(if cfg.normalize { b.normalized() } else { b })
}

pub fn front_end(buf: &AudioBuffer, cfg: &AnalysisConfig) -> Result<FrontEnd> {
    let buffer = prepare(buf, cfg)?;
    let pitch = track_pitch_with(&buffer, &cfg.pitch)?;
    let order = cfg.gci_lp_order.unwrap_or_else(|| default_lp_order(buffer.sample_rate));
    let gcis = detect_gci_with_order(&buffer, &pitch, order);
    let speech_frames = extract_frames(&buffer, &gcis, &pitch, FrameKind::FixedLength30ms);
    let glottal = iaif_with(&buffer, &gcis, &pitch, &cfg.iaif);
    Ok(FrontEnd {
        buffer,
        pitch,
        gcis,
        speech_frames,
        glottal,
    })
}

pub fn features_from(fe: &FrontEnd) -> FileFeatures {
    let mut drops = DropCounts::default();
    let prosody = prosody_features(&fe.speech_frames);
    let mut speech_by_gci = BTreeMap::new();
    for (frame, p) in fe.speech_frames.iter().zip(prosody) {
        speech_by_gci.insert(frame.gci_index, (frame, p));
    }
    let glottal_by_gci: BTreeMap<usize, _> = fe.glottal.frames.iter().map(|f| (f.gci_index, f)).collect();

    let mut frames = Vec::new();
    for (gci_index, &center_gci) in fe.gcis.instants.iter().enumerate() {
        let Some(&(speech, prosody)) = speech_by_gci.get(&gci_index) else {
            drops.add("no_speech_frame");
            continue;
        };
        let Some(glottal) = glottal_by_gci.get(&gci_index) else {
            drops.add("no_glottal_frame");
            continue;
        };
        let Ok(s) = speech_features(speech) else {
            drops.add("speech_feature_failed");
            continue;
        };
        let Ok(g) = glottal_features(glottal) else {
            drops.add("glottal_feature_failed");
            continue;
        };
        let Some(p) = prosody else {
            drops.add("silent_frame");
            continue;
        };
        let values = [
            s.bal1, s.bal2, s.bal3, s.cog, s.hnr, s.fm, g.fg, g.bw, g.min_gci, g.g_bal1, g.g_bal2, g.g_bal3, g.g_cog,
            p.delta_f0, p.delta_e,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            drops.add("non_finite");
            continue;
        }
        frames.push(FrameFeatures {
            gci_index,
            center_gci,
            values,
        });
    }
    FileFeatures {
        frames,
        n_gcis: fe.gcis.len(),
        drops,
    }
}

pub fn analyze_buffer(buf: &AudioBuffer, cfg: &AnalysisConfig) -> Result<FileFeatures> {
    Ok(features_from(&front_end(buf, cfg)?))
}

pub fn analyze_file(path: impl AsRef<Path>, cfg: &AnalysisConfig) -> Result<FileFeatures> {
    analyze_buffer(&load_audio(path)?, cfg)
}
