//! Pitch-synchronous voice analysis: speech, glottal-source and prosodic
//! features, with mutual-information feature ranking.

pub mod audio;
pub mod error;
pub mod gci;
pub mod glottal;
pub mod iaif;
pub mod infotheory;
pub mod lpc;
pub mod pipeline;
pub mod pitch;
pub mod prosody;
pub mod spectrum;
pub mod speech;
pub mod stats;
pub mod synth;

pub use audio::{extract_frames, load_audio, resample, AnalysisFrame, AudioBuffer, FrameKind};
pub use error::{Error, Result};
pub use gci::{detect_gci, GciSequence};
pub use iaif::{iaif_analyze, GlottalSourceFrame};
pub use infotheory::{build_report, ClassLabel, LabeledDataset, MiReport};
pub use pipeline::{analyze_buffer, analyze_file, AnalysisConfig, FileFeatures, FEATURE_NAMES};
pub use pitch::{track_pitch, PitchConfig, PitchTrack};
pub use synth::{synth_corpus, synth_vowel, SynthSpec};
