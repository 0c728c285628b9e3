//! Per-frame pitch and energy deviations from the utterance medians.

use serde::Serialize;

use crate::audio::AnalysisFrame;
use crate::stats::median;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProsodyFeatures {
    /// Hz above the median f0.
    pub delta_f0: f64,
    /// dB above the median frame energy.
    pub delta_e: f64,
}

/// Frame energy in dB from the unwindowed samples; `None` for silent frames.
pub fn frame_energy_db(frame: &AnalysisFrame) -> Option<f64> {
    let e = frame.raw_energy();
    (e > 0.0 && e.is_finite()).then(|| 10.0 * e.log10())
}

/// One entry per input frame; frames with zero energy yield `None` and do
/// not enter either median.
pub fn prosody_features(frames: &[AnalysisFrame]) -> Vec<Option<ProsodyFeatures>> {
    let energies: Vec<Option<f64>> = frames.iter().map(frame_energy_db).collect();
    let valid = |i: &usize| energies[*i].is_some() && frames[*i].f0_at_frame.is_finite();
    let idx: Vec<usize> = (0..frames.len()).filter(valid).collect();
    if idx.is_empty() {
        return vec![None; frames.len()];
    }
    let f0_med = median(&idx.iter().map(|&i| frames[i].f0_at_frame).collect::<Vec<_>>());
    let e_med = median(&idx.iter().filter_map(|&i| energies[i]).collect::<Vec<_>>());
    (0..frames.len())
        .map(|i| {
            let e = energies[i]?;
            let f0 = frames[i].f0_at_frame;
            f0.is_finite().then(|| ProsodyFeatures {
                delta_f0: f0 - f0_med,
                delta_e: e - e_med,
            })
        })
        .collect()
}
