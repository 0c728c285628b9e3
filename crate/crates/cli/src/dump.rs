//! Plot data for pitch tracks, GCIs, glottal frames and harmonic spectra.

use std::io::Write;

use clap::ValueEnum;
use phonia::glottal::gci_minimum;
use phonia::pipeline::FrontEnd;
use phonia::speech::{harmonic_spectrum, harmonic_spectrum_frequencies, max_voiced_frequency};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpKind {
    Pitch,
    Gci,
    Glottal,
    Spectrum,
}

fn db(v: f64) -> f64 {
    20.0 * v.max(1e-300).log10()
}

/// Writes the requested dump. `frame` picks the speech frame of a spectrum
/// dump (default: the middle one).
pub fn dump<W: Write>(kind: DumpKind, fe: &FrontEnd, frame: Option<usize>, out: &mut W) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match kind {
        DumpKind::Pitch => fe.pitch.write_csv(out).map_err(io),
        DumpKind::Gci => fe.gcis.write_csv(out, fe.buffer.sample_rate).map_err(io),
        DumpKind::Glottal => glottal(fe, out).map_err(io),
        DumpKind::Spectrum => spectrum(fe, frame, out),
    }
}

/// Energy-normalized glottal frames in long format; `is_min` marks the
/// minimum near the GCI.
fn glottal<W: Write>(fe: &FrontEnd, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "frame_index,gci_sample,offset,time_ms,value,is_min")?;
    let ms = 1000.0 / f64::from(fe.buffer.sample_rate);
    for f in &fe.glottal.frames {
        let Ok((at, _)) = gci_minimum(f) else {
            continue;
        };
        let half = f.half_len() as i64;
        for (i, v) in f.samples.iter().enumerate() {
            let offset = i as i64 - half;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                f.gci_index,
                f.center_gci,
                offset,
                offset as f64 * ms,
                v / f.energy,
                u8::from(i == at)
            )?;
        }
    }
    Ok(())
}

/// Magnitude spectrum of one 30 ms frame with harmonic markers and the
/// maximum voiced frequency.
fn spectrum<W: Write>(fe: &FrontEnd, frame: Option<usize>, out: &mut W) -> CliResult<()> {
    let frames = &fe.speech_frames;
    if frames.is_empty() {
        return Err(CliError::Data("no voiced 30 ms frame to dump".into()));
    }
    let index = frame.unwrap_or(frames.len() / 2);
    let f = frames
        .get(index)
        .ok_or_else(|| CliError::Usage(format!("frame {index} out of range (0..{})", frames.len())))?;
    let (mag, fft_size) = harmonic_spectrum(&f.raw)?;
    let fm = max_voiced_frequency(f, f.f0_at_frame)?;

    let io = |e: std::io::Error| CliError::Io(e.to_string());
    writeln!(out, "kind,frequency_hz,magnitude_db,floor_db").map_err(io)?;
    for (hz, m) in harmonic_spectrum_frequencies(fft_size, f.sample_rate).iter().zip(&mag) {
        writeln!(out, "spectrum,{},{},", hz, db(*m)).map_err(io)?;
    }
    for p in &fm.scanned {
        let kind = if p.detected { "harmonic" } else { "missed" };
        writeln!(out, "{kind},{},{},{}", p.freq, db(p.magnitude), db(p.floor)).map_err(io)?;
    }
    let kind = if fm.low_confidence { "fm_low_confidence" } else { "fm" };
    writeln!(out, "{kind},{},,", fm.fm).map_err(io)?;
    Ok(())
}
