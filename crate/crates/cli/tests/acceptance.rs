//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use phonia::audio::{AnalysisFrame, AudioBuffer, FrameKind};
use phonia::gci::detect_gci;
use phonia::iaif::iaif_analyze;
use phonia::infotheory::{build_report, class_entropy, discretize, ClassLabel, LabeledDataset};
use phonia::pipeline::{analyze_buffer, AnalysisConfig, FileFeatures, FEATURE_NAMES};
use phonia::pitch::track_pitch;
use phonia::spectrum::MelFilterbank;
use phonia::speech::{max_voiced_frequency, perceptive_energies, spectral_balances, spectral_centroid};
use phonia::synth::{synth_vowel, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde_json::Value;

const SR: u32 = 16000;
const FRAME_30MS: usize = 481;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn column(ff: &FileFeatures, name: &str) -> Vec<f64> {
    let i = FEATURE_NAMES.iter().position(|n| *n == name).unwrap();
    ff.frames.iter().map(|f| f.values[i]).collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn ncc(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    ab / (aa * bb).sqrt()
}

// Direct-summation information measures over explicit count tables.

fn oracle_entropy(labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let mut h = 0.0;
    for c in 0..2 {
        let p = labels.iter().filter(|&&l| l == c).count() as f64 / n;
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h
}

/// `I(X;C)` where `x` takes values in `0..cells`.
fn oracle_mi(x: &[usize], cells: usize, labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let mut joint = vec![[0usize; 2]; cells];
    for (&v, &c) in x.iter().zip(labels) {
        joint[v][c] += 1;
    }
    let pc: Vec<f64> = (0..2).map(|c| joint.iter().map(|r| r[c]).sum::<usize>() as f64 / n).collect();
    let mut mi = 0.0;
    for row in &joint {
        let px = (row[0] + row[1]) as f64 / n;
        for c in 0..2 {
            let pxc = row[c] as f64 / n;
            if pxc > 0.0 {
                mi += pxc * (pxc / (px * pc[c])).log2();
            }
        }
    }
    mi
}

fn criterion_1_and_2() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2011);
    let mut worst: f64 = 0.0;
    let mut identity_ok = true;
    let mut reports = 0;
    for _ in 0..25 {
        let n = rng.random_range(20..=1000);
        let n_features = rng.random_range(2..=4);
        let bins = rng.random_range(2..=8);
        let mut labels: Vec<usize> = (0..n).map(|_| usize::from(rng.random_bool(0.35))).collect();
        labels[0] = 0;
        labels[1] = 1;
        let columns: Vec<Vec<f64>> = (0..n_features)
            .map(|_| (0..n).map(|r| rng.random::<f64>() + 0.3 * labels[r] as f64).collect())
            .collect();
        let class: Vec<ClassLabel> = labels.iter().map(|&l| ClassLabel::ALL[l]).collect();
        let names = (0..n_features).map(|i| format!("f{i}")).collect();
        let ds = LabeledDataset::new(names, columns.clone(), class.clone()).unwrap();
        let report = build_report(&ds, bins).unwrap();
        reports += 1;
        identity_ok &= report.identity_holds();

        let cells: Vec<Vec<usize>> = columns
            .iter()
            .map(|c| discretize(c, bins).unwrap().bins.iter().map(|&b| b as usize).collect())
            .collect();
        let h = oracle_entropy(&labels);
        worst = worst.max((class_entropy(&class) - h).abs()).max((report.class_entropy_bits - h).abs());
        let intrinsic: Vec<f64> = cells.iter().map(|x| oracle_mi(x, bins, &labels)).collect();
        for (a, b) in report.intrinsic_bits.iter().zip(&intrinsic) {
            worst = worst.max((a - b).abs());
        }
        for p in &report.pairs {
            let pair: Vec<usize> = cells[p.i].iter().zip(&cells[p.j]).map(|(a, b)| a * bins + b).collect();
            let joint = oracle_mi(&pair, bins * bins, &labels);
            let redundancy = intrinsic[p.i] + intrinsic[p.j] - joint;
            worst = worst.max((p.joint_bits - joint).abs()).max((p.redundancy_bits - redundancy).abs());
        }
    }
    let elapsed = start.elapsed();
    (
        outcome(
            worst <= 1e-12 && elapsed < Duration::from_secs(10),
            format!("max deviation {worst:.2e} bits over 25 datasets in {elapsed:.2?}"),
        ),
        outcome(identity_ok, format!("joint = Ii + Ij - redundancy on every pair of {reports} reports")),
    )
}

fn criterion_3() -> Outcome {
    let names = vec!["a".to_string(), "b".to_string()];
    let mut rows = Vec::new();
    for _ in 0..25 {
        for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
            let label = if a != b { ClassLabel::Pathological } else { ClassLabel::Normal };
            rows.push((vec![a, b], label));
        }
    }
    let xor = build_report(&LabeledDataset::from_rows(names.clone(), &rows).unwrap(), 2).unwrap();
    let pair = &xor.pairs[0];
    let xor_ok = (xor.class_entropy_bits - 1.0).abs() <= 1e-12
        && (pair.redundancy_bits + 1.0).abs() <= 1e-12
        && (pair.joint_bits - 1.0).abs() <= 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dup_rows: Vec<(Vec<f64>, ClassLabel)> = (0..400)
        .map(|_| {
            let label = if rng.random_bool(0.4) { ClassLabel::Pathological } else { ClassLabel::Normal };
            let v = rng.random::<f64>() + if label == ClassLabel::Normal { 0.4 } else { 0.0 };
            (vec![v, v], label)
        })
        .collect();
    let dup = build_report(&LabeledDataset::from_rows(names, &dup_rows).unwrap(), 8).unwrap();
    let dup_ok = (dup.pairs[0].redundancy_bits - dup.intrinsic_bits[0]).abs() <= 1e-12;
    outcome(
        xor_ok && dup_ok,
        format!(
            "XOR: H(C) = {}, redundancy = {}, joint = {}; duplicate: redundancy - intrinsic = {:.1e}",
            xor.class_entropy_bits,
            pair.redundancy_bits,
            pair.joint_bits,
            dup.pairs[0].redundancy_bits - dup.intrinsic_bits[0]
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut labels = vec![ClassLabel::Normal; 107_000];
    labels.extend(std::iter::repeat_n(ClassLabel::Pathological, 32_000));
    let h = class_entropy(&labels);
    outcome((h - 0.7833).abs() <= 0.0001, format!("H(C) = {h:.6} bits, expected 0.7833 ± 0.0001"))
}

fn noise(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let fb = MelFilterbank::for_frame(FRAME_30MS, SR).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        // Random gain and random first-order colouring.
        let gain = 10f64.powf(rng.random_range(-3.0..3.0));
        let tilt: f64 = rng.random_range(-0.95..0.95);
        let white = noise(FRAME_30MS, &mut rng);
        let mut prev = 0.0;
        let raw: Vec<f64> = white
            .iter()
            .map(|w| {
                prev = w + tilt * prev;
                gain * prev
            })
            .collect();
        let frame = AnalysisFrame::from_raw(raw, FrameKind::FixedLength30ms, 100.0, SR).unwrap();
        let b = spectral_balances(&perceptive_energies(&frame, &fb).unwrap()).unwrap();
        worst = worst.max((b.bal1 + b.bal2 + b.bal3 - 1.0).abs());
    }
    let u = spectral_balances(&[1.0; 24]).unwrap();
    let uniform_ok = (u.bal1, u.bal2, u.bal3) == (4.0 / 24.0, 8.0 / 24.0, 12.0 / 24.0);
    outcome(
        worst <= 1e-9 && uniform_ok,
        format!(
            "max |sum - 1| = {worst:.1e} over 1000 frames; uniform = ({}, {}, {})",
            u.bal1, u.bal2, u.bal3
        ),
    )
}

/// White noise with every DFT component below `cut_hz` removed.
fn highband_noise(n: usize, cut_hz: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let size = n.next_power_of_two();
    let mut buf: Vec<Complex<f64>> = noise(size, rng).into_iter().map(|v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        if (k.min(size - k) as f64) * f64::from(SR) / (size as f64) < cut_hz {
            *c = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    buf[..n].iter().map(|c| c.re / size as f64).collect()
}

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let n = SR as usize;
    let (mut hits, mut total) = (0, 0);
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let phases: Vec<f64> = (0..20).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        let harmonic: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / f64::from(SR);
                phases.iter().enumerate().map(|(k, p)| (2.0 * PI * 100.0 * (k + 1) as f64 * t + p).sin()).sum()
            })
            .collect();
        let masking = highband_noise(n, 2000.0, &mut rng);
        let g = (power(&harmonic) / power(&masking)).sqrt();
        let x: Vec<f64> = harmonic.iter().zip(&masking).map(|(h, m)| h + g * m).collect();
        for start in (0..n - FRAME_30MS).step_by(800) {
            let raw = x[start..start + FRAME_30MS].to_vec();
            let frame = AnalysisFrame::from_raw(raw, FrameKind::FixedLength30ms, 100.0, SR).unwrap();
            let fm = max_voiced_frequency(&frame, 100.0).unwrap().fm;
            total += 1;
            if (fm - 2000.0).abs() <= 100.0 {
                hits += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let share = hits as f64 / total as f64;
    outcome(
        share >= 0.9 && elapsed < Duration::from_secs(30),
        format!("Fm within 2000 ± 100 Hz on {hits}/{total} frames ({:.1}%) in {elapsed:.2?}", 100.0 * share),
    )
}

fn sine(freq: f64, phase: f64) -> Vec<f64> {
    (0..FRAME_30MS).map(|i| (2.0 * PI * freq * i as f64 / f64::from(SR) + phase).sin()).collect()
}

fn criterion_7() -> Outcome {
    let frame = |raw| AnalysisFrame::from_raw(raw, FrameKind::FixedLength30ms, 100.0, SR).unwrap();
    let one = spectral_centroid(&frame(sine(1000.0, 0.0))).unwrap();
    let pair: Vec<f64> = sine(1000.0, 0.0).iter().zip(sine(3000.0, 1.0)).map(|(a, b)| a + b).collect();
    let two = spectral_centroid(&frame(pair)).unwrap();
    outcome(
        (one - 1000.0).abs() <= 15.0 && (two - 2000.0).abs() <= 30.0,
        format!("1 kHz tone -> {one:.2} Hz; 1 + 3 kHz pair -> {two:.2} Hz"),
    )
}

fn criterion_8() -> Outcome {
    let cfg = AnalysisConfig::default();
    let medians: Vec<f64> = [None, Some(20.0), Some(10.0), Some(0.0)]
        .into_iter()
        .map(|hnr| {
            let spec = SynthSpec {
                f0: 120.0,
                hnr_target: hnr,
                seed: 8,
                ..SynthSpec::default()
            };
            let ff = analyze_buffer(&synth_vowel(&spec).unwrap().speech, &cfg).unwrap();
            median(&column(&ff, "S_HNR"))
        })
        .collect();
    let decreasing = medians.windows(2).all(|w| w[0] > w[1]);
    outcome(
        decreasing && medians[3].abs() <= 1.5,
        format!(
            "median HNR for targets inf/20/10/0 dB: {:.2} / {:.2} / {:.2} / {:.2}",
            medians[0], medians[1], medians[2], medians[3]
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for f0 in [80.0, 120.0, 200.0] {
        let out = synth_vowel(&SynthSpec {
            f0,
            seed: 9,
            ..SynthSpec::default()
        })
        .unwrap();
        let pitch = track_pitch(&out.speech, 60.0, 400.0).unwrap();
        let gcis = detect_gci(&out.speech, &pitch);
        // ±0.25 ms at 16 kHz.
        let hits = gcis
            .instants
            .iter()
            .filter(|&&g| out.true_gcis.instants.iter().any(|&t| t.abs_diff(g) <= 4))
            .count();
        let share = hits as f64 / gcis.len().max(1) as f64;
        pass &= !gcis.is_empty() && share >= 0.95;
        parts.push(format!("{f0} Hz {hits}/{}", gcis.len()));
    }
    outcome(pass, format!("GCIs within ±0.25 ms: {}", parts.join(", ")))
}

fn criterion_10() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, poles) in [
        ("one formant", vec![(600.0, 80.0)]),
        ("two formants", vec![(700.0, 90.0), (1200.0, 110.0)]),
    ] {
        let out = synth_vowel(&SynthSpec {
            f0: 110.0,
            tract_poles: poles,
            seed: 10,
            ..SynthSpec::default()
        })
        .unwrap();
        let pitch = track_pitch(&out.speech, 60.0, 400.0).unwrap();
        let gcis = detect_gci(&out.speech, &pitch);
        let res = iaif_analyze(&out.speech, &gcis, &pitch);
        let good = res
            .frames
            .iter()
            .filter(|f| {
                let len = f.samples.len();
                let w = phonia::audio::blackman_window(len).unwrap();
                let start = f.center_gci - len / 2;
                let truth: Vec<f64> =
                    out.true_source.samples[start..start + len].iter().zip(&w).map(|(a, b)| a * b).collect();
                ncc(&f.samples, &truth) >= 0.8
            })
            .count();
        let total = res.frames.len();
        pass &= total > 0 && good as f64 >= 0.8 * total as f64;
        parts.push(format!("{name} {good}/{total}"));
    }
    outcome(pass, format!("frames with NCC >= 0.8: {}", parts.join(", ")))
}

fn criterion_11() -> Outcome {
    let cfg = AnalysisConfig::default();
    let run = |sharpness: f64| {
        let spec = SynthSpec {
            f0: 120.0,
            closure_sharpness: sharpness,
            seed: 11,
            ..SynthSpec::default()
        };
        analyze_buffer(&synth_vowel(&spec).unwrap().speech, &cfg).unwrap()
    };
    let (abrupt, smooth) = (run(1.0), run(0.0));
    let idx = FEATURE_NAMES.iter().position(|n| *n == "G_minGCI").unwrap();
    let half_period = (f64::from(SR) / 120.0 / 2.0) as usize;
    let (mut ordered, mut pairs) = (0, 0);
    for a in &abrupt.frames {
        let Some(s) = smooth.frames.iter().min_by_key(|s| s.center_gci.abs_diff(a.center_gci)) else {
            continue;
        };
        if s.center_gci.abs_diff(a.center_gci) > half_period {
            continue;
        }
        pairs += 1;
        if a.values[idx].abs() > s.values[idx].abs() {
            ordered += 1;
        }
    }
    let share = ordered as f64 / pairs.max(1) as f64;
    outcome(
        pairs > 0 && share >= 0.95,
        format!("|minGCI| abrupt > smooth on {ordered}/{pairs} frame pairs ({:.1}%)", 100.0 * share),
    )
}

fn phonia_cmd(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_phonia")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("phonia {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn pipeline_run(dir: &Path) -> Result<(), String> {
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    phonia_cmd(&["synth", "-o", &p("corpus"), "-n", "50"])?;
    phonia_cmd(&["extract", &p("corpus/manifest.csv"), "-o", &p("table.csv")])?;
    phonia_cmd(&["analyze", &p("table.csv"), "-o", &p("report.json")])
}

fn criterion_12() -> Outcome {
    let (first, second) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let start = Instant::now();
    if let Err(e) = pipeline_run(first.path()) {
        return outcome(false, e);
    }
    let elapsed = start.elapsed();
    if let Err(e) = pipeline_run(second.path()) {
        return outcome(false, e);
    }
    let identical = ["corpus/manifest.csv", "table.csv", "report.json", "report.csv"]
        .iter()
        .all(|f| fs::read(first.path().join(f)).ok() == fs::read(second.path().join(f)).ok());

    let report: Value = serde_json::from_slice(&fs::read(first.path().join("report.json")).unwrap()).unwrap();
    let names: Vec<&str> = report["feature_names"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let values: Vec<f64> = report["relative_intrinsic"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let all_present = names == FEATURE_NAMES;
    let rank = |name: &str| {
        let v = values[names.iter().position(|n| *n == name).unwrap()];
        1 + values.iter().filter(|&&o| o > v).count()
    };
    let (hnr, min_gci) = (rank("S_HNR"), rank("G_minGCI"));
    outcome(
        elapsed < Duration::from_secs(300) && identical && all_present && hnr <= 5 && min_gci <= 5,
        format!(
            "synth+extract+analyze in {elapsed:.1?}; S_HNR rank {hnr}, G_minGCI rank {min_gci}; 15 features: {all_present}; rerun identical: {identical}"
        ),
    )
}

fn criterion_13() -> Outcome {
    let spec = SynthSpec {
        f0: 120.0,
        vibrato_depth_hz: 5.0,
        vibrato_rate_hz: 5.0,
        seed: 13,
        ..SynthSpec::default()
    };
    let speech = synth_vowel(&spec).unwrap().speech;
    let cfg = AnalysisConfig {
        normalize: false,
        ..AnalysisConfig::default()
    };
    let base = analyze_buffer(&speech, &cfg).unwrap();
    let max_df0 = column(&base, "P_DeltaF0").iter().fold(0.0_f64, |m, v| m.max(v.abs()));

    let louder = AudioBuffer::new(speech.samples.iter().map(|v| v * 3.0).collect(), speech.sample_rate);
    let loud = analyze_buffer(&louder, &cfg).unwrap();
    let (a, b) = (column(&base, "P_DeltaE"), column(&loud, "P_DeltaE"));
    let same_rows = a.len() == b.len() && !a.is_empty();
    let worst = a.iter().zip(&b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    outcome(
        (max_df0 - 5.0).abs() <= 1.0 && same_rows && worst <= 1e-9,
        format!("max |DeltaF0| = {max_df0:.2} Hz; x3 gain changes DeltaE by at most {worst:.1e} dB over {} frames", a.len()),
    )
}

fn main() {
    let (c1, c2) = criterion_1_and_2();
    let results = [
        (1, "information measures match direct summation", c1),
        (2, "joint/redundancy identity", c2),
        (3, "synergy and redundancy signs", criterion_3()),
        (4, "class entropy value", criterion_4()),
        (5, "spectral balances", criterion_5()),
        (6, "maximum voiced frequency recovery", criterion_6()),
        (7, "spectral centre of gravity", criterion_7()),
        (8, "HNR ordering", criterion_8()),
        (9, "GCI accuracy", criterion_9()),
        (10, "inverse filtering fidelity", criterion_10()),
        (11, "minGCI discrimination", criterion_11()),
        (12, "end-to-end corpus run", criterion_12()),
        (13, "prosody", criterion_13()),
    ];
    let mut failed = 0;
    for (n, name, o) in &results {
        println!("criterion {n:>2} {:<4} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
