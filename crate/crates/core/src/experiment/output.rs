//! Run artefacts: formant reports, audio and field snapshots.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{ExperimentError, RunReport};
use crate::solver::{PressureTrace, YeeGrid};

/// Magic number at the start of every snapshot file, `"P25D"` little endian.
pub const SNAPSHOT_MAGIC: u32 = u32::from_le_bytes(*b"P25D");

/// Peak level of exported audio, dBFS.
pub const AUDIO_PEAK_DBFS: f64 = -1.0;

/// Traces quieter than this (relative to full scale 1.0) are written
/// without normalisation.
pub const SILENCE_DBFS: f64 = -120.0;

/// Half-length of the resampling kernel in output samples.
const RESAMPLE_HALF_TAPS: f64 = 16.0;

/// Formant report as `key = value` lines.
pub fn formant_report(report: &RunReport) -> String {
    let mut out = String::new();
    let e = &report.entry;
    let _ = writeln!(out, "vowel = \"{}\"", e.vowel);
    let _ = writeln!(out, "mode = \"{}\"", e.termination.label());
    let _ = writeln!(out, "resolution = \"{}\"", e.resolution.label());
    let _ = writeln!(out, "solver = \"{}\"", e.solver.label());
    let _ = writeln!(out, "domain = [{}, {}]", report.domain_size.0, report.domain_size.1);
    if let Some(fs) = &report.formants {
        for (k, f) in fs.frequencies.iter().enumerate() {
            let _ = writeln!(out, "f{} = {:.1}", k + 1, f);
        }
    }
    if let Some(errs) = &report.errors {
        for (k, v) in errs.iter().enumerate() {
            let _ = writeln!(out, "err{} = {:.2}", k + 1, v);
        }
    }
    if let Some(msg) = &report.analysis_error {
        let _ = writeln!(out, "analysis_error = {:?}", msg);
    }
    out
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Band-limited resampling with a Blackman-windowed sinc whose cutoff is the
/// lower of the two Nyquist frequencies. The output holds
/// `round(duration * target_rate)` samples.
pub fn resample(samples: &[f64], rate: f64, target_rate: f64) -> Vec<f64> {
    let ratio = rate / target_rate;
    let out_len = (samples.len() as f64 / ratio).round() as usize;
    // cutoff slightly below the target Nyquist, in input-sample units
    let cutoff = 0.95 / ratio.max(1.0);
    let half = RESAMPLE_HALF_TAPS * ratio.max(1.0);
    (0..out_len)
        .map(|m| {
            let t = m as f64 * ratio;
            let lo = (t - half).ceil().max(0.0) as usize;
            let hi = ((t + half).floor() as usize).min(samples.len().saturating_sub(1));
            let mut acc = 0.0;
            for (n, &x) in samples.iter().enumerate().take(hi + 1).skip(lo) {
                let d = n as f64 - t;
                let w = 0.42 + 0.5 * (PI * d / half).cos() + 0.08 * (2.0 * PI * d / half).cos();
                acc += x * cutoff * sinc(cutoff * d) * w;
            }
            acc
        })
        .collect()
}

/// Writes the trace as 16-bit mono WAV at `target_rate`, peak-normalised to
/// -1 dBFS. Returns the number of samples written.
pub fn export_audio(trace: &PressureTrace, target_rate: u32, path: &Path) -> Result<usize, ExperimentError> {
    let target = f64::from(target_rate);
    if target_rate == 0 || target > trace.sample_rate {
        return Err(ExperimentError::Parameter(format!(
            "audio rate {target_rate} Hz must lie in (0, {}] Hz",
            trace.sample_rate
        )));
    }
    let mut audio = resample(&trace.samples, trace.sample_rate, target);
    let peak = audio.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 10f64.powf(SILENCE_DBFS / 20.0) {
        let gain = 10f64.powf(AUDIO_PEAK_DBFS / 20.0) / peak;
        audio.iter_mut().for_each(|v| *v *= gain);
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: target_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| ExperimentError::Audio(e.to_string()))?;
    for v in &audio {
        let s = (v.clamp(-1.0, 1.0) * f64::from(i16::MAX)).round() as i16;
        writer.write_sample(s).map_err(|e| ExperimentError::Audio(e.to_string()))?;
    }
    writer.finalize().map_err(|e| ExperimentError::Audio(e.to_string()))?;
    Ok(audio.len())
}

/// Pressure field as a 16-byte header (magic, width, height, step; `u32`
/// little endian) followed by row-major `f32` values, bottom row first.
pub fn write_snapshot(grid: &YeeGrid, step: usize, path: &Path) -> Result<(), ExperimentError> {
    let geo = grid.geometry();
    let file = File::create(path).map_err(|e| ExperimentError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = [SNAPSHOT_MAGIC, geo.width as u32, geo.height as u32, step as u32];
    let write = |w: &mut BufWriter<File>, bytes: &[u8]| w.write_all(bytes).map_err(|e| ExperimentError::io(path, e));
    for h in header {
        write(&mut w, &h.to_le_bytes())?;
    }
    for p in &grid.p {
        write(&mut w, &(*p as f32).to_le_bytes())?;
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))
}

/// Reads a snapshot back as `(width, height, step, values)`.
pub fn read_snapshot(path: &Path) -> Result<(usize, usize, usize, Vec<f32>), ExperimentError> {
    let bytes = std::fs::read(path).map_err(|e| ExperimentError::io(path, e))?;
    let word = |k: usize| -> Option<u32> {
        bytes.get(4 * k..4 * k + 4).map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    };
    let bad = || ExperimentError::Parameter(format!("{} is not a snapshot file", path.display()));
    if word(0) != Some(SNAPSHOT_MAGIC) {
        return Err(bad());
    }
    let (w, h, step) = (word(1).ok_or_else(bad)?, word(2).ok_or_else(bad)?, word(3).ok_or_else(bad)?);
    let body = &bytes[16..];
    if body.len() != 4 * (w as usize) * (h as usize) {
        return Err(bad());
    }
    let values = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok((w as usize, h as usize, step as usize, values))
}
