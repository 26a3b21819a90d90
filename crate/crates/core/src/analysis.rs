//! Transfer functions, formant picking and positional errors.

use std::fmt::Write as _;

use rustfft::{num_complex::Complex, FftPlanner};
use thiserror::Error;

use crate::excitation::ExcitationSignal;
use crate::solver::PressureTrace;

/// Minimum height of a peak above the higher of its two flanking minima, dB.
pub const MIN_PROMINENCE_DB: f64 = 3.0;

/// Default formant search band, Hz.
pub const FORMANT_BAND: (f64, f64) = (100.0, 5_000.0);

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("degenerate spectrum: trace is identically zero")]
    DegenerateSpectrum,
    #[error("found {} of {wanted} formants; peaks at {found:?} Hz", found.len())]
    Extraction { wanted: usize, found: Vec<f64> },
    #[error("search band ({0} Hz, {1} Hz) is not covered by the spectrum")]
    Band(f64, f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("sample rates differ: trace {trace} Hz, excitation {excitation} Hz")]
    RateMismatch { trace: f64, excitation: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Magnitude spectrum of the recorded pressure.
    #[default]
    RawSpectrum,
    /// Pressure spectrum divided bin-wise by the excitation spectrum.
    ExcitationNormalized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction {
    /// Bin frequencies from 0 to Nyquist, Hz.
    pub freqs: Vec<f64>,
    /// Magnitude per bin, dB.
    pub magnitude: Vec<f64>,
    pub bin_width: f64,
    pub normalization: Normalization,
}

impl TransferFunction {
    /// Two columns: frequency in Hz, magnitude in dB.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.freqs.len() * 32);
        let _ = writeln!(out, "# bin_width_hz: {}", self.bin_width);
        for (f, m) in self.freqs.iter().zip(&self.magnitude) {
            let _ = writeln!(out, "{f} {m}");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FormantSet {
    /// Ascending peak frequencies, Hz.
    pub frequencies: Vec<f64>,
    pub peak_magnitudes: Vec<f64>,
    /// Bin index of each peak.
    pub bins: Vec<usize>,
}

impl FormantSet {
    pub fn f1(&self) -> f64 {
        self.frequencies[0]
    }

    pub fn f2(&self) -> f64 {
        self.frequencies[1]
    }

    pub fn f3(&self) -> f64 {
        self.frequencies[2]
    }
}

fn spectrum(samples: &[f64], n: usize) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .take(n)
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    buf.resize(n, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.truncate(n / 2 + 1);
    buf.iter().map(|c| c.norm()).collect()
}

fn to_db(x: f64) -> f64 {
    20.0 * x.max(1e-300).log10()
}

/// FFT of the whole trace, no window and no padding, so the bin width is
/// `sample_rate / len` (20 Hz for a 50 ms trace).
pub fn transfer_function(
    trace: &PressureTrace,
    excitation: &ExcitationSignal,
    normalization: Normalization,
) -> Result<TransferFunction, AnalysisError> {
    let n = trace.samples.len();
    if n == 0 {
        return Err(AnalysisError::EmptyTrace);
    }
    if trace.samples.iter().all(|&v| v == 0.0) {
        return Err(AnalysisError::DegenerateSpectrum);
    }
    let bin_width = trace.sample_rate / n as f64;
    let mags = spectrum(&trace.samples, n);
    let magnitude = match normalization {
        Normalization::RawSpectrum => mags.iter().map(|&m| to_db(m)).collect(),
        Normalization::ExcitationNormalized => {
            let rel = (excitation.sample_rate - trace.sample_rate).abs() / trace.sample_rate;
            if rel > 1e-9 {
                return Err(AnalysisError::RateMismatch {
                    trace: trace.sample_rate,
                    excitation: excitation.sample_rate,
                });
            }
            let ex = spectrum(&excitation.samples, n);
            mags.iter().zip(&ex).map(|(&m, &e)| to_db(m) - to_db(e)).collect()
        }
    };
    Ok(TransferFunction {
        freqs: (0..mags.len()).map(|k| k as f64 * bin_width).collect(),
        magnitude,
        bin_width,
        normalization,
    })
}

/// Local maxima of `x` with their prominence: the drop to the higher of the
/// two minima separating the peak from higher ground (or the array ends).
fn peaks_with_prominence(x: &[f64]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let n = x.len();
    let mut k = 1;
    while k + 1 < n {
        if x[k] > x[k - 1] {
            // extend across a plateau
            let mut end = k;
            while end + 1 < n && x[end + 1] == x[k] {
                end += 1;
            }
            if end + 1 < n && x[end + 1] < x[k] {
                let peak = x[k];
                let mut left_min = peak;
                for &v in x[..k].iter().rev() {
                    if v > peak {
                        break;
                    }
                    left_min = left_min.min(v);
                }
                let mut right_min = peak;
                for &v in &x[end + 1..] {
                    if v > peak {
                        break;
                    }
                    right_min = right_min.min(v);
                }
                out.push(((k + end) / 2, peak - left_min.max(right_min)));
            }
            k = end + 1;
        } else {
            k += 1;
        }
    }
    out
}

/// The first `count` peaks inside `search_band` whose prominence is at
/// least [`MIN_PROMINENCE_DB`], in ascending frequency.
pub fn extract_formants(
    tf: &TransferFunction,
    count: usize,
    search_band: (f64, f64),
) -> Result<FormantSet, AnalysisError> {
    let (lo, hi) = search_band;
    let top = tf.freqs.last().copied().unwrap_or(0.0);
    if !(lo >= 0.0 && lo < hi && hi <= top) {
        return Err(AnalysisError::Band(lo, hi));
    }
    let found: Vec<usize> = peaks_with_prominence(&tf.magnitude)
        .into_iter()
        .filter(|&(k, prom)| prom >= MIN_PROMINENCE_DB && tf.freqs[k] >= lo && tf.freqs[k] <= hi)
        .map(|(k, _)| k)
        .collect();
    if found.len() < count {
        return Err(AnalysisError::Extraction {
            wanted: count,
            found: found.iter().map(|&k| tf.freqs[k]).collect(),
        });
    }
    let bins: Vec<usize> = found.into_iter().take(count).collect();
    Ok(FormantSet {
        frequencies: bins.iter().map(|&k| tf.freqs[k]).collect(),
        peak_magnitudes: bins.iter().map(|&k| tf.magnitude[k]).collect(),
        bins,
    })
}

/// Signed percentage deviation `100 (measured - reference) / reference`.
pub fn positional_error(measured: f64, reference: f64) -> Result<f64, AnalysisError> {
    if !(reference > 0.0) {
        return Err(AnalysisError::Domain(format!(
            "reference frequency must be positive, got {reference}"
        )));
    }
    Ok(100.0 * (measured - reference) / reference)
}
