//! Band-limited velocity pulse for the glottal end.
//!
//! The pulse is the FIR kernel `h = lowpass(high) - w / sum(w)`, where the
//! low-pass is a short linear-phase Blackman-windowed sinc whose stopband
//! starts at the upper band edge and `w` is a long Blackman window. Both parts
//! have unit gain at DC, so the taps sum to zero and the pulse injects no net
//! volume. Both parts start at sample 0: the main lobe arrives within the
//! first half millisecond and the response has most of the trace to decay.

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

/// Length of the DC-removal window. Its response is below -35 dB from
/// 100 Hz upwards, which keeps the analysis band flat.
pub const DC_WINDOW_SECONDS: f64 = 0.025;

/// Width of the low-pass transition below the upper band edge.
pub const HIGH_TRANSITION_HZ: f64 = 6_000.0;

#[derive(Debug, Error, PartialEq)]
pub enum ExcitationError {
    #[error("invalid band ({low} Hz, {high} Hz) at sample rate {rate} Hz")]
    Band { low: f64, high: f64, rate: f64 },
    #[error("sample rate must be positive, got {0}")]
    Rate(f64),
    #[error("signal of {length} samples is shorter than the {kernel}-tap kernel")]
    TooShort { length: usize, kernel: usize },
    #[error("amplitude must be finite, got {0}")]
    Amplitude(f64),
}

/// Source velocity per time step, m/s.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcitationSignal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub band: (f64, f64),
}

impl ExcitationSignal {
    /// A single sample of `amplitude` at step 0, zero afterwards.
    pub fn impulse(sample_rate: f64, length: usize, amplitude: f64) -> Self {
        let mut samples = vec![0.0; length];
        if let Some(s) = samples.first_mut() {
            *s = amplitude;
        }
        Self {
            samples,
            sample_rate,
            band: (0.0, sample_rate / 2.0),
        }
    }

    pub fn zeros(sample_rate: f64, length: usize) -> Self {
        Self {
            samples: vec![0.0; length],
            sample_rate,
            band: (0.0, sample_rate / 2.0),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index of the last nonzero sample plus one.
    pub fn active_len(&self) -> usize {
        self.samples.iter().rposition(|&v| v != 0.0).map_or(0, |i| i + 1)
    }

    /// Two columns: sample index, velocity.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 24);
        let _ = writeln!(out, "# sample_rate_hz: {}", self.sample_rate);
        for (n, v) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{n} {v}");
        }
        out
    }
}

fn blackman(n: usize, len: usize) -> f64 {
    if len == 1 {
        return 1.0;
    }
    let x = 2.0 * PI * n as f64 / (len - 1) as f64;
    0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos()
}

fn odd(n: usize) -> usize {
    n | 1
}

/// Blackman-windowed sinc low-pass with unit DC gain.
fn lowpass_kernel(cutoff: f64, rate: f64, len: usize) -> Vec<f64> {
    let fc = cutoff / rate;
    let mid = (len / 2) as f64;
    let mut h: Vec<f64> = (0..len)
        .map(|n| {
            let t = n as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * t).sin() / (PI * t)
            };
            sinc * blackman(n, len)
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Taps of the band-pass kernel for `band` at `rate`.
pub fn band_pass_kernel(rate: f64, band: (f64, f64)) -> Result<Vec<f64>, ExcitationError> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(ExcitationError::Rate(rate));
    }
    let (low, high) = band;
    let bad = || ExcitationError::Band { low, high, rate };
    if !(low > 0.0 && low < high && high < rate / 2.0) {
        return Err(bad());
    }
    let transition = HIGH_TRANSITION_HZ.min(high / 2.0);
    let cutoff = high - transition / 2.0;
    if cutoff + transition / 2.0 >= rate / 2.0 {
        return Err(bad());
    }
    // Blackman: about 5.5 / N normalised transition width
    let high_len = odd((5.5 * rate / transition).ceil() as usize);
    let dc_len = odd((DC_WINDOW_SECONDS * rate).round() as usize);
    let len = high_len.max(dc_len);

    let lp = lowpass_kernel(cutoff, rate, high_len);
    let wsum: f64 = (0..dc_len).map(|n| blackman(n, dc_len)).sum();
    let mut h = vec![0.0; len];
    for (n, v) in lp.iter().enumerate() {
        h[n] += v;
    }
    for (n, v) in h.iter_mut().enumerate().take(dc_len) {
        *v -= blackman(n, dc_len) / wsum;
    }
    Ok(h)
}

/// Band-passed velocity pulse of `length` samples with peak `amplitude`.
///
/// The kernel is placed at the start of the signal and the rest is zero.
pub fn make_band_passed_pulse(
    sample_rate: f64,
    length: usize,
    band: (f64, f64),
    amplitude: f64,
) -> Result<ExcitationSignal, ExcitationError> {
    if !amplitude.is_finite() {
        return Err(ExcitationError::Amplitude(amplitude));
    }
    let h = band_pass_kernel(sample_rate, band)?;
    if length < h.len() {
        return Err(ExcitationError::TooShort {
            length,
            kernel: h.len(),
        });
    }
    let peak = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut samples = vec![0.0; length];
    for (s, v) in samples.iter_mut().zip(&h) {
        *s = v * amplitude / peak;
    }
    Ok(ExcitationSignal {
        samples,
        sample_rate,
        band,
    })
}
