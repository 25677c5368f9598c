//! Drone removal, harmonic/percussive separation and the STFT they rely on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{hann, median, RealFft};
use crate::{AudioBuffer, Error, Result};

pub const DEFAULT_FRAME_LEN: usize = 2048;
pub const DEFAULT_HOP: usize = 512;
pub const NOTCH_Q: f64 = 30.0;
pub const DEFAULT_DRONE_HARMONICS: usize = 4;
pub const HPSS_KERNEL: usize = 17;
const HPSS_EPS: f64 = 1e-10;

/// Magnitude/phase STFT, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Vec<f64>,
    pub phases: Vec<f64>,
    pub frames: usize,
    pub bins: usize,
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate_hz: u32,
}

impl Spectrogram {
    pub fn frame(&self, i: usize) -> &[f64] {
        &self.magnitudes[i * self.bins..(i + 1) * self.bins]
    }

    pub fn magnitude(&self, frame: usize, bin: usize) -> f64 {
        self.magnitudes[frame * self.bins + bin]
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate_hz as f64 / self.frame_len as f64
    }

    /// Frequency in Hz of each bin.
    pub fn frequencies(&self) -> Vec<f64> {
        let w = self.bin_hz();
        (0..self.bins).map(|k| k as f64 * w).collect()
    }

    fn check(&self) -> Result<()> {
        if self.frame_len == 0 || self.bins != self.frame_len / 2 + 1 {
            return Err(Error::InconsistentGeometry(format!(
                "{} bins for frame length {}",
                self.bins, self.frame_len
            )));
        }
        if self.hop == 0 || self.hop > self.frame_len {
            return Err(Error::InconsistentGeometry(format!("hop {} for frame length {}", self.hop, self.frame_len)));
        }
        let cells = self.frames * self.bins;
        if self.magnitudes.len() != cells || self.phases.len() != cells {
            return Err(Error::InconsistentGeometry("matrix size does not match frames × bins".into()));
        }
        Ok(())
    }
}

/// Hann-windowed STFT without padding:
/// `floor((len - frame_len) / hop) + 1` frames of `frame_len / 2 + 1` bins.
pub fn stft(buf: &AudioBuffer, frame_len: usize, hop: usize) -> Result<Spectrogram> {
    if !frame_len.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("frame length {frame_len} is not a power of two")));
    }
    if hop == 0 || hop > frame_len {
        return Err(Error::InvalidParameter(format!("hop {hop} not in 1..={frame_len}")));
    }
    if buf.len() < frame_len {
        return Err(Error::BufferTooShort { needed: frame_len, got: buf.len() });
    }
    let frames = (buf.len() - frame_len) / hop + 1;
    let bins = frame_len / 2 + 1;
    let window = hann(frame_len);
    let fft = RealFft::new(frame_len);

    let mut magnitudes = Vec::with_capacity(frames * bins);
    let mut phases = Vec::with_capacity(frames * bins);
    let mut frame = vec![0.0; frame_len];
    for i in 0..frames {
        let start = i * hop;
        for (j, v) in frame.iter_mut().enumerate() {
            *v = buf.samples[start + j] * window[j];
        }
        for c in fft.forward(&frame) {
            magnitudes.push(c.norm());
            phases.push(c.arg());
        }
    }
    Ok(Spectrogram { magnitudes, phases, frames, bins, frame_len, hop, sample_rate_hz: buf.sample_rate_hz })
}

/// Weighted overlap-add inverse of [`stft`].
///
/// Output length is `(frames - 1) * hop + frame_len`. Samples whose summed squared
/// window is negligible (the outer edges) come out as zero.
pub fn istft(spec: &Spectrogram) -> Result<AudioBuffer> {
    spec.check()?;
    if spec.frames == 0 {
        return Err(Error::InconsistentGeometry("no frames".into()));
    }
    let n = spec.frame_len;
    let out_len = (spec.frames - 1) * spec.hop + n;
    let window = hann(n);
    let fft = RealFft::new(n);
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let mut half = vec![Complex64::new(0.0, 0.0); spec.bins];

    for i in 0..spec.frames {
        let row = i * spec.bins;
        for (k, c) in half.iter_mut().enumerate() {
            *c = Complex64::from_polar(spec.magnitudes[row + k], spec.phases[row + k]);
        }
        let frame = fft.inverse(&half);
        let start = i * spec.hop;
        for j in 0..n {
            out[start + j] += frame[j] * window[j];
            norm[start + j] += window[j] * window[j];
        }
    }
    for (o, w) in out.iter_mut().zip(&norm) {
        *o = if *w > 1e-8 { *o / w } else { 0.0 };
    }
    Ok(AudioBuffer::new(out, spec.sample_rate_hz))
}

/// Cascade of second-order IIR notches (Q = 30) at `drone_hz * k`, `k = 1..=harmonics`.
/// Harmonics at or above Nyquist are skipped.
pub fn notch_drone(buf: &AudioBuffer, drone_hz: f64, harmonics: usize) -> Result<AudioBuffer> {
    let nyquist = buf.nyquist_hz();
    if !(drone_hz > 0.0 && drone_hz < nyquist) {
        return Err(Error::FrequencyOutOfRange { hz: drone_hz, nyquist });
    }
    if harmonics == 0 {
        return Err(Error::InvalidParameter("at least one harmonic is required".into()));
    }
    let mut samples = buf.samples.clone();
    for k in 1..=harmonics {
        let f = drone_hz * k as f64;
        if f >= nyquist {
            break;
        }
        Biquad::notch(f, NOTCH_Q, buf.sample_rate_hz as f64).run(&mut samples);
    }
    Ok(AudioBuffer::new(samples, buf.sample_rate_hz))
}

/// Direct form I biquad with `a0` normalized to 1.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn notch(freq_hz: f64, q: f64, rate_hz: f64) -> Self {
        let w0 = 2.0 * std::f64::consts::PI * freq_hz / rate_hz;
        let alpha = w0.sin() / (2.0 * q);
        let cos = w0.cos();
        let a0 = 1.0 + alpha;
        Biquad { b0: 1.0 / a0, b1: -2.0 * cos / a0, b2: 1.0 / a0, a1: -2.0 * cos / a0, a2: (1.0 - alpha) / a0 }
    }

    pub(crate) fn run(&self, samples: &mut [f64]) {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        for s in samples.iter_mut() {
            let x0 = *s;
            let y0 = self.b0 * x0 + self.b1 * x1 + self.b2 * x2 - self.a1 * y1 - self.a2 * y2;
            x2 = x1;
            x1 = x0;
            y2 = y1;
            y1 = y0;
            *s = y0;
        }
    }
}

/// Keeps the harmonic part of a spectrogram.
///
/// A time-direction median (17 frames) enhances sustained partials, a
/// frequency-direction median (17 bins) enhances broadband events, and the
/// soft mask `H² / (H² + P² + ε)` is applied to the input magnitudes.
/// Windows are truncated at the matrix edges. Phases pass through unchanged.
pub fn hpss_harmonic(spec: &Spectrogram) -> Result<Spectrogram> {
    spec.check()?;
    if spec.frames == 0 {
        return Err(Error::InvalidParameter("empty spectrogram".into()));
    }
    let (frames, bins) = (spec.frames, spec.bins);
    let r = HPSS_KERNEL / 2;
    let mut scratch = Vec::with_capacity(HPSS_KERNEL);
    let mut out = spec.clone();

    for t in 0..frames {
        let t_lo = t.saturating_sub(r);
        let t_hi = (t + r).min(frames - 1);
        for k in 0..bins {
            scratch.clear();
            scratch.extend((t_lo..=t_hi).map(|u| spec.magnitude(u, k)));
            let harmonic = median(&mut scratch);

            let k_lo = k.saturating_sub(r);
            let k_hi = (k + r).min(bins - 1);
            scratch.clear();
            scratch.extend_from_slice(&spec.frame(t)[k_lo..=k_hi]);
            let percussive = median(&mut scratch);

            let h2 = harmonic * harmonic;
            let mask = h2 / (h2 + percussive * percussive + HPSS_EPS);
            out.magnitudes[t * bins + k] *= mask;
        }
    }
    Ok(out)
}

/// Notch (when a drone frequency is given), then STFT, harmonic mask and inverse STFT.
///
/// The signal is zero-padded by one frame on each side before the STFT so every
/// original sample sees full window overlap; the output is trimmed back to the
/// input length.
pub fn preprocess_pipeline(buf: &AudioBuffer, drone_hz: Option<f64>) -> Result<AudioBuffer> {
    if buf.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let notched = match drone_hz {
        Some(f) => notch_drone(buf, f, DEFAULT_DRONE_HARMONICS)?,
        None => buf.clone(),
    };

    let (n, hop) = (DEFAULT_FRAME_LEN, DEFAULT_HOP);
    let mut padded_len = buf.len() + 2 * n;
    padded_len += (hop - (padded_len - n) % hop) % hop;
    let mut padded = vec![0.0; padded_len];
    padded[n..n + buf.len()].copy_from_slice(&notched.samples);
    let padded = AudioBuffer::new(padded, buf.sample_rate_hz);

    let spec = stft(&padded, n, hop)?;
    let harmonic = hpss_harmonic(&spec)?;
    let rebuilt = istft(&harmonic)?;
    Ok(AudioBuffer::new(rebuilt.samples[n..n + buf.len()].to_vec(), buf.sample_rate_hz))
}

/// Energy change in a frequency band between two signals, for checking what
/// preprocessing removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandChange {
    pub low_hz: f64,
    pub high_hz: f64,
    /// `10 log10(after / before)`; negative means attenuation.
    pub change_db: f64,
}

/// Summed STFT power of `buf` between `low_hz` and `high_hz` (inclusive).
pub fn band_energy(buf: &AudioBuffer, low_hz: f64, high_hz: f64) -> Result<f64> {
    let spec = stft(buf, DEFAULT_FRAME_LEN, DEFAULT_HOP)?;
    let w = spec.bin_hz();
    let lo = (low_hz / w).ceil().max(0.0) as usize;
    let hi = ((high_hz / w).floor() as usize).min(spec.bins - 1);
    let mut total = 0.0;
    for t in 0..spec.frames {
        for k in lo..=hi {
            let m = spec.magnitude(t, k);
            total += m * m;
        }
    }
    Ok(total)
}

pub fn band_change(before: &AudioBuffer, after: &AudioBuffer, low_hz: f64, high_hz: f64) -> Result<BandChange> {
    let b = band_energy(before, low_hz, high_hz)?;
    let a = band_energy(after, low_hz, high_hz)?;
    let change_db = 10.0 * ((a + 1e-20) / (b + 1e-20)).log10();
    Ok(BandChange { low_hz, high_hz, change_db })
}
