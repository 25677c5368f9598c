//! YIN pitch tracking and the contour-based measures built on it.

use serde::{Deserialize, Serialize};

use crate::dsp::{median, parabolic_offset, RealFft};
use crate::{AudioBuffer, Error, Result};

pub const DEFAULT_F_MIN: f64 = 80.0;
pub const DEFAULT_F_MAX: f64 = 1000.0;
pub const YIN_THRESHOLD: f64 = 0.15;
/// Samples integrated by the difference function at each lag.
pub const YIN_WINDOW: usize = 512;
pub const PITCH_HOP: usize = 128;

/// Per-frame fundamental frequency. Unvoiced frames carry `f0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchTrack {
    pub f0_hz: Vec<f64>,
    pub voiced: Vec<bool>,
    pub hop: usize,
    pub frame_len: usize,
    pub sample_rate_hz: u32,
}

impl PitchTrack {
    /// Builds a track from a contour, treating non-positive values as unvoiced.
    pub fn from_contour(f0_hz: Vec<f64>, hop: usize, frame_len: usize, sample_rate_hz: u32) -> Self {
        let f0_hz: Vec<f64> = f0_hz.into_iter().map(|f| if f > 0.0 { f } else { 0.0 }).collect();
        let voiced = f0_hz.iter().map(|&f| f > 0.0).collect();
        PitchTrack { f0_hz, voiced, hop, frame_len, sample_rate_hz }
    }

    pub fn len(&self) -> usize {
        self.f0_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0_hz.is_empty()
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.sample_rate_hz as f64 / self.hop as f64
    }

    pub fn voiced_count(&self) -> usize {
        self.voiced.iter().filter(|&&v| v).count()
    }

    /// Sample index at the centre of frame `i`.
    pub fn frame_center(&self, i: usize) -> usize {
        i * self.hop + self.frame_len / 2
    }

    /// Maximal runs of consecutive voiced frames as half-open frame ranges.
    pub fn voiced_runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, &v) in self.voiced.iter().enumerate() {
            match (v, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push(s..self.voiced.len());
        }
        runs
    }
}

/// YIN estimator: difference function, cumulative-mean normalization, first dip
/// under the 0.15 threshold followed down to its local minimum, then parabolic
/// refinement of the lag.
///
/// Each frame spans the 512-sample integration window plus the longest lag, so
/// `frame_len` depends on `f_min` (790 samples for 80 Hz at 22.05 kHz). The short
/// window keeps vibrato-rate modulation from being averaged away.
pub fn track_pitch(buf: &AudioBuffer, f_min: f64, f_max: f64) -> Result<PitchTrack> {
    let fs = buf.sample_rate_hz as f64;
    if !(f_min > 0.0 && f_min < f_max && f_max < buf.nyquist_hz()) {
        return Err(Error::InvalidParameter(format!("pitch range {f_min}..{f_max} Hz")));
    }
    let hop = PITCH_HOP;
    let tau_max = (fs / f_min).ceil() as usize;
    let tau_min = ((fs / f_max).floor() as usize).max(2);
    let window = YIN_WINDOW;
    let frame_len = window + tau_max + 1;
    if buf.len() < frame_len {
        return Err(Error::BufferTooShort { needed: frame_len, got: buf.len() });
    }

    let fft_len = (frame_len + window).next_power_of_two();
    let fft = RealFft::new(fft_len);
    let frames = (buf.len() - frame_len) / hop + 1;
    let mut f0_hz = Vec::with_capacity(frames);
    let mut diff = vec![0.0; tau_max + 2];
    let mut cmnd = vec![0.0; tau_max + 2];

    for i in 0..frames {
        let x = &buf.samples[i * hop..i * hop + frame_len];
        let energy0: f64 = x[..window].iter().map(|v| v * v).sum();
        if energy0 < 1e-10 * window as f64 {
            f0_hz.push(0.0);
            continue;
        }

        // Cross term sum_j x[j] x[j + tau] via FFT correlation.
        let head = fft.forward(&x[..window]);
        let full = fft.forward(x);
        let product: Vec<_> = head.iter().zip(&full).map(|(a, b)| a.conj() * b).collect();
        let corr = fft.inverse(&product);

        let mut prefix = vec![0.0; frame_len + 1];
        for (j, v) in x.iter().enumerate() {
            prefix[j + 1] = prefix[j] + v * v;
        }
        for (tau, d) in diff.iter_mut().enumerate() {
            let energy_tau = prefix[tau + window] - prefix[tau];
            *d = (energy0 + energy_tau - 2.0 * corr[tau]).max(0.0);
        }

        cmnd[0] = 1.0;
        let mut running = 0.0;
        for tau in 1..diff.len() {
            running += diff[tau];
            cmnd[tau] = if running > 0.0 { diff[tau] * tau as f64 / running } else { 1.0 };
        }

        let mut found = None;
        let mut tau = tau_min;
        while tau <= tau_max {
            if cmnd[tau] < YIN_THRESHOLD {
                while tau < tau_max && cmnd[tau + 1] < cmnd[tau] {
                    tau += 1;
                }
                found = Some(tau);
                break;
            }
            tau += 1;
        }

        let f0 = found
            .map(|tau| {
                let delta = parabolic_offset(cmnd[tau - 1], cmnd[tau], cmnd[tau + 1]);
                fs / (tau as f64 + delta)
            })
            .filter(|f| (f_min..=f_max).contains(f))
            .unwrap_or(0.0);
        f0_hz.push(f0);
    }

    Ok(PitchTrack::from_contour(f0_hz, hop, frame_len, buf.sample_rate_hz))
}

/// Cents from `reference_hz`, folded into (-600, 600].
pub fn folded_cents(f0_hz: f64, reference_hz: f64) -> f64 {
    let cents = 1200.0 * (f0_hz / reference_hz).log2();
    cents - 1200.0 * ((cents - 600.0) / 1200.0).ceil()
}

/// Mean absolute octave-folded deviation from the tonic over voiced frames.
pub fn pitch_deviation_cents(track: &PitchTrack, tonic_hz: f64) -> Result<f64> {
    if !(tonic_hz > 0.0) {
        return Err(Error::InvalidParameter(format!("tonic {tonic_hz} Hz")));
    }
    let devs: Vec<f64> = voiced_f0(track).map(|f| folded_cents(f, tonic_hz).abs()).collect();
    if devs.is_empty() {
        return Err(Error::NoVoicedFrames);
    }
    Ok(devs.iter().sum::<f64>() / devs.len() as f64)
}

fn voiced_f0(track: &PitchTrack) -> impl Iterator<Item = f64> + '_ {
    track.f0_hz.iter().zip(&track.voiced).filter(|(_, &v)| v).map(|(&f, _)| f)
}

/// Local jitter from frame-level periods `T = 1 / f0`.
///
/// Pairs never straddle an unvoiced gap. Each run contributes in proportion to its
/// number of consecutive pairs, i.e. all pairs are pooled into one mean.
pub fn jitter_local(track: &PitchTrack) -> Result<f64> {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for run in track.voiced_runs() {
        let periods: Vec<f64> = track.f0_hz[run].iter().map(|f| 1.0 / f).collect();
        for w in periods.windows(2) {
            sum += (w[1] - w[0]).abs() / w[0];
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::InsufficientVoicing("jitter needs two consecutive voiced frames".into()));
    }
    Ok(sum / pairs as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vibrato {
    pub extent_cents: f64,
    pub rate_hz: f64,
}

const VIBRATO_SMOOTHING: usize = 5;
const VIBRATO_BAND_HZ: (f64, f64) = (3.0, 9.0);
const VIBRATO_FFT_LEN: usize = 8192;

/// Vibrato extent (max/min ratio in cents) and rate over the longest voiced run.
///
/// The run is median-smoothed (5 frames) first. The rate is the strongest peak of
/// the detrended cents contour between 3 and 9 Hz; it is 0 when the extent is
/// under one cent.
pub fn vibrato(track: &PitchTrack) -> Result<Vibrato> {
    let run = track
        .voiced_runs()
        .into_iter()
        .max_by_key(|r| r.len())
        .ok_or_else(|| Error::InsufficientVoicing("no voiced run".into()))?;
    let frame_rate = track.frame_rate_hz();
    if (run.len() as f64) < frame_rate {
        return Err(Error::InsufficientVoicing(format!(
            "longest voiced run is {:.2} s, need 1 s",
            run.len() as f64 / frame_rate
        )));
    }

    let raw = &track.f0_hz[run];
    let half = VIBRATO_SMOOTHING / 2;
    let mut scratch = Vec::with_capacity(VIBRATO_SMOOTHING);
    let smooth: Vec<f64> = (0..raw.len())
        .map(|i| {
            scratch.clear();
            scratch.extend_from_slice(&raw[i.saturating_sub(half)..(i + half + 1).min(raw.len())]);
            median(&mut scratch)
        })
        .collect();

    let max = smooth.iter().copied().fold(f64::MIN, f64::max);
    let min = smooth.iter().copied().fold(f64::MAX, f64::min);
    let extent_cents = 1200.0 * (max / min).log2();
    if extent_cents < 1.0 {
        return Ok(Vibrato { extent_cents, rate_hz: 0.0 });
    }

    // Linear detrend of the contour in cents.
    let cents: Vec<f64> = smooth.iter().map(|f| 1200.0 * (f / min).log2()).collect();
    let n = cents.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let c_mean = cents.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, c) in cents.iter().enumerate() {
        let dt = i as f64 - t_mean;
        sxy += dt * (c - c_mean);
        sxx += dt * dt;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let detrended: Vec<f64> =
        cents.iter().enumerate().map(|(i, c)| c - c_mean - slope * (i as f64 - t_mean)).collect();

    let fft_len = VIBRATO_FFT_LEN.max(detrended.len().next_power_of_two());
    let spectrum: Vec<f64> = RealFft::new(fft_len).forward(&detrended).iter().map(|c| c.norm()).collect();
    let bin_hz = frame_rate / fft_len as f64;
    let lo = ((VIBRATO_BAND_HZ.0 / bin_hz).ceil() as usize).max(1);
    let hi = ((VIBRATO_BAND_HZ.1 / bin_hz).floor() as usize).min(spectrum.len() - 2);
    if lo > hi {
        return Ok(Vibrato { extent_cents, rate_hz: 0.0 });
    }
    let peak = (lo..=hi).max_by(|&a, &b| spectrum[a].total_cmp(&spectrum[b])).unwrap_or(lo);
    let delta = parabolic_offset(spectrum[peak - 1], spectrum[peak], spectrum[peak + 1]);
    Ok(Vibrato { extent_cents, rate_hz: (peak as f64 + delta) * bin_hz })
}
