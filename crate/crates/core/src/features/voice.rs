//! Cycle-level voice quality: shimmer and tone-to-noise ratio.

use crate::dsp::parabolic_offset;
use crate::features::pitch::PitchTrack;
use crate::{AudioBuffer, Error, Result};

pub const TNR_RANGE_DB: (f64, f64) = (-20.0, 60.0);

/// Sample range covered by a run of voiced frames.
fn run_span(track: &PitchTrack, run: &std::ops::Range<usize>, len: usize) -> (usize, usize) {
    let half_hop = track.hop / 2;
    let start = track.frame_center(run.start).saturating_sub(half_hop);
    let end = (track.frame_center(run.end - 1) + half_hop).min(len);
    (start, end)
}

fn frame_for_sample(track: &PitchTrack, pos: usize) -> usize {
    let offset = pos as f64 - (track.frame_len / 2) as f64;
    ((offset / track.hop as f64).round().max(0.0) as usize).min(track.len() - 1)
}

fn argmax_abs(x: &[f64], lo: usize, hi: usize) -> usize {
    (lo..hi).max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs())).unwrap_or(lo)
}

/// Cycle peak amplitudes for one voiced run.
///
/// The first mark is the largest `|x|` in the first period. Each following mark
/// is the largest `|x|` within a quarter period of the previous mark plus one
/// period, so marks lock onto the same phase of every cycle.
pub fn cycle_peaks(buf: &AudioBuffer, track: &PitchTrack, run: &std::ops::Range<usize>) -> Vec<f64> {
    let x = &buf.samples;
    let (start, end) = run_span(track, run, x.len());
    let period = |pos: usize| buf.sample_rate_hz as f64 / track.f0_hz[frame_for_sample(track, pos)];

    let mut peaks = Vec::new();
    let first_end = start + period(start).round() as usize;
    if first_end > end || track.f0_hz[run.start] <= 0.0 {
        return peaks;
    }
    let mut mark = argmax_abs(x, start, first_end);
    peaks.push(x[mark].abs());
    loop {
        let t = period(mark);
        let lo = (mark as f64 + 0.75 * t).round() as usize;
        let hi = (mark as f64 + 1.25 * t).round() as usize;
        if hi > end || lo >= hi {
            break;
        }
        mark = argmax_abs(x, lo, hi);
        peaks.push(x[mark].abs());
    }
    peaks
}

/// Mean relative change between consecutive cycle peak amplitudes, pooled over
/// all voiced runs.
pub fn shimmer_local(buf: &AudioBuffer, track: &PitchTrack) -> Result<f64> {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for run in track.voiced_runs() {
        let peaks = cycle_peaks(buf, track, &run);
        for w in peaks.windows(2) {
            if w[0] > 0.0 {
                sum += (w[1] - w[0]).abs() / w[0];
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        return Err(Error::InsufficientVoicing("no consecutive cycle peaks".into()));
    }
    Ok(sum / pairs as f64)
}

/// Normalized autocorrelation of `x` at integer lag `lag`.
fn normalized_acf(x: &[f64], lag: usize) -> f64 {
    if lag >= x.len() {
        return 0.0;
    }
    let n = x.len() - lag;
    let (mut cross, mut e0, mut e1) = (0.0, 0.0, 0.0);
    for i in 0..n {
        cross += x[i] * x[i + lag];
        e0 += x[i] * x[i];
        e1 += x[i + lag] * x[i + lag];
    }
    let denom = (e0 * e1).sqrt();
    if denom > 0.0 {
        cross / denom
    } else {
        0.0
    }
}

/// Harmonicity in dB from the normalized autocorrelation `r` at the pitch lag:
/// `10 log10(r / (1 - r))`, averaged over voiced frames and clamped to [-20, 60].
///
/// The peak is searched within two samples of `fs / f0` and refined with a
/// parabola, so non-integer periods do not cap the ratio.
pub fn tnr(buf: &AudioBuffer, track: &PitchTrack) -> Result<f64> {
    let fs = buf.sample_rate_hz as f64;
    let (lo_db, hi_db) = TNR_RANGE_DB;
    let mut values = Vec::new();
    for (i, (&f0, &voiced)) in track.f0_hz.iter().zip(&track.voiced).enumerate() {
        if !voiced {
            continue;
        }
        let start = i * track.hop;
        let end = (start + track.frame_len).min(buf.len());
        if start >= end {
            continue;
        }
        let frame = &buf.samples[start..end];
        let lag = fs / f0;
        let lo = (lag.floor() as usize).saturating_sub(2).max(1);
        let hi = lag.ceil() as usize + 2;
        if hi + 1 >= frame.len() {
            continue;
        }
        if frame.iter().all(|&v| v == 0.0) {
            continue;
        }
        let acf: Vec<f64> = (lo - 1..=hi + 1).map(|l| normalized_acf(frame, l)).collect();
        let best = (1..acf.len() - 1).max_by(|&a, &b| acf[a].total_cmp(&acf[b])).unwrap_or(1);
        let delta = parabolic_offset(acf[best - 1], acf[best], acf[best + 1]);
        let (a, b, c) = (acf[best - 1], acf[best], acf[best + 1]);
        let r = (b - 0.25 * (a - c) * delta).min(1.0);
        let db = if r <= 0.0 {
            lo_db
        } else if r >= 1.0 {
            hi_db
        } else {
            (10.0 * (r / (1.0 - r)).log10()).clamp(lo_db, hi_db)
        };
        values.push(db);
    }
    if values.is_empty() {
        return Err(Error::InsufficientVoicing("no voiced frame with signal".into()));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}
