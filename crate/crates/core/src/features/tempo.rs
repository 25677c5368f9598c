//! Tempo stability from an onset-strength envelope.

use crate::dsp::{mean, parabolic_offset, std_dev};
use crate::preprocess::{stft, DEFAULT_FRAME_LEN, DEFAULT_HOP};
use crate::AudioBuffer;

pub const TEMPO_RANGE_BPM: (f64, f64) = (30.0, 180.0);
const WINDOW_S: f64 = 4.0;
const WINDOW_HOP_S: f64 = 2.0;
const MIN_DURATION_S: f64 = 5.0;
/// Flux below this fraction of the mean frame magnitude counts as no onset at all.
const ONSET_FLOOR: f64 = 1e-3;
/// A window needs a normalized autocorrelation peak at least this high.
const MIN_PERIODICITY: f64 = 0.2;

/// Half-wave rectified spectral flux, one value per STFT frame after the first,
/// lightly smoothed with a 5-tap Gaussian (sigma = 1 frame).
pub fn onset_envelope(buf: &AudioBuffer) -> Option<(Vec<f64>, f64)> {
    let spec = stft(buf, DEFAULT_FRAME_LEN, DEFAULT_HOP).ok()?;
    if spec.frames < 2 {
        return None;
    }
    let mut flux = Vec::with_capacity(spec.frames - 1);
    let mut magnitude_total = 0.0;
    for t in 1..spec.frames {
        let (prev, cur) = (spec.frame(t - 1), spec.frame(t));
        flux.push(cur.iter().zip(prev).map(|(c, p)| (c - p).max(0.0)).sum::<f64>());
        magnitude_total += cur.iter().sum::<f64>();
    }
    let mean_magnitude = magnitude_total / flux.len() as f64;
    let peak = flux.iter().copied().fold(0.0, f64::max);
    if mean_magnitude <= 0.0 || peak < ONSET_FLOOR * mean_magnitude {
        return None;
    }

    let kernel: Vec<f64> = (-2i32..=2).map(|k| (-(k * k) as f64 / 2.0).exp()).collect();
    let norm: f64 = kernel.iter().sum();
    let smoothed = (0..flux.len())
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .filter_map(|(j, w)| {
                    let idx = i as isize + j as isize - 2;
                    (idx >= 0 && (idx as usize) < flux.len()).then(|| w * flux[idx as usize])
                })
                .sum::<f64>()
                / norm
        })
        .collect();
    Some((smoothed, spec.sample_rate_hz as f64 / spec.hop as f64))
}

/// Tempo (BPM) of one envelope window from its strongest autocorrelation lag
/// in the 30–180 BPM range, or `None` when the window is not periodic.
fn window_tempo(env: &[f64], frame_rate: f64) -> Option<f64> {
    let m = mean(env);
    let x: Vec<f64> = env.iter().map(|v| v - m).collect();
    let acf = |lag: usize| x.iter().zip(&x[lag..]).map(|(a, b)| a * b).sum::<f64>();
    let zero = acf(0);
    if zero <= 0.0 {
        return None;
    }
    let lag_min = ((60.0 * frame_rate / TEMPO_RANGE_BPM.1).floor() as usize).max(2);
    let lag_max = ((60.0 * frame_rate / TEMPO_RANGE_BPM.0).ceil() as usize).min(x.len() - 2);
    if lag_min >= lag_max {
        return None;
    }
    let values: Vec<f64> = (lag_min - 1..=lag_max + 1).map(acf).collect();
    let best = (1..values.len() - 1).max_by(|&a, &b| values[a].total_cmp(&values[b]))?;
    if values[best] / zero < MIN_PERIODICITY {
        return None;
    }
    let lag = (lag_min - 1 + best) as f64 + parabolic_offset(values[best - 1], values[best], values[best + 1]);
    Some(60.0 * frame_rate / lag)
}

/// Standard deviation (BPM) of local tempo estimates over 4 s windows spaced 2 s
/// apart. Degenerate input (under 5 s, fewer than two periodic windows, or no
/// onsets) yields 0.
pub fn tempo_std(buf: &AudioBuffer) -> f64 {
    local_tempi(buf).map(|t| if t.len() < 2 { 0.0 } else { std_dev(&t) }).unwrap_or(0.0)
}

/// Local tempo of every periodic window.
pub fn local_tempi(buf: &AudioBuffer) -> Option<Vec<f64>> {
    if buf.duration_s() < MIN_DURATION_S {
        return None;
    }
    let (env, frame_rate) = onset_envelope(buf)?;
    let win = (WINDOW_S * frame_rate).round() as usize;
    let step = (WINDOW_HOP_S * frame_rate).round() as usize;
    if env.len() < win {
        return None;
    }
    Some(
        (0..=(env.len() - win) / step)
            .filter_map(|i| window_tempo(&env[i * step..i * step + win], frame_rate))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const SR: u32 = 22050;

    /// Decaying 2 kHz blips at the given onset times.
    fn clicks(onsets: &[f64], secs: f64) -> AudioBuffer {
        let n = (secs * SR as f64) as usize;
        let mut x = vec![0.0; n];
        for &t in onsets {
            let start = (t * SR as f64) as usize;
            for j in 0..400 {
                if start + j < n {
                    let tt = j as f64 / SR as f64;
                    x[start + j] += 0.8 * (-tt * 200.0).exp() * (2.0 * PI * 2000.0 * tt).sin();
                }
            }
        }
        AudioBuffer::new(x, SR)
    }

    fn constant_clicks(bpm: f64, secs: f64) -> AudioBuffer {
        let period = 60.0 / bpm;
        let onsets: Vec<f64> = (0..).map(|k| k as f64 * period).take_while(|&t| t < secs).collect();
        clicks(&onsets, secs)
    }

    #[test]
    fn constant_click_track_is_stable() {
        let buf = constant_clicks(120.0, 12.0);
        let tempi = local_tempi(&buf).unwrap();
        assert!(tempi.len() >= 4);
        for t in &tempi {
            assert!((t - 120.0).abs() < 5.0, "tempo {t}");
        }
        assert!(tempo_std(&buf) < 3.0, "std {}", tempo_std(&buf));
    }

    #[test]
    fn accelerating_click_track_varies() {
        // Tempo ramps linearly from 90 to 150 BPM over 16 s.
        let secs = 16.0;
        let mut onsets = vec![0.0];
        loop {
            let t = *onsets.last().unwrap();
            let bpm = 90.0 + 60.0 * t / secs;
            let next = t + 60.0 / bpm;
            if next >= secs {
                break;
            }
            onsets.push(next);
        }
        let buf = clicks(&onsets, secs);
        assert!(tempo_std(&buf) > 10.0, "std {}", tempo_std(&buf));
    }

    #[test]
    fn steady_tone_has_no_tempo() {
        let n = 6 * SR as usize;
        let buf = AudioBuffer::new((0..n).map(|i| 0.5 * (2.0 * PI * 220.0 * i as f64 / SR as f64).sin()).collect(), SR);
        assert_eq!(tempo_std(&buf), 0.0);
    }

    #[test]
    fn short_or_silent_input_is_zero() {
        assert_eq!(tempo_std(&constant_clicks(120.0, 3.0)), 0.0);
        assert_eq!(tempo_std(&AudioBuffer::new(vec![0.0; 6 * SR as usize], SR)), 0.0);
    }
}
