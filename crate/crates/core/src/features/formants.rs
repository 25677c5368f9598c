//! Formant estimation from Burg LPC pole angles.

use nalgebra::DMatrix;

use crate::features::pitch::PitchTrack;
use crate::{AudioBuffer, Error, Result};

pub const LPC_ORDER: usize = 12;
pub const PRE_EMPHASIS: f64 = 0.97;
pub const MAX_BANDWIDTH_HZ: f64 = 700.0;
/// Poles below this are treated as spectral tilt rather than resonances.
const MIN_FORMANT_HZ: f64 = 90.0;
const FRAME_S: f64 = 0.03;

/// Burg-method LPC. Returns `[1, a1, .., ap]` so that `x[n] ≈ -sum a_i x[n-i]`.
pub fn burg_lpc(x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    if n <= order {
        return a;
    }
    let mut fwd = x.to_vec();
    let mut bwd = x.to_vec();
    for m in 0..order {
        let (mut num, mut den) = (0.0, 0.0);
        for i in m + 1..n {
            num += fwd[i] * bwd[i - 1];
            den += fwd[i] * fwd[i] + bwd[i - 1] * bwd[i - 1];
        }
        if den <= 0.0 {
            break;
        }
        let k = -2.0 * num / den;
        let prev = a.clone();
        for i in 1..=m + 1 {
            a[i] = prev[i] + k * prev[m + 1 - i];
        }
        for i in (m + 1..n).rev() {
            let f = fwd[i];
            fwd[i] = f + k * bwd[i - 1];
            bwd[i] = bwd[i - 1] + k * f;
        }
    }
    a
}

/// Roots of `z^p + a1 z^(p-1) + .. + ap` as companion-matrix eigenvalues.
pub fn lpc_roots(a: &[f64]) -> Vec<num_complex::Complex64> {
    let p = a.len() - 1;
    if p == 0 {
        return Vec::new();
    }
    let companion = DMatrix::from_fn(p, p, |r, c| {
        if r == 0 {
            -a[c + 1]
        } else if r == c + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion.complex_eigenvalues().iter().map(|z| num_complex::Complex64::new(z.re, z.im)).collect()
}

/// Resonance frequencies (Hz, ascending) of the LPC poles with bandwidth under 700 Hz.
pub fn frame_formants(frame: &[f64], sample_rate_hz: u32) -> Vec<f64> {
    let fs = sample_rate_hz as f64;
    let n = frame.len();
    if n < 2 || frame.iter().all(|&v| v == 0.0) {
        return Vec::new();
    }
    let windowed: Vec<f64> = (0..n)
        .map(|i| {
            let emphasized = if i == 0 { frame[0] } else { frame[i] - PRE_EMPHASIS * frame[i - 1] };
            let w = 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            emphasized * w
        })
        .collect();
    let a = burg_lpc(&windowed, LPC_ORDER);
    let mut out: Vec<f64> = lpc_roots(&a)
        .into_iter()
        .filter(|z| z.im > 0.0)
        .filter_map(|z| {
            let freq = z.arg() * fs / (2.0 * std::f64::consts::PI);
            let bandwidth = -z.norm().ln() * fs / std::f64::consts::PI;
            (freq > MIN_FORMANT_HZ && freq < fs / 2.0 - MIN_FORMANT_HZ && bandwidth < MAX_BANDWIDTH_HZ)
                .then_some(freq)
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Mean F1–F3 over voiced frames (30 ms windows centred on each frame).
///
/// Only frames yielding at least three formants are averaged. If no frame does,
/// the error carries the best partial estimate, zero-filled.
pub fn formants(buf: &AudioBuffer, track: &PitchTrack) -> Result<[f64; 3]> {
    let half = ((FRAME_S * buf.sample_rate_hz as f64) / 2.0).round() as usize;
    let mut sums = [0.0; 3];
    let mut complete = 0usize;
    // Largest incomplete formant count seen, with sums over the frames that gave it.
    let (mut partial_count, mut partial_sums, mut partial_frames) = (0usize, [0.0; 3], 0usize);
    let mut any_voiced = false;

    for (i, &voiced) in track.voiced.iter().enumerate() {
        if !voiced {
            continue;
        }
        let center = track.frame_center(i);
        if center < half || center + half > buf.len() {
            continue;
        }
        any_voiced = true;
        let found = frame_formants(&buf.samples[center - half..center + half], buf.sample_rate_hz);
        if found.len() >= 3 {
            for (s, f) in sums.iter_mut().zip(&found) {
                *s += f;
            }
            complete += 1;
        } else if !found.is_empty() && found.len() >= partial_count {
            if found.len() > partial_count {
                partial_count = found.len();
                partial_sums = [0.0; 3];
                partial_frames = 0;
            }
            for (s, f) in partial_sums.iter_mut().zip(&found) {
                *s += f;
            }
            partial_frames += 1;
        }
    }

    if !any_voiced {
        return Err(Error::InsufficientVoicing("no voiced frame for formant analysis".into()));
    }
    if complete == 0 {
        let mut partial = [0.0; 3];
        if partial_frames > 0 {
            for (p, s) in partial.iter_mut().zip(partial_sums).take(partial_count) {
                *p = s / partial_frames as f64;
            }
        }
        return Err(Error::FewerThanThreeFormants { found: partial_count, partial });
    }
    Ok(sums.map(|s| s / complete as f64))
}
