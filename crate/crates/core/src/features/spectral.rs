//! Frame-based timbre descriptors: MFCCs, zero-crossing rate, and spectral shape.

use serde::{Deserialize, Serialize};

use crate::dsp::{mean, std_dev};
use crate::preprocess::{stft, Spectrogram, DEFAULT_FRAME_LEN, DEFAULT_HOP};
use crate::{AudioBuffer, Error, Result};

pub const DEFAULT_MELS: usize = 40;
pub const DEFAULT_COEFFS: usize = 13;
const LOG_FLOOR: f64 = 1e-10;
const POWER_FLOOR: f64 = 1e-20;
/// Frames more than 60 dB below the loudest frame are ignored.
const ACTIVE_FRAME_RATIO: f64 = 1e-6;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters evenly spaced on the HTK Mel scale from 0 Hz to Nyquist,
/// as `n_mels` rows of per-bin weights.
pub fn mel_filterbank(n_mels: usize, frame_len: usize, sample_rate_hz: u32) -> Vec<Vec<f64>> {
    let bins = frame_len / 2 + 1;
    let nyquist = sample_rate_hz as f64 / 2.0;
    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..n_mels + 2).map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64)).collect();
    let bin_hz = sample_rate_hz as f64 / frame_len as f64;
    (0..n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccSummary {
    pub means: Vec<f64>,
    /// Mean over coefficients of each coefficient's standard deviation after
    /// dividing it by its largest magnitude; unitless.
    pub pooled_std: f64,
}

/// Per-frame MFCCs: power spectrum, Mel filterbank, natural log (floored), then
/// `c_k = sum_m log(S_m) cos(pi k (m - 1/2) / M)` for `k = 0..n_coeffs`.
pub fn mfcc_frames(buf: &AudioBuffer, n_mels: usize, n_coeffs: usize) -> Result<Vec<Vec<f64>>> {
    if n_mels == 0 || n_coeffs == 0 {
        return Err(Error::InvalidParameter("MFCC needs at least one filter and one coefficient".into()));
    }
    let spec = stft(buf, DEFAULT_FRAME_LEN, DEFAULT_HOP)?;
    let bank = mel_filterbank(n_mels, spec.frame_len, spec.sample_rate_hz);
    let m = n_mels as f64;
    let basis: Vec<Vec<f64>> = (0..n_coeffs)
        .map(|k| {
            (1..=n_mels)
                .map(|i| (std::f64::consts::PI * k as f64 / m * (i as f64 - 0.5)).cos())
                .collect()
        })
        .collect();

    let mut out = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let frame = spec.frame(t);
        let log_mel: Vec<f64> = bank
            .iter()
            .map(|w| {
                let e: f64 = w.iter().zip(frame).map(|(w, x)| w * x * x).sum();
                e.max(LOG_FLOOR).ln()
            })
            .collect();
        out.push(basis.iter().map(|b| b.iter().zip(&log_mel).map(|(c, l)| c * l).sum()).collect());
    }
    Ok(out)
}

pub fn mfcc(buf: &AudioBuffer, n_mels: usize, n_coeffs: usize) -> Result<MfccSummary> {
    let frames = mfcc_frames(buf, n_mels, n_coeffs)?;
    let mut means = Vec::with_capacity(n_coeffs);
    let mut stds = Vec::with_capacity(n_coeffs);
    for k in 0..n_coeffs {
        let column: Vec<f64> = frames.iter().map(|f| f[k]).collect();
        means.push(mean(&column));
        let peak = column.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if peak > 0.0 {
            let scaled: Vec<f64> = column.iter().map(|v| v / peak).collect();
            stds.push(std_dev(&scaled));
        } else {
            stds.push(0.0);
        }
    }
    Ok(MfccSummary { means, pooled_std: mean(&stds) })
}

/// Fraction of adjacent sample pairs with a sign change, per 2048-sample frame
/// (hop 512) and averaged. Buffers shorter than a frame are one frame.
pub fn zcr(buf: &AudioBuffer) -> Result<f64> {
    if buf.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let frame_rate = |x: &[f64]| {
        if x.len() < 2 {
            return 0.0;
        }
        let crossings = x.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        crossings as f64 / (x.len() - 1) as f64
    };
    let x = &buf.samples;
    if x.len() <= DEFAULT_FRAME_LEN {
        return Ok(frame_rate(x));
    }
    let frames = (x.len() - DEFAULT_FRAME_LEN) / DEFAULT_HOP + 1;
    let rates: Vec<f64> =
        (0..frames).map(|i| frame_rate(&x[i * DEFAULT_HOP..i * DEFAULT_HOP + DEFAULT_FRAME_LEN])).collect();
    Ok(mean(&rates))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralShape {
    pub centroid_hz: f64,
    pub bandwidth_hz: f64,
    pub flatness: f64,
}

/// Magnitude-weighted centroid and bandwidth and power-spectrum flatness per
/// frame, averaged over frames within 60 dB of the loudest one.
pub fn spectral_descriptors(spec: &Spectrogram) -> Result<SpectralShape> {
    let freqs = spec.frequencies();
    let energies: Vec<f64> = (0..spec.frames).map(|t| spec.frame(t).iter().map(|m| m * m).sum()).collect();
    let loudest = energies.iter().copied().fold(0.0, f64::max);
    if loudest <= 0.0 {
        return Err(Error::SilentInput);
    }
    let (mut centroids, mut bandwidths, mut flatnesses) = (Vec::new(), Vec::new(), Vec::new());
    for t in 0..spec.frames {
        if energies[t] < loudest * ACTIVE_FRAME_RATIO {
            continue;
        }
        let mags = spec.frame(t);
        let total: f64 = mags.iter().sum();
        let centroid = freqs.iter().zip(mags).map(|(f, m)| f * m).sum::<f64>() / total;
        let spread = freqs.iter().zip(mags).map(|(f, m)| (f - centroid).powi(2) * m).sum::<f64>() / total;

        let k = mags.len() as f64;
        let log_mean = mags.iter().map(|m| (m * m).max(POWER_FLOOR).ln()).sum::<f64>() / k;
        let arith_mean = mags.iter().map(|m| (m * m).max(POWER_FLOOR)).sum::<f64>() / k;
        let flatness = (log_mean.exp() / arith_mean).clamp(0.0, 1.0);

        centroids.push(centroid);
        bandwidths.push(spread.sqrt());
        flatnesses.push(flatness);
    }
    Ok(SpectralShape { centroid_hz: mean(&centroids), bandwidth_hz: mean(&bandwidths), flatness: mean(&flatnesses) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const SR: u32 = 22050;

    fn tone(parts: &[(f64, f64)], secs: f64) -> AudioBuffer {
        let n = (secs * SR as f64) as usize;
        AudioBuffer::new(
            (0..n)
                .map(|i| {
                    let t = i as f64 / SR as f64;
                    parts.iter().map(|(f, a)| a * (2.0 * PI * f * t).sin()).sum()
                })
                .collect(),
            SR,
        )
    }

    fn noise(n: usize) -> AudioBuffer {
        let mut s = 99u64;
        AudioBuffer::new(
            (0..n)
                .map(|_| {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                })
                .collect(),
            SR,
        )
    }

    fn shape(buf: &AudioBuffer) -> SpectralShape {
        spectral_descriptors(&stft(buf, 2048, 512).unwrap()).unwrap()
    }

    #[test]
    fn mel_scale_round_trip() {
        for hz in [0.0, 100.0, 1000.0, 11025.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(1000.0) - 999.985).abs() < 0.01);
    }

    #[test]
    fn filterbank_covers_band() {
        let bank = mel_filterbank(40, 2048, SR);
        assert_eq!(bank.len(), 40);
        assert!(bank.iter().all(|row| row.len() == 1025 && row.iter().any(|&w| w > 0.0)));
    }

    #[test]
    fn mfcc_is_deterministic() {
        let buf = tone(&[(220.0, 0.5), (440.0, 0.3)], 1.0);
        assert_eq!(mfcc(&buf, 40, 13).unwrap(), mfcc(&buf.clone(), 40, 13).unwrap());
        assert_eq!(mfcc(&buf, 40, 13).unwrap().means.len(), 13);
    }

    #[test]
    fn mfcc_matches_direct_dct() {
        // Compare coefficient 3 of frame 0 against a re-derivation from the STFT.
        let buf = tone(&[(300.0, 0.5), (1700.0, 0.2)], 0.5);
        let frames = mfcc_frames(&buf, 40, 13).unwrap();
        let spec = stft(&buf, 2048, 512).unwrap();
        let bank = mel_filterbank(40, 2048, SR);
        let mut expected = 0.0;
        for (m, w) in bank.iter().enumerate() {
            let e: f64 = (0..spec.bins).map(|k| w[k] * spec.magnitude(0, k).powi(2)).sum();
            expected += e.max(1e-10).ln() * (PI * 3.0 / 40.0 * (m as f64 + 0.5)).cos();
        }
        assert!((frames[0][3] - expected).abs() < 1e-9);
    }

    #[test]
    fn steady_tone_has_small_pooled_std() {
        // Partials at multiples of fs / hop repeat exactly from frame to frame.
        let step = SR as f64 / 512.0;
        let s = mfcc(&tone(&[(5.0 * step, 0.5), (15.0 * step, 0.2)], 2.0), 40, 13).unwrap();
        assert!(s.pooled_std < 0.05, "pooled std {}", s.pooled_std);
    }

    #[test]
    fn changing_timbre_raises_pooled_std() {
        let steady = mfcc(&tone(&[(220.0, 0.5), (660.0, 0.2)], 4.0), 40, 13).unwrap();
        let n = 4 * SR as usize;
        let alternating = AudioBuffer::new(
            (0..n)
                .map(|i| {
                    let t = i as f64 / SR as f64;
                    let odd_on = (t as usize).is_multiple_of(2);
                    (1..=9)
                        .filter(|h| h % 2 == 0 || odd_on)
                        .map(|h| 0.4 / h as f64 * (2.0 * PI * 220.0 * h as f64 * t).sin())
                        .sum()
                })
                .collect(),
            SR,
        );
        let changing = mfcc(&alternating, 40, 13).unwrap();
        assert!(changing.pooled_std > steady.pooled_std);
    }

    #[test]
    fn zcr_examples() {
        let z = zcr(&tone(&[(1000.0, 1.0)], 1.0)).unwrap();
        assert!((z - 2.0 * 1000.0 / 22050.0).abs() <= 0.005, "zcr {z}");
        assert_eq!(zcr(&AudioBuffer::new(vec![0.3; 5000], SR)).unwrap(), 0.0);
        let alt: Vec<f64> = (0..5000).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
        assert!((zcr(&AudioBuffer::new(alt, SR)).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(zcr(&AudioBuffer::new(vec![], SR)), Err(Error::EmptyBuffer)));
    }

    #[test]
    fn pure_tone_shape() {
        let bin = 22050.0 / 2048.0;
        let s = shape(&tone(&[(1000.0, 1.0)], 1.0));
        assert!((s.centroid_hz - 1000.0).abs() <= bin, "centroid {}", s.centroid_hz);
        assert!(s.bandwidth_hz < 2.0 * bin, "bandwidth {}", s.bandwidth_hz);
        assert!(s.flatness < 0.01, "flatness {}", s.flatness);
    }

    #[test]
    fn two_tone_shape() {
        let bin = 22050.0 / 2048.0;
        let s = shape(&tone(&[(500.0, 0.5), (1500.0, 0.5)], 1.0));
        assert!((s.centroid_hz - 1000.0).abs() <= bin, "centroid {}", s.centroid_hz);
        assert!((s.bandwidth_hz - 500.0).abs() <= bin, "bandwidth {}", s.bandwidth_hz);
    }

    #[test]
    fn white_noise_is_flat() {
        let s = shape(&noise(2 * SR as usize));
        assert!(s.flatness > 0.5, "flatness {}", s.flatness);
        assert!(s.centroid_hz > 0.0 && s.centroid_hz < 11025.0);
    }

    #[test]
    fn silence_is_rejected() {
        let spec = stft(&AudioBuffer::new(vec![0.0; 4096], SR), 2048, 512).unwrap();
        assert!(matches!(spectral_descriptors(&spec), Err(Error::SilentInput)));
    }
}
