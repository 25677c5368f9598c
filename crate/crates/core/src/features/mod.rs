//! Acoustic features of one recording.
//!
//! Every extractor is a pure function of its inputs. [`extract_all`] runs them
//! all and degrades any feature that cannot be measured (typically because the
//! recording has no voiced frames) to `0.0` with a warning instead of failing.

pub mod formants;
pub mod loudness;
pub mod pitch;
pub mod spectral;
pub mod tempo;
pub mod voice;

use serde::{Deserialize, Serialize};

pub use formants::formants;
pub use loudness::{loudness_lufs, rms, Loudness};
pub use pitch::{jitter_local, pitch_deviation_cents, track_pitch, vibrato, PitchTrack, Vibrato};
pub use spectral::{mfcc, spectral_descriptors, zcr, MfccSummary, SpectralShape};
pub use tempo::tempo_std;
pub use voice::{shimmer_local, tnr};

use crate::preprocess::{stft, DEFAULT_FRAME_LEN, DEFAULT_HOP};
use crate::{AudioBuffer, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub pitch_dev_cents: f64,
    pub jitter_local: f64,
    pub shimmer_local: f64,
    pub lufs_mean: f64,
    pub lufs_std: f64,
    pub rms: f64,
    pub tnr_db: f64,
    pub mfcc_mean: Vec<f64>,
    pub mfcc_std: f64,
    pub zcr: f64,
    pub centroid_hz: f64,
    pub bandwidth_hz: f64,
    pub flatness: f64,
    pub formants_hz: [f64; 3],
    pub vibrato_extent_cents: f64,
    pub vibrato_rate_hz: f64,
    pub tempo_std_bpm: f64,
}

impl Default for FeatureVector {
    fn default() -> Self {
        FeatureVector {
            pitch_dev_cents: 0.0,
            jitter_local: 0.0,
            shimmer_local: 0.0,
            lufs_mean: 0.0,
            lufs_std: 0.0,
            rms: 0.0,
            tnr_db: 0.0,
            mfcc_mean: vec![0.0; spectral::DEFAULT_COEFFS],
            mfcc_std: 0.0,
            zcr: 0.0,
            centroid_hz: 0.0,
            bandwidth_hz: 0.0,
            flatness: 0.0,
            formants_hz: [0.0; 3],
            vibrato_extent_cents: 0.0,
            vibrato_rate_hz: 0.0,
            tempo_std_bpm: 0.0,
        }
    }
}

impl FeatureVector {
    /// Every scalar with a stable name; MFCC means and formants are expanded
    /// (`mfcc_mean_0`.., `formant_f1`..).
    pub fn named_values(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("pitch_dev_cents".to_string(), self.pitch_dev_cents),
            ("jitter_local".into(), self.jitter_local),
            ("shimmer_local".into(), self.shimmer_local),
            ("lufs_mean".into(), self.lufs_mean),
            ("lufs_std".into(), self.lufs_std),
            ("rms".into(), self.rms),
            ("tnr_db".into(), self.tnr_db),
        ];
        out.extend(self.mfcc_mean.iter().enumerate().map(|(i, v)| (format!("mfcc_mean_{i}"), *v)));
        out.extend([
            ("mfcc_std".to_string(), self.mfcc_std),
            ("zcr".into(), self.zcr),
            ("centroid_hz".into(), self.centroid_hz),
            ("bandwidth_hz".into(), self.bandwidth_hz),
            ("flatness".into(), self.flatness),
            ("formant_f1".into(), self.formants_hz[0]),
            ("formant_f2".into(), self.formants_hz[1]),
            ("formant_f3".into(), self.formants_hz[2]),
            ("vibrato_extent_cents".into(), self.vibrato_extent_cents),
            ("vibrato_rate_hz".into(), self.vibrato_rate_hz),
            ("tempo_std_bpm".into(), self.tempo_std_bpm),
        ]);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.named_values().iter().all(|(_, v)| v.is_finite())
    }
}

/// Features plus the names of fields that fell back to their sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub features: FeatureVector,
    pub pitch_track: PitchTrack,
    pub warnings: Vec<String>,
}

/// Runs every extractor on a preprocessed buffer.
pub fn extract_all(buf: &AudioBuffer, tonic_hz: f64) -> Result<Extraction> {
    if !(tonic_hz > 0.0) {
        return Err(Error::InvalidParameter(format!("tonic {tonic_hz} Hz")));
    }
    if buf.len() < DEFAULT_FRAME_LEN {
        return Err(Error::BufferTooShort { needed: DEFAULT_FRAME_LEN, got: buf.len() });
    }

    let mut warnings = Vec::new();
    let mut fv = FeatureVector::default();
    let track = track_pitch(buf, pitch::DEFAULT_F_MIN, pitch::DEFAULT_F_MAX)?;

    let mut take = |field: &str, r: Result<f64>| match r {
        Ok(v) => v,
        Err(e) => {
            warnings.push(format!("{field}: {e}"));
            0.0
        }
    };

    fv.pitch_dev_cents = take("pitch_dev_cents", pitch_deviation_cents(&track, tonic_hz));
    fv.jitter_local = take("jitter_local", jitter_local(&track));
    fv.shimmer_local = take("shimmer_local", shimmer_local(buf, &track));
    fv.tnr_db = take("tnr_db", tnr(buf, &track));
    fv.rms = take("rms", rms(buf));
    fv.zcr = take("zcr", zcr(buf));

    match loudness_lufs(buf) {
        Ok(l) => {
            fv.lufs_mean = l.lufs_mean;
            fv.lufs_std = l.lufs_std;
        }
        Err(e) => warnings.extend(["lufs_mean", "lufs_std"].map(|f| format!("{f}: {e}"))),
    }
    match mfcc(buf, spectral::DEFAULT_MELS, spectral::DEFAULT_COEFFS) {
        Ok(m) => {
            fv.mfcc_mean = m.means;
            fv.mfcc_std = m.pooled_std;
        }
        Err(e) => warnings.extend(["mfcc_mean", "mfcc_std"].map(|f| format!("{f}: {e}"))),
    }
    match stft(buf, DEFAULT_FRAME_LEN, DEFAULT_HOP).and_then(|s| spectral_descriptors(&s)) {
        Ok(s) => {
            fv.centroid_hz = s.centroid_hz;
            fv.bandwidth_hz = s.bandwidth_hz;
            fv.flatness = s.flatness;
        }
        Err(e) => warnings.extend(["centroid_hz", "bandwidth_hz", "flatness"].map(|f| format!("{f}: {e}"))),
    }
    match formants(buf, &track) {
        Ok(f) => fv.formants_hz = f,
        Err(Error::FewerThanThreeFormants { found, partial }) => {
            fv.formants_hz = partial;
            warnings.push(format!("formants_hz: only {found} formants found"));
        }
        Err(e) => warnings.push(format!("formants_hz: {e}")),
    }
    match vibrato(&track) {
        Ok(v) => {
            fv.vibrato_extent_cents = v.extent_cents;
            fv.vibrato_rate_hz = v.rate_hz;
        }
        Err(e) => warnings.extend(["vibrato_extent_cents", "vibrato_rate_hz"].map(|f| format!("{f}: {e}"))),
    }
    fv.tempo_std_bpm = tempo_std(buf);

    Ok(Extraction { features: fv, pitch_track: track, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const SR: u32 = 22050;

    /// Harmonic tone following `f0(t)` with per-sample amplitude `amp(t)`.
    fn voice(secs: f64, f0: impl Fn(f64) -> f64, amp: impl Fn(f64) -> f64) -> AudioBuffer {
        let n = (secs * SR as f64) as usize;
        let mut phase = 0.0;
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 / SR as f64;
                phase += 2.0 * PI * f0(t) / SR as f64;
                let s: f64 = (1..=6).map(|h| (h as f64 * phase).sin() / h as f64).sum();
                0.4 * amp(t) * s
            })
            .collect();
        AudioBuffer::new(samples, SR)
    }

    fn good_singer() -> AudioBuffer {
        voice(3.0, |t| 220.0 * 2f64.powf(8.0 * (2.0 * PI * 5.5 * t).sin() / 1200.0), |_| 1.0)
    }

    /// Pitch wandering by up to 80 cents, amplitude changing by up to 30% from one
    /// cycle to the next.
    fn poor_singer() -> AudioBuffer {
        let n = 3 * SR as usize;
        let mut s = 17u64;
        let mut rnd = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut phase = 0.0;
        let mut amp = 1.0;
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let t = i as f64 / SR as f64;
            let cents = 80.0 * (2.0 * PI * 0.7 * t).sin();
            let prev = phase;
            phase += 2.0 * PI * 220.0 * 2f64.powf(cents / 1200.0) / SR as f64;
            // Switch amplitude mid-cycle, where the sawtooth-like wave crosses zero.
            if (prev / (2.0 * PI) + 0.5).floor() != (phase / (2.0 * PI) + 0.5).floor() {
                amp = 0.7 + 0.6 * rnd();
            }
            let v: f64 = (1..=6).map(|h| (h as f64 * phase).sin() / h as f64).sum();
            samples.push(0.4 * amp * v);
        }
        AudioBuffer::new(samples, SR)
    }

    #[test]
    fn good_singer_features() {
        let ex = extract_all(&good_singer(), 220.0).unwrap();
        let fv = &ex.features;
        assert!(fv.pitch_dev_cents < 10.0, "pitch {}", fv.pitch_dev_cents);
        assert!(fv.jitter_local < 0.01, "jitter {}", fv.jitter_local);
        assert!(fv.shimmer_local < 0.05, "shimmer {}", fv.shimmer_local);
        assert!(fv.is_finite());
        assert!(ex.warnings.is_empty(), "{:?}", ex.warnings);
    }

    #[test]
    fn poor_singer_features() {
        let fv = extract_all(&poor_singer(), 220.0).unwrap().features;
        assert!(fv.pitch_dev_cents > 30.0, "pitch {}", fv.pitch_dev_cents);
        assert!(fv.shimmer_local > 0.1, "shimmer {}", fv.shimmer_local);
    }

    #[test]
    fn silence_degrades_with_warnings() {
        let ex = extract_all(&AudioBuffer::new(vec![0.0; 3 * SR as usize], SR), 220.0).unwrap();
        let fv = &ex.features;
        for v in [fv.pitch_dev_cents, fv.jitter_local, fv.shimmer_local, fv.tnr_db, fv.vibrato_extent_cents] {
            assert_eq!(v, 0.0);
        }
        assert_eq!(fv.formants_hz, [0.0; 3]);
        for field in ["pitch_dev_cents", "jitter_local", "shimmer_local", "tnr_db", "formants_hz", "vibrato_extent_cents"] {
            assert!(ex.warnings.iter().any(|w| w.starts_with(field)), "missing warning for {field}");
        }
        assert!(fv.is_finite());
    }

    #[test]
    fn extraction_is_deterministic() {
        let buf = good_singer();
        assert_eq!(extract_all(&buf, 220.0).unwrap(), extract_all(&buf, 220.0).unwrap());
    }

    #[test]
    fn transposition_leaves_deviation_unchanged() {
        let a = voice(2.0, |t| 220.0 * 2f64.powf((15.0 + 10.0 * (2.0 * PI * t).sin()) / 1200.0), |_| 1.0);
        let b = voice(2.0, |t| 330.0 * 2f64.powf((15.0 + 10.0 * (2.0 * PI * t).sin()) / 1200.0), |_| 1.0);
        let ta = track_pitch(&a, 80.0, 1000.0).unwrap();
        let tb = track_pitch(&b, 80.0, 1000.0).unwrap();
        let da = pitch_deviation_cents(&ta, 220.0).unwrap();
        let db = pitch_deviation_cents(&tb, 330.0).unwrap();
        assert!((da - db).abs() < 1.0, "{da} vs {db}");
    }

    #[test]
    fn loudness_tracks_gain() {
        let buf = good_singer();
        let a = extract_all(&buf, 220.0).unwrap().features;
        let b = extract_all(&buf.scaled(0.25), 220.0).unwrap().features;
        assert!((a.lufs_mean + 20.0 * 0.25f64.log10() - b.lufs_mean).abs() < 0.01);
        assert!((a.jitter_local - b.jitter_local).abs() < 1e-9);
        assert!((a.shimmer_local - b.shimmer_local).abs() < 1e-9);
    }
}
