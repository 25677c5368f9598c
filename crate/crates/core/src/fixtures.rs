//! Deterministic synthetic recordings for tests, demos and the grading corpus.
//!
//! Voices are additive harmonic tones shaped by a three-formant envelope, with
//! controllable tuning error, vibrato, cycle-to-cycle amplitude and period
//! variation, and breath noise.

use std::f64::consts::{PI, TAU};

use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::AudioBuffer;

pub const FIXTURE_RATE_HZ: u32 = 44100;
pub const FIXTURE_TONIC_HZ: f64 = 220.0;
const VOWEL_A: [(f64, f64); 3] = [(700.0, 90.0), (1200.0, 110.0), (2600.0, 160.0)];
const EDGE_S: f64 = 0.03;

#[derive(Debug, Clone, PartialEq)]
pub struct VoiceParams {
    pub tonic_hz: f64,
    /// Note frequencies as multiples of the tonic.
    pub notes: Vec<f64>,
    pub note_s: f64,
    pub gap_s: f64,
    /// Constant tuning error.
    pub offset_cents: f64,
    /// Slow sinusoidal tuning drift added to the offset.
    pub drift_cents: f64,
    pub drift_hz: f64,
    pub vibrato_cents: f64,
    pub vibrato_hz: f64,
    /// Relative std of a per-cycle amplitude factor.
    pub cycle_amp_jitter: f64,
    /// Relative std of a per-cycle frequency factor.
    pub cycle_period_jitter: f64,
    /// Breath noise RMS relative to the voiced RMS, in dB.
    pub noise_db: f64,
    pub peak: f64,
    pub formants: [(f64, f64); 3],
    pub sample_rate_hz: u32,
    pub seed: u64,
}

impl VoiceParams {
    /// A steady, well-tuned voice with a light vibrato.
    pub fn good_singer() -> Self {
        VoiceParams {
            tonic_hz: FIXTURE_TONIC_HZ,
            notes: vec![1.0, 2.0, 1.0, 2.0],
            note_s: 1.5,
            gap_s: 0.12,
            offset_cents: 0.0,
            drift_cents: 0.0,
            drift_hz: 0.0,
            vibrato_cents: 5.0,
            vibrato_hz: 5.5,
            cycle_amp_jitter: 0.005,
            cycle_period_jitter: 0.0,
            noise_db: -36.0,
            peak: 0.6,
            formants: VOWEL_A,
            sample_rate_hz: FIXTURE_RATE_HZ,
            seed: 1,
        }
    }

    /// Sharp by about 20 cents, unsteady in amplitude and breathy.
    pub fn poor_singer() -> Self {
        VoiceParams {
            offset_cents: 20.0,
            drift_cents: 6.0,
            drift_hz: 0.25,
            vibrato_cents: 0.0,
            cycle_amp_jitter: 0.12,
            cycle_period_jitter: 0.002,
            noise_db: -16.0,
            peak: 0.45,
            seed: 2,
            ..VoiceParams::good_singer()
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.notes.len() as f64 * (self.note_s + self.gap_s) + self.gap_s
    }
}

fn gaussian(rng: &mut Pcg64) -> f64 {
    let u1 = ((rng.next_u64() >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
    let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

fn uniform(rng: &mut Pcg64) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Magnitude of a unit-gain two-pole resonance at `f`.
fn resonance(f: f64, (centre, bandwidth): (f64, f64)) -> f64 {
    centre * centre / ((centre * centre - f * f).powi(2) + (bandwidth * f).powi(2)).sqrt()
}

fn harmonic_gain(f: f64, formants: &[(f64, f64); 3]) -> f64 {
    // Cascaded resonances over a source falling 6 dB per octave.
    formants.iter().map(|&r| resonance(f, r)).product::<f64>() / (1.0 + f / 300.0)
}

pub fn synthesize_voice(p: &VoiceParams) -> AudioBuffer {
    let fs = p.sample_rate_hz as f64;
    let n = (p.duration_s() * fs).round() as usize;
    let mut rng = Pcg64::seed_from_u64(p.seed);
    let mut voice = vec![0.0; n];
    let nyquist_guard = 0.45 * fs;

    for (k, &ratio) in p.notes.iter().enumerate() {
        let start = ((p.gap_s + k as f64 * (p.note_s + p.gap_s)) * fs).round() as usize;
        let len = (p.note_s * fs).round() as usize;
        let base = p.tonic_hz * ratio;
        let harmonics = (nyquist_guard / (base * 1.1)).floor().max(1.0) as usize;
        let gains: Vec<f64> = (1..=harmonics).map(|h| harmonic_gain(h as f64 * base, &p.formants)).collect();
        let norm = gains.iter().map(|g| g * g).sum::<f64>().sqrt();

        let mut phase = 0.0f64;
        let mut amp_factor = 1.0;
        let mut freq_factor = 1.0;
        for j in 0..len.min(n.saturating_sub(start)) {
            let t = (start + j) as f64 / fs;
            let local = j as f64 / fs;
            let cents = p.offset_cents
                + p.drift_cents * (TAU * p.drift_hz * t).sin()
                + p.vibrato_cents * (TAU * p.vibrato_hz * local).sin();
            let f0 = base * 2f64.powf(cents / 1200.0) * freq_factor;
            phase += TAU * f0 / fs;
            if phase >= TAU {
                phase -= TAU;
                amp_factor = (1.0 + p.cycle_amp_jitter * gaussian(&mut rng)).max(0.1);
                freq_factor = 1.0 + p.cycle_period_jitter * gaussian(&mut rng);
            }
            let edge = (local.min(p.note_s - local) / EDGE_S).clamp(0.0, 1.0);
            let envelope = 0.5 - 0.5 * (PI * edge).cos();
            let s: f64 = gains
                .iter()
                .enumerate()
                .filter(|(h, _)| (*h + 1) as f64 * f0 < nyquist_guard)
                .map(|(h, g)| g * ((h + 1) as f64 * phase).sin())
                .sum();
            voice[start + j] = envelope * amp_factor * s / norm;
        }
    }

    let voiced: Vec<f64> = voice.iter().copied().filter(|v| *v != 0.0).collect();
    let voice_rms = (voiced.iter().map(|v| v * v).sum::<f64>() / voiced.len().max(1) as f64).sqrt();
    // Breath noise excites the same vocal tract as the voice.
    let mut noise: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
    for &(centre, bandwidth) in &p.formants {
        let r = (-PI * bandwidth / fs).exp();
        let (a1, a2) = (-2.0 * r * (TAU * centre / fs).cos(), r * r);
        let (mut y1, mut y2) = (0.0, 0.0);
        for v in noise.iter_mut() {
            let y = *v - a1 * y1 - a2 * y2;
            (y2, y1) = (y1, y);
            *v = y;
        }
    }
    let shaped_rms = (noise.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt().max(1e-300);
    let noise_gain = voice_rms * 10f64.powf(p.noise_db / 20.0) / shaped_rms;
    let mut mixed: Vec<f64> = voice.iter().zip(&noise).map(|(v, e)| v + noise_gain * e).collect();
    let peak = mixed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        for v in &mut mixed {
            *v *= p.peak / peak;
        }
    }
    AudioBuffer::new(mixed, p.sample_rate_hz)
}

pub fn good_singer() -> AudioBuffer {
    synthesize_voice(&VoiceParams::good_singer())
}

pub fn poor_singer() -> AudioBuffer {
    synthesize_voice(&VoiceParams::poor_singer())
}

pub fn silence(secs: f64) -> AudioBuffer {
    AudioBuffer::new(vec![0.0; (secs * FIXTURE_RATE_HZ as f64) as usize], FIXTURE_RATE_HZ)
}

/// Decaying 2 kHz blips at a steady tempo.
pub fn click_track(bpm: f64, secs: f64) -> AudioBuffer {
    let fs = FIXTURE_RATE_HZ as f64;
    let n = (secs * fs) as usize;
    let period = (60.0 / bpm * fs).round() as usize;
    let mut x = vec![0.0; n];
    for start in (0..n).step_by(period.max(1)) {
        for j in 0..(0.02 * fs) as usize {
            if start + j < n {
                let t = j as f64 / fs;
                x[start + j] = 0.8 * (-t * 200.0).exp() * (TAU * 2000.0 * t).sin();
            }
        }
    }
    AudioBuffer::new(x, FIXTURE_RATE_HZ)
}

/// A labeled recording of the grading corpus.
#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub name: String,
    pub grade: u8,
    pub tonic_hz: f64,
    pub params: VoiceParams,
}

/// Voice parameters for a singer of the given grade, varied by `seed`.
pub fn graded_voice(grade: u8, seed: u64) -> VoiceParams {
    let mut rng = Pcg64::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ grade as u64);
    let mut between = |lo: f64, hi: f64| lo + (hi - lo) * uniform(&mut rng);
    let tonic = between(196.0, 247.0);
    let sign = if between(0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
    let (offset, drift, amp, period, noise, vib) = match grade {
        5 => (between(0.0, 3.0), between(0.0, 1.0), between(0.003, 0.01), 0.0, between(-40.0, -33.0), between(3.0, 7.0)),
        4 => (between(7.0, 11.0), between(2.0, 4.0), between(0.03, 0.05), between(0.0, 0.0005), between(-28.0, -24.0), between(0.0, 4.0)),
        3 => (between(17.0, 24.0), between(4.0, 7.0), between(0.1, 0.14), between(0.001, 0.003), between(-18.0, -14.0), 0.0),
        _ => (between(35.0, 50.0), between(8.0, 12.0), between(0.22, 0.3), between(0.005, 0.009), between(-10.0, -7.0), 0.0),
    };
    VoiceParams {
        tonic_hz: tonic,
        notes: vec![1.0, 2.0, 1.0],
        note_s: 1.2,
        gap_s: 0.1,
        offset_cents: sign * offset,
        drift_cents: drift,
        drift_hz: between(0.2, 0.4),
        vibrato_cents: vib,
        vibrato_hz: between(5.0, 6.5),
        cycle_amp_jitter: amp,
        cycle_period_jitter: period,
        noise_db: noise,
        peak: between(0.3, 0.7),
        formants: VOWEL_A.map(|(f, b)| (f * between(0.92, 1.08), b)),
        sample_rate_hz: 22050,
        seed: seed * 17 + grade as u64,
    }
}

/// `per_grade` recordings for each grade 2–5, in grade-interleaved order.
pub fn grading_corpus(per_grade: usize) -> Vec<CorpusItem> {
    let mut out = Vec::with_capacity(4 * per_grade);
    for i in 0..per_grade {
        for grade in 2..=5u8 {
            let params = graded_voice(grade, i as u64);
            out.push(CorpusItem { name: format!("g{grade}_{i:02}"), grade, tonic_hz: params.tonic_hz, params });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic_and_bounded() {
        let (a, b) = (good_singer(), good_singer());
        assert_eq!(a, b);
        assert_eq!(a.sample_rate_hz, FIXTURE_RATE_HZ);
        assert!((a.duration_s() - VoiceParams::good_singer().duration_s()).abs() < 1e-3);
        let peak = poor_singer().samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 0.45).abs() < 1e-12);
        assert_ne!(good_singer().samples, poor_singer().samples);
    }

    #[test]
    fn resonance_peaks_at_centre() {
        let r = (700.0, 90.0);
        assert!(resonance(700.0, r) > resonance(600.0, r) && resonance(700.0, r) > resonance(800.0, r));
        assert!((resonance(0.0, r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corpus_is_balanced() {
        let c = grading_corpus(10);
        assert_eq!(c.len(), 40);
        for g in 2..=5 {
            assert_eq!(c.iter().filter(|i| i.grade == g).count(), 10);
        }
        let names: std::collections::BTreeSet<_> = c.iter().map(|i| i.name.clone()).collect();
        assert_eq!(names.len(), 40);
    }

    #[test]
    fn click_track_has_expected_onsets() {
        let c = click_track(120.0, 2.0);
        let onsets = c.samples.windows(2).filter(|w| w[0] == 0.0 && w[1] != 0.0).count();
        assert!((3..=4).contains(&onsets));
    }
}
