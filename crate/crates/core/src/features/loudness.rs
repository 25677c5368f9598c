//! K-weighted loudness and RMS energy.

use serde::{Deserialize, Serialize};

use crate::dsp::std_dev;
use crate::preprocess::Biquad;
use crate::{AudioBuffer, Error, Result};

const BLOCK_S: f64 = 0.4;
const BLOCK_OVERLAP: f64 = 0.75;
/// Mean-square floor so silence reads as a finite (very low) loudness.
const MEAN_SQUARE_FLOOR: f64 = 1e-12;

/// Pre-filter stage: +4 dB high shelf around 1.68 kHz.
fn high_shelf(rate_hz: f64) -> Biquad {
    // Analog prototype parameters of the BS.1770 shelf, as fitted by pyloudnorm.
    let gain_db = 3.999_843_853_973_347;
    let q = 0.707_175_236_955_419_3;
    let center_hz = 1_681.974_450_955_532;

    let k = (std::f64::consts::PI * center_hz / rate_hz).tan();
    let vh = 10f64.powf(gain_db / 20.0);
    let vb = vh.powf(0.499_666_774_155);
    let a0 = 1.0 + k / q + k * k;
    Biquad {
        b0: (vh + vb * k / q + k * k) / a0,
        b1: 2.0 * (k * k - vh) / a0,
        b2: (vh - vb * k / q + k * k) / a0,
        a1: 2.0 * (k * k - 1.0) / a0,
        a2: (1.0 - k / q + k * k) / a0,
    }
}

/// RLB weighting: second-order high-pass around 38 Hz.
fn high_pass(rate_hz: f64) -> Biquad {
    let q = 0.500_327_037_325_395_3;
    let center_hz = 38.135_470_876_139_82;

    let k = (std::f64::consts::PI * center_hz / rate_hz).tan();
    let a0 = 1.0 + k / q + k * k;
    Biquad { b0: 1.0, b1: -2.0, b2: 1.0, a1: 2.0 * (k * k - 1.0) / a0, a2: (1.0 - k / q + k * k) / a0 }
}

/// K-weighted copy of the signal.
pub fn k_weight(buf: &AudioBuffer) -> Vec<f64> {
    let rate = buf.sample_rate_hz as f64;
    let mut w = buf.samples.clone();
    high_shelf(rate).run(&mut w);
    high_pass(rate).run(&mut w);
    w
}

fn loudness_of(mean_square: f64) -> f64 {
    -0.691 + 10.0 * mean_square.max(MEAN_SQUARE_FLOOR).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Loudness {
    pub lufs_mean: f64,
    pub lufs_std: f64,
}

/// Ungated loudness over the whole buffer, plus the spread of loudness across
/// 400 ms blocks that overlap by 75%.
pub fn loudness_lufs(buf: &AudioBuffer) -> Result<Loudness> {
    let block = (BLOCK_S * buf.sample_rate_hz as f64).round() as usize;
    if buf.len() < block {
        return Err(Error::BufferTooShort { needed: block, got: buf.len() });
    }
    let hop = ((1.0 - BLOCK_OVERLAP) * block as f64).round() as usize;
    let w = k_weight(buf);
    let mut prefix = Vec::with_capacity(w.len() + 1);
    prefix.push(0.0);
    for v in &w {
        prefix.push(prefix.last().unwrap() + v * v);
    }

    let lufs_mean = loudness_of(prefix[w.len()] / w.len() as f64);
    let blocks: Vec<f64> = (0..=(w.len() - block) / hop)
        .map(|i| {
            let s = i * hop;
            loudness_of((prefix[s + block] - prefix[s]).max(0.0) / block as f64)
        })
        .collect();
    Ok(Loudness { lufs_mean, lufs_std: std_dev(&blocks) })
}

pub fn rms(buf: &AudioBuffer) -> Result<f64> {
    if buf.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    Ok((buf.energy() / buf.len() as f64).sqrt())
}
