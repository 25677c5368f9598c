//! WAV decoding, mono mixdown and band-limited resampling.

use std::io::Cursor;

use crate::{Error, Result};

/// Mono samples at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        assert!(sample_rate_hz > 0, "sample rate must be positive");
        AudioBuffer { samples, sample_rate_hz }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sample_rate_hz as f64 / 2.0
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }

    /// Returns a copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> AudioBuffer {
        AudioBuffer::new(self.samples.iter().map(|x| x * gain).collect(), self.sample_rate_hz)
    }
}

/// Decodes a RIFF/WAVE byte stream holding 16- or 24-bit PCM or 32-bit float
/// samples. All channels are averaged into one.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(map_hound_error)?;
    let spec = reader.spec();
    if spec.channels == 0 {
        return Err(Error::MalformedContainer("zero channels".into()));
    }
    if spec.sample_rate == 0 {
        return Err(Error::MalformedContainer("zero sample rate".into()));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => {
            read_all(reader.into_samples::<i16>(), |s| s as f64 / 32768.0)?
        }
        (hound::SampleFormat::Int, 24) => {
            read_all(reader.into_samples::<i32>(), |s| s as f64 / 8_388_608.0)?
        }
        (hound::SampleFormat::Float, 32) => read_all(reader.into_samples::<f32>(), |s| s as f64)?,
        (format, bits) => {
            return Err(Error::UnsupportedEncoding(format!("{format:?} with {bits} bits per sample")))
        }
    };

    let channels = spec.channels as usize;
    let samples = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect::<Vec<_>>();
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::MalformedContainer("non-finite float sample".into()));
    }
    Ok(AudioBuffer::new(samples, spec.sample_rate))
}

fn read_all<S, I, F>(samples: I, scale: F) -> Result<Vec<f64>>
where
    I: Iterator<Item = hound::Result<S>>,
    F: Fn(S) -> f64,
{
    samples.map(|s| s.map(&scale).map_err(map_hound_error)).collect()
}

fn map_hound_error(err: hound::Error) -> Error {
    match err {
        hound::Error::Unsupported => Error::UnsupportedEncoding("unsupported WAV format".into()),
        hound::Error::FormatError(msg) => Error::MalformedContainer(msg.to_string()),
        other => Error::MalformedContainer(other.to_string()),
    }
}

/// Encodes a mono buffer as 16-bit PCM WAV. Samples are clipped to [-1, 1].
pub fn encode_wav_pcm16(buf: &AudioBuffer) -> Result<Vec<u8>> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut out = Cursor::new(Vec::new());
    {
        let mut writer =
            hound::WavWriter::new(&mut out, spec).map_err(|e| Error::Format(e.to_string()))?;
        for &s in &buf.samples {
            let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
            writer.write_sample(v).map_err(|e| Error::Format(e.to_string()))?;
        }
        writer.finalize().map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(out.into_inner())
}

const SINC_TAPS: usize = 64;
const KAISER_BETA: f64 = 8.6;
/// Largest interpolation factor for which a full polyphase table is built.
const MAX_TABLE_PHASES: u64 = 4096;

/// Resamples with a 64-tap Kaiser-windowed sinc (beta 8.6).
///
/// The output holds `round(len * target / source)` samples. When the rate ratio
/// reduces to at most 4096 phases the kernel is tabulated per phase; otherwise it
/// is evaluated directly at each output position.
pub fn resample(buf: &AudioBuffer, target_hz: u32) -> Result<AudioBuffer> {
    if buf.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    if target_hz == 0 {
        return Err(Error::InvalidParameter("target rate must be positive".into()));
    }
    let source_hz = buf.sample_rate_hz;
    if target_hz == source_hz {
        return Ok(buf.clone());
    }

    let len = buf.len() as u64;
    let out_len = ((len * target_hz as u64 + source_hz as u64 / 2) / source_hz as u64) as usize;
    // Cutoff relative to the input Nyquist; below 1 when decimating.
    let cutoff = (target_hz as f64 / source_hz as f64).min(1.0);

    let g = gcd(source_hz as u64, target_hz as u64);
    let up = target_hz as u64 / g;
    let down = source_hz as u64 / g;

    let half = (SINC_TAPS / 2) as i64;
    let input = &buf.samples;
    let mut out = Vec::with_capacity(out_len);

    if up <= MAX_TABLE_PHASES {
        let table = PolyphaseTable::new(up as usize, cutoff);
        for m in 0..out_len as u64 {
            let num = m * down;
            let base = (num / up) as i64;
            let phase = (num % up) as usize;
            let taps = table.phase(phase);
            let mut acc = 0.0;
            for (j, &h) in taps.iter().enumerate() {
                let n = base - half + 1 + j as i64;
                if n >= 0 && (n as usize) < input.len() {
                    acc += h * input[n as usize];
                }
            }
            out.push(acc);
        }
    } else {
        let ratio = source_hz as f64 / target_hz as f64;
        for m in 0..out_len {
            let t = m as f64 * ratio;
            let base = t.floor() as i64;
            let mut acc = 0.0;
            for n in (base - half + 1)..=(base + half) {
                if n >= 0 && (n as usize) < input.len() {
                    acc += kernel(t - n as f64, cutoff) * input[n as usize];
                }
            }
            out.push(acc);
        }
    }

    Ok(AudioBuffer::new(out, target_hz))
}

struct PolyphaseTable {
    coeffs: Vec<f64>,
}

impl PolyphaseTable {
    fn new(phases: usize, cutoff: f64) -> Self {
        let half = (SINC_TAPS / 2) as f64;
        let mut coeffs = Vec::with_capacity(phases * SINC_TAPS);
        for p in 0..phases {
            let frac = p as f64 / phases as f64;
            for j in 0..SINC_TAPS {
                // Tap j sits at input index base - half + 1 + j.
                let offset = frac + half - 1.0 - j as f64;
                coeffs.push(kernel(offset, cutoff));
            }
        }
        PolyphaseTable { coeffs }
    }

    fn phase(&self, p: usize) -> &[f64] {
        &self.coeffs[p * SINC_TAPS..(p + 1) * SINC_TAPS]
    }
}

fn kernel(x: f64, cutoff: f64) -> f64 {
    let half = (SINC_TAPS / 2) as f64;
    if x.abs() >= half {
        return 0.0;
    }
    let r = x / half;
    let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / bessel_i0(KAISER_BETA);
    cutoff * sinc(cutoff * x) * window
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let quarter_sq = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= quarter_sq / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
