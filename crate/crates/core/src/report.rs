//! End-to-end analysis of one recording and the JSON report schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audio_io::{decode_wav, resample};
use crate::features::{extract_all, FeatureVector};
use crate::grader::{heuristic_feedback, FeedbackEntry, GradePrediction};
use crate::preprocess::{band_change, preprocess_pipeline, BandChange};
use crate::quantum::{quantum_signature, QuantumMode, QuantumSignature, DEFAULT_SHOTS};
use crate::scaling::{scale_features, AngleVector, ScalingBounds, ANGLE_FEATURES};
use crate::{Error, Result, PIPELINE_RATE_HZ};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub tonic_hz: f64,
    pub drone_hz: Option<f64>,
    pub shots: u64,
    pub seed: u64,
    pub quantum_mode: QuantumMode,
    pub bounds_path: Option<PathBuf>,
}

impl AnalysisConfig {
    pub fn new(tonic_hz: f64) -> Self {
        AnalysisConfig { tonic_hz, drone_hz: None, shots: DEFAULT_SHOTS, seed: 42, quantum_mode: QuantumMode::Faithful, bounds_path: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tonic_hz > 0.0 && self.tonic_hz.is_finite()) {
            return Err(Error::InvalidParameter(format!("tonic must be positive, got {}", self.tonic_hz)));
        }
        if self.shots == 0 {
            return Err(Error::InvalidShots);
        }
        if let Some(d) = self.drone_hz {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidParameter(format!("drone must be positive, got {d}")));
            }
        }
        Ok(())
    }

    pub fn bounds(&self) -> Result<ScalingBounds> {
        match &self.bounds_path {
            Some(p) => ScalingBounds::from_config_file(p),
            None => Ok(ScalingBounds::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub sha256: String,
    pub sample_rate_hz: u32,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSummary {
    pub analysis_rate_hz: u32,
    /// Energy change around the drone fundamental, when a drone was given.
    pub drone_band: Option<BandChange>,
    pub energy_change_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    pub angles: [f64; 9],
    pub features: Vec<String>,
    pub gates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub input: InputInfo,
    pub config: AnalysisConfig,
    pub bounds: ScalingBounds,
    pub features: FeatureVector,
    #[serde(with = "angle_serde")]
    pub angles: AngleVector,
    pub quantum: QuantumSignature,
    pub preprocessing: PreprocessSummary,
    pub warnings: Vec<String>,
    pub feedback: Vec<FeedbackEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade: Option<GradePrediction>,
    /// Seconds since the Unix epoch; the only field that varies between runs.
    pub generated_unix_s: u64,
}

mod angle_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &AngleVector, s: S) -> std::result::Result<S::Ok, S::Error> {
        AngleReport {
            angles: a.angles,
            features: ANGLE_FEATURES.iter().map(|f| f.to_string()).collect(),
            gates: a.axes().iter().map(|g| format!("{g:?}")).collect(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<AngleVector, D::Error> {
        let r = AngleReport::deserialize(d)?;
        AngleVector::new(r.angles).map_err(serde::de::Error::custom)
    }
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: AnalysisReport = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported report schema {}", report.schema_version)));
        }
        Ok(report)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn now_unix_s() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// decode → resample → preprocess → features → angles → quantum signature → feedback.
pub fn analyze(wav: &[u8], config: &AnalysisConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let bounds = config.bounds()?;
    let decoded = decode_wav(wav)?;
    let input = InputInfo {
        sha256: sha256_hex(wav),
        sample_rate_hz: decoded.sample_rate_hz,
        duration_s: decoded.duration_s(),
    };
    let buf = resample(&decoded, PIPELINE_RATE_HZ)?;
    let clean = preprocess_pipeline(&buf, config.drone_hz)?;

    let drone_band = match config.drone_hz {
        Some(d) if d * 1.1 < buf.nyquist_hz() => Some(band_change(&buf, &clean, d * 0.9, d * 1.1)?),
        _ => None,
    };
    let energy_change_db = 10.0 * ((clean.energy() + 1e-20) / (buf.energy() + 1e-20)).log10();

    let extraction = extract_all(&clean, config.tonic_hz)?;
    let mut warnings = extraction.warnings;
    let mut features = extraction.features;
    sanitize(&mut features, &mut warnings);

    let angles = scale_features(&features, &bounds)?;
    let quantum = quantum_signature(&angles, config.quantum_mode, config.shots, config.seed)?;
    let feedback = heuristic_feedback(&features);

    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION,
        input,
        config: config.clone(),
        bounds,
        features,
        angles,
        quantum,
        preprocessing: PreprocessSummary { analysis_rate_hz: PIPELINE_RATE_HZ, drone_band, energy_change_db },
        warnings,
        feedback,
        grade: None,
        generated_unix_s: now_unix_s(),
    })
}

pub fn analyze_file(path: &Path, config: &AnalysisConfig) -> Result<AnalysisReport> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    analyze(&bytes, config)
}

/// JSON has no NaN or infinity, so any such value becomes 0 with a warning.
fn sanitize(fv: &mut FeatureVector, warnings: &mut Vec<String>) {
    let mut fix = |name: &str, v: &mut f64| {
        if !v.is_finite() {
            *v = 0.0;
            warnings.push(format!("{name}: non-finite value replaced by 0"));
        }
    };
    fix("pitch_dev_cents", &mut fv.pitch_dev_cents);
    fix("jitter_local", &mut fv.jitter_local);
    fix("shimmer_local", &mut fv.shimmer_local);
    fix("lufs_mean", &mut fv.lufs_mean);
    fix("lufs_std", &mut fv.lufs_std);
    fix("rms", &mut fv.rms);
    fix("tnr_db", &mut fv.tnr_db);
    fix("mfcc_std", &mut fv.mfcc_std);
    fix("zcr", &mut fv.zcr);
    fix("centroid_hz", &mut fv.centroid_hz);
    fix("bandwidth_hz", &mut fv.bandwidth_hz);
    fix("flatness", &mut fv.flatness);
    fix("vibrato_extent_cents", &mut fv.vibrato_extent_cents);
    fix("vibrato_rate_hz", &mut fv.vibrato_rate_hz);
    fix("tempo_std_bpm", &mut fv.tempo_std_bpm);
    for (i, v) in fv.mfcc_mean.iter_mut().enumerate() {
        fix(&format!("mfcc_mean_{i}"), v);
    }
    for (i, v) in fv.formants_hz.iter_mut().enumerate() {
        fix(&format!("formant_f{}", i + 1), v);
    }
}
