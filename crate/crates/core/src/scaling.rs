//! Maps a [`FeatureVector`] onto nine rotation angles in `[0, 2π]`.
//!
//! | index | feature              | gate | map                                   |
//! |-------|----------------------|------|---------------------------------------|
//! | 0     | pitch deviation      | Rx   | `2π σ((d - d0) / k)`                  |
//! | 1     | jitter               | Rx   | `2π σ(a (J - J0))`                    |
//! | 2     | tempo std            | Rx   | `2π tanh(T / r)`                      |
//! | 3     | shimmer              | Ry   | `2π σ(b (S - S0))`                    |
//! | 4     | mean loudness        | Ry   | `2π (L - Lmin) / (Lmax - Lmin)`       |
//! | 5     | loudness std         | Ry   | `2π (σ - offset) / (σmax - offset)`   |
//! | 6     | MFCC pooled std      | Rz   | `2π ln(1 + M) / ln(1 + Mmax)`         |
//! | 7     | zero-crossing rate   | Rz   | `2π min(Z, cap) / cap`                |
//! | 8     | tone-to-noise ratio  | Rz   | `2π (Tmax - TNR) / (Tmax - Tmin)`     |
//!
//! Linear and log maps clamp their input to the configured bounds; every output
//! is clamped to `[0, 2π]`.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;
use crate::{Error, Result};

pub const ANGLE_COUNT: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationAxis {
    Rx,
    Ry,
    Rz,
}

impl RotationAxis {
    pub fn of_index(i: usize) -> RotationAxis {
        match i {
            0..=2 => RotationAxis::Rx,
            3..=5 => RotationAxis::Ry,
            _ => RotationAxis::Rz,
        }
    }
}

/// Feature encoded by each angle index.
pub const ANGLE_FEATURES: [&str; ANGLE_COUNT] = [
    "pitch_dev_cents",
    "jitter_local",
    "tempo_std_bpm",
    "shimmer_local",
    "lufs_mean",
    "lufs_std",
    "mfcc_std",
    "zcr",
    "tnr_db",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleVector {
    pub angles: [f64; ANGLE_COUNT],
}

impl AngleVector {
    pub fn new(angles: [f64; ANGLE_COUNT]) -> Result<Self> {
        if let Some(bad) = angles.iter().find(|a| !(0.0..=TAU).contains(*a)) {
            return Err(Error::InvalidParameter(format!("angle {bad} outside [0, 2π]")));
        }
        Ok(AngleVector { angles })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let angles: [f64; ANGLE_COUNT] = values
            .try_into()
            .map_err(|_| Error::WrongArity { expected: ANGLE_COUNT, got: values.len() })?;
        AngleVector::new(angles)
    }

    pub fn zeros() -> Self {
        AngleVector { angles: [0.0; ANGLE_COUNT] }
    }

    pub fn axes(&self) -> [RotationAxis; ANGLE_COUNT] {
        std::array::from_fn(RotationAxis::of_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmoidParams {
    /// Feature value mapped to π.
    pub center: f64,
    /// Multiplies `(x - center)` inside the logistic function.
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TempoParams {
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LufsStdParams {
    pub offset: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfccParams {
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZcrParams {
    pub cap: f64,
}

/// Parameters of every angle map. The pitch sigmoid's slope is stored as `1/k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingBounds {
    pub pitch: SigmoidParams,
    pub jitter: SigmoidParams,
    pub tempo: TempoParams,
    pub shimmer: SigmoidParams,
    pub lufs: LinearRange,
    pub lufs_std: LufsStdParams,
    pub mfcc: MfccParams,
    pub zcr: ZcrParams,
    pub tnr: LinearRange,
}

/// Sigmoid centred on the range midpoint whose ends sit at logistic arguments ∓3.
fn sigmoid_over(min: f64, max: f64) -> SigmoidParams {
    SigmoidParams { center: 0.5 * (min + max), slope: 6.0 / (max - min) }
}

pub const PITCH_DEV_MAX_CENTS: f64 = 1431.7;
pub const JITTER_MAX: f64 = 0.3278;
pub const SHIMMER_MAX: f64 = 1.1735;

/// Empirical bounds: pitch deviation 0–1431.7 cents, jitter 0–0.3278, tempo
/// std 30–180 BPM (r = 50), shimmer 0–1.1735, loudness −60 to −10 LUFS,
/// loudness std 1–12 dB, MFCC std 0–0.25, ZCR cap 0.2, TNR 5–30 dB.
pub fn default_bounds() -> ScalingBounds {
    ScalingBounds {
        pitch: sigmoid_over(0.0, PITCH_DEV_MAX_CENTS),
        jitter: sigmoid_over(0.0, JITTER_MAX),
        tempo: TempoParams { r: 50.0 },
        shimmer: sigmoid_over(0.0, SHIMMER_MAX),
        lufs: LinearRange { min: -60.0, max: -10.0 },
        lufs_std: LufsStdParams { offset: 1.0, max: 12.0 },
        mfcc: MfccParams { max: 0.25 },
        zcr: ZcrParams { cap: 0.2 },
        tnr: LinearRange { min: 5.0, max: 30.0 },
    }
}

impl Default for ScalingBounds {
    fn default() -> Self {
        default_bounds()
    }
}

impl ScalingBounds {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pitch.slope", self.pitch.slope),
            ("jitter.slope", self.jitter.slope),
            ("shimmer.slope", self.shimmer.slope),
            ("tempo.r", self.tempo.r),
            ("lufs_std.max", self.lufs_std.max - self.lufs_std.offset),
            ("mfcc.max", self.mfcc.max),
            ("zcr.cap", self.zcr.cap),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidBounds(format!("{name} must be positive and finite")));
            }
        }
        for (name, r) in [("lufs", self.lufs), ("tnr", self.tnr)] {
            if !(r.min < r.max && r.min.is_finite() && r.max.is_finite()) {
                return Err(Error::InvalidBounds(format!("{name}.min must be below {name}.max")));
            }
        }
        if !(self.pitch.center.is_finite() && self.jitter.center.is_finite() && self.shimmer.center.is_finite()) {
            return Err(Error::InvalidBounds("sigmoid centres must be finite".into()));
        }
        Ok(())
    }

    /// Parses `key = value` overrides on top of the defaults. Keys are dotted,
    /// e.g. `lufs.min = -55` or `zcr.cap = 0.12`; `#` starts a comment.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let bad = |e: &dyn std::fmt::Display| Error::InvalidBounds(e.to_string());
        let overrides: toml::Table = text.parse().map_err(|e| bad(&e))?;
        let mut merged = toml::Table::try_from(default_bounds()).map_err(|e| bad(&e))?;
        merge(&mut merged, overrides);
        let bounds: ScalingBounds = merged.try_into().map_err(|e| bad(&e))?;
        bounds.validate()?;
        Ok(bounds)
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_config_str(&text)
    }
}

/// Overlays `overrides` onto `base`, recursing into tables.
fn merge(base: &mut toml::Table, overrides: toml::Table) {
    for (key, value) in overrides {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, toml::Value::Integer(i)) => {
                base.insert(key, toml::Value::Float(i as f64));
            }
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

pub fn theta_sigmoid(x: f64, p: SigmoidParams) -> f64 {
    TAU * unit(logistic(p.slope * (x - p.center)))
}

pub fn theta_tempo(tempo_std_bpm: f64, p: TempoParams) -> f64 {
    TAU * unit((tempo_std_bpm / p.r).tanh())
}

pub fn theta_linear(x: f64, r: LinearRange) -> f64 {
    TAU * unit((x - r.min) / (r.max - r.min))
}

pub fn theta_lufs_std(sigma: f64, p: LufsStdParams) -> f64 {
    TAU * unit((sigma - p.offset) / (p.max - p.offset))
}

pub fn theta_mfcc(m: f64, p: MfccParams) -> f64 {
    let m = m.clamp(0.0, p.max);
    TAU * unit((1.0 + m).ln() / (1.0 + p.max).ln())
}

pub fn theta_zcr(z: f64, p: ZcrParams) -> f64 {
    TAU * unit(z.min(p.cap) / p.cap)
}

pub fn theta_tnr(tnr_db: f64, r: LinearRange) -> f64 {
    TAU * unit((r.max - tnr_db) / (r.max - r.min))
}

pub fn scale_features(fv: &FeatureVector, bounds: &ScalingBounds) -> Result<AngleVector> {
    bounds.validate()?;
    let angles = [
        theta_sigmoid(fv.pitch_dev_cents, bounds.pitch),
        theta_sigmoid(fv.jitter_local, bounds.jitter),
        theta_tempo(fv.tempo_std_bpm, bounds.tempo),
        theta_sigmoid(fv.shimmer_local, bounds.shimmer),
        theta_linear(fv.lufs_mean, bounds.lufs),
        theta_lufs_std(fv.lufs_std, bounds.lufs_std),
        theta_mfcc(fv.mfcc_std, bounds.mfcc),
        theta_zcr(fv.zcr, bounds.zcr),
        theta_tnr(fv.tnr_db, bounds.tnr),
    ];
    Ok(AngleVector { angles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn with(f: impl FnOnce(&mut FeatureVector)) -> AngleVector {
        let mut fv = FeatureVector::default();
        f(&mut fv);
        scale_features(&fv, &default_bounds()).unwrap()
    }

    #[test]
    fn defaults_match_table() {
        let b = default_bounds();
        assert_eq!((b.lufs.min, b.lufs.max), (-60.0, -10.0));
        assert_eq!((b.tnr.min, b.tnr.max), (5.0, 30.0));
        assert_eq!(b.mfcc.max, 0.25);
        assert_eq!(b.zcr.cap, 0.2);
        assert_eq!(b.lufs_std.max, 12.0);
        assert_eq!(b.tempo.r, 50.0);
        assert!((b.pitch.center - 715.85).abs() < 1e-9);
        assert!((1.0 / b.pitch.slope - 238.6).abs() < 0.05);
        assert!((b.jitter.center - 0.1639).abs() < 1e-9 && (b.jitter.slope - 18.3).abs() < 0.01);
        assert!((b.shimmer.center - 0.58675).abs() < 1e-9 && (b.shimmer.slope - 5.11).abs() < 0.01);
        b.validate().unwrap();
    }

    #[test]
    fn lufs_endpoints_and_midpoint() {
        assert_eq!(with(|f| f.lufs_mean = -60.0).angles[4], 0.0);
        assert_eq!(with(|f| f.lufs_mean = -10.0).angles[4], TAU);
        assert!((with(|f| f.lufs_mean = -35.0).angles[4] - PI).abs() < 1e-12);
        assert_eq!(with(|f| f.lufs_mean = -80.0).angles[4], 0.0);
    }

    #[test]
    fn sigmoid_midpoints_map_to_pi() {
        let b = default_bounds();
        assert!((with(|f| f.pitch_dev_cents = b.pitch.center).angles[0] - PI).abs() < 1e-12);
        assert!((with(|f| f.jitter_local = b.jitter.center).angles[1] - PI).abs() < 1e-12);
        assert!((with(|f| f.shimmer_local = b.shimmer.center).angles[3] - PI).abs() < 1e-12);
    }

    #[test]
    fn tempo_zero_and_zcr_cap() {
        assert_eq!(with(|f| f.tempo_std_bpm = 0.0).angles[2], 0.0);
        assert_eq!(with(|f| f.zcr = 0.2).angles[7], TAU);
        assert_eq!(with(|f| f.zcr = 0.35).angles[7], TAU);
    }

    #[test]
    fn tnr_is_inverted() {
        assert_eq!(with(|f| f.tnr_db = 30.0).angles[8], 0.0);
        assert_eq!(with(|f| f.tnr_db = 5.0).angles[8], TAU);
    }

    #[test]
    fn lufs_std_offset_and_literal_form() {
        assert_eq!(with(|f| f.lufs_std = 1.0).angles[5], 0.0);
        assert_eq!(with(|f| f.lufs_std = 12.0).angles[5], TAU);
        let literal = ScalingBounds::from_config_str("lufs_std.offset = 0.0").unwrap();
        let fv = FeatureVector { lufs_std: 6.0, ..FeatureVector::default() };
        assert!((scale_features(&fv, &literal).unwrap().angles[5] - PI).abs() < 1e-12);
    }

    #[test]
    fn config_overrides_and_validation() {
        let b = ScalingBounds::from_config_str("# tighter\nzcr.cap = 0.12\n[tnr]\nmin = 0\nmax = 40\n").unwrap();
        assert_eq!(b.zcr.cap, 0.12);
        assert_eq!((b.tnr.min, b.tnr.max), (0.0, 40.0));
        assert_eq!(b.lufs, default_bounds().lufs);
        assert!(matches!(ScalingBounds::from_config_str("lufs.min = -5\nlufs.max = -10"), Err(Error::InvalidBounds(_))));
        assert!(matches!(ScalingBounds::from_config_str("bogus = 1"), Err(Error::InvalidBounds(_))));
        assert!(matches!(ScalingBounds::from_config_str("tempo.r = 0"), Err(Error::InvalidBounds(_))));
    }

    #[test]
    fn invalid_bounds_are_rejected_by_scale() {
        let mut b = default_bounds();
        b.tnr = LinearRange { min: 30.0, max: 5.0 };
        assert!(matches!(scale_features(&FeatureVector::default(), &b), Err(Error::InvalidBounds(_))));
    }

    #[test]
    fn groups_follow_gate_layout() {
        let axes = AngleVector::zeros().axes();
        assert_eq!(&axes[0..3], &[RotationAxis::Rx; 3]);
        assert_eq!(&axes[3..6], &[RotationAxis::Ry; 3]);
        assert_eq!(&axes[6..9], &[RotationAxis::Rz; 3]);
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(AngleVector::from_slice(&[0.0; 8]), Err(Error::WrongArity { expected: 9, got: 8 })));
        assert!(AngleVector::from_slice(&[7.0; 9]).is_err());
    }

    fn arb_features() -> impl Strategy<Value = FeatureVector> {
        let f = || -1e4f64..1e4;
        (f(), f(), f(), f(), f(), f(), f(), f(), f()).prop_map(|(a, b, c, d, e, g, h, i, j)| FeatureVector {
            pitch_dev_cents: a,
            jitter_local: b,
            tempo_std_bpm: c,
            shimmer_local: d,
            lufs_mean: e,
            lufs_std: g,
            mfcc_std: h,
            zcr: i,
            tnr_db: j,
            ..FeatureVector::default()
        })
    }

    proptest! {
        #[test]
        fn every_angle_in_range(fv in arb_features()) {
            let a = scale_features(&fv, &default_bounds()).unwrap();
            for v in a.angles {
                prop_assert!((0.0..=TAU).contains(&v));
            }
        }

        #[test]
        fn scaling_is_deterministic(fv in arb_features()) {
            let b = default_bounds();
            prop_assert_eq!(scale_features(&fv, &b).unwrap(), scale_features(&fv, &b).unwrap());
        }
    }
}
