//! Browser playground: move feature sliders, watch the angles and the
//! measurement distribution change, and compare two settings.
//!
//! The `*_impl` functions hold the logic and are plain Rust so they can be
//! tested natively; the exported wrappers only translate errors for JavaScript.

use vocalq::compare::{euclidean_angles, js_divergence_slices};
use vocalq::features::FeatureVector;
use vocalq::quantum::{exact_distribution, QuantumMode};
use vocalq::scaling::{default_bounds, scale_features, AngleVector, ANGLE_FEATURES};
use wasm_bindgen::prelude::*;

fn mode(interference: bool) -> QuantumMode {
    if interference {
        QuantumMode::Interference
    } else {
        QuantumMode::Faithful
    }
}

/// Feature values in angle order: pitch deviation, jitter, tempo std, shimmer,
/// LUFS mean, LUFS std, MFCC std, ZCR, TNR.
pub fn angles_impl(values: &[f64]) -> Result<Vec<f64>, String> {
    if values.len() != ANGLE_FEATURES.len() {
        return Err(format!("expected {} feature values, got {}", ANGLE_FEATURES.len(), values.len()));
    }
    let fv = FeatureVector {
        pitch_dev_cents: values[0],
        jitter_local: values[1],
        tempo_std_bpm: values[2],
        shimmer_local: values[3],
        lufs_mean: values[4],
        lufs_std: values[5],
        mfcc_std: values[6],
        zcr: values[7],
        tnr_db: values[8],
        ..FeatureVector::default()
    };
    scale_features(&fv, &default_bounds()).map(|a| a.angles.to_vec()).map_err(|e| e.to_string())
}

pub fn distribution_impl(angles: &[f64], interference: bool) -> Result<Vec<f64>, String> {
    exact_distribution(angles, mode(interference)).map_err(|e| e.to_string())
}

/// `[js_divergence, js_distance, euclidean_angles]` between two angle settings.
pub fn compare_impl(a: &[f64], b: &[f64], interference: bool) -> Result<Vec<f64>, String> {
    let (va, vb) = (
        AngleVector::from_slice(a).map_err(|e| e.to_string())?,
        AngleVector::from_slice(b).map_err(|e| e.to_string())?,
    );
    let js = js_divergence_slices(&distribution_impl(a, interference)?, &distribution_impl(b, interference)?)
        .map_err(|e| e.to_string())?;
    Ok(vec![js, js.sqrt(), euclidean_angles(&va, &vb)])
}

#[wasm_bindgen]
pub fn feature_names() -> Vec<String> {
    ANGLE_FEATURES.iter().map(|s| s.to_string()).collect()
}

#[wasm_bindgen]
pub fn angles_from_features(values: Vec<f64>) -> Result<Vec<f64>, JsError> {
    angles_impl(&values).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn measurement_distribution(angles: Vec<f64>, interference: bool) -> Result<Vec<f64>, JsError> {
    distribution_impl(&angles, interference).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn compare_settings(a: Vec<f64>, b: Vec<f64>, interference: bool) -> Result<Vec<f64>, JsError> {
    compare_impl(&a, &b, interference).map_err(|e| JsError::new(&e))
}
