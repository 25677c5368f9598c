//! Distances between two analyzed recordings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::quantum::MeasurementDistribution;
use crate::report::AnalysisReport;
use crate::scaling::AngleVector;
use crate::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionSource {
    #[default]
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub js_divergence: f64,
    pub js_distance: f64,
    pub euclidean_angles: f64,
    pub distribution: DistributionSource,
    /// `b - a` for every scalar feature.
    pub per_feature_deltas: BTreeMap<String, f64>,
}

fn check_distribution(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE || p.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::NotADistribution(sum));
    }
    Ok(())
}

/// Base-2 Jensen–Shannon divergence, in `[0, 1]`.
pub fn js_divergence_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let kl_to_mid = |x: &[f64]| -> f64 {
        x.iter()
            .zip(p.iter().zip(q))
            .filter(|(&xi, _)| xi > 0.0)
            .map(|(&xi, (&pi, &qi))| xi * (xi / (0.5 * (pi + qi))).log2())
            .sum()
    };
    Ok((0.5 * kl_to_mid(p) + 0.5 * kl_to_mid(q)).clamp(0.0, 1.0))
}

/// Divergence between the stored probabilities of two distributions.
pub fn js_divergence(p: &MeasurementDistribution, q: &MeasurementDistribution) -> Result<f64> {
    js_divergence_slices(&p.probabilities, &q.probabilities)
}

pub fn euclidean_angles(a: &AngleVector, b: &AngleVector) -> f64 {
    a.angles.iter().zip(&b.angles).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn euclidean_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
}

pub fn compare_reports(a: &AnalysisReport, b: &AnalysisReport, source: DistributionSource) -> Result<ComparisonResult> {
    let (qa, qb) = (&a.quantum, &b.quantum);
    if qa.mode != qb.mode {
        return Err(Error::ModeMismatch(format!("quantum modes differ: {} vs {}", qa.mode, qb.mode)));
    }
    if qa.sampled.shots != qb.sampled.shots {
        return Err(Error::ModeMismatch(format!(
            "shot counts differ: {} vs {}",
            qa.sampled.shots, qb.sampled.shots
        )));
    }
    let js = match source {
        DistributionSource::Exact => js_divergence(&qa.exact, &qb.exact)?,
        DistributionSource::Sampled => js_divergence(&qa.sampled, &qb.sampled)?,
    };
    let fa: BTreeMap<_, _> = a.features.named_values().into_iter().collect();
    let per_feature_deltas = b
        .features
        .named_values()
        .into_iter()
        .filter_map(|(name, vb)| fa.get(&name).map(|va| (name, vb - va)))
        .collect();
    Ok(ComparisonResult {
        js_divergence: js,
        js_distance: js.sqrt(),
        euclidean_angles: euclidean_angles(&a.angles, &b.angles),
        distribution: source,
        per_feature_deltas,
    })
}
