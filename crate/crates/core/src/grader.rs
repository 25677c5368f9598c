//! Fusion classifier over classical features and quantum probabilities, and
//! rule-based technique feedback.
//!
//! The network input is the 19 classical scalars of [`CLASSICAL_INPUTS`]
//! followed by the 512 sampled measurement probabilities. Inputs are z-scored
//! with training-set statistics, then pass through `affine → tanh → affine →
//! softmax` to four classes, one per grade 2–5.

use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;
use crate::quantum::STATES;
use crate::report::AnalysisReport;
use crate::{Error, Result};

pub const MODEL_VERSION: u32 = 1;
pub const CLASS_COUNT: usize = 4;
pub const DEFAULT_HIDDEN: usize = 32;
pub const MIN_GRADE: u8 = 2;
pub const MAX_GRADE: u8 = 5;

/// Classical block of the model input, in order. `mfcc_mean` is the mean of the
/// 13 MFCC means.
pub const CLASSICAL_INPUTS: [&str; 19] = [
    "pitch_dev_cents",
    "jitter_local",
    "shimmer_local",
    "lufs_mean",
    "lufs_std",
    "rms",
    "tnr_db",
    "mfcc_mean",
    "mfcc_std",
    "zcr",
    "centroid_hz",
    "bandwidth_hz",
    "flatness",
    "formant_f1",
    "formant_f2",
    "formant_f3",
    "vibrato_extent_cents",
    "vibrato_rate_hz",
    "tempo_std_bpm",
];

pub const INPUT_DIM: usize = CLASSICAL_INPUTS.len() + STATES;

/// Standard deviations below this are replaced by 1 during normalization.
const STD_FLOOR: f64 = 1e-12;

pub fn classical_block(fv: &FeatureVector) -> [f64; 19] {
    let mfcc_mean = if fv.mfcc_mean.is_empty() {
        0.0
    } else {
        fv.mfcc_mean.iter().sum::<f64>() / fv.mfcc_mean.len() as f64
    };
    [
        fv.pitch_dev_cents,
        fv.jitter_local,
        fv.shimmer_local,
        fv.lufs_mean,
        fv.lufs_std,
        fv.rms,
        fv.tnr_db,
        mfcc_mean,
        fv.mfcc_std,
        fv.zcr,
        fv.centroid_hz,
        fv.bandwidth_hz,
        fv.flatness,
        fv.formants_hz[0],
        fv.formants_hz[1],
        fv.formants_hz[2],
        fv.vibrato_extent_cents,
        fv.vibrato_rate_hz,
        fv.tempo_std_bpm,
    ]
}

/// Model input for a report: classical block then sampled probabilities.
pub fn report_input(report: &AnalysisReport) -> Result<Vec<f64>> {
    let probs = &report.quantum.sampled.probabilities;
    if probs.len() != STATES {
        return Err(Error::ModelInputMismatch(format!("report has {} probabilities, expected {STATES}", probs.len())));
    }
    let mut x = classical_block(&report.features).to_vec();
    x.extend_from_slice(probs);
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraderModel {
    pub version: u32,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub class_count: usize,
    /// `hidden_dim × input_dim`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `class_count × hidden_dim`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub seed: u64,
    pub final_loss: f64,
    #[serde(default)]
    pub loss_history: Vec<f64>,
}

impl GraderModel {
    /// All-zero weights with identity normalization.
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        GraderModel {
            version: MODEL_VERSION,
            input_dim,
            hidden_dim,
            class_count: CLASS_COUNT,
            w1: vec![0.0; hidden_dim * input_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; CLASS_COUNT * hidden_dim],
            b2: vec![0.0; CLASS_COUNT],
            input_mean: vec![0.0; input_dim],
            input_std: vec![1.0; input_dim],
            seed: 0,
            final_loss: 0.0,
            loss_history: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (i, h, c) = (self.input_dim, self.hidden_dim, self.class_count);
        let shapes = [
            (self.w1.len(), h * i),
            (self.b1.len(), h),
            (self.w2.len(), c * h),
            (self.b2.len(), c),
            (self.input_mean.len(), i),
            (self.input_std.len(), i),
        ];
        if self.version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {}", self.version)));
        }
        if c != CLASS_COUNT {
            return Err(Error::Format(format!("model has {c} classes, expected {CLASS_COUNT}")));
        }
        if let Some(&(got, expected)) = shapes.iter().find(|(got, expected)| got != expected) {
            return Err(Error::Format(format!("model array of length {got}, expected {expected}")));
        }
        let finite = [&self.w1, &self.b1, &self.w2, &self.b2, &self.input_mean, &self.input_std]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::Format("model parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: GraderModel = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    fn normalize(&self, input: &[f64]) -> Vec<f64> {
        input.iter().zip(self.input_mean.iter().zip(&self.input_std)).map(|(x, (m, s))| (x - m) / s).collect()
    }

    /// Hidden activations and class probabilities for a normalized input.
    fn forward_normalized(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h: Vec<f64> = (0..self.hidden_dim)
            .map(|j| {
                let row = &self.w1[j * self.input_dim..(j + 1) * self.input_dim];
                (self.b1[j] + row.iter().zip(z).map(|(w, x)| w * x).sum::<f64>()).tanh()
            })
            .collect();
        let logits: Vec<f64> = (0..self.class_count)
            .map(|k| {
                let row = &self.w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
                self.b2[k] + row.iter().zip(&h).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect();
        (h, softmax(&logits))
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: input.len() });
        }
        Ok(self.forward_normalized(&self.normalize(input)).1)
    }

    fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Trainable parameters flattened as `w1 ‖ b1 ‖ w2 ‖ b2`.
    pub fn params(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2].into_iter().flatten().copied().collect()
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.param_count());
        let (w1, rest) = p.split_at(self.w1.len());
        let (b1, rest) = rest.split_at(self.b1.len());
        let (w2, b2) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2.copy_from_slice(b2);
    }

    /// Mean cross-entropy over already-normalized inputs, and its gradient in
    /// [`params`](Self::params) order.
    pub fn loss_and_gradient(&self, inputs: &[Vec<f64>], classes: &[usize]) -> (f64, Vec<f64>) {
        let (ni, nh, nc) = (self.input_dim, self.hidden_dim, self.class_count);
        let mut gw1 = vec![0.0; nh * ni];
        let mut gb1 = vec![0.0; nh];
        let mut gw2 = vec![0.0; nc * nh];
        let mut gb2 = vec![0.0; nc];
        let mut loss = 0.0;
        let scale = 1.0 / inputs.len() as f64;

        for (z, &class) in inputs.iter().zip(classes) {
            let (h, p) = self.forward_normalized(z);
            loss -= p[class].max(f64::MIN_POSITIVE).ln();
            let dlogits: Vec<f64> = (0..nc).map(|k| (p[k] - if k == class { 1.0 } else { 0.0 }) * scale).collect();
            let mut dh = vec![0.0; nh];
            for k in 0..nc {
                gb2[k] += dlogits[k];
                for j in 0..nh {
                    gw2[k * nh + j] += dlogits[k] * h[j];
                    dh[j] += dlogits[k] * self.w2[k * nh + j];
                }
            }
            for j in 0..nh {
                let da = dh[j] * (1.0 - h[j] * h[j]);
                if da == 0.0 {
                    continue;
                }
                gb1[j] += da;
                for (g, x) in gw1[j * ni..(j + 1) * ni].iter_mut().zip(z) {
                    *g += da * x;
                }
            }
        }
        let grad = [gw1, gb1, gw2, gb2].concat();
        (loss * scale, grad)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub input: Vec<f64>,
    pub grade: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 200, learning_rate: 0.05, batch_size: 16, hidden_dim: DEFAULT_HIDDEN, seed: 42 }
    }
}

fn grade_class(grade: u8) -> Result<usize> {
    if !(MIN_GRADE..=MAX_GRADE).contains(&grade) {
        return Err(Error::InvalidGrade(grade));
    }
    Ok((grade - MIN_GRADE) as usize)
}

fn uniform(rng: &mut Pcg64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Mini-batch gradient descent on mean cross-entropy. Deterministic in `config.seed`.
pub fn train(examples: &[TrainingExample], config: &TrainConfig) -> Result<GraderModel> {
    let first = examples.first().ok_or(Error::EmptyTrainingSet)?;
    let dim = first.input.len();
    let classes: Vec<usize> = examples.iter().map(|e| grade_class(e.grade)).collect::<Result<_>>()?;
    if classes.iter().all(|&c| c == classes[0]) {
        return Err(Error::DegenerateLabels);
    }
    if let Some(bad) = examples.iter().find(|e| e.input.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.input.len() });
    }
    if examples.iter().any(|e| e.input.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidParameter("training inputs must be finite".into()));
    }
    if config.epochs == 0 || config.batch_size == 0 || config.hidden_dim == 0 || !(config.learning_rate > 0.0) {
        return Err(Error::InvalidParameter("epochs, batch size, hidden size and learning rate must be positive".into()));
    }

    let n = examples.len() as f64;
    let mut model = GraderModel::zeros(dim, config.hidden_dim);
    model.seed = config.seed;
    for d in 0..dim {
        let mean = examples.iter().map(|e| e.input[d]).sum::<f64>() / n;
        let var = examples.iter().map(|e| (e.input[d] - mean).powi(2)).sum::<f64>() / n;
        model.input_mean[d] = mean;
        model.input_std[d] = if var.sqrt() < STD_FLOOR { 1.0 } else { var.sqrt() };
    }

    let mut rng = Pcg64::seed_from_u64(config.seed);
    let init = |rng: &mut Pcg64, fan_in: usize, v: &mut [f64]| {
        let bound = 1.0 / (fan_in as f64).sqrt();
        for w in v {
            *w = (2.0 * uniform(rng) - 1.0) * bound;
        }
    };
    init(&mut rng, dim, &mut model.w1);
    init(&mut rng, dim, &mut model.b1);
    init(&mut rng, config.hidden_dim, &mut model.w2);
    init(&mut rng, config.hidden_dim, &mut model.b2);

    let inputs: Vec<Vec<f64>> = examples.iter().map(|e| model.normalize(&e.input)).collect();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut params = model.params();
    for _ in 0..config.epochs {
        // Fisher–Yates shuffle.
        for i in (1..order.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            order.swap(i, j);
        }
        for batch in order.chunks(config.batch_size) {
            let xs: Vec<Vec<f64>> = batch.iter().map(|&i| inputs[i].clone()).collect();
            let ys: Vec<usize> = batch.iter().map(|&i| classes[i]).collect();
            let (_, grad) = model.loss_and_gradient(&xs, &ys);
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
            model.set_params(&params);
        }
        model.loss_history.push(model.loss_and_gradient(&inputs, &classes).0);
    }
    model.final_loss = model.loss_history.last().copied().unwrap_or(0.0);
    Ok(model)
}

/// Fraction of examples whose predicted grade matches the label.
pub fn accuracy(model: &GraderModel, examples: &[TrainingExample]) -> Result<f64> {
    let mut correct = 0usize;
    for e in examples {
        if predict_input(model, &e.input)?.grade == e.grade {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len().max(1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradePrediction {
    pub grade: u8,
    /// Probabilities of grades 2, 3, 4 and 5.
    pub probabilities: Vec<f64>,
}

pub fn predict_input(model: &GraderModel, input: &[f64]) -> Result<GradePrediction> {
    let probabilities = model.forward(input)?;
    // Strict comparison keeps the lowest grade on ties.
    let mut best = 0;
    for (k, &p) in probabilities.iter().enumerate() {
        if p > probabilities[best] {
            best = k;
        }
    }
    Ok(GradePrediction { grade: MIN_GRADE + best as u8, probabilities })
}

pub fn predict_grade(model: &GraderModel, report: &AnalysisReport) -> Result<GradePrediction> {
    if model.input_dim != INPUT_DIM {
        return Err(Error::ModelInputMismatch(format!(
            "model expects {} inputs, reports provide {INPUT_DIM}",
            model.input_dim
        )));
    }
    predict_input(model, &report_input(report)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Ok,
    Minor,
    Major,
}

pub const FEEDBACK_ASPECTS: [&str; 5] = ["pitch", "tnr", "dynamics_stability", "loudness_consistency", "vibrato"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEntry {
    pub aspect: String,
    pub severity: Severity,
    pub message: String,
    pub measured: f64,
    /// Boundary the measurement was judged against; absent for informational entries.
    pub threshold: Option<f64>,
}

impl FeedbackEntry {
    fn new(aspect: &str, severity: Severity, measured: f64, threshold: Option<f64>, message: String) -> Self {
        FeedbackEntry { aspect: aspect.to_string(), severity, message, measured, threshold }
    }
}

pub const PITCH_OK_CENTS: f64 = 10.0;
pub const PITCH_MAJOR_CENTS: f64 = 25.0;
pub const TNR_OK_DB: f64 = 20.0;
pub const TNR_MAJOR_DB: f64 = 12.0;
pub const SHIMMER_OK: f64 = 0.05;
pub const SHIMMER_MAJOR: f64 = 0.15;
pub const LUFS_STD_OK_DB: f64 = 3.0;

/// One entry per aspect in [`FEEDBACK_ASPECTS`] order.
pub fn heuristic_feedback(fv: &FeatureVector) -> Vec<FeedbackEntry> {
    let mut out = Vec::with_capacity(FEEDBACK_ASPECTS.len());

    let d = fv.pitch_dev_cents;
    out.push(if d < PITCH_OK_CENTS {
        FeedbackEntry::new("pitch", Severity::Ok, d, Some(PITCH_OK_CENTS), format!("pitch: {d:.1} cents from the tonic grid, within {PITCH_OK_CENTS} cents"))
    } else if d <= PITCH_MAJOR_CENTS {
        FeedbackEntry::new("pitch", Severity::Minor, d, Some(PITCH_OK_CENTS), format!("pitch: {d:.1} cents off, aim for under {PITCH_OK_CENTS} cents"))
    } else {
        FeedbackEntry::new("pitch", Severity::Major, d, Some(PITCH_MAJOR_CENTS), format!("pitch: {d:.1} cents off, beyond {PITCH_MAJOR_CENTS} cents; practise holding notes against the drone"))
    });

    let t = fv.tnr_db;
    out.push(if t > TNR_OK_DB {
        FeedbackEntry::new("tnr", Severity::Ok, t, Some(TNR_OK_DB), format!("tnr: {t:.1} dB, clear tone above {TNR_OK_DB} dB"))
    } else if t >= TNR_MAJOR_DB {
        FeedbackEntry::new("tnr", Severity::Minor, t, Some(TNR_OK_DB), format!("tnr: {t:.1} dB, some breathiness; clear tone is above {TNR_OK_DB} dB"))
    } else {
        FeedbackEntry::new("tnr", Severity::Major, t, Some(TNR_MAJOR_DB), format!("tnr: {t:.1} dB, noisy tone below {TNR_MAJOR_DB} dB; work on breath support"))
    });

    let s = fv.shimmer_local;
    out.push(if s < SHIMMER_OK {
        FeedbackEntry::new("dynamics_stability", Severity::Ok, s, Some(SHIMMER_OK), format!("dynamics_stability: shimmer {s:.3}, steady amplitude"))
    } else if s <= SHIMMER_MAJOR {
        FeedbackEntry::new("dynamics_stability", Severity::Minor, s, Some(SHIMMER_OK), format!("dynamics_stability: shimmer {s:.3}, aim for under {SHIMMER_OK}"))
    } else {
        FeedbackEntry::new("dynamics_stability", Severity::Major, s, Some(SHIMMER_MAJOR), format!("dynamics_stability: shimmer {s:.3} above {SHIMMER_MAJOR}; keep the voice steadier between cycles"))
    });

    let l = fv.lufs_std;
    out.push(if l < LUFS_STD_OK_DB {
        FeedbackEntry::new("loudness_consistency", Severity::Ok, l, Some(LUFS_STD_OK_DB), format!("loudness_consistency: {l:.1} dB spread, within {LUFS_STD_OK_DB} dB"))
    } else {
        FeedbackEntry::new("loudness_consistency", Severity::Minor, l, Some(LUFS_STD_OK_DB), format!("loudness_consistency: {l:.1} dB spread, aim for under {LUFS_STD_OK_DB} dB"))
    });

    out.push(FeedbackEntry::new(
        "vibrato",
        Severity::Ok,
        fv.vibrato_extent_cents,
        None,
        format!("vibrato: extent {:.1} cents at {:.2} Hz", fv.vibrato_extent_cents, fv.vibrato_rate_hz),
    ));
    out
}
