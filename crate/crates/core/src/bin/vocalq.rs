use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use vocalq::audio_io::encode_wav_pcm16;
use vocalq::compare::{compare_reports, DistributionSource};
use vocalq::fixtures;
use vocalq::grader::{self, GraderModel, TrainConfig, TrainingExample};
use vocalq::quantum::QuantumMode;
use vocalq::report::{analyze_file, AnalysisConfig, AnalysisReport};
use vocalq::svg::write_histogram_svg;
use vocalq::{Error, Result};

/// Vocal performance analysis with a quantum-circuit feature signature.
#[derive(Parser)]
#[command(name = "vocalq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a WAV recording and write a JSON report.
    Analyze {
        wav: PathBuf,
        /// Tonic (reference pitch) in Hz.
        #[arg(long)]
        tonic: f64,
        /// Drone fundamental to notch out, in Hz.
        #[arg(long)]
        drone: Option<f64>,
        #[arg(long, default_value_t = 8192)]
        shots: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "faithful")]
        mode: QuantumMode,
        /// Scaling-bounds override file (`key = value` lines).
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two reports; deltas are `b - a`.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Compare sampled rather than exact distributions.
        #[arg(long)]
        sampled: bool,
    },
    /// Train a grading model from reports and a CSV of `filename,grade` rows.
    Train {
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Grade a report with a trained model and print technique feedback.
    Grade {
        #[arg(long)]
        model: PathBuf,
        report: PathBuf,
    },
    /// Render the report's measurement distribution as an SVG histogram.
    Viz {
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Plot the sampled distribution instead of the exact one.
        #[arg(long)]
        sampled: bool,
    },
    /// Write the synthetic fixture WAVs (and optionally the grading corpus).
    Fixtures {
        #[arg(long)]
        out: PathBuf,
        /// Recordings per grade in `corpus/`; 0 skips the corpus.
        #[arg(long, default_value_t = 0)]
        corpus: usize,
    },
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))
}

fn read_labels(path: &Path) -> Result<Vec<(String, u8)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.deserialize::<(String, u8)>() {
        rows.push(record.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?);
    }
    if rows.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    Ok(rows)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { wav, tonic, drone, shots, seed, mode, bounds, out } => {
            let config = AnalysisConfig { tonic_hz: tonic, drone_hz: drone, shots, seed, quantum_mode: mode, bounds_path: bounds };
            let report = analyze_file(&wav, &config)?;
            write_file(&out, report.to_json()?)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", out.display());
        }
        Command::Compare { a, b, out, sampled } => {
            let (ra, rb) = (AnalysisReport::read(&a)?, AnalysisReport::read(&b)?);
            let source = if sampled { DistributionSource::Sampled } else { DistributionSource::Exact };
            let result = compare_reports(&ra, &rb, source)?;
            write_file(&out, to_json(&result)?)?;
            println!("js_divergence    {:.6}", result.js_divergence);
            println!("js_distance      {:.6}", result.js_distance);
            println!("euclidean_angles {:.6}", result.euclidean_angles);
            println!("{:<22} {:>14}", "feature", "delta (b - a)");
            for (name, delta) in &result.per_feature_deltas {
                println!("{name:<22} {delta:>14.4}");
            }
        }
        Command::Train { reports, labels, out, epochs, learning_rate, seed } => {
            let rows = read_labels(&labels)?;
            let mut examples = Vec::with_capacity(rows.len());
            for (name, grade) in rows {
                let report = AnalysisReport::read(&reports.join(&name))?;
                examples.push(TrainingExample { input: grader::report_input(&report)?, grade });
            }
            let config = TrainConfig { epochs, learning_rate, seed, ..TrainConfig::default() };
            let model = grader::train(&examples, &config)?;
            write_file(&out, model.to_json()?)?;
            println!("final_loss {:.6}", model.final_loss);
            println!("training_accuracy {:.4}", grader::accuracy(&model, &examples)?);
        }
        Command::Grade { model, report } => {
            let text = std::fs::read_to_string(&model).map_err(|e| Error::io(&model, e))?;
            let model = GraderModel::from_json(&text)?;
            let report = AnalysisReport::read(&report)?;
            let prediction = grader::predict_grade(&model, &report)?;
            println!("grade {}", prediction.grade);
            let probs: Vec<String> = prediction.probabilities.iter().map(|p| format!("{p:.4}")).collect();
            println!("probabilities (2..5) {}", probs.join(" "));
            for entry in &report.feedback {
                println!("[{}] {}", format!("{:?}", entry.severity).to_lowercase(), entry.message);
            }
        }
        Command::Viz { report, out, sampled } => {
            let r = AnalysisReport::read(&report)?;
            let (dist, kind) = if sampled { (&r.quantum.sampled, "sampled") } else { (&r.quantum.exact, "exact") };
            let title = format!("{kind} distribution, {} mode", r.quantum.mode);
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            write_histogram_svg(dist, &title, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Fixtures { out, corpus } => {
            let files = [
                ("good_singer.wav", fixtures::good_singer()),
                ("poor_singer.wav", fixtures::poor_singer()),
                ("silence.wav", fixtures::silence(3.0)),
                ("click_track.wav", fixtures::click_track(120.0, 8.0)),
            ];
            for (name, buf) in files {
                write_file(&out.join(name), encode_wav_pcm16(&buf)?)?;
            }
            if corpus > 0 {
                let dir = out.join("corpus");
                let mut labels = String::from("file,grade\n");
                let mut tonics = BTreeMap::new();
                for item in fixtures::grading_corpus(corpus) {
                    let file = format!("{}.wav", item.name);
                    write_file(&dir.join(&file), encode_wav_pcm16(&fixtures::synthesize_voice(&item.params))?)?;
                    labels.push_str(&format!("{}.json,{}\n", item.name, item.grade));
                    tonics.insert(file, item.tonic_hz);
                }
                write_file(&dir.join("labels.csv"), labels)?;
                write_file(&dir.join("tonics.json"), to_json(&tonics)?)?;
            }
            println!("wrote fixtures to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if e.is_contract_mismatch() { 2 } else { 1 };
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string(), "exit_code": code }));
            ExitCode::from(code)
        }
    }
}
