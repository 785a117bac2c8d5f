//! CSV and JSON file formats.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use qmetro_core::classical::TRANSITION_LIMIT;
use qmetro_core::problem::BRUTE_FORCE_LIMIT;
use qmetro_core::qbird::PosteriorResult;
use qmetro_core::rng::RNG_ALGORITHM;

use crate::config::RunConfig;
use crate::error::{AppError, AppResult};
use crate::harness::{SolveResult, TtsRecord};

pub const TTS_COLUMNS: [&str; 12] = ["problem", "n", "P", "Q", "algorithm", "schedule", "beta0", "t", "p", "tts", "delta", "seed"];
pub const CORNER_COLUMNS: [&str; 5] = ["param_i", "param_j", "bin_i", "bin_j", "probability"];

fn create_parent(path: &Path) -> AppResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e)),
        _ => Ok(()),
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> AppError + '_ {
    move |source| AppError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_tts_csv(path: &Path, records: &[TtsRecord]) -> AppResult<()> {
    create_parent(path)?;
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    if records.is_empty() {
        writer.write_record(TTS_COLUMNS).map_err(csv_err(path))?;
    }
    for record in records {
        writer.serialize(record).map_err(csv_err(path))?;
    }
    writer.flush().map_err(|e| AppError::io(path, e))
}

pub fn read_tts_csv(path: &Path) -> AppResult<Vec<TtsRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    if headers.iter().ne(TTS_COLUMNS) {
        return Err(AppError::config(format!(
            "{}: expected columns {}, found {}",
            path.display(),
            TTS_COLUMNS.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<TtsRecord>, _>>()
        .map_err(|e| AppError::config(format!("{}: {e}", path.display())))
}

/// Sampled state histogram: `state,values,cost,count,frequency`.
pub fn write_solve_csv(path: &Path, result: &SolveResult) -> AppResult<()> {
    create_parent(path)?;
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer
        .write_record(["state", "values", "cost", "count", "frequency"])
        .map_err(csv_err(path))?;
    for (state, values, cost, count) in &result.counts {
        let values = values.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
        writer
            .write_record([
                state.to_string(),
                values,
                cost.to_string(),
                count.to_string(),
                (*count as f64 / result.shots as f64).to_string(),
            ])
            .map_err(csv_err(path))?;
    }
    writer.flush().map_err(|e| AppError::io(path, e))
}

/// Long-format corner-plot data: 1-D rows leave `param_j` and `bin_j` empty.
pub fn write_corner_csv(path: &Path, result: &PosteriorResult) -> AppResult<()> {
    create_parent(path)?;
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer.write_record(CORNER_COLUMNS).map_err(csv_err(path))?;
    for (k, histogram) in result.histograms.iter().enumerate() {
        for (bin, p) in histogram.iter().enumerate() {
            writer
                .write_record([k.to_string(), String::new(), bin.to_string(), String::new(), p.to_string()])
                .map_err(csv_err(path))?;
        }
    }
    for pair in &result.pairs {
        let bins_j = result.histograms[pair.j].len();
        for (index, p) in pair.probabilities.iter().enumerate() {
            writer
                .write_record([
                    pair.i.to_string(),
                    pair.j.to_string(),
                    (index / bins_j).to_string(),
                    (index % bins_j).to_string(),
                    p.to_string(),
                ])
                .map_err(csv_err(path))?;
        }
    }
    writer.flush().map_err(|e| AppError::io(path, e))
}

#[derive(Serialize)]
struct GridSummary {
    lower: f64,
    upper: f64,
    bits: usize,
    centers: Vec<f64>,
}

#[derive(Serialize)]
struct IterationJson {
    iteration: usize,
    intervals: Vec<(f64, f64)>,
    means: Vec<f64>,
    stds: Vec<f64>,
    reduced: Vec<f64>,
}

#[derive(Serialize)]
struct QBirdSummary<'a> {
    truth: &'a [f64],
    grids: Vec<GridSummary>,
    modes: Vec<f64>,
    means: Vec<f64>,
    iterations: Vec<IterationJson>,
    converged: bool,
    iteration_weighting: &'a str,
}

pub fn qbird_summary(result: &PosteriorResult, truth: &[f64]) -> serde_json::Value {
    let summary = QBirdSummary {
        truth,
        grids: result
            .grids
            .iter()
            .map(|g| GridSummary {
                lower: g.lower,
                upper: g.upper,
                bits: g.bits,
                centers: (0..g.cells() as u64).map(|i| g.value(i)).collect(),
            })
            .collect(),
        modes: result.modes(),
        means: result.means(),
        iterations: result
            .iterations
            .iter()
            .map(|it| IterationJson {
                iteration: it.iteration,
                intervals: it.priors.iter().map(|p| (p.lower, p.upper)).collect(),
                means: it.means.clone(),
                stds: it.stds.clone(),
                reduced: it.reduced.clone(),
            })
            .collect(),
        converged: result.converged,
        iteration_weighting: result.weighting,
    };
    serde_json::to_value(summary).expect("summary serializes")
}

pub fn write_json(path: &Path, value: &impl Serialize) -> AppResult<()> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|source| AppError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

/// `<output>.meta.json` next to the main output.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    output.with_file_name(name)
}

/// `<stem>.summary.json` next to the main output.
pub fn summary_path(output: &Path) -> PathBuf {
    output.with_extension("summary.json")
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityLimits {
    pub simulator_qubits: usize,
    pub brute_force_state_bits: usize,
    pub transition_matrix_state_bits: usize,
}

/// Everything needed to repeat a run; `config` alone reproduces the outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub rng_algorithm: &'static str,
    pub started_at: String,
    pub finished_at: String,
    pub capacity_limits: CapacityLimits,
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub results: serde_json::Value,
    pub config: RunConfig,
}

impl Metadata {
    pub fn new(config: &RunConfig, started_at: String) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            rng_algorithm: RNG_ALGORITHM,
            started_at,
            finished_at: String::new(),
            capacity_limits: CapacityLimits {
                simulator_qubits: config.qubit_limit,
                brute_force_state_bits: BRUTE_FORCE_LIMIT,
                transition_matrix_state_bits: TRANSITION_LIMIT,
            },
            outputs: Vec::new(),
            warnings: Vec::new(),
            results: serde_json::Value::Null,
            config: config.clone(),
        }
    }
}
