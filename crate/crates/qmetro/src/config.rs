//! Run configuration: a JSON document whose keys mirror the command-line
//! flags. A metadata sidecar written by a previous run is accepted as well;
//! its `config` member is used.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qmetro_core::problem::{Grid, ProblemSpec};
use qmetro_core::qbird::{Injection, Prior, PriorShape, QBirdConfig};
use qmetro_core::statevector::DEFAULT_QUBIT_LIMIT;
use qmetro_core::tts::DEFAULT_DELTA;
use qmetro_core::walk::{AnnealingSchedule, ReflectionTarget, ScheduleKind, WalkConfig};

use crate::error::{AppError, AppResult};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QMETRO_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Compare,
    Qbird,
    Exponent,
    GroverCheck,
}

impl Command {
    pub fn default_output(&self) -> Option<&'static str> {
        match self {
            Command::Solve => Some("solve.csv"),
            Command::Compare => Some("tts.csv"),
            Command::Qbird => Some("corner.csv"),
            Command::Exponent | Command::GroverCheck => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Nqueens,
    Ising,
    Gaussian,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Nqueens => "nqueens",
            ProblemKind::Ising => "ising",
            ProblemKind::Gaussian => "gaussian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleName {
    Constant,
    Linear,
    Geometric,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Reflection {
    MoveCoin,
    StateCoin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub kind: ScheduleName,
    pub beta0: f64,
    /// Slope, ratio or rate; unused by the constant schedule.
    pub parameter: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            kind: ScheduleName::Constant,
            beta0: 1.0,
            parameter: 0.0,
        }
    }
}

impl ScheduleConfig {
    pub fn to_schedule(&self) -> AnnealingSchedule {
        let kind = match self.kind {
            ScheduleName::Constant => ScheduleKind::Constant,
            ScheduleName::Linear => ScheduleKind::Linear,
            ScheduleName::Geometric => ScheduleKind::Geometric,
            ScheduleName::Exponential => ScheduleKind::Exponential,
        };
        AnnealingSchedule {
            kind,
            beta0: self.beta0,
            parameter: self.parameter,
        }
    }

    /// Short descriptor used in CSV rows, e.g. `constant` or `linear(0.05)`.
    pub fn descriptor(&self) -> String {
        match self.kind {
            ScheduleName::Constant => "constant".to_string(),
            ScheduleName::Linear => format!("linear({})", self.parameter),
            ScheduleName::Geometric => format!("geometric({})", self.parameter),
            ScheduleName::Exponential => format!("exponential({})", self.parameter),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorShapeConfig {
    Uniform,
    Gaussian { mean: f64, sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub lower: f64,
    pub upper: f64,
    #[serde(default = "uniform_shape")]
    pub shape: PriorShapeConfig,
}

fn uniform_shape() -> PriorShapeConfig {
    PriorShapeConfig::Uniform
}

impl PriorConfig {
    pub fn to_prior(&self) -> qmetro_core::Result<Prior> {
        let shape = match self.shape {
            PriorShapeConfig::Uniform => PriorShape::Uniform,
            PriorShapeConfig::Gaussian { mean, sigma } => PriorShape::Gaussian { mean, sigma },
        };
        Prior::new(self.lower, self.upper, shape)
    }
}

/// Gaussian toy likelihood: injected truth, noise widths and parameter intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianConfig {
    pub truth: Vec<f64>,
    pub widths: Vec<f64>,
    pub priors: Vec<PriorConfig>,
    /// Bits per parameter (initial bits for qbird).
    pub bits: usize,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        Self {
            truth: vec![6.3],
            widths: vec![2.0],
            priors: vec![PriorConfig {
                lower: 0.0,
                upper: 16.0,
                shape: PriorShapeConfig::Uniform,
            }],
            bits: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QBirdSection {
    pub walk_steps: usize,
    pub outer_iterations: usize,
    pub interval_factor: f64,
}

impl Default for QBirdSection {
    fn default() -> Self {
        Self {
            walk_steps: qmetro_core::qbird::DEFAULT_WALK_STEPS,
            outer_iterations: 3,
            interval_factor: qmetro_core::qbird::DEFAULT_INTERVAL_FACTOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroverConfig {
    pub qubits: usize,
    pub marked: u64,
    /// Grover iterations; `None` picks the optimal count.
    pub iterations: Option<usize>,
}

impl Default for GroverConfig {
    fn default() -> Self {
        Self {
            qubits: 2,
            marked: 3,
            iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub problem: ProblemKind,
    /// Problem size for `solve`.
    pub n: usize,
    /// Problem sizes for `compare`.
    pub sizes: Vec<usize>,
    pub schedule: ScheduleConfig,
    /// Walk steps for `solve`.
    pub steps: usize,
    pub t_max: usize,
    pub delta: f64,
    pub shots: usize,
    /// Classical chains when the exact transition matrix is out of reach.
    pub chains: usize,
    /// Estimate quantum p(t) from this many shots instead of reading it exactly.
    pub quantum_shots: Option<usize>,
    pub classical_only: bool,
    pub acceptance_qubits: usize,
    pub reflection: Reflection,
    pub qubit_limit: usize,
    pub seed: u64,
    pub gaussian: GaussianConfig,
    pub qbird: QBirdSection,
    pub grover: GroverConfig,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            problem: ProblemKind::Ising,
            n: 4,
            sizes: vec![3, 4, 5],
            schedule: ScheduleConfig::default(),
            steps: 8,
            t_max: 40,
            delta: DEFAULT_DELTA,
            shots: 1024,
            chains: 100_000,
            quantum_shots: None,
            classical_only: false,
            acceptance_qubits: 0,
            reflection: Reflection::MoveCoin,
            qubit_limit: DEFAULT_QUBIT_LIMIT,
            seed: 0,
            gaussian: GaussianConfig::default(),
            qbird: QBirdSection::default(),
            grover: GroverConfig::default(),
            input: None,
            out: None,
            out_dir: None,
        }
    }
}

/// The sidecar layout, used only to recognise and unwrap it.
#[derive(Deserialize)]
struct SidecarConfig {
    config: RunConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let is_sidecar = value.get("config").is_some() && value.get("tool_version").is_some();
        if is_sidecar {
            Ok(serde_json::from_value::<SidecarConfig>(value)?.config)
        } else {
            serde_json::from_value(value)
        }
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_json(&text).map_err(|e| AppError::config(format!("{}: {e}", path.display())))
    }

    pub fn command(&self) -> AppResult<Command> {
        self.command.ok_or_else(|| AppError::config("command: no subcommand given"))
    }

    pub fn schedule(&self) -> AnnealingSchedule {
        self.schedule.to_schedule()
    }

    pub fn reflection_target(&self) -> ReflectionTarget {
        match self.reflection {
            Reflection::MoveCoin => ReflectionTarget::MoveCoin,
            Reflection::StateCoin => ReflectionTarget::StateCoin,
        }
    }

    pub fn walk_config(&self, steps: usize) -> WalkConfig {
        let mut walk = WalkConfig::new(self.schedule(), steps);
        walk.acceptance_qubits = self.acceptance_qubits;
        walk.reflection_target = self.reflection_target();
        walk.qubit_limit = self.qubit_limit;
        walk
    }

    /// Output directory: explicit setting, then the environment, then `.`.
    pub fn resolved_out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    /// Fixes the output directory so a re-run does not depend on the environment.
    pub fn pin_out_dir(&mut self) {
        self.out_dir = Some(self.resolved_out_dir());
    }

    /// Main output path, relative paths resolved against the output directory.
    pub fn output_path(&self) -> Option<PathBuf> {
        let name = self
            .out
            .clone()
            .or_else(|| self.command.and_then(|c| c.default_output()).map(PathBuf::from))?;
        Some(if name.is_absolute() { name } else { self.resolved_out_dir().join(name) })
    }

    pub fn problem_spec(&self, n: usize) -> AppResult<ProblemSpec> {
        Ok(match self.problem {
            ProblemKind::Nqueens => ProblemSpec::nqueens(n)?,
            ProblemKind::Ising => ProblemSpec::ising(n)?,
            ProblemKind::Gaussian => {
                let injection = self.injection()?;
                let grids = self
                    .priors()?
                    .iter()
                    .map(|p| Grid::new(p.lower, p.upper, self.gaussian.bits))
                    .collect::<qmetro_core::Result<Vec<_>>>()?;
                ProblemSpec::gaussian(injection.truth, injection.widths, grids)?
            }
        })
    }

    pub fn priors(&self) -> AppResult<Vec<Prior>> {
        self.gaussian
            .priors
            .iter()
            .enumerate()
            .map(|(k, p)| p.to_prior().map_err(|e| AppError::config(format!("gaussian.priors[{k}]: {e}"))))
            .collect()
    }

    pub fn injection(&self) -> AppResult<Injection> {
        let g = &self.gaussian;
        if g.truth.len() != g.priors.len() {
            return Err(AppError::config(format!(
                "gaussian.truth: {} values for {} priors",
                g.truth.len(),
                g.priors.len()
            )));
        }
        Injection::new(g.truth.clone(), g.widths.clone()).map_err(|e| AppError::config(format!("gaussian.widths: {e}")))
    }

    pub fn qbird_config(&self) -> AppResult<QBirdConfig> {
        let mut config = QBirdConfig::new(self.priors()?, self.gaussian.bits, self.seed);
        config.walk_steps = self.qbird.walk_steps;
        config.outer_iterations = self.qbird.outer_iterations;
        config.shots = self.shots;
        config.interval_factor = self.qbird.interval_factor;
        config.schedule = self.schedule();
        config.reflection_target = self.reflection_target();
        config.acceptance_qubits = self.acceptance_qubits;
        config.qubit_limit = self.qubit_limit;
        Ok(config)
    }

    /// Checks the fields `command` reads and names the first bad one.
    pub fn validate(&self, command: Command) -> AppResult<()> {
        let bad = |field: &str, msg: String| Err(AppError::config(format!("{field}: {msg}")));
        if matches!(command, Command::Solve | Command::Compare | Command::Qbird) {
            if let Err(e) = self.schedule().validate() {
                return bad("schedule", e.to_string());
            }
        }
        match command {
            Command::Solve => {
                if self.n == 0 {
                    return bad("n", "must be at least 1".into());
                }
                if self.shots == 0 {
                    return bad("shots", "must be at least 1".into());
                }
                if self.problem == ProblemKind::Gaussian {
                    self.injection()?;
                    self.priors()?;
                }
            }
            Command::Compare => {
                if self.problem == ProblemKind::Gaussian {
                    return bad("problem", "compare supports nqueens and ising".into());
                }
                if !(self.delta > 0.0 && self.delta < 1.0) {
                    return bad("delta", format!("must lie in (0, 1), got {}", self.delta));
                }
                if self.t_max == 0 {
                    return bad("t_max", "must be at least 1".into());
                }
                if self.chains == 0 {
                    return bad("chains", "must be at least 1".into());
                }
                if self.sizes.contains(&0) {
                    return bad("sizes", "sizes must be at least 1".into());
                }
                if self.quantum_shots == Some(0) {
                    return bad("quantum_shots", "must be at least 1".into());
                }
            }
            Command::Qbird => {
                if self.problem != ProblemKind::Gaussian {
                    return bad("problem", "qbird runs on the gaussian toy".into());
                }
                self.injection()?;
                if let Err(e) = self.qbird_config()?.validate() {
                    return match e {
                        qmetro_core::Error::Capacity { .. } => Err(e.into()),
                        other => bad("qbird", other.to_string()),
                    };
                }
            }
            Command::Exponent => {
                if self.input.is_none() {
                    return bad("input", "exponent needs an input CSV".into());
                }
            }
            Command::GroverCheck => {
                if self.grover.qubits == 0 {
                    return bad("grover.qubits", "must be at least 1".into());
                }
                if self.grover.qubits < 64 && self.grover.marked >= 1u64 << self.grover.qubits {
                    return bad(
                        "grover.marked",
                        format!("{} does not fit in {} qubits", self.grover.marked, self.grover.qubits),
                    );
                }
            }
        }
        Ok(())
    }
}
