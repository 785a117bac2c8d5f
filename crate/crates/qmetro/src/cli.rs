//! Command-line front end: flags override config-file values, and every run
//! that writes a dataset also writes a metadata sidecar that reproduces it.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::config::{Command, GaussianConfig, ProblemKind, Reflection, RunConfig, ScheduleName};
use crate::error::{AppError, AppResult, EXIT_OK};
use crate::harness;
use crate::output::{self, Metadata};

#[derive(Debug, Parser)]
#[command(name = "qmetro", version, about = "Quantum Metropolis-Hastings walk lab: solve, compare against classical MH, infer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config file, or a metadata sidecar from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Main output file; relative paths resolve against the output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output directory (default: $QMETRO_OUT_DIR, else the working directory).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Largest simulated register in qubits.
    #[arg(long, global = true)]
    pub qubit_limit: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run the walk on one problem and report the best sampled state.
    Solve(SolveArgs),
    /// Classical vs quantum time-to-solution over problem sizes.
    Compare(CompareArgs),
    /// Renormalization-and-downsampling inference on the Gaussian toy.
    Qbird(QBirdArgs),
    /// Fit the scaling exponent of an existing TTS dataset.
    Exponent(ExponentArgs),
    /// Check Grover search against its closed form.
    GroverCheck(GroverArgs),
    /// Repeat the run described by --config (e.g. a metadata sidecar).
    Run,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleName>,
    /// Initial inverse temperature β₀.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Slope, ratio or rate of a non-constant schedule.
    #[arg(long)]
    pub schedule_param: Option<f64>,
    #[arg(long)]
    pub acceptance_qubits: Option<usize>,
    #[arg(long, value_enum)]
    pub reflection: Option<Reflection>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub shots: Option<usize>,
    #[command(flatten)]
    pub walk: WalkArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub t_max: Option<usize>,
    /// Classical chains when p(t) is sampled.
    #[arg(long)]
    pub chains: Option<usize>,
    /// Estimate quantum p(t) from this many shots per step count.
    #[arg(long)]
    pub quantum_shots: Option<usize>,
    #[arg(long)]
    pub classical_only: bool,
    #[command(flatten)]
    pub walk: WalkArgs,
}

#[derive(Debug, Args)]
pub struct QBirdArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub truth: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<f64>>,
    /// Lower prior bounds, one per parameter.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lower: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub upper: Option<Vec<f64>>,
    /// Initial bits per parameter.
    #[arg(long)]
    pub bits: Option<usize>,
    #[arg(long)]
    pub walk_steps: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub interval_factor: Option<f64>,
    #[command(flatten)]
    pub walk: WalkArgs,
}

#[derive(Debug, Args)]
pub struct ExponentArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GroverArgs {
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub marked: Option<u64>,
    /// Defaults to the optimal count ⌊π/(4θ)⌋.
    #[arg(long)]
    pub iterations: Option<usize>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl WalkArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.schedule.kind, self.schedule);
        set(&mut c.schedule.beta0, self.beta);
        set(&mut c.schedule.parameter, self.schedule_param);
        set(&mut c.acceptance_qubits, self.acceptance_qubits);
        set(&mut c.reflection, self.reflection);
    }
}

impl CommonArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.seed, self.seed);
        set(&mut c.qubit_limit, self.qubit_limit);
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        if self.out_dir.is_some() {
            c.out_dir = self.out_dir.clone();
        }
    }
}

impl QBirdArgs {
    fn apply(&self, c: &mut RunConfig) {
        let g = &mut c.gaussian;
        set(&mut g.truth, self.truth.clone());
        set(&mut g.widths, self.widths.clone());
        for (bounds, upper) in [(&self.lower, false), (&self.upper, true)] {
            let Some(bounds) = bounds else { continue };
            // Bound lists set the parameter count; new priors copy the last one.
            if bounds.len() != g.priors.len() {
                let template = g.priors.last().copied().unwrap_or(GaussianConfig::default().priors[0]);
                g.priors.resize(bounds.len(), template);
            }
            for (prior, &b) in g.priors.iter_mut().zip(bounds) {
                if upper {
                    prior.upper = b;
                } else {
                    prior.lower = b;
                }
            }
        }
        set(&mut g.bits, self.bits);
        set(&mut c.qbird.walk_steps, self.walk_steps);
        set(&mut c.qbird.outer_iterations, self.iterations);
        set(&mut c.qbird.interval_factor, self.interval_factor);
        set(&mut c.shots, self.shots);
        self.walk.apply(c);
    }
}

/// Builds the effective configuration: file (if any), then flags.
pub fn resolve_config(cli: &Cli) -> AppResult<RunConfig> {
    let mut c = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        CliCommand::Solve(a) => {
            c.command = Some(Command::Solve);
            set(&mut c.problem, a.problem);
            set(&mut c.n, a.n);
            set(&mut c.steps, a.steps);
            set(&mut c.shots, a.shots);
            a.walk.apply(&mut c);
        }
        CliCommand::Compare(a) => {
            c.command = Some(Command::Compare);
            set(&mut c.problem, a.problem);
            set(&mut c.sizes, a.sizes.clone());
            set(&mut c.delta, a.delta);
            set(&mut c.t_max, a.t_max);
            set(&mut c.chains, a.chains);
            if a.quantum_shots.is_some() {
                c.quantum_shots = a.quantum_shots;
            }
            c.classical_only |= a.classical_only;
            a.walk.apply(&mut c);
        }
        CliCommand::Qbird(a) => {
            c.command = Some(Command::Qbird);
            c.problem = ProblemKind::Gaussian;
            a.apply(&mut c);
        }
        CliCommand::Exponent(a) => {
            c.command = Some(Command::Exponent);
            if a.input.is_some() {
                c.input = a.input.clone();
            }
        }
        CliCommand::GroverCheck(a) => {
            c.command = Some(Command::GroverCheck);
            set(&mut c.grover.qubits, a.qubits);
            set(&mut c.grover.marked, a.marked);
            if a.iterations.is_some() {
                c.grover.iterations = a.iterations;
            }
        }
        CliCommand::Run => {
            if cli.common.config.is_none() {
                return Err(AppError::config("config: `run` needs --config"));
            }
        }
    }
    cli.common.apply(&mut c);
    Ok(c)
}

fn fmt(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn finish(mut meta: Metadata, output: &std::path::Path) -> AppResult<()> {
    meta.finished_at = now();
    let sidecar = output::sidecar_path(output);
    output::write_json(&sidecar, &meta)?;
    info!("wrote {}", sidecar.display());
    Ok(())
}

/// Runs the configured command and returns the process exit status.
pub fn execute(mut config: RunConfig) -> AppResult<i32> {
    let command = config.command()?;
    config.validate(command)?;
    config.pin_out_dir();
    let started = now();
    let output = config.output_path().filter(|_| command != Command::Solve || config.out.is_some());
    let mut meta = Metadata::new(&config, started);
    match command {
        Command::Solve => {
            let result = harness::solve(&config)?;
            println!(
                "best state {:?} cost {} ({} of {} shots)",
                result.best_state,
                fmt(result.best_cost),
                result.counts.iter().find(|c| c.1 == result.best_state).map_or(0, |c| c.3),
                result.shots
            );
            println!("minimum cost {}", fmt(result.min_cost));
            println!("ground-state probability after {} steps {}", result.steps, fmt(result.ground_probability));
            if let Some(path) = &output {
                output::write_solve_csv(path, &result)?;
                meta.outputs.push(path.clone());
                meta.results = serde_json::json!({
                    "best_state": result.best_state,
                    "best_cost": result.best_cost,
                    "min_cost": result.min_cost,
                    "ground_probability": result.ground_probability,
                });
                finish(meta, path)?;
            }
        }
        Command::Compare => {
            let result = harness::compare(&config)?;
            for w in &result.warnings {
                warn!("{w}");
            }
            let path = output.expect("compare always has an output");
            output::write_tts_csv(&path, &result.records)?;
            for s in &result.sizes {
                let show = |m: Option<harness::MinTts>| m.map_or("none".to_string(), |m| format!("{} at t={}", fmt(m.tts), m.t));
                println!(
                    "n={} classical({}) TTS* {} | quantum TTS* {}",
                    s.n,
                    s.classical_method,
                    show(s.classical),
                    show(s.quantum)
                );
            }
            match &result.fit {
                Some(fit) => println!("exponent {} (intercept {}, {} points)", fmt(fit.exponent), fmt(fit.intercept), fit.points),
                None => println!("exponent none"),
            }
            println!("wrote {}", path.display());
            meta.outputs.push(path.clone());
            meta.warnings = result.warnings.clone();
            meta.results = serde_json::json!({ "sizes": result.sizes, "fit": result.fit });
            finish(meta, &path)?;
        }
        Command::Qbird => {
            let result = harness::qbird(&config)?;
            let path = output.expect("qbird always has an output");
            output::write_corner_csv(&path, &result)?;
            let summary = output::qbird_summary(&result, &config.gaussian.truth);
            let summary_path = output::summary_path(&path);
            output::write_json(&summary_path, &summary)?;
            let modes: Vec<String> = result.modes().into_iter().map(fmt).collect();
            let means: Vec<String> = result.means().into_iter().map(fmt).collect();
            println!("posterior modes [{}]", modes.join(", "));
            println!("posterior means [{}]", means.join(", "));
            println!("converged {}", result.converged);
            println!("wrote {} and {}", path.display(), summary_path.display());
            meta.outputs = vec![path.clone(), summary_path];
            meta.results = summary;
            finish(meta, &path)?;
        }
        Command::Exponent => {
            let input = config.input.clone().expect("validated");
            let records = output::read_tts_csv(&input)?;
            let (points, fit) = harness::exponent_from_records(&records)?;
            println!("exponent {}", fmt(fit.exponent));
            println!("intercept {}", fmt(fit.intercept));
            println!("residual_norm {}", fmt(fit.residual_norm));
            println!("points {}", fit.points);
            if let Some(path) = config.out.as_ref().and(output.as_ref()) {
                let fit = harness::FitSummary::from(fit);
                output::write_json(path, &serde_json::json!({ "points": points, "fit": fit }))?;
                meta.outputs.push(path.clone());
                meta.results = serde_json::json!({ "fit": fit });
                finish(meta, path)?;
            }
        }
        Command::GroverCheck => {
            let result = harness::grover_check(&config)?;
            println!(
                "grover n={} marked={} iterations={}: probability {} closed form {} deviation {:.3e}",
                result.qubits,
                result.marked,
                result.iterations,
                fmt(result.probability),
                fmt(result.closed_form),
                result.deviation
            );
            if let Some(path) = config.out.as_ref().and(output.as_ref()) {
                output::write_json(path, &result)?;
                meta.outputs.push(path.clone());
                meta.results = serde_json::to_value(&result).expect("grover result serializes");
                finish(meta, path)?;
            }
            if result.deviation > 1e-9 {
                return Err(AppError::config(format!("grover: deviation {:.3e} exceeds 1e-9", result.deviation)));
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args`, runs, and maps failures to exit statuses (2 config, 3 capacity).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(threads) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            warn!("thread pool already initialised: {e}");
        }
    }
    match resolve_config(&cli).and_then(execute) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
