//! Drivers behind the subcommands. Each returns plain data; writing files is
//! left to [`crate::output`].

use rayon::prelude::*;
use serde::Serialize;

use qmetro_core::classical::{exact_success_probability, ChainRunner, ChainTally, TRANSITION_LIMIT};
use qmetro_core::problem::{ground_from_costs, ProblemSpec, BRUTE_FORCE_LIMIT};
use qmetro_core::qbird::{run_inference, Injection, PosteriorResult, QBirdConfig};
use qmetro_core::rng::{derive_seed, indexed_stream, substream};
use qmetro_core::statevector::{grover_search, RegisterLayout};
use qmetro_core::tts::{fit_exponent, min_tts_curve, Algorithm, ExponentFit};
use qmetro_core::walk::{evolve, run_walk};
use rand_distr::{Binomial, Distribution};

use crate::config::RunConfig;
use crate::error::{AppError, AppResult};

/// Chains per parallel work unit of the sampled classical estimate.
const CHAIN_BATCH: u64 = 4096;

/// One row of the comparison dataset.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TtsRecord {
    pub problem: String,
    pub n: usize,
    #[serde(rename = "P")]
    pub p_vars: usize,
    #[serde(rename = "Q")]
    pub q_bits: usize,
    pub algorithm: String,
    pub schedule: String,
    pub beta0: f64,
    pub t: usize,
    pub p: f64,
    pub tts: f64,
    pub delta: f64,
    pub seed: u64,
}

/// Minimum TTS of one algorithm at one size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinTts {
    pub t: usize,
    pub tts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeSummary {
    pub n: usize,
    pub state_bits: usize,
    pub walk_qubits: usize,
    /// `exact` or `sampled(<chains>)`.
    pub classical_method: String,
    pub classical: Option<MinTts>,
    pub quantum: Option<MinTts>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub exponent: f64,
    pub intercept: f64,
    pub residual_norm: f64,
    pub points: usize,
    pub advantage: bool,
}

impl From<ExponentFit> for FitSummary {
    fn from(fit: ExponentFit) -> Self {
        Self {
            exponent: fit.exponent,
            intercept: fit.intercept,
            residual_norm: fit.residual_norm,
            points: fit.points,
            advantage: fit.signals_advantage(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareResult {
    pub records: Vec<TtsRecord>,
    pub sizes: Vec<SizeSummary>,
    pub fit: Option<FitSummary>,
    pub warnings: Vec<String>,
}

fn size_seed(config: &RunConfig, n: usize, stream: &str) -> u64 {
    derive_seed(config.seed, &format!("{stream}/{}-{n}", config.problem.as_str()))
}

/// Classical `p(t)` for `t = 1..=t_max`: exact up to the transition-matrix
/// limit, sampled beyond it.
fn classical_curve(config: &RunConfig, spec: &ProblemSpec, n: usize) -> AppResult<(Vec<f64>, String)> {
    let schedule = config.schedule();
    if spec.state_bits() <= TRANSITION_LIMIT {
        let p = exact_success_probability(spec, &schedule, config.t_max)?;
        return Ok((p[1..].to_vec(), "exact".to_string()));
    }
    let runner = ChainRunner::new(spec, &schedule, config.t_max, size_seed(config, n, "classical"))?;
    let chains = config.chains as u64;
    let batches: Vec<ChainTally> = (0..chains.div_ceil(CHAIN_BATCH))
        .into_par_iter()
        .map(|b| runner.run_range(b * CHAIN_BATCH..((b + 1) * CHAIN_BATCH).min(chains)))
        .collect();
    let tally = batches.into_iter().fold(ChainTally::empty(config.t_max), ChainTally::merge);
    Ok((tally.curve().p[1..].to_vec(), format!("sampled({})", config.chains)))
}

/// Quantum `p(t)` for `t = 1..=t_max`, exact or shot-sampled.
fn quantum_curve(config: &RunConfig, spec: &ProblemSpec, n: usize) -> AppResult<Vec<f64>> {
    let reports = evolve(&config.walk_config(config.t_max), spec)?;
    let exact = reports[1..].iter().map(|r| r.ground_probability);
    Ok(match config.quantum_shots {
        None => exact.collect(),
        Some(shots) => {
            let seed = size_seed(config, n, "quantum-shots");
            exact
                .enumerate()
                .map(|(k, p)| {
                    let binomial = Binomial::new(shots as u64, p.clamp(0.0, 1.0)).expect("p clamped to [0, 1]");
                    binomial.sample(&mut indexed_stream(seed, "shots", k as u64)) as f64 / shots as f64
                })
                .collect()
        }
    })
}

fn records_for(config: &RunConfig, spec: &ProblemSpec, n: usize, algorithm: Algorithm, curve: &[f64]) -> AppResult<(Vec<TtsRecord>, Option<MinTts>)> {
    let result = min_tts_curve(curve, config.delta)?;
    let records = result
        .points
        .iter()
        .map(|pt| TtsRecord {
            problem: config.problem.as_str().to_string(),
            n,
            p_vars: spec.variables(),
            q_bits: spec.qubits_per_variable(),
            algorithm: algorithm.as_str().to_string(),
            schedule: config.schedule.descriptor(),
            beta0: config.schedule.beta0,
            t: pt.t,
            p: pt.p,
            tts: pt.tts,
            delta: config.delta,
            seed: config.seed,
        })
        .collect();
    Ok((records, result.best.map(|b| MinTts { t: b.t, tts: b.tts })))
}

fn compare_size(config: &RunConfig, n: usize) -> AppResult<Result<(SizeSummary, Vec<TtsRecord>), String>> {
    let spec = config.problem_spec(n)?;
    let walk_qubits = RegisterLayout::new(spec.variables(), spec.qubits_per_variable(), config.acceptance_qubits).total_qubits();
    if spec.state_bits() > BRUTE_FORCE_LIMIT {
        return Ok(Err(format!(
            "size {n} skipped: {} state bits exceed the brute-force limit {BRUTE_FORCE_LIMIT}",
            spec.state_bits()
        )));
    }
    if !config.classical_only && walk_qubits > config.qubit_limit {
        return Ok(Err(format!(
            "size {n} skipped: the walk needs {walk_qubits} qubits but the limit is {}",
            config.qubit_limit
        )));
    }
    let (classical, classical_method) = classical_curve(config, &spec, n)?;
    let (mut records, classical_best) = records_for(config, &spec, n, Algorithm::Classical, &classical)?;
    let quantum_best = if config.classical_only {
        None
    } else {
        let quantum = quantum_curve(config, &spec, n)?;
        let (rows, best) = records_for(config, &spec, n, Algorithm::Quantum, &quantum)?;
        records.extend(rows);
        best
    };
    Ok(Ok((
        SizeSummary {
            n,
            state_bits: spec.state_bits(),
            walk_qubits,
            classical_method,
            classical: classical_best,
            quantum: quantum_best,
        },
        records,
    )))
}

/// Classical and quantum TTS curves over all sizes, then the exponent fit
/// of quantum against classical minimum TTS.
pub fn compare(config: &RunConfig) -> AppResult<CompareResult> {
    let outcomes: Vec<_> = config.sizes.par_iter().map(|&n| (n, compare_size(config, n))).collect();
    let mut sizes = Vec::new();
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (n, outcome) in outcomes {
        match outcome {
            Ok(Ok((summary, rows))) => {
                sizes.push(summary);
                records.extend(rows);
            }
            Ok(Err(warning)) => warnings.push(warning),
            Err(AppError::Core(e @ qmetro_core::Error::Capacity { .. })) => warnings.push(format!("size {n} skipped: {e}")),
            Err(e) => return Err(e),
        }
    }
    sizes.sort_by_key(|s| s.n);
    records.sort_by(|a, b| (a.n, a.t, &a.algorithm).cmp(&(b.n, b.t, &b.algorithm)));

    let pairs: Vec<(f64, f64)> = sizes
        .iter()
        .filter_map(|s| Some((s.classical?.tts, s.quantum?.tts)))
        .collect();
    let fit = if config.classical_only || pairs.len() < 2 {
        None
    } else {
        match fit_exponent(&pairs) {
            Ok(fit) => Some(fit.into()),
            Err(e) => {
                warnings.push(format!("no exponent fit: {e}"));
                None
            }
        }
    };
    Ok(CompareResult {
        records,
        sizes,
        fit,
        warnings,
    })
}

/// Exponent fit over the minimum `tts` column per (problem, n) of an
/// existing dataset; infinite entries are ignored.
pub fn exponent_from_records(records: &[TtsRecord]) -> AppResult<(Vec<(usize, f64, f64)>, ExponentFit)> {
    use std::collections::BTreeMap;
    let mut best: BTreeMap<(String, usize), [Option<f64>; 2]> = BTreeMap::new();
    for (row, r) in records.iter().enumerate() {
        let slot = match r.algorithm.as_str() {
            "classical" => 0,
            "quantum" => 1,
            other => return Err(AppError::config(format!("row {}: unknown algorithm `{other}`", row + 1))),
        };
        let tts = r.tts;
        if tts.is_nan() || tts <= 0.0 {
            return Err(AppError::config(format!("row {}: tts {tts} is not positive", row + 1)));
        }
        let entry = best.entry((r.problem.clone(), r.n)).or_default();
        if tts.is_finite() && entry[slot].is_none_or(|b| tts < b) {
            entry[slot] = Some(tts);
        }
    }
    let points: Vec<(usize, f64, f64)> = best
        .into_iter()
        .filter_map(|((_, n), [c, q])| Some((n, c?, q?)))
        .collect();
    let fit = fit_exponent(&points.iter().map(|&(_, c, q)| (c, q)).collect::<Vec<_>>())?;
    Ok((points, fit))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub problem: String,
    pub n: usize,
    pub steps: usize,
    pub shots: usize,
    pub ground_probability: f64,
    pub min_cost: f64,
    pub best_state: Vec<u64>,
    pub best_cost: f64,
    /// `(state index, values, cost, count)` in state-index order.
    pub counts: Vec<(usize, Vec<u64>, f64, usize)>,
}

/// Runs the walk for `steps` steps, samples the state register and reports
/// the lowest-cost sampled state (the most frequent one among ties).
pub fn solve(config: &RunConfig) -> AppResult<SolveResult> {
    let spec = config.problem_spec(config.n)?;
    let run = run_walk(&config.walk_config(config.steps), &spec)?;
    let costs = spec.cost_table(BRUTE_FORCE_LIMIT)?;
    let ground = ground_from_costs(&costs);
    let samples = run
        .state
        .sample_with(run.layout.state, config.shots, &mut substream(config.seed, "solve-shots"))?;
    let mut tally = vec![0usize; spec.n_states()];
    for s in samples {
        tally[s as usize] += 1;
    }
    let counts: Vec<_> = tally
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i, spec.decode(i), costs[i], c))
        .collect();
    let best = counts
        .iter()
        .min_by(|a, b| a.2.total_cmp(&b.2).then(b.3.cmp(&a.3)).then(a.0.cmp(&b.0)))
        .expect("at least one shot");
    Ok(SolveResult {
        problem: spec.label().to_string(),
        n: config.n,
        steps: config.steps,
        shots: config.shots,
        ground_probability: run.reports.last().expect("t = 0 report").ground_probability,
        min_cost: ground.min_cost,
        best_state: best.1.clone(),
        best_cost: best.2,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroverResult {
    pub qubits: usize,
    pub marked: u64,
    pub iterations: usize,
    pub probability: f64,
    pub closed_form: f64,
    pub deviation: f64,
}

/// `sin²((2k + 1)·θ)` with `sin θ = 2^(−n/2)`.
pub fn grover_closed_form(qubits: usize, iterations: usize) -> f64 {
    let theta = (1.0 / (qubits as f64 / 2.0).exp2()).asin();
    ((2 * iterations + 1) as f64 * theta).sin().powi(2)
}

pub fn optimal_grover_iterations(qubits: usize) -> usize {
    let theta = (1.0 / (qubits as f64 / 2.0).exp2()).asin();
    (std::f64::consts::FRAC_PI_4 / theta).floor() as usize
}

pub fn grover_check(config: &RunConfig) -> AppResult<GroverResult> {
    let g = config.grover;
    let iterations = g.iterations.unwrap_or_else(|| optimal_grover_iterations(g.qubits));
    let probability = grover_search(g.qubits, g.marked, iterations)?;
    let closed_form = grover_closed_form(g.qubits, iterations);
    Ok(GroverResult {
        qubits: g.qubits,
        marked: g.marked,
        iterations,
        probability,
        closed_form,
        deviation: (probability - closed_form).abs(),
    })
}

pub fn qbird(config: &RunConfig) -> AppResult<PosteriorResult> {
    Ok(run_inference(&config.qbird_config()?, &config.injection()?)?)
}

/// Independent inference runs with seeds `seeds`, executed in parallel;
/// `injection(seed)` supplies each run's truth.
pub fn qbird_runs<F>(base: &QBirdConfig, seeds: &[u64], injection: F) -> AppResult<Vec<(u64, Injection, PosteriorResult)>>
where
    F: Fn(u64) -> Injection + Sync,
{
    seeds
        .par_iter()
        .map(|&seed| {
            let mut config = base.clone();
            config.seed = seed;
            let inj = injection(seed);
            let result = run_inference(&config, &inj)?;
            Ok((seed, inj, result))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Command, ProblemKind};

    fn compare_config() -> RunConfig {
        let mut config = RunConfig::default();
        config.command = Some(Command::Compare);
        config.sizes = vec![2, 3];
        config.t_max = 12;
        config
    }

    #[test]
    fn compare_rows_are_sorted_and_complete() {
        let result = compare(&compare_config()).unwrap();
        assert_eq!(result.records.len(), 2 * 2 * 12);
        let keys: Vec<_> = result.records.iter().map(|r| (r.n, r.t, r.algorithm.clone())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(result.records.iter().all(|r| r.tts >= r.t as f64));
        assert!(result.fit.is_some());
    }

    #[test]
    fn empty_sizes_give_empty_dataset() {
        let mut config = compare_config();
        config.sizes.clear();
        let result = compare(&config).unwrap();
        assert!(result.records.is_empty() && result.fit.is_none());
    }

    #[test]
    fn classical_only_has_no_quantum_rows() {
        let mut config = compare_config();
        config.classical_only = true;
        let result = compare(&config).unwrap();
        assert!(result.records.iter().all(|r| r.algorithm == "classical"));
        assert!(result.fit.is_none());
    }

    #[test]
    fn oversized_sizes_are_skipped_with_warning() {
        let mut config = compare_config();
        config.qubit_limit = 7;
        config.sizes = vec![3, 6];
        let result = compare(&config).unwrap();
        assert_eq!(result.sizes.len(), 1);
        assert_eq!(result.warnings.len(), 1);
        assert!(result.warnings[0].contains("size 6"), "{:?}", result.warnings);
    }

    #[test]
    fn sampled_classical_matches_exact() {
        let mut config = compare_config();
        config.sizes = vec![3];
        config.chains = 20_000;
        let spec = config.problem_spec(3).unwrap();
        let exact = classical_curve(&config, &spec, 3).unwrap().0;
        let runner = ChainRunner::new(&spec, &config.schedule(), config.t_max, 5).unwrap();
        let sampled = runner.run_range(0..20_000).curve();
        for (t, p) in exact.iter().enumerate() {
            assert!((p - sampled.p[t + 1]).abs() < 5.0 * sampled.standard_error[t + 1] + 1e-3);
        }
    }

    #[test]
    fn quantum_shots_are_reproducible() {
        let mut config = compare_config();
        config.sizes = vec![3];
        config.quantum_shots = Some(200);
        let a = compare(&config).unwrap();
        let b = compare(&config).unwrap();
        assert_eq!(a, b);
        let quantum = a.records.iter().filter(|r| r.algorithm == "quantum");
        assert!(quantum.clone().count() > 0);
        assert!(quantum.into_iter().all(|r| (r.p * 200.0 - (r.p * 200.0).round()).abs() < 1e-9));
    }

    #[test]
    fn exponent_from_synthetic_records() {
        let records: Vec<TtsRecord> = [(3, 4.0), (4, 16.0), (5, 64.0)]
            .iter()
            .flat_map(|&(n, classical): &(usize, f64)| {
                let row = |algorithm: &str, tts: f64| TtsRecord {
                    problem: "ising".into(),
                    n,
                    p_vars: n,
                    q_bits: 1,
                    algorithm: algorithm.into(),
                    schedule: "constant".into(),
                    beta0: 1.0,
                    t: tts as usize,
                    p: 0.9,
                    tts,
                    delta: 0.9,
                    seed: 0,
                };
                vec![row("classical", classical), row("quantum", classical.sqrt())]
            })
            .collect();
        let (points, fit) = exponent_from_records(&records).unwrap();
        assert_eq!(points.len(), 3);
        assert!((fit.exponent - 0.5).abs() < 1e-9);
    }

    #[test]
    fn solve_finds_a_queens_solution() {
        let mut config = RunConfig::default();
        config.problem = ProblemKind::Nqueens;
        config.n = 4;
        config.steps = 8;
        config.seed = 7;
        let result = solve(&config).unwrap();
        assert_eq!(result.counts.iter().map(|c| c.3).sum::<usize>(), 1024);
        assert_eq!(result.best_cost, result.min_cost);
        assert_eq!(qmetro_core::problem::nqueens_cost(&result.best_state, 4), 0.0);
    }

    #[test]
    fn grover_matches_closed_form() {
        let mut config = RunConfig::default();
        config.grover.qubits = 3;
        config.grover.marked = 5;
        config.grover.iterations = Some(2);
        let result = grover_check(&config).unwrap();
        assert!(result.deviation < 1e-9);
        assert_eq!(optimal_grover_iterations(2), 1);
        assert!((grover_closed_form(2, 1) - 1.0).abs() < 1e-12);
    }
}
