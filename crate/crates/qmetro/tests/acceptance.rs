//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use qmetro::config::{Command as RunCommand, ProblemKind};
use qmetro::harness;
use qmetro::RunConfig;
use qmetro_core::classical::{exact_success_probability, run_chains, transition_matrix, ChainRunner, ChainTally};
use qmetro_core::problem::{boltzmann, boltzmann_from_costs, Direction, Grid};
use qmetro_core::qbird::{Injection, Prior, QBirdConfig};
use qmetro_core::rng::substream;
use qmetro_core::statevector::{grover_search, Statevector, DEFAULT_QUBIT_LIMIT};
use qmetro_core::tts::{compute_tts, fit_exponent};
use qmetro_core::walk::{run_walk, WalkOperator};
use qmetro_core::{AnnealingSchedule, Move, ProblemSpec, ReflectionTarget, WalkConfig};

/// Complex amplitude as `(re, im)`.
type C = (f64, f64);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn all(parts: Vec<Outcome>) -> Outcome {
    let pass = parts.iter().all(|o| o.pass);
    let detail = parts.into_iter().map(|o| o.detail).collect::<Vec<_>>().join("; ");
    outcome(pass, detail)
}

fn grover() -> Outcome {
    let p2 = grover_search(2, 3, 1).unwrap();
    let p3 = grover_search(3, 5, 2).unwrap();
    let closed = harness::grover_closed_form(3, 2);
    all(vec![
        outcome((p2 - 1.0).abs() < 1e-10, format!("n=2 k=1 p={p2:.12}")),
        outcome((p3 - closed).abs() < 1e-9, format!("n=3 k=2 p={p3:.12} closed form {closed:.12}")),
    ])
}

/// Dense `max |U†U − I|` of one walk step, columns taken from basis states.
fn unitarity_defect(spec: &ProblemSpec, beta: f64) -> (usize, f64) {
    let op = WalkOperator::new(spec, 0, ReflectionTarget::MoveCoin, DEFAULT_QUBIT_LIMIT).unwrap();
    let step = op.step(beta);
    let n = op.layout().total_qubits();
    let dim = 1usize << n;
    let columns: Vec<Vec<(usize, C)>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut psi = Statevector::basis(n, j, DEFAULT_QUBIT_LIMIT).unwrap();
            step.apply(&mut psi).unwrap();
            psi.amplitudes()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm_sqr() > 0.0)
                .map(|(k, a)| (k, (a.re, a.im)))
                .collect()
        })
        .collect();
    // Rows of U, so that (U†U)_{ij} = Σ_k conj(U_ki) U_kj accumulates sparsely.
    let mut rows: Vec<Vec<(usize, C)>> = vec![Vec::new(); dim];
    for (j, column) in columns.iter().enumerate() {
        for &(k, a) in column {
            rows[k].push((j, a));
        }
    }
    let defect = (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut gram = vec![(0.0f64, 0.0f64); dim];
            for &(k, (br, bi)) in &columns[j] {
                for &(i, (ar, ai)) in &rows[k] {
                    gram[i].0 += ar * br + ai * bi;
                    gram[i].1 += ar * bi - ai * br;
                }
            }
            gram.iter()
                .enumerate()
                .map(|(i, &(re, im))| {
                    let target = if i == j { 1.0 } else { 0.0 };
                    (re - target).abs().max(im.abs())
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    (n, defect)
}

fn unitarity() -> Outcome {
    let mut parts = Vec::new();
    for (name, spec) in [("ising n=3", ProblemSpec::ising(3).unwrap()), ("nqueens n=4", ProblemSpec::nqueens(4).unwrap())] {
        for beta in [0.7, 2.0] {
            let (n, defect) = unitarity_defect(&spec, beta);
            parts.push(outcome(defect < 1e-10, format!("{name} ({n} qubits) beta={beta} defect {defect:.1e}")));
        }
    }
    all(parts)
}

/// Deterministic irregular cost table.
fn scrambled_costs(n_states: usize) -> Vec<f64> {
    (0..n_states).map(|i| ((i * 2_654_435_761usize) % 97) as f64 / 13.0).collect()
}

fn coin_law() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    let mut layouts = 0usize;
    for p in 1..=8usize {
        for q in 1..=8 / p {
            let n_states = 1usize << (p * q);
            let spec = ProblemSpec::from_table(p, q, scrambled_costs(n_states), "scrambled").unwrap();
            let op = WalkOperator::new(&spec, 0, ReflectionTarget::MoveCoin, DEFAULT_QUBIT_LIMIT).unwrap();
            let layout = *op.layout();
            let n = layout.total_qubits();
            let costs = op.costs().to_vec();
            layouts += 1;
            for beta in [0.0, 0.5, 1.0, 2.0] {
                let b = op.b(beta);
                let (w, c) = (0..n_states)
                    .into_par_iter()
                    .map(|s| {
                        let mut worst = 0.0f64;
                        for index in 0..2 * p {
                            let mv = Move::from_index(index);
                            let mut values = spec.decode(s);
                            let modulus = 1u64 << q;
                            let v = &mut values[mv.variable];
                            *v = match mv.direction {
                                Direction::Up => (*v + 1) % modulus,
                                Direction::Down => (*v + modulus - 1) % modulus,
                            };
                            let next = spec.encode(&values).unwrap();
                            let expected = (-beta * (costs[next] - costs[s])).exp().min(1.0);
                            let moves = mv.variable | mv.value_bit() << layout.move_id.len;
                            let mut psi = Statevector::basis(n, s | moves << layout.move_id.start, DEFAULT_QUBIT_LIMIT).unwrap();
                            b.apply(&mut psi).unwrap();
                            let coin_one = psi.marginal(layout.coin).unwrap()[1];
                            worst = worst.max((coin_one - expected).abs());
                        }
                        (worst, 2 * p)
                    })
                    .reduce(|| (0.0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
                worst = worst.max(w);
                cases += c;
            }
        }
    }
    outcome(worst < 1e-12, format!("{layouts} layouts, {cases} (s,m,beta) cases, max error {worst:.1e}"))
}

fn classical() -> Outcome {
    let spec = ProblemSpec::ising(4).unwrap();
    let t = transition_matrix(&spec, 1.0).unwrap();
    let pi = boltzmann(&spec, 1.0).unwrap().probabilities;
    let mut balance = 0.0f64;
    for i in 0..pi.len() {
        for j in 0..pi.len() {
            balance = balance.max((pi[i] * t.entry(i, j) - pi[j] * t.entry(j, i)).abs());
        }
    }
    let chains = 100_000u64;
    let runner = ChainRunner::new(&spec, &AnnealingSchedule::constant(1.0), 200, 11).unwrap();
    let batch = 4096u64;
    let tally = (0..chains.div_ceil(batch))
        .into_par_iter()
        .map(|b| runner.run_range(b * batch..((b + 1) * batch).min(chains)))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(ChainTally::empty(200), ChainTally::merge);
    let mut empirical = vec![0.0; pi.len()];
    for &s in &tally.final_states {
        empirical[s] += 1.0 / chains as f64;
    }
    let tv = 0.5 * empirical.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum::<f64>();
    all(vec![
        outcome(balance < 1e-12, format!("detailed balance max defect {balance:.1e}")),
        outcome(tv < 0.02, format!("TV after 200 steps over {chains} chains {tv:.4}")),
    ])
}

fn two_state() -> Outcome {
    let spec = ProblemSpec::from_table(1, 1, vec![0.0, 1.0], "two-state").unwrap();
    let beta = std::f64::consts::LN_2;
    // Hand-derived: T = [[1/2, 1/2], [1, 0]], uniform start, ground = {0}.
    let hand = 0.5 * 0.5 + 0.5 * 1.0;
    let t = transition_matrix(&spec, beta).unwrap();
    let matrix_ok = [(0, 0, 0.5), (0, 1, 0.5), (1, 0, 1.0), (1, 1, 0.0)]
        .iter()
        .all(|&(i, j, v)| (t.entry(i, j) - v).abs() < 1e-15);
    let schedule = AnnealingSchedule::constant(beta);
    let exact = exact_success_probability(&spec, &schedule, 1).unwrap()[1];
    let sampled = run_chains(&spec, &schedule, 1, 100_000, 5).unwrap();
    let (p, se) = (sampled.p[1], sampled.standard_error[1]);
    all(vec![
        outcome(matrix_ok && hand == 0.75 && (exact - 0.75).abs() < 1e-15, format!("exact p(1)={exact}")),
        outcome((p - exact).abs() <= 5.0 * se, format!("sampled {p:.5} ± {se:.5} ({:.2} SE)", (p - exact).abs() / se)),
    ])
}

fn tts() -> Outcome {
    let v = compute_tts(10, 0.5, 0.9).unwrap();
    let edge = compute_tts(7, 0.9, 0.9).unwrap();
    let zero = compute_tts(10, 0.0, 0.9).unwrap();
    all(vec![
        outcome((v - 33.2193).abs() < 1e-4, format!("tts(10,0.5,0.9)={v:.6}")),
        outcome((edge - 7.0).abs() < 1e-12, format!("p=delta gives {edge}")),
        outcome(zero.is_infinite() && zero > 0.0, format!("p=0 gives {zero}")),
    ])
}

const COMPARE_FIXTURE: &str = "tests/fixtures/ising_compare.json";

fn scaling() -> Outcome {
    let mut parts = Vec::new();
    for exponent in [0.5, 1.0] {
        let points: Vec<(f64, f64)> = [2.0, 5.0, 11.0, 40.0, 300.0].iter().map(|&x| (x, 3.0 * f64::powf(x, exponent))).collect();
        let fit = fit_exponent(&points).unwrap();
        parts.push(outcome((fit.exponent - exponent).abs() < 1e-9, format!("synthetic {exponent} -> {:.12}", fit.exponent)));
    }
    let mut config = RunConfig::default();
    config.command = Some(RunCommand::Compare);
    config.problem = ProblemKind::Ising;
    config.sizes = vec![3, 4, 5];
    let started = Instant::now();
    let result = harness::compare(&config).unwrap();
    let elapsed = started.elapsed();
    let Some(fit) = result.fit else {
        parts.push(outcome(false, "compare produced no fit"));
        return all(parts);
    };
    let finite = fit.exponent.is_finite();
    parts.push(outcome(
        finite && elapsed < Duration::from_secs(600),
        format!("ising {{3,4,5}} exponent {:.6} in {:.1}s", fit.exponent, elapsed.as_secs_f64()),
    ));
    let current = serde_json::json!({
        "problem": "ising",
        "sizes": config.sizes,
        "schedule": config.schedule.descriptor(),
        "t_max": config.t_max,
        "seed": config.seed,
        "exponent": fit.exponent,
        "intercept": fit.intercept,
        "points": fit.points,
    });
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(COMPARE_FIXTURE);
    match fs::read_to_string(&path) {
        Ok(text) => {
            let fixture: serde_json::Value = serde_json::from_str(&text).unwrap();
            let expected = fixture["exponent"].as_f64().unwrap();
            let same_setup = ["problem", "sizes", "schedule", "t_max", "seed"].iter().all(|k| fixture[k] == current[k]);
            parts.push(outcome(
                same_setup && (expected - fit.exponent).abs() < 1e-9,
                format!("regression fixture exponent {expected:.6}"),
            ));
        }
        Err(_) => {
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(&path, serde_json::to_string_pretty(&current).unwrap() + "\n").unwrap();
            parts.push(outcome(finite, format!("wrote regression fixture {COMPARE_FIXTURE}")));
        }
    }
    all(parts)
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Best TV ratio (walk vs uniform) over L in 3..=5 against the β=1 posterior.
fn walk_ratio(spec: &ProblemSpec, walk_beta: f64) -> (usize, f64) {
    let posterior = boltzmann_from_costs(&spec.cost_table(24).unwrap(), 1.0).probabilities;
    let uniform = vec![1.0 / posterior.len() as f64; posterior.len()];
    let baseline = total_variation(&uniform, &posterior);
    (3..=5)
        .map(|steps| {
            let run = run_walk(&WalkConfig::new(AnnealingSchedule::constant(walk_beta), steps), spec).unwrap();
            (steps, total_variation(&run.state_marginal(), &posterior) / baseline)
        })
        .fold((0, f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best })
}

fn walk_efficacy() -> Outcome {
    let grid = Grid::new(0.0, 16.0, 4).unwrap();
    let spec = ProblemSpec::gaussian(vec![8.5], vec![3.0], vec![grid]).unwrap();
    let (steps, ratio) = walk_ratio(&spec, 2.0);
    let (steps_1, ratio_1) = walk_ratio(&spec, 1.0);
    let info = format!("info: with walk beta=1 the best ratio is {ratio_1:.3} at L={steps_1}");
    outcome(ratio <= 0.5, format!("walk beta=2, TV ratio {ratio:.3} at L={steps} (need <= 0.5); {info}"))
}

fn injection_truth(seed: u64) -> f64 {
    3.0 + 10.0 * substream(seed, "truth").random::<f64>()
}

fn injection_recovery() -> Outcome {
    let mut base = QBirdConfig::new(vec![Prior::uniform(0.0, 16.0).unwrap()], 4, 0);
    base.walk_steps = 4;
    base.outer_iterations = 3;
    base.shots = 1024;
    base.interval_factor = 2.0;
    base.schedule = AnnealingSchedule::constant(1.0);
    let seeds: Vec<u64> = (0..20).collect();
    let runs = harness::qbird_runs(&base, &seeds, |seed| Injection::new(vec![injection_truth(seed)], vec![2.0]).unwrap()).unwrap();
    let offsets: Vec<f64> = runs
        .iter()
        .map(|(_, injection, result)| (result.modes()[0] - injection.truth[0]) / result.grids[0].cell_width())
        .collect();
    let hits = offsets.iter().filter(|o| o.abs() <= 1.0).count();
    let worst = offsets.iter().fold(0.0f64, |m, o| m.max(o.abs()));
    outcome(hits >= 18, format!("{hits}/20 modes within one final cell (worst offset {worst:.2} cells)"))
}

fn cli(args: &[&str], out_dir: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_qmetro"))
        .args(args)
        .arg("--out-dir")
        .arg(out_dir)
        .env_remove("QMETRO_OUT_DIR")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&str, &[&str]); 3] = [
        ("compare", &["compare", "--sizes", "3,4", "--t-max", "20", "--quantum-shots", "500", "--seed", "9", "--out", "tts.csv"]),
        ("qbird", &["qbird", "--truth", "6.3", "--iterations", "2", "--shots", "256", "--seed", "4", "--out", "corner.csv"]),
        ("solve", &["solve", "--problem", "nqueens", "--n", "4", "--steps", "6", "--shots", "512", "--seed", "2", "--out", "solve.csv"]),
    ];
    let mut parts = Vec::new();
    for (name, args) in runs {
        let first = args.last().unwrap().to_string();
        let again = format!("again-{first}");
        let sidecar = dir.path().join(format!("{first}.meta.json"));
        let ok = cli(args, dir.path())
            && cli(&["run", "--config", sidecar.to_str().unwrap(), "--out", &again], dir.path());
        let identical = ok && fs::read(dir.path().join(&first)).ok() == fs::read(dir.path().join(&again)).ok();
        parts.push(outcome(identical, format!("{name} rerun from sidecar {}", if identical { "byte-identical" } else { "differs" })));
    }
    all(parts)
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check, Option<u64>); 10] = [
        ("grover validation", grover, Some(1)),
        ("walk-operator unitarity", unitarity, Some(30)),
        ("coin law", coin_law, None),
        ("classical correctness", classical, Some(60)),
        ("two-state fixture", two_state, None),
        ("tts arithmetic", tts, None),
        ("scaling methodology", scaling, Some(600)),
        ("quantum-walk efficacy", walk_efficacy, Some(60)),
        ("qbird injection recovery", injection_recovery, Some(300)),
        ("reproducibility", reproducibility, None),
    ];
    let mut failed = 0;
    for (k, (name, check, limit)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = check();
        let seconds = started.elapsed().as_secs_f64();
        let in_time = limit.is_none_or(|l| seconds < l as f64);
        let pass = result.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(", limit {l}s"));
        println!(
            "criterion {:>2} {} {name}: {} ({seconds:.2}s{budget})",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
