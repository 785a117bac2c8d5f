//! Classical Metropolis-Hastings baseline with the same proposal as the walk:
//! a uniformly chosen move out of `2P`, accepted with `min(1, e^(−βΔC))`.
//! Rejected proposals still advance the step counter.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng as _;

use crate::error::{argument, Result};
use crate::problem::{ground_from_costs, metropolis_acceptance, GroundSet, Move, ProblemSpec, BRUTE_FORCE_LIMIT};
use crate::rng::{indexed_stream, Rng};
use crate::walk::AnnealingSchedule;

/// Largest state space (in bits) for which the transition matrix is built.
pub const TRANSITION_LIMIT: usize = 14;

/// Substream name of the per-chain generators.
pub const CHAIN_STREAM: &str = "classical-chains";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    /// Packed basis-state index of the current configuration.
    pub current: usize,
    pub step: usize,
    pub stream: u64,
}

impl ChainState {
    pub fn new(current: usize, stream: u64) -> Self {
        Self {
            current,
            step: 0,
            stream,
        }
    }

    pub fn values(&self, spec: &ProblemSpec) -> Vec<u64> {
        spec.decode(self.current)
    }
}

/// One Metropolis-Hastings step. Returns whether the proposal was accepted.
pub fn mh_step<R: rand::Rng + ?Sized>(chain: &mut ChainState, spec: &ProblemSpec, beta: f64, rng: &mut R) -> bool {
    step_with(chain, spec, |i| spec.cost_of_index(i), beta, rng)
}

/// [`mh_step`] reading costs from a precomputed table.
pub fn mh_step_with_costs<R: rand::Rng + ?Sized>(
    chain: &mut ChainState,
    spec: &ProblemSpec,
    costs: &[f64],
    beta: f64,
    rng: &mut R,
) -> bool {
    step_with(chain, spec, |i| costs[i], beta, rng)
}

fn step_with<R: rand::Rng + ?Sized>(
    chain: &mut ChainState,
    spec: &ProblemSpec,
    cost: impl Fn(usize) -> f64,
    beta: f64,
    rng: &mut R,
) -> bool {
    let mv = Move::from_index(rng.random_range(0..2 * spec.variables()));
    let candidate = spec.apply_move_index(chain.current, mv);
    let acceptance = metropolis_acceptance(beta, cost(candidate) - cost(chain.current));
    let accepted = rng.random::<f64>() < acceptance;
    if accepted {
        chain.current = candidate;
    }
    chain.step += 1;
    accepted
}

/// Row-stochastic transition matrix stored by rows of `(column, probability)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub beta: f64,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|&&(c, _)| c == j).map_or(0.0, |&(_, p)| p)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n_states();
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; n];
                for &(j, p) in row {
                    dense[j] = p;
                }
                dense
            })
            .collect()
    }

    /// `π T` for a row vector `π`.
    pub fn propagate(&self, distribution: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; self.n_states()];
        for (i, row) in self.rows.iter().enumerate() {
            let mass = distribution[i];
            if mass == 0.0 {
                continue;
            }
            for &(j, p) in row {
                next[j] += mass * p;
            }
        }
        next
    }
}

/// Exact transition matrix at `beta` (`P·Q ≤ 14`).
pub fn transition_matrix(spec: &ProblemSpec, beta: f64) -> Result<TransitionMatrix> {
    let costs = spec.cost_table(TRANSITION_LIMIT)?;
    Ok(transition_matrix_from_costs(spec, &costs, beta))
}

pub fn transition_matrix_from_costs(spec: &ProblemSpec, costs: &[f64], beta: f64) -> TransitionMatrix {
    let proposal = 1.0 / (2 * spec.variables()) as f64;
    let moves = spec.moves();
    let rows = (0..costs.len())
        .map(|i| {
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            let mut stay = 0.0;
            for &mv in &moves {
                let j = spec.apply_move_index(i, mv);
                let a = metropolis_acceptance(beta, costs[j] - costs[i]);
                *row.entry(j).or_insert(0.0) += proposal * a;
                stay += proposal * (1.0 - a);
            }
            *row.entry(i).or_insert(0.0) += stay;
            row.into_iter().collect()
        })
        .collect();
    TransitionMatrix { beta, rows }
}

/// Exact `p(t)` for `t = 0..=t_max` from the uniform start; step `t` uses
/// `schedule.beta_for_step(t)`.
pub fn exact_success_probability(spec: &ProblemSpec, schedule: &AnnealingSchedule, t_max: usize) -> Result<Vec<f64>> {
    schedule.validate()?;
    let costs = spec.cost_table(TRANSITION_LIMIT)?;
    let ground = ground_from_costs(&costs);
    let n = costs.len();
    let mut distribution = vec![1.0 / n as f64; n];
    let mass = |d: &[f64]| ground.states.iter().map(|&s| d[s]).sum::<f64>();
    let mut curve = Vec::with_capacity(t_max + 1);
    curve.push(mass(&distribution));
    let mut matrices: BTreeMap<u64, TransitionMatrix> = BTreeMap::new();
    for t in 1..=t_max {
        let beta = schedule.beta_for_step(t);
        let matrix = matrices
            .entry(beta.to_bits())
            .or_insert_with(|| transition_matrix_from_costs(spec, &costs, beta));
        distribution = matrix.propagate(&distribution);
        curve.push(mass(&distribution));
    }
    Ok(curve)
}

/// Ground-state hit counts of a batch of chains, mergeable across batches.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTally {
    pub chains: usize,
    /// Chains sitting in the ground set after step `t`, for `t = 0..=t_max`.
    pub hits: Vec<u64>,
    /// Final state of every chain, in chain-index order.
    pub final_states: Vec<usize>,
}

impl ChainTally {
    pub fn empty(t_max: usize) -> Self {
        Self {
            chains: 0,
            hits: vec![0; t_max + 1],
            final_states: Vec::new(),
        }
    }

    /// Appends a batch that follows this one in chain-index order.
    pub fn merge(mut self, other: ChainTally) -> Self {
        self.chains += other.chains;
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            *a += b;
        }
        self.final_states.extend(other.final_states);
        self
    }

    pub fn curve(&self) -> EmpiricalCurve {
        let n = self.chains as f64;
        let p: Vec<f64> = self.hits.iter().map(|&h| h as f64 / n).collect();
        let standard_error = p.iter().map(|&q| libm::sqrt(q * (1.0 - q) / n)).collect();
        EmpiricalCurve { p, standard_error }
    }
}

/// Monte Carlo `p(t)` with binomial standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCurve {
    pub p: Vec<f64>,
    pub standard_error: Vec<f64>,
}

/// Chain runner shared by the sequential and parallel drivers.
#[derive(Debug, Clone)]
pub struct ChainRunner {
    spec: ProblemSpec,
    costs: Vec<f64>,
    ground: GroundSet,
    flags: Vec<bool>,
    schedule: AnnealingSchedule,
    t_max: usize,
    seed: u64,
}

impl ChainRunner {
    pub fn new(spec: &ProblemSpec, schedule: &AnnealingSchedule, t_max: usize, seed: u64) -> Result<Self> {
        schedule.validate()?;
        let costs = spec.cost_table(BRUTE_FORCE_LIMIT)?;
        let ground = ground_from_costs(&costs);
        let flags = ground.indicator(costs.len());
        Ok(Self {
            spec: spec.clone(),
            costs,
            ground,
            flags,
            schedule: *schedule,
            t_max,
            seed,
        })
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    fn chain_rng(&self, index: u64) -> Rng {
        indexed_stream(self.seed, CHAIN_STREAM, index)
    }

    /// Runs chains `range`; chain `k` draws from its own stream `k`.
    pub fn run_range(&self, range: Range<u64>) -> ChainTally {
        let mut tally = ChainTally::empty(self.t_max);
        for index in range {
            let mut rng = self.chain_rng(index);
            let start = rng.random_range(0..self.costs.len());
            let mut chain = ChainState::new(start, index);
            tally.hits[0] += u64::from(self.flags[chain.current]);
            for t in 1..=self.t_max {
                let beta = self.schedule.beta_for_step(t);
                mh_step_with_costs(&mut chain, &self.spec, &self.costs, beta, &mut rng);
                tally.hits[t] += u64::from(self.flags[chain.current]);
            }
            tally.chains += 1;
            tally.final_states.push(chain.current);
        }
        tally
    }
}

/// Sampled `p(t)` over `chains` independent chains started uniformly at random.
pub fn run_chains(spec: &ProblemSpec, schedule: &AnnealingSchedule, t_max: usize, chains: usize, seed: u64) -> Result<EmpiricalCurve> {
    if chains == 0 {
        return Err(argument("at least one chain is required"));
    }
    let runner = ChainRunner::new(spec, schedule, t_max, seed)?;
    Ok(runner.run_range(0..chains as u64).curve())
}
