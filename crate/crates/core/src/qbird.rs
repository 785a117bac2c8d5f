//! Iterative renormalization-and-downsampling Bayesian inference (qBIRD) on
//! the Gaussian toy likelihood.
//!
//! One outer iteration runs a sequence of stages at `Q0, Q0−1, …, 1` bits per
//! parameter. Each stage evolves the walk for `L` steps on the current
//! intervals, samples the state register and coarse-grains the marginal by
//! dropping the least significant bit of every parameter. The finest stage's
//! samples give the mean and standard deviation that shrink the intervals
//! for the next iteration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use crate::error::{argument, Error, Result};
use crate::problem::{Grid, ProblemSpec};
use crate::rng::{indexed_stream, substream};
use crate::statevector::{sample_distribution, RegisterLayout, DEFAULT_QUBIT_LIMIT};
use crate::walk::{run_walk, AnnealingSchedule, ReflectionTarget, WalkConfig};

pub const DEFAULT_INTERVAL_FACTOR: f64 = 2.0;
pub const DEFAULT_WALK_STEPS: usize = 4;
pub const MAX_WALK_STEPS: usize = 16;

/// How per-iteration samples are combined into the final histograms.
pub const ITERATION_WEIGHTING: &str = "equal-per-iteration";

const INIT_STREAM: &str = "qbird-initial";
const STAGE_STREAM: &str = "qbird-stage";
const GAUSSIAN_DRAW_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorShape {
    Uniform,
    Gaussian { mean: f64, sigma: f64 },
}

/// Search interval `[lower, upper)` of one parameter and its prior shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    pub lower: f64,
    pub upper: f64,
    pub shape: PriorShape,
}

impl Prior {
    pub fn new(lower: f64, upper: f64, shape: PriorShape) -> Result<Self> {
        let prior = Self { lower, upper, shape };
        prior.validate()?;
        Ok(prior)
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        Self::new(lower, upper, PriorShape::Uniform)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower < self.upper) || !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(argument(format!("prior interval [{}, {}] is empty or not finite", self.lower, self.upper)));
        }
        if let PriorShape::Gaussian { mean, sigma } = self.shape {
            if !(sigma > 0.0) || !mean.is_finite() || !sigma.is_finite() {
                return Err(argument(format!("gaussian prior needs a finite mean and sigma > 0, got ({mean}, {sigma})")));
            }
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn grid(&self, bits: usize) -> Grid {
        Grid {
            lower: self.lower,
            upper: self.upper,
            bits,
        }
    }

    pub fn contains(&self, other: &Prior) -> bool {
        other.lower >= self.lower && other.upper <= self.upper
    }

    /// Negative log prior density up to a constant.
    pub fn cost(&self, value: f64) -> f64 {
        match self.shape {
            PriorShape::Uniform => 0.0,
            PriorShape::Gaussian { mean, sigma } => {
                let z = (value - mean) / sigma;
                0.5 * z * z
            }
        }
    }

    /// One draw from the prior restricted to the interval.
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if let PriorShape::Gaussian { mean, sigma } = self.shape {
            let normal = Normal::new(mean, sigma).expect("validated sigma");
            for _ in 0..GAUSSIAN_DRAW_ATTEMPTS {
                let x = normal.sample(rng);
                if x >= self.lower && x < self.upper {
                    return x;
                }
            }
        }
        self.lower + rand::Rng::random::<f64>(rng) * self.width()
    }
}

/// Injected truth and per-parameter noise widths of the toy likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub truth: Vec<f64>,
    pub widths: Vec<f64>,
}

impl Injection {
    pub fn new(truth: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        if truth.len() != widths.len() || truth.is_empty() {
            return Err(argument("truth and widths need the same, nonzero length"));
        }
        if widths.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(argument("likelihood widths must be finite and > 0"));
        }
        if truth.iter().any(|t| !t.is_finite()) {
            return Err(argument("injected truth must be finite"));
        }
        Ok(Self { truth, widths })
    }

    pub fn parameters(&self) -> usize {
        self.truth.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QBirdConfig {
    pub priors: Vec<Prior>,
    /// Initial qubits per parameter.
    pub initial_qubits: usize,
    /// Walk applications per stage.
    pub walk_steps: usize,
    pub outer_iterations: usize,
    pub shots: usize,
    /// Half-width of the next interval in units of the sample std.
    pub interval_factor: f64,
    pub schedule: AnnealingSchedule,
    pub reflection_target: ReflectionTarget,
    pub acceptance_qubits: usize,
    pub qubit_limit: usize,
    pub seed: u64,
}

impl QBirdConfig {
    pub fn new(priors: Vec<Prior>, initial_qubits: usize, seed: u64) -> Self {
        Self {
            priors,
            initial_qubits,
            walk_steps: DEFAULT_WALK_STEPS,
            outer_iterations: 3,
            shots: 1024,
            interval_factor: DEFAULT_INTERVAL_FACTOR,
            schedule: AnnealingSchedule::constant(1.0),
            reflection_target: ReflectionTarget::MoveCoin,
            acceptance_qubits: 0,
            qubit_limit: DEFAULT_QUBIT_LIMIT,
            seed,
        }
    }

    pub fn parameters(&self) -> usize {
        self.priors.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.priors.is_empty() {
            return Err(argument("at least one prior is required"));
        }
        for prior in &self.priors {
            prior.validate()?;
        }
        if self.initial_qubits == 0 {
            return Err(argument("initial_qubits must be at least 1"));
        }
        if !(1..=MAX_WALK_STEPS).contains(&self.walk_steps) {
            return Err(argument(format!("walk_steps must lie in 1..={MAX_WALK_STEPS}, got {}", self.walk_steps)));
        }
        if self.shots == 0 {
            return Err(argument("shots must be at least 1"));
        }
        if !(self.interval_factor > 0.0) || !self.interval_factor.is_finite() {
            return Err(argument(format!("interval_factor must be > 0, got {}", self.interval_factor)));
        }
        self.schedule.validate()?;
        let qubits = RegisterLayout::new(self.parameters(), self.initial_qubits, self.acceptance_qubits).total_qubits();
        if qubits > self.qubit_limit {
            return Err(Error::Capacity {
                what: "qBIRD walk qubits",
                requested: qubits,
                allowed: self.qubit_limit,
            });
        }
        Ok(())
    }
}

/// Step 0: initial grids and starting values drawn from the priors.
#[derive(Debug, Clone, PartialEq)]
pub struct Initialization {
    pub grids: Vec<Grid>,
    /// `shots` draws, one value per parameter each.
    pub values: Vec<Vec<f64>>,
}

pub fn initialize_parameters<R: rand::Rng + ?Sized>(config: &QBirdConfig, rng: &mut R) -> Result<Initialization> {
    config.validate()?;
    let grids = config.priors.iter().map(|p| p.grid(config.initial_qubits)).collect();
    let values = (0..config.shots)
        .map(|_| config.priors.iter().map(|p| p.draw(rng)).collect())
        .collect();
    Ok(Initialization { grids, values })
}

/// Toy problem on the given intervals at `bits` per parameter: likelihood
/// cost plus the negative log prior at each grid midpoint.
pub fn stage_problem(priors: &[Prior], bits: usize, injection: &Injection) -> Result<ProblemSpec> {
    if priors.len() != injection.parameters() {
        return Err(argument(format!(
            "{} priors for an injection with {} parameters",
            priors.len(),
            injection.parameters()
        )));
    }
    let grids: Vec<Grid> = priors.iter().map(|p| p.grid(bits)).collect();
    let spec = ProblemSpec::gaussian(injection.truth.clone(), injection.widths.clone(), grids.clone())?;
    if priors.iter().all(|p| p.shape == PriorShape::Uniform) {
        return Ok(spec);
    }
    let mut table = spec.cost_table(usize::MAX)?;
    for (index, cost) in table.iter_mut().enumerate() {
        for (k, prior) in priors.iter().enumerate() {
            *cost += prior.cost(grids[k].value(spec.variable_value(index, k)));
        }
    }
    ProblemSpec::from_table(priors.len(), bits, table, spec.label())
}

/// Marginalizes the least significant bit of every parameter:
/// `P'(b) = P(2b) + P(2b + 1)` along each parameter axis.
pub fn coarsen(distribution: &[f64], parameters: usize, bits: usize) -> Result<Vec<f64>> {
    if bits == 0 || parameters == 0 || distribution.len() != 1 << (parameters * bits) {
        return Err(argument(format!(
            "distribution of length {} does not match {parameters} parameters × {bits} bits",
            distribution.len()
        )));
    }
    if bits == 1 {
        return Ok(distribution.to_vec());
    }
    let coarse_bits = bits - 1;
    let value_mask = (1usize << bits) - 1;
    let mut out = vec![0.0; 1 << (parameters * coarse_bits)];
    for (index, &p) in distribution.iter().enumerate() {
        let coarse = (0..parameters).fold(0usize, |acc, k| {
            let value = (index >> (k * bits)) & value_mask;
            acc | ((value >> 1) << (k * coarse_bits))
        });
        out[coarse] += p;
    }
    Ok(out)
}

/// One stage of the renormalization sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub bits: usize,
    /// Walk marginal on the state register.
    pub marginal: Vec<f64>,
    /// Sampled packed state indices.
    pub samples: Vec<u64>,
    /// The marginal coarse-grained to `bits − 1`, absent at one bit.
    pub reduced: Option<Vec<f64>>,
}

/// Runs stages `Q, Q−1, …, 1` on fixed intervals and returns them finest first.
pub fn renormalize_downsample(config: &QBirdConfig, priors: &[Prior], injection: &Injection, iteration: usize) -> Result<Vec<Stage>> {
    config.validate()?;
    let parameters = priors.len();
    let mut stages = Vec::with_capacity(config.initial_qubits);
    for bits in (1..=config.initial_qubits).rev() {
        let spec = stage_problem(priors, bits, injection)?;
        let mut walk = WalkConfig::new(config.schedule, config.walk_steps);
        walk.acceptance_qubits = config.acceptance_qubits;
        walk.reflection_target = config.reflection_target;
        walk.qubit_limit = config.qubit_limit;
        let marginal = run_walk(&walk, &spec)?.state_marginal();
        let stream = (iteration as u64) << 8 | bits as u64;
        let samples = sample_distribution(&marginal, config.shots, &mut indexed_stream(config.seed, STAGE_STREAM, stream))?;
        let reduced = (bits > 1).then(|| coarsen(&marginal, parameters, bits)).transpose()?;
        stages.push(Stage {
            bits,
            marginal,
            samples,
            reduced,
        });
    }
    Ok(stages)
}

/// Population mean and standard deviation of each parameter.
pub fn mean_std(samples: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let first = samples.first().ok_or_else(|| argument("mean_std needs at least one sample"))?;
    let parameters = first.len();
    if samples.iter().any(|s| s.len() != parameters) {
        return Err(argument("samples have inconsistent parameter counts"));
    }
    let n = samples.len() as f64;
    Ok((0..parameters)
        .map(|k| {
            let mean = samples.iter().map(|s| s[k]).sum::<f64>() / n;
            let var = samples.iter().map(|s| (s[k] - mean) * (s[k] - mean)).sum::<f64>() / n;
            (mean, libm::sqrt(var))
        })
        .collect())
}

/// `[mean − k·std, mean + k·std] ∩ previous`, never narrower than one
/// previous-grid cell and never empty. The shape carries over.
pub fn new_intervals(mean: f64, std: f64, k: f64, previous: &Prior, previous_bits: usize) -> Result<Prior> {
    if !(k > 0.0) {
        return Err(argument(format!("interval factor must be > 0, got {k}")));
    }
    let cell = previous.grid(previous_bits).cell_width();
    let half = (k * std).max(cell / 2.0);
    let center = mean.clamp(previous.lower, previous.upper);
    let mut lower = (center - half).max(previous.lower);
    let mut upper = (center + half).min(previous.upper);
    // Clipping at an edge must not shrink below one cell.
    if upper - lower < cell {
        if lower == previous.lower {
            upper = (lower + cell).min(previous.upper);
        } else {
            lower = (upper - cell).max(previous.lower);
        }
    }
    Prior::new(lower, upper, previous.shape)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationSummary {
    pub iteration: usize,
    /// Intervals the iteration ran on.
    pub priors: Vec<Prior>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Coarsest-stage distribution (one bit per parameter).
    pub reduced: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairHistogram {
    pub i: usize,
    pub j: usize,
    /// `bins_i × bins_j`, row-major in `i`.
    pub probabilities: Vec<f64>,
}

impl PairHistogram {
    pub fn at(&self, bin_i: usize, bin_j: usize, bins_j: usize) -> f64 {
        self.probabilities[bin_i * bins_j + bin_j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorResult {
    /// Grids the histograms are binned on.
    pub grids: Vec<Grid>,
    pub histograms: Vec<Vec<f64>>,
    pub pairs: Vec<PairHistogram>,
    pub iterations: Vec<IterationSummary>,
    pub converged: bool,
    pub weighting: &'static str,
}

impl PosteriorResult {
    /// Midpoint of each parameter's most probable bin; ties go to the lower bin.
    pub fn modes(&self) -> Vec<f64> {
        self.histograms
            .iter()
            .zip(&self.grids)
            .map(|(h, g)| {
                let best = h.iter().enumerate().fold(0, |best, (i, &p)| if p > h[best] { i } else { best });
                g.value(best as u64)
            })
            .collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.histograms
            .iter()
            .zip(&self.grids)
            .map(|(h, g)| h.iter().enumerate().map(|(i, p)| p * g.value(i as u64)).sum())
            .collect()
    }
}

/// Executes Steps 0–3 and bins all iterations' finest-stage samples on the
/// final grids with equal weight per iteration. A sample from a coarser
/// earlier grid is spread over the final cells its own cell overlaps.
pub fn run_inference(config: &QBirdConfig, injection: &Injection) -> Result<PosteriorResult> {
    config.validate()?;
    if config.parameters() != injection.parameters() {
        return Err(argument(format!(
            "{} priors for an injection with {} parameters",
            config.parameters(),
            injection.parameters()
        )));
    }
    let q0 = config.initial_qubits;
    let init = initialize_parameters(config, &mut substream(config.seed, INIT_STREAM))?;

    let mut priors = config.priors.clone();
    let mut iterations = Vec::with_capacity(config.outer_iterations);
    // Each sample is a span per parameter: its grid cell, or a point for prior draws.
    let mut sample_sets: Vec<Vec<Vec<(f64, f64)>>> = Vec::with_capacity(config.outer_iterations);
    for iteration in 0..config.outer_iterations {
        let stages = renormalize_downsample(config, &priors, injection, iteration)?;
        let spec = stage_problem(&priors, q0, injection)?;
        let grids: Vec<Grid> = priors.iter().map(|p| p.grid(q0)).collect();
        let cells: Vec<Vec<u64>> = stages[0].samples.iter().map(|&s| spec.decode(s as usize)).collect();
        let values: Vec<Vec<f64>> = cells.iter().map(|c| c.iter().zip(&grids).map(|(&i, g)| g.value(i)).collect()).collect();
        let stats = mean_std(&values)?;
        iterations.push(IterationSummary {
            iteration,
            priors: priors.clone(),
            means: stats.iter().map(|s| s.0).collect(),
            stds: stats.iter().map(|s| s.1).collect(),
            reduced: stages.last().expect("at least one stage").marginal.clone(),
        });
        sample_sets.push(
            cells
                .iter()
                .map(|c| {
                    c.iter()
                        .zip(&grids)
                        .map(|(&i, g)| (g.lower + i as f64 * g.cell_width(), g.lower + (i + 1) as f64 * g.cell_width()))
                        .collect()
                })
                .collect(),
        );
        if iteration + 1 < config.outer_iterations {
            priors = stats
                .iter()
                .zip(&priors)
                .map(|(&(mean, std), prev)| new_intervals(mean, std, config.interval_factor, prev, q0))
                .collect::<Result<_>>()?;
        }
    }
    if sample_sets.is_empty() {
        sample_sets.push(init.values.iter().map(|v| v.iter().map(|&x| (x, x)).collect()).collect());
    }

    let grids: Vec<Grid> = priors.iter().map(|p| p.grid(q0)).collect();
    let bins = 1usize << q0;
    let parameters = grids.len();
    let mut histograms = vec![vec![0.0; bins]; parameters];
    let mut pairs: Vec<PairHistogram> = (0..parameters)
        .flat_map(|i| (i + 1..parameters).map(move |j| (i, j)))
        .map(|(i, j)| PairHistogram {
            i,
            j,
            probabilities: vec![0.0; bins * bins],
        })
        .collect();
    let mut used_sets = vec![0usize; parameters];
    let mut used_pair_sets = vec![0usize; pairs.len()];
    for set in &sample_sets {
        let spreads: Vec<Vec<Vec<(usize, f64)>>> = set
            .iter()
            .map(|sample| sample.iter().zip(&grids).map(|(&span, g)| spread(span, g)).collect())
            .collect();
        for k in 0..parameters {
            let mut h = vec![0.0; bins];
            for s in &spreads {
                for &(bin, w) in &s[k] {
                    h[bin] += w;
                }
            }
            used_sets[k] += accumulate(&mut histograms[k], &h);
        }
        for (pair, used) in pairs.iter_mut().zip(used_pair_sets.iter_mut()) {
            let mut h = vec![0.0; bins * bins];
            for s in &spreads {
                for &(a, wa) in &s[pair.i] {
                    for &(b, wb) in &s[pair.j] {
                        h[a * bins + b] += wa * wb;
                    }
                }
            }
            *used += accumulate(&mut pair.probabilities, &h);
        }
    }
    for (h, &used) in histograms.iter_mut().zip(&used_sets) {
        normalize(h, used);
    }
    for (pair, &used) in pairs.iter_mut().zip(&used_pair_sets) {
        normalize(&mut pair.probabilities, used);
    }

    let converged = match iterations.as_slice() {
        [.., prev, last] => last
            .means
            .iter()
            .zip(&prev.means)
            .zip(&grids)
            .all(|((a, b), g)| (a - b).abs() <= g.cell_width()),
        _ => false,
    };
    Ok(PosteriorResult {
        grids,
        histograms,
        pairs,
        iterations,
        converged,
        weighting: ITERATION_WEIGHTING,
    })
}

/// Fraction of the span `[lo, hi)` falling in each cell of `grid`; a
/// zero-width span is a point.
fn spread((lo, hi): (f64, f64), grid: &Grid) -> Vec<(usize, f64)> {
    if hi <= lo {
        return grid.cell_of(lo).map(|c| (c as usize, 1.0)).into_iter().collect();
    }
    let w = grid.cell_width();
    let first = grid.index_of(lo) as usize;
    let last = grid.index_of(hi) as usize;
    (first..=last)
        .filter_map(|c| {
            let a = lo.max(grid.lower + c as f64 * w);
            let b = hi.min(grid.lower + (c + 1) as f64 * w);
            (b > a).then(|| (c, (b - a) / (hi - lo)))
        })
        .collect()
}

/// Adds one sample set's histogram normalized to unit mass; returns 1 if it
/// had any mass on the grid.
fn accumulate(total: &mut [f64], set: &[f64]) -> usize {
    let mass: f64 = set.iter().sum();
    if mass <= 0.0 {
        return 0;
    }
    total.iter_mut().zip(set).for_each(|(t, x)| *t += x / mass);
    1
}

/// Divides by the number of contributing sample sets; an empty histogram
/// falls back to uniform so every histogram sums to one.
fn normalize(h: &mut [f64], used: usize) {
    if used == 0 {
        let u = 1.0 / h.len() as f64;
        h.iter_mut().for_each(|x| *x = u);
    } else {
        h.iter_mut().for_each(|x| *x /= used as f64);
    }
}
