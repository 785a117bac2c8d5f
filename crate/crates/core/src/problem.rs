//! Discrete optimization problems over binary-encoded variables.
//!
//! A problem has `P` variables of `Q` bits each. Variable `i` occupies bits
//! `i·Q .. (i+1)·Q` of the basis-state index, so variable 0 sits in the low
//! bits. A move changes one variable by ±1 modulo `2^Q`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{argument, Error, Result};
use crate::statevector::ceil_log2;

/// Largest state space (in bits) the exhaustive oracles will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 24;

/// Direction of a move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Up,
    Down,
}

/// Change variable `variable` by one step in `direction`.
///
/// In the move registers the id holds `variable` and the value bit is 0 for
/// [`Direction::Up`] and 1 for [`Direction::Down`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move {
    pub variable: usize,
    pub direction: Direction,
}

impl Move {
    pub const fn new(variable: usize, direction: Direction) -> Self {
        Self { variable, direction }
    }

    pub const fn inverse(self) -> Self {
        let direction = match self.direction {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        };
        Self {
            variable: self.variable,
            direction,
        }
    }

    /// Index of this move among the `2P` moves: `2·variable + value_bit`.
    pub const fn index(self) -> usize {
        2 * self.variable + self.value_bit()
    }

    pub const fn from_index(index: usize) -> Self {
        let direction = if index & 1 == 0 { Direction::Up } else { Direction::Down };
        Self {
            variable: index / 2,
            direction,
        }
    }

    pub const fn value_bit(self) -> usize {
        match self.direction {
            Direction::Up => 0,
            Direction::Down => 1,
        }
    }
}

/// Uniform grid over one parameter interval. Cell `i` maps to its midpoint
/// `lower + (i + ½)·(upper − lower)/2^bits`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lower: f64,
    pub upper: f64,
    pub bits: usize,
}

impl Grid {
    pub fn new(lower: f64, upper: f64, bits: usize) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(argument(format!("grid interval [{lower}, {upper}] is empty or not finite")));
        }
        Ok(Self { lower, upper, bits })
    }

    pub fn cells(&self) -> usize {
        1 << self.bits
    }

    pub fn cell_width(&self) -> f64 {
        (self.upper - self.lower) / self.cells() as f64
    }

    pub fn value(&self, index: u64) -> f64 {
        self.lower + (index as f64 + 0.5) * self.cell_width()
    }

    /// Cell containing `value`, clamped to the grid.
    pub fn index_of(&self, value: f64) -> u64 {
        let raw = libm::floor((value - self.lower) / self.cell_width());
        raw.clamp(0.0, (self.cells() - 1) as f64) as u64
    }

    /// Cell containing `value`, or `None` outside `[lower, upper)`.
    pub fn cell_of(&self, value: f64) -> Option<u64> {
        (value >= self.lower && value < self.upper).then(|| self.index_of(value))
    }
}

/// Separable Gaussian log-likelihood toy: `C(θ) = ½ Σ ((θ_k − truth_k)/σ_k)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianToy {
    pub truth: Vec<f64>,
    pub widths: Vec<f64>,
    pub grids: Vec<Grid>,
}

/// Cost function of a problem.
#[derive(Debug, Clone, PartialEq)]
pub enum CostModel {
    /// One queen per row; each variable is the queen's column.
    NQueens { n: usize },
    /// Open 1-D chain with unit ferromagnetic coupling; bit `b` is spin `2b − 1`.
    Ising { n: usize },
    Gaussian(GaussianToy),
    /// Explicit cost per basis-state index.
    Table(Vec<f64>),
}

/// A discrete optimization problem: `P` variables × `Q` bits plus a cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    variables: usize,
    qubits_per_variable: usize,
    cost: CostModel,
    label: String,
}

impl ProblemSpec {
    pub fn new(variables: usize, qubits_per_variable: usize, cost: CostModel, label: impl Into<String>) -> Result<Self> {
        if variables == 0 || qubits_per_variable == 0 {
            return Err(argument("a problem needs at least one variable of at least one qubit"));
        }
        if variables * qubits_per_variable >= usize::BITS as usize {
            return Err(Error::Capacity {
                what: "state bits",
                requested: variables * qubits_per_variable,
                allowed: usize::BITS as usize - 1,
            });
        }
        let spec = Self {
            variables,
            qubits_per_variable,
            cost,
            label: label.into(),
        };
        match &spec.cost {
            CostModel::NQueens { n } => {
                if *n != variables || (1usize << qubits_per_variable) < *n {
                    return Err(argument(format!("{n}-queens needs {n} variables of at least ⌈log₂ {n}⌉ bits")));
                }
            }
            CostModel::Ising { n } => {
                if *n < 2 || *n != variables || qubits_per_variable != 1 {
                    return Err(argument("an Ising chain needs n ≥ 2 one-bit variables"));
                }
            }
            CostModel::Gaussian(toy) => {
                if toy.truth.len() != variables || toy.widths.len() != variables || toy.grids.len() != variables {
                    return Err(argument("gaussian toy needs one truth, width and grid per variable"));
                }
                if toy.widths.iter().any(|&w| !(w > 0.0)) {
                    return Err(argument("gaussian widths must be positive"));
                }
                if toy.grids.iter().any(|g| g.bits != qubits_per_variable) {
                    return Err(argument("grid resolution must match the qubits per variable"));
                }
            }
            CostModel::Table(table) => {
                if table.len() != spec.n_states() {
                    return Err(argument(format!(
                        "cost table has {} entries but the state space has {}",
                        table.len(),
                        spec.n_states()
                    )));
                }
            }
        }
        Ok(spec)
    }

    /// N-Queens on an `n×n` board with `Q = max(1, ⌈log₂ n⌉)`.
    pub fn nqueens(n: usize) -> Result<Self> {
        Self::new(n, ceil_log2(n).max(1), CostModel::NQueens { n }, format!("nqueens-{n}"))
    }

    pub fn ising(n: usize) -> Result<Self> {
        Self::new(n, 1, CostModel::Ising { n }, format!("ising-{n}"))
    }

    /// Gaussian toy over `grids` (one per parameter, all with the same bit count).
    pub fn gaussian(truth: Vec<f64>, widths: Vec<f64>, grids: Vec<Grid>) -> Result<Self> {
        let q = grids.first().map_or(0, |g| g.bits);
        let p = grids.len();
        Self::new(p, q, CostModel::Gaussian(GaussianToy { truth, widths, grids }), format!("gaussian-{p}"))
    }

    pub fn from_table(variables: usize, qubits_per_variable: usize, table: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        Self::new(variables, qubits_per_variable, CostModel::Table(table), label)
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn qubits_per_variable(&self) -> usize {
        self.qubits_per_variable
    }

    pub fn state_bits(&self) -> usize {
        self.variables * self.qubits_per_variable
    }

    pub fn n_states(&self) -> usize {
        1 << self.state_bits()
    }

    pub fn cost_model(&self) -> &CostModel {
        &self.cost
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Size descriptor `n` used in reports: board size, chain length or parameter count.
    pub fn size(&self) -> usize {
        match &self.cost {
            CostModel::NQueens { n } | CostModel::Ising { n } => *n,
            _ => self.variables,
        }
    }

    fn value_mask(&self) -> u64 {
        (1u64 << self.qubits_per_variable) - 1
    }

    /// All `2P` moves in index order.
    pub fn moves(&self) -> Vec<Move> {
        (0..2 * self.variables).map(Move::from_index).collect()
    }

    pub fn encode(&self, values: &[u64]) -> Result<usize> {
        if values.len() != self.variables {
            return Err(argument(format!("expected {} values, got {}", self.variables, values.len())));
        }
        let mut index = 0usize;
        for (i, &v) in values.iter().enumerate() {
            if v > self.value_mask() {
                return Err(Error::Encoding {
                    variable: i,
                    value: v,
                    bits: self.qubits_per_variable,
                });
            }
            index |= (v as usize) << (i * self.qubits_per_variable);
        }
        Ok(index)
    }

    pub fn decode(&self, index: usize) -> Vec<u64> {
        (0..self.variables).map(|i| self.variable_value(index, i)).collect()
    }

    #[inline]
    pub fn variable_value(&self, index: usize, variable: usize) -> u64 {
        (index as u64 >> (variable * self.qubits_per_variable)) & self.value_mask()
    }

    /// Applies `mv` to a value vector in place, modulo `2^Q`.
    pub fn apply_move(&self, values: &mut [u64], mv: Move) {
        let v = &mut values[mv.variable];
        *v = match mv.direction {
            Direction::Up => v.wrapping_add(1),
            Direction::Down => v.wrapping_sub(1),
        } & self.value_mask();
    }

    /// Applies `mv` to a packed basis-state index.
    #[inline]
    pub fn apply_move_index(&self, index: usize, mv: Move) -> usize {
        let shift = mv.variable * self.qubits_per_variable;
        let mask = self.value_mask();
        let old = (index as u64 >> shift) & mask;
        let new = match mv.direction {
            Direction::Up => old.wrapping_add(1),
            Direction::Down => old.wrapping_sub(1),
        } & mask;
        (index & !((mask as usize) << shift)) | ((new as usize) << shift)
    }

    pub fn cost(&self, values: &[u64]) -> f64 {
        match &self.cost {
            CostModel::NQueens { n } => nqueens_cost(values, *n),
            CostModel::Ising { .. } => ising_cost(values),
            CostModel::Gaussian(toy) => {
                let theta: Vec<f64> = values.iter().zip(&toy.grids).map(|(&v, g)| g.value(v)).collect();
                gaussian_loglike_cost(&theta, &toy.truth, &toy.widths)
            }
            CostModel::Table(table) => table[self.encode(values).expect("values come from decode")],
        }
    }

    pub fn cost_of_index(&self, index: usize) -> f64 {
        match &self.cost {
            CostModel::Table(table) => table[index],
            _ => self.cost(&self.decode(index)),
        }
    }

    /// Cost of every basis state, indexed by packed state.
    pub fn cost_table(&self, limit: usize) -> Result<Vec<f64>> {
        self.check_capacity("cost table", limit)?;
        Ok((0..self.n_states()).map(|i| self.cost_of_index(i)).collect())
    }

    pub(crate) fn check_capacity(&self, what: &'static str, limit: usize) -> Result<()> {
        if self.state_bits() > limit {
            return Err(Error::Capacity {
                what,
                requested: self.state_bits(),
                allowed: limit,
            });
        }
        Ok(())
    }
}

/// Unordered queen pairs sharing a column or diagonal, plus `n` per queen
/// whose column is off the board (`≥ n`). Off-board queens take no part in
/// the pair count.
pub fn nqueens_cost(columns: &[u64], n: usize) -> f64 {
    let n64 = n as u64;
    let mut cost = 0.0;
    for (row, &col) in columns.iter().enumerate() {
        if col >= n64 {
            cost += n as f64;
            continue;
        }
        for (other_row, &other_col) in columns.iter().enumerate().skip(row + 1) {
            if other_col >= n64 {
                continue;
            }
            let dr = (other_row - row) as u64;
            if col == other_col || col.abs_diff(other_col) == dr {
                cost += 1.0;
            }
        }
    }
    cost
}

/// `−Σ s_i s_{i+1}` over an open chain with `s = 2b − 1`.
pub fn ising_cost(bits: &[u64]) -> f64 {
    bits.windows(2)
        .map(|w| if (w[0] & 1) == (w[1] & 1) { -1.0 } else { 1.0 })
        .sum()
}

/// `½ Σ ((θ_k − truth_k)/σ_k)²`.
pub fn gaussian_loglike_cost(theta: &[f64], truth: &[f64], widths: &[f64]) -> f64 {
    0.5 * theta
        .iter()
        .zip(truth)
        .zip(widths)
        .map(|((t, m), s)| {
            let z = (t - m) / s;
            z * z
        })
        .sum::<f64>()
}

/// Metropolis acceptance `min(1, e^(−β·ΔC))`, shared by the classical chain
/// and the quantum coin.
#[inline]
pub fn metropolis_acceptance(beta: f64, delta_cost: f64) -> f64 {
    if delta_cost <= 0.0 || beta == 0.0 {
        1.0
    } else {
        libm::exp(-beta * delta_cost).min(1.0)
    }
}

/// Minimum cost and every state attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSet {
    pub min_cost: f64,
    pub states: Vec<usize>,
}

impl GroundSet {
    pub fn contains(&self, index: usize) -> bool {
        self.states.binary_search(&index).is_ok()
    }

    /// Indicator over all states.
    pub fn indicator(&self, n_states: usize) -> Vec<bool> {
        let mut flags = vec![false; n_states];
        for &s in &self.states {
            flags[s] = true;
        }
        flags
    }
}

fn costs_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Exhaustive minimum over all `2^(P·Q)` states (`P·Q ≤ 24`).
pub fn brute_force_ground(spec: &ProblemSpec) -> Result<GroundSet> {
    let costs = spec.cost_table(BRUTE_FORCE_LIMIT)?;
    Ok(ground_from_costs(&costs))
}

pub fn ground_from_costs(costs: &[f64]) -> GroundSet {
    let min_cost = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let states = (0..costs.len()).filter(|&i| costs_tie(costs[i], min_cost)).collect();
    GroundSet { min_cost, states }
}

/// Normalized `e^(−βC)` over all states.
#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannTable {
    pub beta: f64,
    pub probabilities: Vec<f64>,
}

pub fn boltzmann(spec: &ProblemSpec, beta: f64) -> Result<BoltzmannTable> {
    let costs = spec.cost_table(BRUTE_FORCE_LIMIT)?;
    Ok(boltzmann_from_costs(&costs, beta))
}

/// Boltzmann weights from a cost table; costs are shifted by their minimum
/// before exponentiation.
pub fn boltzmann_from_costs(costs: &[f64], beta: f64) -> BoltzmannTable {
    let min_cost = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = costs.iter().map(|c| libm::exp(-beta * (c - min_cost))).collect();
    let total: f64 = weights.iter().sum();
    BoltzmannTable {
        beta,
        probabilities: weights.into_iter().map(|w| w / total).collect(),
    }
}
