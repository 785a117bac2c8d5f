//! Dense statevector simulation.
//!
//! Qubit 0 is the least significant bit of a basis-state index. A [`Register`]
//! is a contiguous run of qubits and reads its value from the bits
//! `start..start + len` of the index.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;

use crate::error::{argument, Error, Result};
use crate::rng::Rng;

/// Largest statevector the simulator allocates unless told otherwise.
pub const DEFAULT_QUBIT_LIMIT: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `⌈log₂ n⌉`, with `ceil_log2(1) == 0`.
pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// A contiguous block of qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Register {
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub const fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    pub const fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn qubits(&self) -> Range<usize> {
        self.start..self.end()
    }

    /// Number of basis values, `2^len`.
    pub const fn dim(&self) -> usize {
        1 << self.len
    }

    /// Value of this register inside a full basis-state index.
    #[inline]
    pub const fn extract(&self, index: usize) -> usize {
        (index >> self.start) & ((1 << self.len) - 1)
    }

    /// Bit mask of the register's qubits.
    pub const fn mask(&self) -> usize {
        ((1 << self.len) - 1) << self.start
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        if self.end() > n_qubits {
            return Err(Error::QubitIndex {
                index: self.end() - 1,
                n_qubits,
            });
        }
        Ok(())
    }
}

/// Register layout of the walk circuit.
///
/// From qubit 0 upwards: state (`P·Q`), move id (`⌈log₂P⌉`), move value (1),
/// coin (1), acceptance (`a`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    pub variables: usize,
    pub qubits_per_variable: usize,
    pub state: Register,
    pub move_id: Register,
    pub move_value: Register,
    pub coin: Register,
    pub acceptance: Register,
}

impl RegisterLayout {
    pub fn new(variables: usize, qubits_per_variable: usize, acceptance_qubits: usize) -> Self {
        let state = Register::new(0, variables * qubits_per_variable);
        let move_id = Register::new(state.end(), ceil_log2(variables));
        let move_value = Register::new(move_id.end(), 1);
        let coin = Register::new(move_value.end(), 1);
        let acceptance = Register::new(coin.end(), acceptance_qubits);
        Self {
            variables,
            qubits_per_variable,
            state,
            move_id,
            move_value,
            coin,
            acceptance,
        }
    }

    /// `P·Q + ⌈log₂P⌉ + a + 2`.
    pub fn total_qubits(&self) -> usize {
        self.acceptance.end()
    }

    /// Move id and move value together.
    pub fn moves(&self) -> Register {
        Register::new(self.move_id.start, self.move_id.len + 1)
    }

    /// Register of variable `i` inside the state register.
    pub fn variable(&self, i: usize) -> Register {
        Register::new(self.state.start + i * self.qubits_per_variable, self.qubits_per_variable)
    }

    pub fn registers(&self) -> [(&'static str, Register); 5] {
        [
            ("state", self.state),
            ("move_id", self.move_id),
            ("move_value", self.move_value),
            ("coin", self.coin),
            ("acceptance", self.acceptance),
        ]
    }
}

/// Set of basis values of a register, used by phase flips.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisSet {
    Only(Vec<u64>),
    AllExcept(Vec<u64>),
}

impl BasisSet {
    fn indicator(&self, dim: usize) -> Vec<bool> {
        let (listed, default) = match self {
            BasisSet::Only(v) => (v, false),
            BasisSet::AllExcept(v) => (v, true),
        };
        let mut flags = vec![default; dim];
        for &value in listed {
            if let Some(flag) = flags.get_mut(value as usize) {
                *flag = !default;
            }
        }
        flags
    }

    fn values(&self) -> &[u64] {
        match self {
            BasisSet::Only(v) | BasisSet::AllExcept(v) => v,
        }
    }
}

/// One gate of a circuit.
///
/// For [`Gate::MultiplexedRotationY`], bit `k` of the table index is the value
/// of `controls[k]`; the table therefore has `2^controls.len()` angles. A
/// phase flip reads its basis value the same way from `qubits`.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Hadamard(usize),
    PauliX(usize),
    ControlledNot { control: usize, target: usize },
    MultiControlledX { controls: Vec<usize>, target: usize },
    RotationY { target: usize, angle: f64 },
    MultiplexedRotationY { controls: Vec<usize>, target: usize, angles: Vec<f64> },
    PhaseFlipOnBasisSet { qubits: Vec<usize>, marked: BasisSet },
}

impl Gate {
    pub fn adjoint(&self) -> Gate {
        match self {
            Gate::RotationY { target, angle } => Gate::RotationY {
                target: *target,
                angle: -angle,
            },
            Gate::MultiplexedRotationY {
                controls,
                target,
                angles,
            } => Gate::MultiplexedRotationY {
                controls: controls.clone(),
                target: *target,
                angles: angles.iter().map(|a| -a).collect(),
            },
            other => other.clone(),
        }
    }

    /// Checks qubit ranges, control/target disjointness and table sizes.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let in_range = |q: usize| {
            if q < n_qubits {
                Ok(())
            } else {
                Err(Error::QubitIndex { index: q, n_qubits })
            }
        };
        let disjoint = |controls: &[usize], target: usize| -> Result<()> {
            in_range(target)?;
            for (k, &c) in controls.iter().enumerate() {
                in_range(c)?;
                if c == target || controls[..k].contains(&c) {
                    return Err(Error::QubitIndex { index: c, n_qubits });
                }
            }
            Ok(())
        };
        match self {
            Gate::Hadamard(q) | Gate::PauliX(q) | Gate::RotationY { target: q, .. } => in_range(*q),
            Gate::ControlledNot { control, target } => disjoint(&[*control], *target),
            Gate::MultiControlledX { controls, target } => disjoint(controls, *target),
            Gate::MultiplexedRotationY {
                controls,
                target,
                angles,
            } => {
                disjoint(controls, *target)?;
                if angles.len() != 1 << controls.len() {
                    return Err(argument("multiplexed rotation table size must be 2^controls"));
                }
                Ok(())
            }
            Gate::PhaseFlipOnBasisSet { qubits, marked } => {
                for (k, &q) in qubits.iter().enumerate() {
                    in_range(q)?;
                    if qubits[..k].contains(&q) {
                        return Err(Error::QubitIndex { index: q, n_qubits });
                    }
                }
                if let Some(v) = marked.values().iter().find(|&&v| v >= 1u64 << qubits.len()) {
                    return Err(argument(alloc::format!(
                        "basis value {v} outside a {}-qubit register",
                        qubits.len()
                    )));
                }
                Ok(())
            }
        }
    }
}

/// An ordered gate list over a fixed number of qubits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn extend(&mut self, other: &Circuit) -> &mut Self {
        self.gates.extend(other.gates.iter().cloned());
        self
    }

    /// Reversed sequence of adjoint gates.
    pub fn adjoint(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn apply(&self, psi: &mut Statevector) -> Result<()> {
        if psi.n_qubits() < self.n_qubits {
            return Err(Error::QubitIndex {
                index: self.n_qubits - 1,
                n_qubits: psi.n_qubits(),
            });
        }
        self.gates.iter().try_for_each(|g| psi.apply_gate(g))
    }
}

/// Dense complex amplitudes over `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize, limit: usize) -> Result<Self> {
        if n_qubits > limit {
            return Err(Error::Capacity {
                what: "statevector qubits",
                requested: n_qubits,
                allowed: limit,
            });
        }
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// `|0…0⟩` over every register of `layout`.
    pub fn for_layout(layout: &RegisterLayout, limit: usize) -> Result<Self> {
        Self::zero(layout.total_qubits(), limit)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize, limit: usize) -> Result<Self> {
        let mut psi = Self::zero(n_qubits, limit)?;
        if index >= psi.dim() {
            return Err(argument(alloc::format!("basis index {index} out of range")));
        }
        psi.amplitudes[0] = ZERO;
        psi.amplitudes[index] = ONE;
        Ok(psi)
    }

    /// Wraps caller-provided amplitudes; the length must be a power of two and
    /// the norm 1 within `1e-10`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(argument("amplitude count must be a power of two"));
        }
        let psi = Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        };
        if (psi.norm() - 1.0).abs() > 1e-10 {
            return Err(argument("amplitudes are not normalized"));
        }
        Ok(psi)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.amplitudes.iter().map(|a| a.norm_sqr()).sum())
    }

    /// `|ψ_i|²` for every basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Largest elementwise modulus of `self − other`.
    pub fn max_distance(&self, other: &Statevector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let h = core::f64::consts::FRAC_1_SQRT_2;
        match gate {
            Gate::Hadamard(q) => self.apply_real_1q(*q, 0, 0, [[h, h], [h, -h]]),
            Gate::PauliX(q) => self.apply_real_1q(*q, 0, 0, [[0.0, 1.0], [1.0, 0.0]]),
            Gate::ControlledNot { control, target } => {
                let mask = 1 << control;
                self.apply_real_1q(*target, mask, mask, [[0.0, 1.0], [1.0, 0.0]]);
            }
            Gate::MultiControlledX { controls, target } => {
                let mask = controls.iter().fold(0, |m, c| m | 1 << c);
                self.apply_real_1q(*target, mask, mask, [[0.0, 1.0], [1.0, 0.0]]);
            }
            Gate::RotationY { target, angle } => self.apply_real_1q(*target, 0, 0, ry(*angle)),
            Gate::MultiplexedRotationY {
                controls,
                target,
                angles,
            } => self.apply_multiplexed_ry(controls, *target, angles),
            Gate::PhaseFlipOnBasisSet { qubits, marked } => {
                let flags = marked.indicator(1 << qubits.len());
                let selector = Selector::new(qubits);
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    if flags[selector.value(i)] {
                        *amp = -*amp;
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies a real 2×2 matrix to `target` on the subspace where
    /// `index & control_mask == control_value`.
    fn apply_real_1q(&mut self, target: usize, control_mask: usize, control_value: usize, m: [[f64; 2]; 2]) {
        let bit = 1 << target;
        for i in 0..self.amplitudes.len() {
            if i & bit != 0 || i & control_mask != control_value {
                continue;
            }
            let j = i | bit;
            let (a, b) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = a * m[0][0] + b * m[0][1];
            self.amplitudes[j] = a * m[1][0] + b * m[1][1];
        }
    }

    fn apply_multiplexed_ry(&mut self, controls: &[usize], target: usize, angles: &[f64]) {
        let bit = 1 << target;
        let selector = Selector::new(controls);
        for i in 0..self.amplitudes.len() {
            if i & bit != 0 {
                continue;
            }
            let angle = angles[selector.value(i)];
            if angle == 0.0 {
                continue;
            }
            let m = ry(angle);
            let j = i | bit;
            let (a, b) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = a * m[0][0] + b * m[0][1];
            self.amplitudes[j] = a * m[1][0] + b * m[1][1];
        }
    }

    /// Hadamard on every qubit of `register`.
    pub fn apply_hadamards(&mut self, register: Register) -> Result<()> {
        register.check(self.n_qubits)?;
        register.qubits().try_for_each(|q| self.apply_gate(&Gate::Hadamard(q)))
    }

    /// Multiplies the amplitude of each marked register value by −1.
    pub fn apply_phase_oracle(&mut self, register: Register, marked: &[u64]) -> Result<()> {
        register.check(self.n_qubits)?;
        self.apply_gate(&Gate::PhaseFlipOnBasisSet {
            qubits: register.qubits().collect(),
            marked: BasisSet::Only(marked.to_vec()),
        })
    }

    /// `2|0⟩⟨0| − 1` on `register`.
    pub fn reflect_about_zero(&mut self, register: Register) -> Result<()> {
        register.check(self.n_qubits)?;
        self.apply_gate(&reflection_about_zero(register.qubits().collect()))
    }

    /// `H^⊗n (2|0⟩⟨0| − 1) H^⊗n` on `register`: inversion about the mean.
    pub fn apply_diffusion(&mut self, register: Register) -> Result<()> {
        self.apply_hadamards(register)?;
        self.reflect_about_zero(register)?;
        self.apply_hadamards(register)
    }

    /// Probability of each value of `register`.
    pub fn marginal(&self, register: Register) -> Result<Vec<f64>> {
        register.check(self.n_qubits)?;
        let mut probs = vec![0.0; register.dim()];
        for (i, amp) in self.amplitudes.iter().enumerate() {
            probs[register.extract(i)] += amp.norm_sqr();
        }
        Ok(probs)
    }

    /// Draws `shots` values of `register` from its marginal, seeded.
    pub fn sample(&self, register: Register, shots: usize, seed: u64) -> Result<Vec<u64>> {
        self.sample_with(register, shots, &mut Rng::seed_from_u64(seed))
    }

    pub fn sample_with<R: rand::Rng + ?Sized>(&self, register: Register, shots: usize, rng: &mut R) -> Result<Vec<u64>> {
        if shots == 0 {
            return Err(argument("shots must be at least 1"));
        }
        sample_distribution(&self.marginal(register)?, shots, rng)
    }
}

/// Draws `shots` indices from a discrete distribution.
pub fn sample_distribution<R: rand::Rng + ?Sized>(probs: &[f64], shots: usize, rng: &mut R) -> Result<Vec<u64>> {
    let dist = WeightedIndex::new(probs).map_err(|e| argument(alloc::format!("cannot sample distribution: {e}")))?;
    Ok((0..shots).map(|_| dist.sample(rng) as u64).collect())
}

/// `2|0⟩⟨0| − 1` on the listed qubits.
pub fn reflection_about_zero(qubits: Vec<usize>) -> Gate {
    Gate::PhaseFlipOnBasisSet {
        qubits,
        marked: BasisSet::AllExcept(vec![0]),
    }
}

/// Reads the value of a qubit list out of a basis index.
enum Selector<'a> {
    Contiguous { shift: usize, mask: usize },
    Scattered(&'a [usize]),
}

impl<'a> Selector<'a> {
    fn new(qubits: &'a [usize]) -> Self {
        match qubits.first() {
            None => Selector::Contiguous { shift: 0, mask: 0 },
            Some(&first) if qubits.iter().enumerate().all(|(k, &q)| q == first + k) => Selector::Contiguous {
                shift: first,
                mask: (1 << qubits.len()) - 1,
            },
            Some(_) => Selector::Scattered(qubits),
        }
    }

    #[inline]
    fn value(&self, index: usize) -> usize {
        match self {
            Selector::Contiguous { shift, mask } => (index >> shift) & mask,
            Selector::Scattered(qubits) => qubits
                .iter()
                .enumerate()
                .fold(0, |acc, (k, &q)| acc | ((index >> q) & 1) << k),
        }
    }
}

fn ry(angle: f64) -> [[f64; 2]; 2] {
    let (s, c) = libm::sincos(angle / 2.0);
    [[c, -s], [s, c]]
}

/// Marked-state probability after `iterations` rounds of oracle and diffusion
/// on an `n`-qubit uniform superposition.
pub fn grover_search(n: usize, marked: u64, iterations: usize) -> Result<f64> {
    if n == 0 {
        return Err(argument("grover search needs at least one qubit"));
    }
    let register = Register::new(0, n);
    if marked as usize >= register.dim() {
        return Err(argument(alloc::format!("marked state {marked} does not fit in {n} qubits")));
    }
    let mut psi = Statevector::zero(n, DEFAULT_QUBIT_LIMIT)?;
    psi.apply_hadamards(register)?;
    for _ in 0..iterations {
        psi.apply_phase_oracle(register, &[marked])?;
        psi.apply_diffusion(register)?;
    }
    Ok(psi.amplitudes[marked as usize].norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_1_SQRT_2, PI};
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    fn real(psi: &Statevector) -> Vec<f64> {
        psi.amplitudes().iter().map(|a| a.re).collect()
    }

    fn uniform(n: usize) -> Statevector {
        let mut psi = Statevector::zero(n, 24).unwrap();
        psi.apply_hadamards(Register::new(0, n)).unwrap();
        psi
    }

    #[test]
    fn init_zero_examples() {
        assert_eq!(real(&Statevector::zero(2, 24).unwrap()), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(real(&Statevector::zero(0, 24).unwrap()), vec![1.0]);
        assert_eq!(
            Statevector::zero(25, 24),
            Err(Error::Capacity {
                what: "statevector qubits",
                requested: 25,
                allowed: 24
            })
        );
    }

    #[test]
    fn layout_counts_and_ranges() {
        for (p, q, a) in [(1, 4, 0), (2, 2, 3), (3, 1, 0), (4, 2, 1), (5, 3, 2)] {
            let layout = RegisterLayout::new(p, q, a);
            assert_eq!(layout.total_qubits(), p * q + ceil_log2(p) + a + 2);
            let mut covered = vec![0; layout.total_qubits()];
            for (_, reg) in layout.registers() {
                for qb in reg.qubits() {
                    covered[qb] += 1;
                }
            }
            assert!(covered.iter().all(|&c| c == 1));
        }
        // P=2, Q=2, a=3 is the 10-qubit configuration.
        assert_eq!(RegisterLayout::new(2, 2, 3).total_qubits(), 10);
    }

    #[test]
    fn apply_gate_examples() {
        let mut psi = Statevector::zero(1, 24).unwrap();
        psi.apply_gate(&Gate::Hadamard(0)).unwrap();
        assert!(close(&real(&psi), &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], 1e-15));

        let mut psi = Statevector::zero(1, 24).unwrap();
        psi.apply_gate(&Gate::PauliX(0)).unwrap();
        assert_eq!(real(&psi), vec![0.0, 1.0]);

        let mut psi = Statevector::zero(1, 24).unwrap();
        psi.apply_gate(&Gate::RotationY { target: 0, angle: PI }).unwrap();
        assert!(close(&psi.probabilities(), &[0.0, 1.0], 1e-15));

        let err = Statevector::zero(2, 24).unwrap().apply_gate(&Gate::Hadamard(2));
        assert_eq!(err, Err(Error::QubitIndex { index: 2, n_qubits: 2 }));
        let overlap = Statevector::zero(2, 24)
            .unwrap()
            .apply_gate(&Gate::ControlledNot { control: 1, target: 1 });
        assert!(overlap.is_err());
    }

    #[test]
    fn phase_oracle_examples() {
        let reg = Register::new(0, 2);
        let mut psi = uniform(2);
        psi.apply_phase_oracle(reg, &[1]).unwrap();
        assert!(close(&real(&psi), &[0.5, -0.5, 0.5, 0.5], 1e-15));

        let mut psi = uniform(2);
        psi.apply_phase_oracle(reg, &[]).unwrap();
        assert_eq!(psi, uniform(2));

        let mut psi = uniform(2);
        psi.apply_phase_oracle(reg, &[0, 1, 2, 3]).unwrap();
        assert!(close(&real(&psi), &[-0.5; 4], 1e-15));
        assert!(close(&psi.probabilities(), &[0.25; 4], 1e-15));
    }

    #[test]
    fn diffusion_examples() {
        let reg = Register::new(0, 2);
        let mut psi = uniform(2);
        psi.apply_phase_oracle(reg, &[1]).unwrap();
        psi.apply_diffusion(reg).unwrap();
        assert!(close(&real(&psi), &[0.0, 1.0, 0.0, 0.0], 1e-12));

        let mut psi = uniform(2);
        psi.apply_diffusion(reg).unwrap();
        assert!(close(&psi.probabilities(), &[0.25; 4], 1e-12));

        // On one qubit 2|+⟩⟨+| − 1 is exactly Pauli X, so |1⟩ goes to |0⟩.
        let mut psi = Statevector::basis(1, 1, 24).unwrap();
        psi.apply_diffusion(Register::new(0, 1)).unwrap();
        assert!(close(&psi.probabilities(), &[1.0, 0.0], 1e-12));
    }

    #[test]
    fn marginal_examples() {
        let psi = Statevector::zero(2, 24).unwrap();
        assert_eq!(psi.marginal(Register::new(0, 2)).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        assert!(close(&uniform(2).marginal(Register::new(0, 1)).unwrap(), &[0.5, 0.5], 1e-15));
        let h = FRAC_1_SQRT_2;
        let bell = Statevector::from_amplitudes(vec![
            Complex64::new(h, 0.0),
            ZERO,
            ZERO,
            Complex64::new(h, 0.0),
        ])
        .unwrap();
        for q in 0..2 {
            assert!(close(&bell.marginal(Register::new(q, 1)).unwrap(), &[0.5, 0.5], 1e-15));
        }
        assert!(bell.marginal(Register::new(1, 2)).is_err());
    }

    #[test]
    fn sample_examples() {
        let psi = Statevector::zero(1, 24).unwrap();
        assert_eq!(psi.sample(Register::new(0, 1), 5, 3).unwrap(), vec![0; 5]);
        assert!(psi.sample(Register::new(0, 1), 0, 3).is_err());

        let plus = uniform(1);
        let shots = 10_000;
        let draws = plus.sample(Register::new(0, 1), shots, 11).unwrap();
        let ones = draws.iter().filter(|&&d| d == 1).count() as f64;
        // Binomial(10⁴, ½): σ = 50 counts.
        assert!((ones - 5000.0).abs() < 5.0 * 50.0, "ones = {ones}");
        assert_eq!(draws, plus.sample(Register::new(0, 1), shots, 11).unwrap());
    }

    #[test]
    fn grover_examples() {
        for marked in 0..4 {
            assert!((grover_search(2, marked, 1).unwrap() - 1.0).abs() < 1e-10);
        }
        assert!((grover_search(2, 3, 0).unwrap() - 0.25).abs() < 1e-15);
        let expected = libm::pow(libm::sin(5.0 * libm::asin(libm::sqrt(1.0 / 8.0))), 2.0);
        assert!((expected - 0.9453).abs() < 1e-4);
        assert!((grover_search(3, 5, 2).unwrap() - expected).abs() < 1e-9);
        assert!(grover_search(2, 4, 1).is_err());
    }

    #[test]
    fn grover_matches_closed_form() {
        for n in 2..=4 {
            let theta = libm::asin(libm::sqrt(1.0 / (1u64 << n) as f64));
            for k in 0..=3 {
                let expected = libm::pow(libm::sin((2 * k + 1) as f64 * theta), 2.0);
                let got = grover_search(n, (1 << n) - 1, k).unwrap();
                assert!((got - expected).abs() < 1e-9, "n={n} k={k}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn full_marginal_is_probabilities() {
        let mut psi = uniform(3);
        psi.apply_gate(&Gate::RotationY { target: 1, angle: 0.3 }).unwrap();
        psi.apply_phase_oracle(Register::new(0, 3), &[2, 5]).unwrap();
        assert_eq!(psi.marginal(Register::new(0, 3)).unwrap(), psi.probabilities());
    }

    fn random_state(n: usize, seed: u64) -> Statevector {
        use rand::Rng as _;
        let mut rng = crate::rng::Rng::seed_from_u64(seed);
        let mut amps: Vec<Complex64> = (0..1 << n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = libm::sqrt(amps.iter().map(|a| a.norm_sqr()).sum());
        amps.iter_mut().for_each(|a| *a /= norm);
        Statevector::from_amplitudes(amps).unwrap()
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
        let qubit = 0..n;
        prop_oneof![
            qubit.clone().prop_map(Gate::Hadamard),
            qubit.clone().prop_map(Gate::PauliX),
            (qubit.clone(), -PI..PI).prop_map(|(target, angle)| Gate::RotationY { target, angle }),
            (qubit.clone(), 1..n).prop_map(move |(c, off)| Gate::ControlledNot {
                control: c,
                target: (c + off) % n
            }),
            (qubit.clone(), proptest::collection::vec(any::<bool>(), n)).prop_map(move |(t, pick)| {
                let controls = (0..n).filter(|&q| q != t && pick[q]).collect();
                Gate::MultiControlledX { controls, target: t }
            }),
            (qubit.clone(), proptest::collection::vec(-PI..PI, 4)).prop_map(move |(t, angles)| {
                let controls = vec![(t + 1) % n, (t + 2) % n];
                Gate::MultiplexedRotationY { controls, target: t, angles }
            }),
            proptest::collection::vec(0u64..8, 0..5).prop_map(move |marked| Gate::PhaseFlipOnBasisSet {
                qubits: vec![3 % n, 0, 2 % n],
                marked: BasisSet::Only(marked)
            }),
        ]
    }

    proptest! {
        #[test]
        fn gate_then_adjoint_is_identity(gate in arb_gate(4), seed in any::<u64>()) {
            let input = random_state(4, seed);
            let mut psi = input.clone();
            psi.apply_gate(&gate).unwrap();
            prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
            psi.apply_gate(&gate.adjoint()).unwrap();
            prop_assert!(psi.max_distance(&input) < 1e-10);
        }

        #[test]
        fn gate_sequences_preserve_norm(gates in proptest::collection::vec(arb_gate(4), 1..40), seed in any::<u64>()) {
            let mut psi = random_state(4, seed);
            for g in &gates {
                psi.apply_gate(g).unwrap();
            }
            prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn oracle_is_an_involution(marked in proptest::collection::vec(0u64..16, 0..8), seed in any::<u64>()) {
            let input = random_state(4, seed);
            let mut psi = input.clone();
            psi.apply_phase_oracle(Register::new(0, 4), &marked).unwrap();
            psi.apply_phase_oracle(Register::new(0, 4), &marked).unwrap();
            prop_assert!(psi.max_distance(&input) < 1e-12);
        }
    }

    #[test]
    fn every_gate_kind_has_a_unitary_matrix() {
        // Columns U|j⟩ must be orthonormal.
        let n = 3;
        let gates = [
            Gate::Hadamard(1),
            Gate::PauliX(2),
            Gate::ControlledNot { control: 0, target: 2 },
            Gate::MultiControlledX { controls: vec![0, 1], target: 2 },
            Gate::RotationY { target: 0, angle: 1.1 },
            Gate::MultiplexedRotationY { controls: vec![2], target: 0, angles: vec![0.4, -2.0] },
            Gate::PhaseFlipOnBasisSet { qubits: vec![0, 2], marked: BasisSet::AllExcept(vec![0]) },
        ];
        for gate in &gates {
            let columns: Vec<Statevector> = (0..1 << n)
                .map(|j| {
                    let mut psi = Statevector::basis(n, j, 24).unwrap();
                    psi.apply_gate(gate).unwrap();
                    psi
                })
                .collect();
            for (a, ca) in columns.iter().enumerate() {
                for (b, cb) in columns.iter().enumerate() {
                    let dot: Complex64 = ca.amplitudes().iter().zip(cb.amplitudes()).map(|(x, y)| x.conj() * y).sum();
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expected).norm() < 1e-12, "{gate:?}");
                }
            }
        }
    }
}
