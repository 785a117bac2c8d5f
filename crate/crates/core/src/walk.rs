//! Coin-based quantum Metropolis-Hastings walk.
//!
//! One step is `U(β) = R · V† · B† · F · B · V`, applied right to left:
//!
//! * `V` prepares a uniform superposition over the `2P` moves,
//! * `B` rotates the coin so that `P(coin = 1) = min(1, e^(−βΔC))`,
//! * `F` applies the move to the state register when the coin is 1,
//! * `R` reflects about `|0⟩` on the move and coin registers (or on the state
//!   and coin registers, see [`ReflectionTarget`]).
//!
//! Energies are evaluated classically once per problem and loaded into `B` as
//! an exact multiplexed rotation.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{argument, Result};
use crate::problem::{ground_from_costs, metropolis_acceptance, GroundSet, Move, ProblemSpec};
use crate::statevector::{reflection_about_zero, Circuit, Gate, RegisterLayout, Statevector, DEFAULT_QUBIT_LIMIT};

/// How β evolves with the step index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    /// `β(t) = β₀`.
    Constant,
    /// `β(t) = max(0, β₀ + slope·t)`.
    Linear,
    /// `β(t) = β₀·ratio^t`.
    Geometric,
    /// `β(t) = β₀·e^(rate·t)`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealingSchedule {
    pub kind: ScheduleKind,
    pub beta0: f64,
    /// Slope, ratio or rate depending on `kind`; ignored for constant schedules.
    pub parameter: f64,
}

impl AnnealingSchedule {
    pub fn constant(beta0: f64) -> Self {
        Self {
            kind: ScheduleKind::Constant,
            beta0,
            parameter: 0.0,
        }
    }

    pub fn linear(beta0: f64, slope: f64) -> Self {
        Self {
            kind: ScheduleKind::Linear,
            beta0,
            parameter: slope,
        }
    }

    pub fn geometric(beta0: f64, ratio: f64) -> Self {
        Self {
            kind: ScheduleKind::Geometric,
            beta0,
            parameter: ratio,
        }
    }

    pub fn exponential(beta0: f64, rate: f64) -> Self {
        Self {
            kind: ScheduleKind::Exponential,
            beta0,
            parameter: rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta0 >= 0.0) || !self.beta0.is_finite() {
            return Err(argument("beta0 must be finite and non-negative"));
        }
        if !self.parameter.is_finite() {
            return Err(argument("schedule parameter must be finite"));
        }
        if self.kind == ScheduleKind::Geometric && self.parameter < 0.0 {
            return Err(argument("geometric ratio must be non-negative"));
        }
        Ok(())
    }

    /// β at schedule time `t`. Step `t` of a run (1-based) uses `beta(t − 1)`.
    pub fn beta(&self, t: usize) -> f64 {
        let beta = match self.kind {
            ScheduleKind::Constant => self.beta0,
            ScheduleKind::Linear => self.beta0 + self.parameter * t as f64,
            ScheduleKind::Geometric => self.beta0 * libm::pow(self.parameter, t as f64),
            ScheduleKind::Exponential => self.beta0 * libm::exp(self.parameter * t as f64),
        };
        beta.max(0.0)
    }

    /// β used by step `step` (1-based).
    pub fn beta_for_step(&self, step: usize) -> f64 {
        self.beta(step.saturating_sub(1))
    }
}

/// Registers the reflection `R` acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReflectionTarget {
    #[default]
    MoveCoin,
    StateCoin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialState {
    /// Uniform over the state register.
    #[default]
    Uniform,
    /// A single packed state.
    Basis(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub schedule: AnnealingSchedule,
    pub steps: usize,
    /// Acceptance-register qubits; `a > 0` quantizes acceptances to multiples of `2^−a`.
    pub acceptance_qubits: usize,
    pub reflection_target: ReflectionTarget,
    pub initial_state: InitialState,
    pub qubit_limit: usize,
}

impl WalkConfig {
    pub fn new(schedule: AnnealingSchedule, steps: usize) -> Self {
        Self {
            schedule,
            steps,
            acceptance_qubits: 0,
            reflection_target: ReflectionTarget::default(),
            initial_state: InitialState::default(),
            qubit_limit: DEFAULT_QUBIT_LIMIT,
        }
    }
}

/// Ground-state mass after step `t` (`t = 0` is the initial state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkStepReport {
    pub t: usize,
    pub beta: f64,
    pub ground_probability: f64,
}

/// Move preparation `V`: amplitude `1/√(2P)` on each valid `(id, value)`.
///
/// For `P` not a power of two the id register is prepared with a tree of
/// rotations, most significant bit first, each conditioned on the bits above.
pub fn build_v(layout: &RegisterLayout) -> Circuit {
    let mut circuit = Circuit::new(layout.total_qubits());
    let p = layout.variables;
    let m = layout.move_id.len;
    for k in (0..m).rev() {
        let target = layout.move_id.start + k;
        let controls: Vec<usize> = (k + 1..m).map(|b| layout.move_id.start + b).collect();
        let angles = (0..1usize << controls.len())
            .map(|prefix| {
                let base = prefix << (k + 1);
                let count = |lo: usize, hi: usize| hi.min(p).saturating_sub(lo.min(p));
                let zeros = count(base, base + (1 << k));
                let ones = count(base + (1 << k), base + (2 << k));
                if zeros + ones == 0 {
                    0.0
                } else {
                    2.0 * libm::asin(libm::sqrt(ones as f64 / (zeros + ones) as f64))
                }
            })
            .collect();
        circuit.push(Gate::MultiplexedRotationY {
            controls,
            target,
            angles,
        });
    }
    circuit.push(Gate::Hadamard(layout.move_value.start));
    circuit
}

/// Acceptance probability loaded into the coin for `(state, move)`, after
/// optional quantization to `acceptance_qubits` bits.
pub fn coin_acceptance(costs: &[f64], spec: &ProblemSpec, state: usize, mv: Move, beta: f64, acceptance_qubits: usize) -> f64 {
    let next = spec.apply_move_index(state, mv);
    let a = metropolis_acceptance(beta, costs[next] - costs[state]);
    quantize(a, acceptance_qubits)
}

/// Rounds to the nearest multiple of `2^−bits`; `bits = 0` leaves `a` exact.
pub fn quantize(a: f64, bits: usize) -> f64 {
    if bits == 0 {
        return a;
    }
    let levels = (1u64 << bits) as f64;
    libm::round(a * levels) / levels
}

/// Coin rotation `B(β)`: a Y rotation of the coin multiplexed over the state
/// and move registers, angle `2·asin(√A)`; invalid move ids get angle 0.
pub fn build_b(layout: &RegisterLayout, spec: &ProblemSpec, costs: &[f64], beta: f64, acceptance_qubits: usize) -> Circuit {
    let controls: Vec<usize> = (layout.state.start..layout.coin.start).collect();
    let state_mask = layout.state.dim() - 1;
    let angles = (0..1usize << controls.len())
        .map(|selector| {
            let state = selector & state_mask;
            let id = layout.move_id.extract(selector);
            if id >= layout.variables {
                return 0.0;
            }
            let bit = layout.move_value.extract(selector);
            let mv = Move::from_index(2 * id + bit);
            let a = coin_acceptance(costs, spec, state, mv, beta, acceptance_qubits);
            2.0 * libm::asin(libm::sqrt(a))
        })
        .collect();
    let mut circuit = Circuit::new(layout.total_qubits());
    circuit.push(Gate::MultiplexedRotationY {
        controls,
        target: layout.coin.start,
        angles,
    });
    circuit
}

/// Conditional shift `F`: with the coin at 1, applies the move held in the
/// move registers to the state register. Each move is a ripple of
/// multi-controlled X gates; decrements are increments conjugated by X.
pub fn build_f(layout: &RegisterLayout) -> Circuit {
    let mut circuit = Circuit::new(layout.total_qubits());
    let coin = layout.coin.start;
    for variable in 0..layout.variables {
        let reg = layout.variable(variable);
        for bit in 0..2usize {
            let mv = Move::from_index(2 * variable + bit);
            // Select |id = variable, value = bit⟩ by flipping the zero bits to one.
            let selector_flips: Vec<usize> = layout
                .move_id
                .qubits()
                .enumerate()
                .filter(|&(k, _)| (variable >> k) & 1 == 0)
                .map(|(_, q)| q)
                .chain((mv.value_bit() == 0).then_some(layout.move_value.start))
                .collect();
            let mut selection: Vec<usize> = layout.moves().qubits().collect();
            selection.push(coin);

            let flips = |c: &mut Circuit, qs: &[usize]| {
                for &q in qs {
                    c.push(Gate::PauliX(q));
                }
            };
            let register: Vec<usize> = reg.qubits().collect();
            let down = mv.value_bit() == 1;

            flips(&mut circuit, &selector_flips);
            if down {
                flips(&mut circuit, &register);
            }
            for k in (0..reg.len).rev() {
                let mut controls: Vec<usize> = register[..k].to_vec();
                controls.extend_from_slice(&selection);
                circuit.push(Gate::MultiControlledX {
                    controls,
                    target: register[k],
                });
            }
            if down {
                flips(&mut circuit, &register);
            }
            flips(&mut circuit, &selector_flips);
        }
    }
    circuit
}

/// Reflection `R = 2|0⟩⟨0| − 1` on the chosen registers.
pub fn build_r(layout: &RegisterLayout, target: ReflectionTarget) -> Circuit {
    let qubits: Vec<usize> = match target {
        ReflectionTarget::MoveCoin => (layout.move_id.start..layout.coin.end()).collect(),
        ReflectionTarget::StateCoin => layout.state.qubits().chain(layout.coin.qubits()).collect(),
    };
    let mut circuit = Circuit::new(layout.total_qubits());
    circuit.push(reflection_about_zero(qubits));
    circuit
}

/// The walk operator of one problem, with β-independent parts prebuilt.
#[derive(Debug, Clone)]
pub struct WalkOperator {
    spec: ProblemSpec,
    layout: RegisterLayout,
    costs: Vec<f64>,
    acceptance_qubits: usize,
    v: Circuit,
    f: Circuit,
    r: Circuit,
}

impl WalkOperator {
    pub fn new(spec: &ProblemSpec, acceptance_qubits: usize, target: ReflectionTarget, qubit_limit: usize) -> Result<Self> {
        let layout = RegisterLayout::new(spec.variables(), spec.qubits_per_variable(), acceptance_qubits);
        if layout.total_qubits() > qubit_limit {
            return Err(crate::Error::Capacity {
                what: "walk qubits",
                requested: layout.total_qubits(),
                allowed: qubit_limit,
            });
        }
        let costs = spec.cost_table(qubit_limit)?;
        Ok(Self {
            spec: spec.clone(),
            layout,
            costs,
            acceptance_qubits,
            v: build_v(&layout),
            f: build_f(&layout),
            r: build_r(&layout, target),
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn v(&self) -> &Circuit {
        &self.v
    }

    pub fn f(&self) -> &Circuit {
        &self.f
    }

    pub fn r(&self) -> &Circuit {
        &self.r
    }

    pub fn b(&self, beta: f64) -> Circuit {
        build_b(&self.layout, &self.spec, &self.costs, beta, self.acceptance_qubits)
    }

    /// `U(β)` as a gate program in application order `V, B, F, B†, V†, R`.
    pub fn step(&self, beta: f64) -> Circuit {
        let b = self.b(beta);
        let mut circuit = Circuit::new(self.layout.total_qubits());
        circuit
            .extend(&self.v)
            .extend(&b)
            .extend(&self.f)
            .extend(&b.adjoint())
            .extend(&self.v.adjoint())
            .extend(&self.r);
        circuit
    }
}

/// `U(β)` for `spec` on its default layout.
pub fn build_walk_step(spec: &ProblemSpec, beta: f64) -> Result<Circuit> {
    Ok(WalkOperator::new(spec, 0, ReflectionTarget::MoveCoin, DEFAULT_QUBIT_LIMIT)?.step(beta))
}

/// Final state and per-step ground probabilities of a walk run.
#[derive(Debug, Clone)]
pub struct WalkRun {
    pub layout: RegisterLayout,
    pub ground: GroundSet,
    pub reports: Vec<WalkStepReport>,
    pub state: Statevector,
}

impl WalkRun {
    /// Marginal distribution of the state register at the end of the run.
    pub fn state_marginal(&self) -> Vec<f64> {
        self.state.marginal(self.layout.state).expect("state register lies inside the layout")
    }
}

/// Prepares the initial state and applies `U(β_t)` for `t = 1..=steps`.
pub fn run_walk(config: &WalkConfig, spec: &ProblemSpec) -> Result<WalkRun> {
    config.schedule.validate()?;
    let op = WalkOperator::new(spec, config.acceptance_qubits, config.reflection_target, config.qubit_limit)?;
    let layout = *op.layout();
    let ground = ground_from_costs(op.costs());
    let mut psi = Statevector::for_layout(&layout, config.qubit_limit)?;
    match config.initial_state {
        InitialState::Uniform => psi.apply_hadamards(layout.state)?,
        InitialState::Basis(index) => {
            if index >= spec.n_states() {
                return Err(argument("initial basis state outside the state space"));
            }
            for q in layout.state.qubits().filter(|q| (index >> q) & 1 == 1) {
                psi.apply_gate(&Gate::PauliX(q))?;
            }
        }
    }
    let ground_probability = |psi: &Statevector| -> Result<f64> {
        let marginal = psi.marginal(layout.state)?;
        Ok(ground.states.iter().map(|&s| marginal[s]).sum::<f64>().min(1.0))
    };
    let mut reports = vec![WalkStepReport {
        t: 0,
        beta: config.schedule.beta(0),
        ground_probability: ground_probability(&psi)?,
    }];
    let mut steps_by_beta: BTreeMap<u64, Circuit> = BTreeMap::new();
    for t in 1..=config.steps {
        let beta = config.schedule.beta_for_step(t);
        let step = steps_by_beta.entry(beta.to_bits()).or_insert_with(|| op.step(beta));
        step.apply(&mut psi)?;
        reports.push(WalkStepReport {
            t,
            beta,
            ground_probability: ground_probability(&psi)?,
        });
    }
    Ok(WalkRun {
        layout,
        ground,
        reports,
        state: psi,
    })
}

/// Ground probability after each step `t = 0..=steps`.
pub fn evolve(config: &WalkConfig, spec: &ProblemSpec) -> Result<Vec<WalkStepReport>> {
    run_walk(config, spec).map(|run| run.reports)
}
