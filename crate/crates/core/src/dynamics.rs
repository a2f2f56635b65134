//! Circuit state model and explicit Euler integration to steady state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logistic activation, evaluated without overflow for large `|u|`.
#[inline]
pub fn sigmoid(u: f64) -> f64 {
    let s = if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    };
    #[cfg(feature = "fault-sigmoid")]
    let s = s + 1e-3;
    s
}

/// Derivative of [`sigmoid`], expressed through the activation itself.
#[inline]
pub fn sigmoid_prime(u: f64) -> f64 {
    let s = sigmoid(u);
    s * (1.0 - s)
}

/// An `n`-node gene circuit. `weight(i, j)` is the influence of node `j`'s
/// concentration on node `i`'s activation input; positive entries activate,
/// negative entries repress.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCircuit", into = "RawCircuit")]
pub struct GeneCircuit {
    n: usize,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawCircuit {
    n: usize,
    weights: Vec<Vec<f64>>,
}

impl TryFrom<RawCircuit> for GeneCircuit {
    type Error = Error;

    fn try_from(raw: RawCircuit) -> Result<Self> {
        let circuit = GeneCircuit::from_rows(raw.weights)?;
        if circuit.n != raw.n {
            return Err(Error::config(format!(
                "declared n = {} but weights are {}x{}",
                raw.n, circuit.n, circuit.n
            )));
        }
        Ok(circuit)
    }
}

impl From<GeneCircuit> for RawCircuit {
    fn from(c: GeneCircuit) -> Self {
        RawCircuit {
            n: c.n,
            weights: c.to_rows(),
        }
    }
}

impl GeneCircuit {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "a circuit needs at least one node");
        Self {
            n,
            weights: vec![0.0; n * n],
        }
    }

    /// Builds a circuit from a row-major flat weight buffer of length `n * n`.
    pub fn from_flat(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("circuit must have at least one node"));
        }
        if weights.len() != n * n {
            return Err(Error::LengthMismatch {
                left: weights.len(),
                right: n * n,
            });
        }
        if let Some(bad) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::config(format!(
                "weight ({}, {}) is not finite",
                bad / n,
                bad % n
            )));
        }
        Ok(Self { n, weights })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if let Some(row) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: n,
            });
        }
        Self::from_flat(n, rows.into_iter().flatten().collect())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    /// Row-major weights.
    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.weights.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.weights
    }

    /// Sum of absolute weights.
    pub fn l1_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// Signed sum of all weights.
    pub fn signed_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }

    /// `out = W * state`.
    #[inline]
    pub(crate) fn mat_vec(&self, state: &[f64], out: &mut [f64]) {
        for (row, o) in self.weights.chunks_exact(self.n).zip(out.iter_mut()) {
            *o = row.iter().zip(state).map(|(w, y)| w * y).sum();
        }
    }
}

/// How the input value enters the circuit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputMode {
    /// Constant impulse `I_0 = x` on node 0; every node keeps its dynamics.
    #[default]
    DriveFirstNode,
    /// Node 0 is held at `x` after every step.
    ClampFirstNode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub max_steps: usize,
    /// Steady state is declared once `max_i |dy_i/dt|` drops below this.
    pub convergence_tol: f64,
    pub input_mode: InputMode,
    pub initial_state: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.2,
            max_steps: 250,
            convergence_tol: 1e-6,
            input_mode: InputMode::DriveFirstNode,
            initial_state: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("sim.dt must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("sim.max_steps must be positive"));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol < 0.0 {
            return Err(Error::config("sim.convergence_tol must be nonnegative"));
        }
        if !self.initial_state.is_finite() {
            return Err(Error::config("sim.initial_state must be finite"));
        }
        Ok(())
    }

    /// Non-fatal configuration concerns.
    pub fn warnings(&self) -> Vec<String> {
        let horizon = self.dt * self.max_steps as f64;
        if horizon < 10.0 {
            vec![format!(
                "simulated horizon dt * max_steps = {horizon} is below 10 time units; \
                 circuits may not settle"
            )]
        } else {
            Vec::new()
        }
    }
}

/// Recorded integration path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub converged: bool,
    pub steps_taken: usize,
}

/// Final state of a simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub state: Vec<f64>,
    pub converged: bool,
    pub steps: usize,
}

/// Right-hand side of the circuit ODE at `state`. In clamp mode the clamped
/// node has no dynamics and its component is zero.
pub fn rhs(circuit: &GeneCircuit, state: &[f64], input: f64, mode: InputMode) -> Vec<f64> {
    let mut u = vec![0.0; circuit.n()];
    circuit.mat_vec(state, &mut u);
    let mut out: Vec<f64> = u
        .iter()
        .zip(state)
        .map(|(&ui, &yi)| sigmoid(ui) - yi)
        .collect();
    match mode {
        InputMode::DriveFirstNode => out[0] += input,
        InputMode::ClampFirstNode => out[0] = 0.0,
    }
    out
}

/// Scratch space for repeated stepping of one circuit.
pub(crate) struct Stepper<'a> {
    circuit: &'a GeneCircuit,
    dt: f64,
    mode: InputMode,
    u: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(circuit: &'a GeneCircuit, dt: f64, mode: InputMode) -> Self {
        Self {
            circuit,
            dt,
            mode,
            u: vec![0.0; circuit.n()],
        }
    }

    /// Advances `state` into `next` and returns `max_i |next_i - state_i| / dt`.
    #[inline]
    pub(crate) fn step(&mut self, state: &[f64], next: &mut [f64], input: f64) -> f64 {
        self.circuit.mat_vec(state, &mut self.u);
        let dt = self.dt;
        for ((nx, &y), &u) in next.iter_mut().zip(state).zip(&self.u) {
            *nx = y + dt * (sigmoid(u) - y);
        }
        match self.mode {
            InputMode::DriveFirstNode => next[0] += dt * input,
            InputMode::ClampFirstNode => next[0] = input,
        }
        next.iter()
            .zip(state)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / dt
    }
}

/// One explicit Euler step of the circuit ODE.
pub fn euler_step(
    circuit: &GeneCircuit,
    state: &[f64],
    input: f64,
    config: &SimConfig,
) -> Result<Vec<f64>> {
    if state.len() != circuit.n() {
        return Err(Error::LengthMismatch {
            left: state.len(),
            right: circuit.n(),
        });
    }
    let mut next = vec![0.0; circuit.n()];
    Stepper::new(circuit, config.dt, config.input_mode).step(state, &mut next, input);
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NonFiniteState { step: 1 })
    }
}

/// Integrates from `initial` until the largest derivative falls below the
/// convergence tolerance or the step cap is hit.
pub fn simulate_from(
    circuit: &GeneCircuit,
    initial: &[f64],
    input: f64,
    config: &SimConfig,
) -> Result<SteadyState> {
    if initial.len() != circuit.n() {
        return Err(Error::LengthMismatch {
            left: initial.len(),
            right: circuit.n(),
        });
    }
    let mut stepper = Stepper::new(circuit, config.dt, config.input_mode);
    let mut state = initial.to_vec();
    let mut next = vec![0.0; circuit.n()];
    for step in 1..=config.max_steps {
        let speed = stepper.step(&state, &mut next, input);
        std::mem::swap(&mut state, &mut next);
        if !speed.is_finite() || state.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step });
        }
        if speed < config.convergence_tol {
            return Ok(SteadyState {
                state,
                converged: true,
                steps: step,
            });
        }
    }
    Ok(SteadyState {
        state,
        converged: false,
        steps: config.max_steps,
    })
}

/// Steady state reached from the uniform initial condition.
pub fn steady_state(circuit: &GeneCircuit, input: f64, config: &SimConfig) -> Result<SteadyState> {
    let initial = initial_state(circuit.n(), config);
    simulate_from(circuit, &initial, input, config)
}

/// Uniform initial condition.
pub(crate) fn initial_state(n: usize, config: &SimConfig) -> Vec<f64> {
    vec![config.initial_state; n]
}

/// Same integration as [`steady_state`], keeping every visited state.
pub fn trajectory(circuit: &GeneCircuit, input: f64, config: &SimConfig) -> Result<Trajectory> {
    let mut stepper = Stepper::new(circuit, config.dt, config.input_mode);
    let mut states = vec![initial_state(circuit.n(), config)];
    let mut next = vec![0.0; circuit.n()];
    for step in 1..=config.max_steps {
        let speed = stepper.step(states.last().unwrap(), &mut next, input);
        if !speed.is_finite() || next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step });
        }
        states.push(next.clone());
        if speed < config.convergence_tol {
            return Ok(Trajectory {
                states,
                converged: true,
                steps_taken: step,
            });
        }
    }
    Ok(Trajectory {
        states,
        converged: false,
        steps_taken: config.max_steps,
    })
}

/// Steady-state responses over an input grid. Row `k` is the full node state
/// at `grid[k]`; column `n - 1` is the circuit's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub grid: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
}

impl ResponseCurve {
    pub fn n(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn column(&self, node: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[node]).collect()
    }

    /// Output node response.
    pub fn output(&self) -> Vec<f64> {
        self.column(self.n() - 1)
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

pub fn response_curve(
    circuit: &GeneCircuit,
    grid: &[f64],
    config: &SimConfig,
) -> Result<ResponseCurve> {
    if grid.is_empty() {
        return Err(Error::config("response grid is empty"));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::config("response grid must be sorted ascending"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    let mut converged = Vec::with_capacity(grid.len());
    for &x in grid {
        let ss = steady_state(circuit, x, config)?;
        rows.push(ss.state);
        converged.push(ss.converged);
    }
    Ok(ResponseCurve {
        grid: grid.to_vec(),
        rows,
        converged,
    })
}
