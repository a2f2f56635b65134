//! Adam training of circuit weights through the unrolled Euler integration.
//!
//! The forward pass integrates every grid input for a fixed number of steps
//! from the uniform initial state; the backward pass accumulates
//! `d loss / d W` by reverse sweep over the stored states. Success checks use
//! the convergence-terminated simulator from [`crate::dynamics`].

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{response_curve, sigmoid, GeneCircuit, InputMode, SimConfig};
use crate::error::{Error, Result};
use crate::targets::{is_success, mse, LossConfig, TargetSpec};

/// Standard deviation of the hybrid trainer's additive weight noise.
pub const HYBRID_MUTATION_STD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub max_iters: usize,
    /// Euler steps in the differentiated forward pass.
    pub unroll_steps: usize,
    pub init_std: f64,
    pub rng_seed: u64,
    /// Per-entry probability of additive noise after each Adam step; 0 disables.
    pub mutation_rate: f64,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            max_iters: 2000,
            unroll_steps: 100,
            init_std: 1.0,
            rng_seed: 0,
            mutation_rate: 0.0,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("gd.learning_rate must be positive"));
        }
        let b1 = self.adam_beta1;
        let b2 = self.adam_beta2;
        if !(b1 > 0.0 && b1 < b2 && b2 < 1.0) {
            return Err(Error::config("gd betas must satisfy 0 < beta1 < beta2 < 1"));
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return Err(Error::config("gd.adam_eps must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("gd.max_iters must be at least 1"));
        }
        if self.unroll_steps == 0 {
            return Err(Error::config("gd.unroll_steps must be at least 1"));
        }
        if !(self.init_std > 0.0 && self.init_std.is_finite()) {
            return Err(Error::config("gd.init_std must be positive"));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::config("gd.mutation_rate must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trainer {
    GradientDescent,
    Evolutionary,
    HybridMutatedGd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub circuit: GeneCircuit,
    pub loss_history: Vec<f64>,
    pub success: bool,
    /// Output MSE of `circuit` under the convergence-terminated simulator.
    pub final_mse: f64,
    pub iterations_used: usize,
    pub seed: u64,
    pub trainer: Trainer,
    pub wall_ms: u64,
    pub target: String,
    /// Settings needed to interpret the result (success rule, operator semantics).
    pub notes: BTreeMap<String, String>,
}

impl TrainResult {
    /// Re-evaluates the success criterion on the stored circuit.
    pub fn reverify(&self, spec: &TargetSpec, sim: &SimConfig, loss: &LossConfig) -> bool {
        evaluate(&self.circuit, spec, sim)
            .map(|out| is_success(&out, spec, loss))
            .unwrap_or(false)
    }

    /// Copy with the wall-clock field zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_ms: 0,
            ..self.clone()
        }
    }
}

/// Output node response on the target grid, or `None` when integration diverged.
pub(crate) fn evaluate(circuit: &GeneCircuit, spec: &TargetSpec, sim: &SimConfig) -> Option<Vec<f64>> {
    response_curve(circuit, &spec.grid(), sim).ok().map(|c| c.output())
}

pub(crate) fn success_notes(spec: &TargetSpec, sim: &SimConfig, loss: &LossConfig) -> BTreeMap<String, String> {
    let mut notes = BTreeMap::new();
    notes.insert(
        "success_rule".to_string(),
        format!(
            "output mse <= {} on {} grid points over [{}, {}]",
            loss.success_mse, spec.grid_points, spec.grid_min, spec.grid_max
        ),
    );
    notes.insert("l1_lambda".to_string(), loss.l1_lambda.to_string());
    notes.insert("input_mode".to_string(), format!("{:?}", sim.input_mode));
    notes
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossGradient {
    /// Regularized cost; `+inf` when the forward pass diverged.
    pub loss: f64,
    /// Unregularized output MSE.
    pub mse: f64,
    /// Row-major `d loss / d W`.
    pub grad: Vec<f64>,
    pub diverged: bool,
}

/// Forward/backward evaluator bound to a target and a fixed unroll depth
/// (`sim.max_steps`; the convergence tolerance is ignored).
pub struct GradientEvaluator {
    grid: Vec<f64>,
    targets: Vec<f64>,
    dt: f64,
    steps: usize,
    mode: InputMode,
    initial: f64,
    loss: LossConfig,
}

impl GradientEvaluator {
    pub fn new(spec: &TargetSpec, sim: &SimConfig, loss: &LossConfig) -> Self {
        Self::with_grid(spec.grid(), spec.target_values(), sim, loss)
    }

    pub fn with_grid(grid: Vec<f64>, targets: Vec<f64>, sim: &SimConfig, loss: &LossConfig) -> Self {
        assert_eq!(grid.len(), targets.len());
        Self {
            grid,
            targets,
            dt: sim.dt,
            steps: sim.max_steps,
            mode: sim.input_mode,
            initial: sim.initial_state,
            loss: loss.clone(),
        }
    }

    /// Output node value after the fixed-depth forward pass, per grid point.
    pub fn outputs(&self, circuit: &GeneCircuit) -> Vec<f64> {
        let n = circuit.n();
        let mut y = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut u = vec![0.0; n];
        self.grid
            .iter()
            .map(|&x| {
                y.fill(self.initial);
                for _ in 0..self.steps {
                    self.forward_step(circuit, &y, &mut next, &mut u, x);
                    std::mem::swap(&mut y, &mut next);
                }
                y[n - 1]
            })
            .collect()
    }

    #[inline]
    fn forward_step(&self, circuit: &GeneCircuit, y: &[f64], next: &mut [f64], u: &mut [f64], x: f64) {
        circuit.mat_vec(y, u);
        let dt = self.dt;
        for ((nx, &yi), &ui) in next.iter_mut().zip(y).zip(u.iter()) {
            *nx = yi + dt * (sigmoid(ui) - yi);
        }
        match self.mode {
            InputMode::DriveFirstNode => next[0] += dt * x,
            InputMode::ClampFirstNode => next[0] = x,
        }
    }

    /// Regularized loss only (no backward pass).
    pub fn loss(&self, circuit: &GeneCircuit) -> f64 {
        let out = self.outputs(circuit);
        if out.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        let base = mse(&out, &self.targets).expect("grid and targets have equal length");
        base + self.loss.l1_lambda * circuit.l1_norm()
    }

    pub fn loss_and_gradient(&self, circuit: &GeneCircuit) -> LossGradient {
        let n = circuit.n();
        let w = circuit.weights();
        let steps = self.steps;
        let dt = self.dt;
        let m = self.grid.len() as f64;

        let mut states = vec![0.0; (steps + 1) * n];
        let mut slopes = vec![0.0; steps * n];
        let mut u = vec![0.0; n];
        let mut g = vec![0.0; n];
        let mut g_prev = vec![0.0; n];
        let mut a = vec![0.0; n];
        let mut grad = vec![0.0; n * n];
        let mut sq_err = 0.0;

        for (&x, &target) in self.grid.iter().zip(&self.targets) {
            states[..n].fill(self.initial);
            for t in 0..steps {
                let (done, rest) = states.split_at_mut((t + 1) * n);
                let y = &done[t * n..];
                let next = &mut rest[..n];
                circuit.mat_vec(y, &mut u);
                let slope = &mut slopes[t * n..(t + 1) * n];
                for i in 0..n {
                    let s = sigmoid(u[i]);
                    slope[i] = s * (1.0 - s);
                    next[i] = y[i] + dt * (s - y[i]);
                }
                match self.mode {
                    InputMode::DriveFirstNode => next[0] += dt * x,
                    InputMode::ClampFirstNode => next[0] = x,
                }
            }
            let out = states[steps * n + n - 1];
            if !out.is_finite() || states.iter().any(|v| !v.is_finite()) {
                return LossGradient {
                    loss: f64::INFINITY,
                    mse: f64::INFINITY,
                    grad: vec![0.0; n * n],
                    diverged: true,
                };
            }
            let err = out - target;
            sq_err += err * err;

            g.fill(0.0);
            g[n - 1] = 2.0 * err / m;
            for t in (0..steps).rev() {
                if self.mode == InputMode::ClampFirstNode {
                    g[0] = 0.0;
                }
                let y = &states[t * n..(t + 1) * n];
                let slope = &slopes[t * n..(t + 1) * n];
                for i in 0..n {
                    a[i] = dt * g[i] * slope[i];
                }
                for v in g_prev.iter_mut().zip(&g) {
                    *v.0 = (1.0 - dt) * v.1;
                }
                for i in 0..n {
                    let ai = a[i];
                    if ai == 0.0 {
                        continue;
                    }
                    let row = &w[i * n..(i + 1) * n];
                    let grow = &mut grad[i * n..(i + 1) * n];
                    for j in 0..n {
                        grow[j] += ai * y[j];
                        g_prev[j] += row[j] * ai;
                    }
                }
                std::mem::swap(&mut g, &mut g_prev);
            }
        }

        let data_mse = sq_err / m;
        let lambda = self.loss.l1_lambda;
        if lambda > 0.0 {
            for (gw, &wij) in grad.iter_mut().zip(w) {
                if wij > 0.0 {
                    *gw += lambda;
                } else if wij < 0.0 {
                    *gw -= lambda;
                }
            }
        }
        LossGradient {
            loss: data_mse + lambda * circuit.l1_norm(),
            mse: data_mse,
            grad,
            diverged: false,
        }
    }
}

/// Regularized cost and its gradient, differentiated through `sim.max_steps`
/// Euler steps per grid point.
pub fn loss_and_gradient(
    circuit: &GeneCircuit,
    spec: &TargetSpec,
    sim: &SimConfig,
    cfg: &LossConfig,
) -> LossGradient {
    GradientEvaluator::new(spec, sim, cfg).loss_and_gradient(circuit)
}

/// First and second moment estimates of Adam.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub moment1: Vec<f64>,
    pub moment2: Vec<f64>,
    pub t: u32,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            moment1: vec![0.0; len],
            moment2: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step(&mut self, weights: &mut [f64], grad: &[f64], cfg: &GdConfig) {
        self.t += 1;
        adam_step(weights, grad, &mut self.moment1, &mut self.moment2, self.t, cfg);
    }
}

/// Bias-corrected Adam update at iteration `t >= 1`.
pub fn adam_step(
    weights: &mut [f64],
    grad: &[f64],
    moment1: &mut [f64],
    moment2: &mut [f64],
    t: u32,
    cfg: &GdConfig,
) {
    assert!(t >= 1, "adam iterations are 1-based");
    assert!(weights.len() == grad.len() && grad.len() == moment1.len() && grad.len() == moment2.len());
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let bc1 = 1.0 - b1.powi(t as i32);
    let bc2 = 1.0 - b2.powi(t as i32);
    for k in 0..weights.len() {
        let g = grad[k];
        moment1[k] = b1 * moment1[k] + (1.0 - b1) * g;
        moment2[k] = b2 * moment2[k] + (1.0 - b2) * g * g;
        let m_hat = moment1[k] / bc1;
        let v_hat = moment2[k] / bc2;
        weights[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
    }
}

pub(crate) fn gaussian_circuit(n: usize, std: f64, rng: &mut ChaCha8Rng) -> GeneCircuit {
    let normal = Normal::new(0.0, std).expect("positive std");
    let weights = (0..n * n).map(|_| normal.sample(rng)).collect();
    GeneCircuit::from_flat(n, weights).expect("finite gaussian draws")
}

/// The success check under the full simulator is far more expensive than a
/// gradient step, so it only runs when the training MSE is close to the
/// threshold or on a fixed cadence.
const SUCCESS_CHECK_SLACK: f64 = 1.25;
const SUCCESS_CHECK_EVERY: usize = 100;

/// Trains an `n`-node circuit with Adam; `cfg.mutation_rate > 0` selects the
/// hybrid trainer that perturbs weights after every step.
pub fn train_gd(
    n: usize,
    spec: &TargetSpec,
    sim: &SimConfig,
    cfg: &GdConfig,
    loss_cfg: &LossConfig,
) -> Result<TrainResult> {
    if n < 2 {
        return Err(Error::config("training needs at least 2 nodes"));
    }
    spec.validate()?;
    sim.validate()?;
    cfg.validate()?;
    loss_cfg.validate()?;

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut weights = gaussian_circuit(n, cfg.init_std, &mut rng).into_flat();
    let noise = Normal::new(0.0, HYBRID_MUTATION_STD).expect("positive std");

    let unrolled = SimConfig {
        max_steps: cfg.unroll_steps,
        ..sim.clone()
    };
    let evaluator = GradientEvaluator::new(spec, &unrolled, loss_cfg);
    let mut adam = AdamState::new(n * n);
    let mut history = Vec::with_capacity(cfg.max_iters + 1);
    let mut iterations = 0;
    let mut success = false;

    loop {
        let circuit = GeneCircuit::from_flat(n, weights.clone())?;
        let lg = evaluator.loss_and_gradient(&circuit);
        history.push(lg.loss);
        if lg.diverged {
            break;
        }
        let check = lg.mse <= SUCCESS_CHECK_SLACK * loss_cfg.success_mse
            || iterations % SUCCESS_CHECK_EVERY == 0
            || iterations == cfg.max_iters;
        if check {
            if let Some(out) = evaluate(&circuit, spec, sim) {
                if is_success(&out, spec, loss_cfg) {
                    success = true;
                    break;
                }
            }
        }
        if iterations == cfg.max_iters {
            break;
        }
        adam.step(&mut weights, &lg.grad, cfg);
        if cfg.mutation_rate > 0.0 {
            for w in weights.iter_mut() {
                if rng.random::<f64>() < cfg.mutation_rate {
                    *w += noise.sample(&mut rng);
                }
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            break;
        }
        iterations += 1;
    }

    // A non-finite update leaves the last finite weights in place.
    let circuit = GeneCircuit::from_flat(n, weights.clone())
        .or_else(|_| GeneCircuit::from_flat(n, vec![0.0; n * n]))?;
    let output = evaluate(&circuit, spec, sim);
    let final_mse = output
        .as_ref()
        .and_then(|out| mse(out, &spec.target_values()).ok())
        .unwrap_or(f64::INFINITY);
    success = success && output.is_some_and(|out| is_success(&out, spec, loss_cfg));

    let mut notes = success_notes(spec, sim, loss_cfg);
    notes.insert("unroll_steps".to_string(), cfg.unroll_steps.to_string());
    notes.insert("learning_rate".to_string(), cfg.learning_rate.to_string());
    if cfg.mutation_rate > 0.0 {
        notes.insert(
            "mutation".to_string(),
            format!("rate {} per entry per step, additive N(0, {HYBRID_MUTATION_STD}^2)", cfg.mutation_rate),
        );
    }
    Ok(TrainResult {
        circuit,
        loss_history: history.into_iter().map(|l| if l.is_finite() { l } else { f64::MAX }).collect(),
        success,
        final_mse,
        iterations_used: iterations,
        seed: cfg.rng_seed,
        trainer: if cfg.mutation_rate > 0.0 {
            Trainer::HybridMutatedGd
        } else {
            Trainer::GradientDescent
        },
        wall_ms: started.elapsed().as_millis() as u64,
        target: spec.label(),
        notes,
    })
}

/// Zeroes every weight with magnitude below `tau`.
pub fn prune(circuit: &GeneCircuit, tau: f64) -> GeneCircuit {
    let weights = circuit
        .weights()
        .iter()
        .map(|&w| if w.abs() < tau { 0.0 } else { w })
        .collect();
    GeneCircuit::from_flat(circuit.n(), weights).expect("pruning keeps weights finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(eval: &GradientEvaluator, c: &GeneCircuit, h: f64) -> Vec<f64> {
        let n = c.n();
        (0..n * n)
            .map(|k| {
                let mut plus = c.weights().to_vec();
                let mut minus = c.weights().to_vec();
                plus[k] += h;
                minus[k] -= h;
                let lp = eval.loss(&GeneCircuit::from_flat(n, plus).unwrap());
                let lm = eval.loss(&GeneCircuit::from_flat(n, minus).unwrap());
                (lp - lm) / (2.0 * h)
            })
            .collect()
    }

    fn assert_close(analytic: &[f64], numeric: &[f64]) {
        for (a, f) in analytic.iter().zip(numeric) {
            let scale = a.abs().max(f.abs());
            assert!(
                (a - f).abs() <= 1e-4 * scale || (a - f).abs() < 1e-7,
                "analytic {a} vs numeric {f}"
            );
        }
    }

    #[test]
    fn gradient_at_zero_weights_matches_finite_differences() {
        let sim = SimConfig { max_steps: 100, ..SimConfig::default() };
        // The band is centred on the grid, so the flag gradient nearly cancels
        // at W = 0; the switch target exercises a clearly nonzero gradient.
        for spec in [TargetSpec::french_flag(), TargetSpec::switch()] {
            let eval = GradientEvaluator::new(&spec, &sim, &LossConfig::default());
            for n in [2, 3, 4] {
                let c = GeneCircuit::zeros(n);
                let lg = eval.loss_and_gradient(&c);
                assert_close(&lg.grad, &fd_gradient(&eval, &c, 1e-5));
            }
        }
        let eval = GradientEvaluator::new(&TargetSpec::switch(), &sim, &LossConfig::default());
        let lg = eval.loss_and_gradient(&GeneCircuit::zeros(3));
        assert!(lg.grad.iter().any(|g| g.abs() > 1e-3));
    }

    #[test]
    fn gradient_in_clamp_mode_matches_finite_differences() {
        let spec = TargetSpec::switch();
        let sim = SimConfig {
            max_steps: 60,
            input_mode: InputMode::ClampFirstNode,
            ..SimConfig::default()
        };
        let eval = GradientEvaluator::new(&spec, &sim, &LossConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = gaussian_circuit(4, 1.0, &mut rng);
        assert_close(&eval.loss_and_gradient(&c).grad, &fd_gradient(&eval, &c, 1e-5));
    }

    #[test]
    fn l1_subgradient_is_zero_at_zero() {
        let spec = TargetSpec::french_flag();
        let sim = SimConfig { max_steps: 50, ..SimConfig::default() };
        let plain = loss_and_gradient(&GeneCircuit::zeros(3), &spec, &sim, &LossConfig::default());
        let cfg = LossConfig { l1_lambda: 0.1, ..LossConfig::default() };
        let reg = loss_and_gradient(&GeneCircuit::zeros(3), &spec, &sim, &cfg);
        assert_eq!(plain.grad, reg.grad);
        assert_eq!(plain.loss, reg.loss);
    }

    #[test]
    fn duplicated_grid_leaves_gradient_unchanged() {
        let spec = TargetSpec::french_flag();
        let sim = SimConfig { max_steps: 40, ..SimConfig::default() };
        let loss = LossConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = gaussian_circuit(3, 1.0, &mut rng);
        let grid = spec.grid();
        let targets = spec.target_values();
        let once = GradientEvaluator::with_grid(grid.clone(), targets.clone(), &sim, &loss);
        let twice = GradientEvaluator::with_grid(
            grid.iter().chain(&grid).copied().collect(),
            targets.iter().chain(&targets).copied().collect(),
            &sim,
            &loss,
        );
        let a = once.loss_and_gradient(&c);
        let b = twice.loss_and_gradient(&c);
        assert!((a.mse - b.mse).abs() < 1e-14);
        for (x, y) in a.grad.iter().zip(&b.grad) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn adam_reference_behaviour() {
        let cfg = GdConfig { learning_rate: 0.1, adam_eps: 1e-300, ..GdConfig::default() };
        let mut w = [1.5];
        let (mut m, mut v) = ([0.0], [0.0]);
        adam_step(&mut w, &[0.0], &mut m, &mut v, 1, &cfg);
        assert_eq!(w, [1.5]);
        let mut w = [0.0];
        adam_step(&mut w, &[1.0], &mut m, &mut v, 1, &cfg);
        assert!((w[0] + 0.1).abs() < 1e-12);

        let mut state = AdamState::new(1);
        let mut w = [0.0];
        for _ in 0..100 {
            let g = [2.0 * (w[0] - 3.0)];
            state.step(&mut w, &g, &cfg);
        }
        assert!((w[0] - 3.0).abs() < 0.5, "w = {}", w[0]);
    }

    #[test]
    fn config_validation() {
        assert!(GdConfig::default().validate().is_ok());
        assert!(GdConfig { max_iters: 0, ..GdConfig::default() }.validate().is_err());
        assert!(GdConfig { adam_beta1: 0.9995, ..GdConfig::default() }.validate().is_err());
        let spec = TargetSpec::french_flag();
        let bad = GdConfig { max_iters: 0, ..GdConfig::default() };
        assert!(train_gd(3, &spec, &SimConfig::default(), &bad, &LossConfig::default()).is_err());
        assert!(train_gd(1, &spec, &SimConfig::default(), &GdConfig::default(), &LossConfig::default()).is_err());
    }

    #[test]
    fn training_is_deterministic_and_consistent() {
        let spec = TargetSpec::french_flag();
        let sim = SimConfig::default();
        let cfg = GdConfig { max_iters: 40, rng_seed: 17, ..GdConfig::default() };
        let loss = LossConfig::default();
        let a = train_gd(3, &spec, &sim, &cfg, &loss).unwrap();
        let b = train_gd(3, &spec, &sim, &cfg, &loss).unwrap();
        assert_eq!(a.without_timing(), b.without_timing());
        assert_eq!(a.success, a.reverify(&spec, &sim, &loss));
        assert!(a.loss_history.iter().all(|l| l.is_finite() && *l >= 0.0));
        assert_eq!(a.loss_history.len(), a.iterations_used + 1);
    }

    #[test]
    fn hybrid_trainer_is_labelled_and_deterministic() {
        let spec = TargetSpec::french_flag();
        let sim = SimConfig::default();
        let cfg = GdConfig {
            max_iters: 30,
            rng_seed: 3,
            mutation_rate: 0.5 / 9.0,
            ..GdConfig::default()
        };
        let a = train_gd(3, &spec, &sim, &cfg, &LossConfig::default()).unwrap();
        let b = train_gd(3, &spec, &sim, &cfg, &LossConfig::default()).unwrap();
        assert_eq!(a.trainer, Trainer::HybridMutatedGd);
        assert_eq!(a.without_timing(), b.without_timing());
    }

    #[test]
    fn prune_edge_cases() {
        let c = GeneCircuit::from_rows(vec![vec![0.05, -2.0], vec![-0.09, 0.1]]).unwrap();
        assert_eq!(prune(&c, 0.0), c);
        assert_eq!(prune(&c, 2.5), GeneCircuit::zeros(2));
        let p = prune(&c, 0.1);
        assert_eq!(p.to_rows(), vec![vec![0.0, -2.0], vec![0.0, 0.1]]);
        assert_eq!(prune(&p, 0.1), p);
    }
}
