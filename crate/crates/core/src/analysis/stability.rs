//! Linear stability of the simulated fixed point.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eigen::eigenvalues;
use crate::dynamics::{sigmoid_prime, simulate_from, steady_state, GeneCircuit, InputMode, SimConfig};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub reference_input: f64,
    pub fixed_point: Vec<f64>,
    pub jacobian: Vec<Vec<f64>>,
    /// `[re, im]` pairs, real part descending.
    pub eigenvalues: Vec<Complex64>,
    pub max_real_part: f64,
    pub stable: bool,
}

/// `J_ij = sigmoid'(u_i) W_ij - delta_ij` with `u = W * state`.
pub fn jacobian(circuit: &GeneCircuit, state: &[f64]) -> Vec<f64> {
    let n = circuit.n();
    assert_eq!(state.len(), n, "state length must match circuit size");
    let mut u = vec![0.0; n];
    circuit.mat_vec(state, &mut u);
    let mut j = vec![0.0; n * n];
    for i in 0..n {
        let slope = sigmoid_prime(u[i]);
        for k in 0..n {
            j[i * n + k] = slope * circuit.weight(i, k);
        }
        j[i * n + i] -= 1.0;
    }
    j
}

/// [`jacobian`], with the clamped node's row replaced by `-e_0` in clamp mode.
pub fn jacobian_for_mode(circuit: &GeneCircuit, state: &[f64], mode: InputMode) -> Vec<f64> {
    let mut j = jacobian(circuit, state);
    if mode == InputMode::ClampFirstNode {
        let n = circuit.n();
        j[..n].fill(0.0);
        j[0] = -1.0;
    }
    j
}

pub fn stability_report(
    circuit: &GeneCircuit,
    reference_input: f64,
    sim: &SimConfig,
) -> Result<StabilityReport> {
    let ss = steady_state(circuit, reference_input, sim)?;
    if !ss.converged {
        return Err(Error::NotConverged { steps: ss.steps });
    }
    let n = circuit.n();
    let jac = jacobian_for_mode(circuit, &ss.state, sim.input_mode);
    let eigenvalues = eigenvalues(&jac, n)?;
    let max_real_part = eigenvalues.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport {
        reference_input,
        fixed_point: ss.state,
        jacobian: jac.chunks(n).map(<[f64]>::to_vec).collect(),
        eigenvalues,
        max_real_part,
        stable: max_real_part < 0.0,
    })
}

/// Kicks the fixed point by uniform noise of the given amplitude, integrates
/// until the state stops moving, and reports whether it came back to within
/// `tolerance` (max norm).
pub fn returns_after_perturbation(
    circuit: &GeneCircuit,
    report: &StabilityReport,
    sim: &SimConfig,
    amplitude: f64,
    tolerance: f64,
    seed: u64,
) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<f64> = report
        .fixed_point
        .iter()
        .map(|y| y + rng.random_range(-amplitude..=amplitude))
        .collect();
    let settle = SimConfig {
        max_steps: 200_000,
        convergence_tol: 1e-10,
        ..sim.clone()
    };
    match simulate_from(circuit, &start, report.reference_input, &settle) {
        Ok(ss) => ss
            .state
            .iter()
            .zip(&report.fixed_point)
            .all(|(a, b)| (a - b).abs() < tolerance),
        Err(_) => false,
    }
}
