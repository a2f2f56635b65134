//! Target input-output functions, sampling grids and the loss/success criteria.

use serde::{Deserialize, Serialize};

use crate::dynamics::GeneCircuit;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum TargetKind {
    /// Band-pass: 1 strictly inside `(lo, hi)`, 0 elsewhere.
    FrenchFlag { lo: f64, hi: f64 },
    /// Step: 1 strictly above `threshold`, 0 elsewhere.
    Switch { threshold: f64 },
}

impl TargetKind {
    pub fn name(&self) -> &'static str {
        match self {
            TargetKind::FrenchFlag { .. } => "french_flag",
            TargetKind::Switch { .. } => "switch",
        }
    }

    /// Input interval where the target is 1 (open on both ends for the band).
    pub fn on_region(&self, x: f64) -> bool {
        match *self {
            TargetKind::FrenchFlag { lo, hi } => lo < x && x < hi,
            TargetKind::Switch { threshold } => x > threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self::french_flag()
    }
}

impl TargetSpec {
    pub fn french_flag() -> Self {
        Self {
            kind: TargetKind::FrenchFlag { lo: 0.5, hi: 1.5 },
            grid_min: 0.0,
            grid_max: 2.0,
            grid_points: 60,
        }
    }

    pub fn switch() -> Self {
        Self {
            kind: TargetKind::Switch { threshold: 1.0 },
            ..Self::french_flag()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_min.is_finite() && self.grid_max.is_finite() && self.grid_min < self.grid_max)
        {
            return Err(Error::config("target grid needs grid_min < grid_max"));
        }
        if self.grid_points < 8 {
            return Err(Error::config("target.grid_points must be at least 8"));
        }
        let inside = |v: f64| self.grid_min < v && v < self.grid_max;
        match self.kind {
            TargetKind::FrenchFlag { lo, hi } => {
                if !(lo < hi && inside(lo) && inside(hi)) {
                    return Err(Error::config(
                        "french flag band must satisfy grid_min < lo < hi < grid_max",
                    ));
                }
            }
            TargetKind::Switch { threshold } => {
                if !inside(threshold) {
                    return Err(Error::config("switch threshold must lie inside the grid"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_target(self, x)
    }

    pub fn grid(&self) -> Vec<f64> {
        sample_grid(self)
    }

    /// Target values on [`TargetSpec::grid`].
    pub fn target_values(&self) -> Vec<f64> {
        self.grid().into_iter().map(|x| self.eval(x)).collect()
    }

    /// Short label used in file metadata, e.g. `french_flag(0.5,1.5)`.
    pub fn label(&self) -> String {
        match self.kind {
            TargetKind::FrenchFlag { lo, hi } => format!("french_flag({lo},{hi})"),
            TargetKind::Switch { threshold } => format!("switch({threshold})"),
        }
    }
}

pub fn eval_target(spec: &TargetSpec, x: f64) -> f64 {
    if spec.kind.on_region(x) {
        1.0
    } else {
        0.0
    }
}

/// `points` evenly spaced values on `[min, max]`, endpoints included.
pub fn uniform_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let last = (points - 1) as f64;
            (0..points)
                .map(|k| {
                    if k + 1 == points {
                        max
                    } else {
                        min + (max - min) * (k as f64 / last)
                    }
                })
                .collect()
        }
    }
}

pub fn sample_grid(spec: &TargetSpec) -> Vec<f64> {
    uniform_grid(spec.grid_min, spec.grid_max, spec.grid_points)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    /// L1 coefficient on the summed absolute weights.
    pub l1_lambda: f64,
    /// Output MSE at or below which a circuit counts as having learned the target.
    pub success_mse: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            l1_lambda: 0.0,
            success_mse: 0.05,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.l1_lambda) {
            return Err(Error::config("loss.l1_lambda must lie in [0, 1]"));
        }
        if !(self.success_mse > 0.0 && self.success_mse < 0.25) {
            return Err(Error::config("loss.success_mse must lie in (0, 0.25)"));
        }
        Ok(())
    }
}

pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}

/// MSE plus the L1 penalty on the circuit's weights.
pub fn regularized_cost(
    circuit: &GeneCircuit,
    pred: &[f64],
    target: &[f64],
    cfg: &LossConfig,
) -> Result<f64> {
    let base = mse(pred, target)?;
    if cfg.l1_lambda == 0.0 {
        return Ok(base);
    }
    Ok(base + cfg.l1_lambda * circuit.l1_norm())
}

/// Whether an output curve sampled on `spec.grid()` matches the target.
pub fn is_success(output_curve: &[f64], spec: &TargetSpec, cfg: &LossConfig) -> bool {
    if output_curve.iter().any(|v| !v.is_finite()) {
        return false;
    }
    match mse(output_curve, &spec.target_values()) {
        Ok(err) => err <= cfg.success_mse,
        Err(_) => false,
    }
}
