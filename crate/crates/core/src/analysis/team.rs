//! How the unsupervised nodes' response curves relate to the target.

use serde::{Deserialize, Serialize};

use crate::dynamics::ResponseCurve;
use crate::targets::TargetSpec;

/// Mean conformity of unsupervised nodes above this is "homogeneous",
/// below its negation "heterogeneous".
pub const TEAM_THRESHOLD: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeConformity {
    pub node: usize,
    /// Pearson correlation of the node's response with the target; 0 for a
    /// constant response.
    pub conformity: f64,
    /// Largest response over the grid points where the target is 1.
    pub passband_amplitude: f64,
    pub supervised: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TeamClass {
    Homogeneous,
    Heterogeneous,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeamReport {
    pub per_node: Vec<NodeConformity>,
    pub mean_unsupervised_conformity: f64,
    pub class: TeamClass,
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len() as f64;
    let ma = a.iter().sum::<f64>() / m;
    let mb = b.iter().sum::<f64>() / m;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    // Scale-relative floor: rounding noise in a flat curve is not signal.
    let floor = 1e-24 * m;
    if va <= floor * (1.0 + ma * ma) || vb <= floor * (1.0 + mb * mb) {
        return 0.0;
    }
    (cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0)
}

pub fn team_metrics(curves: &ResponseCurve, spec: &TargetSpec) -> TeamReport {
    let n = curves.n();
    let target: Vec<f64> = curves.grid.iter().map(|&x| spec.eval(x)).collect();
    let per_node: Vec<NodeConformity> = (0..n)
        .map(|node| {
            let col = curves.column(node);
            let passband_amplitude = col
                .iter()
                .zip(&target)
                .filter(|(_, &t)| t == 1.0)
                .map(|(&v, _)| v)
                .fold(f64::NAN, f64::max);
            NodeConformity {
                node,
                conformity: pearson(&col, &target),
                passband_amplitude: if passband_amplitude.is_nan() { 0.0 } else { passband_amplitude },
                supervised: node + 1 == n,
            }
        })
        .collect();
    let unsupervised: Vec<f64> = per_node.iter().filter(|c| !c.supervised).map(|c| c.conformity).collect();
    let mean = if unsupervised.is_empty() {
        0.0
    } else {
        unsupervised.iter().sum::<f64>() / unsupervised.len() as f64
    };
    let class = if mean > TEAM_THRESHOLD {
        TeamClass::Homogeneous
    } else if mean < -TEAM_THRESHOLD {
        TeamClass::Heterogeneous
    } else {
        TeamClass::Mixed
    };
    TeamReport {
        per_node,
        mean_unsupervised_conformity: mean,
        class,
    }
}
