//! Post-hoc analysis of learned circuits.

pub mod eigen;
pub mod graph;
pub mod stability;
pub mod team;
pub mod weights;

pub use eigen::eigenvalues;
pub use graph::{binarize, edge_connectivity, UndirectedGraph};
pub use stability::{jacobian, jacobian_for_mode, returns_after_perturbation, stability_report, StabilityReport};
pub use team::{team_metrics, NodeConformity, TeamClass, TeamReport};
pub use weights::{feedback_sum, node_strength, weight_sign_histogram, HistogramBin, WeightHistogram};
