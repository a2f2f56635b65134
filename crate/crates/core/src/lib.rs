//! Gene-circuit learning toolkit.
//!
//! An `n`-node gene circuit evolves as
//! `dy_i/dt = sigmoid(sum_j W_ij y_j) + I_i - y_i`. Its input-output map is
//! read off the steady state: node 0 receives the input `x`, node `n - 1`
//! reports the output. This crate learns weight matrices `W` whose response
//! matches a band-pass ("French flag") or step ("switch") target, either by
//! Adam through the unrolled Euler integration or by an evolutionary search,
//! and analyzes the learned circuits (fixed-point stability, connectivity,
//! weight distributions, behavior of the unsupervised nodes).

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod targets;
pub mod train_evo;
pub mod train_gd;
pub mod verify;

pub use dynamics::{GeneCircuit, InputMode, SimConfig, Trajectory};
pub use error::{Error, Result};
pub use targets::{LossConfig, TargetKind, TargetSpec};

pub use train_evo::EvoConfig;
pub use train_gd::{GdConfig, TrainResult, Trainer};
