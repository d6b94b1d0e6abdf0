//! Design of channel-optimized partitions.
//!
//! A source `X` is observed through data `Y` with known joint `p(X, Y)`. A
//! quantizer groups `Y` into `K` cells `Z`, which are sent through a noisy
//! relay channel `A` to outputs `T`. The crate finds quantizers minimizing
//!
//! ```text
//! beta * F(X, T) + G(p_Z)
//! ```
//!
//! where `F` sums a concave impurity (entropy or Gini) over the outputs and
//! `G` sums a concave per-cell cost (none, entropy, linear) over the cells.
//!
//! Solvers:
//! - [`solve_iterative`]: k-means-like alternating minimization, any size.
//! - [`solve_bruteforce`]: exhaustive, tiny instances; the reference oracle.
//! - [`solve_binary_thresholds`]: exact for binary sources and any channel.
//! - [`solve_dp_identity`]: exact for binary sources over the noiseless
//!   channel, `O(K M^2)`.

pub mod error;
pub mod global;
pub mod impurity;
pub mod iterative;
pub mod objective;
pub mod prob;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
pub use global::{
    best_threshold_solution, check_hyperplane_separation, solve_binary_thresholds,
    solve_bruteforce, solve_dp_identity, SeparationCheck, SeparationViolation, ThresholdSolution,
};
pub use impurity::{
    cell_gradient, cell_impurity, constraint_derivative, constraint_value, Constraint, Impurity,
};
pub use iterative::{reassign_sweep, solve_iterative, Init, PointData, SolverOptions, SweepMode, SweepState};
pub use objective::{
    distance, evaluate, nearest_cell, nearest_cell_relative, path_objective, scaled_distance, scaled_distances,
    EvaluatedState, ProblemSpec,
};
pub use prob::{
    push_through_channel, push_to_clusters, ChannelMatrix, ClusterJoints, HardQuantizer,
    JointDistribution, OutputJoints, Quantizer, SoftQuantizer,
};
pub use report::{NearestViolation, SolveReport, CERTIFICATE_TOL};
