//! Exact references and theory checks: tabular value functions for finite
//! environments, the stitching probe, objective estimators for the ordering
//! of supervised and Q-weighted objectives, and finite-difference gradient
//! checks.

mod gradcheck;
mod objectives;
mod stitch;
mod tabular;

pub use gradcheck::{check_gradients, compare_gradients, relative_error, GradientReport, FD_STEP, REL_ERROR_FLOOR};
pub use objectives::{
    check_objective_ordering, estimate_objectives, gaussian_log_likelihood, objective_weights, synthetic_inputs,
    ObjectiveEstimates, ObjectiveInputs, OrderingReport, WeightFloor, ORDERING_TOL,
};
pub use stitch::{
    same_side_grid_manifest, stitching_probe, DatasetManifest, PairCount, PairOutcome, Policy, StartConditionedPolicy,
    StitchReport, TabularPolicy,
};
pub use tabular::{q_learning, value_iteration, QLearningConfig, TabularQ, VALUE_ITERATION_TOL};
