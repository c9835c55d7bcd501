//! Bound formulas, scaling sweeps, growth fits and the reference run.

mod bounds;
mod fit;
mod reproduce;
mod sweep;

pub use bounds::{evaluate_bounds, BoundConstants, BoundEvaluation};
pub use fit::{fit_cost_growth, fit_growth, GrowthFit, GrowthModel, ModelScore};
pub use reproduce::{reproduce_reference_run, ReferenceConfig, Reproduction};
pub use sweep::{
    regime_records, run_scaling_sweep, HorizonMode, InitialState, ProblemTemplate, SweepPlan, SweepRecord,
    SWEEP_COLUMNS,
};
