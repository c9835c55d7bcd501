//! Optimal-control synthesis: objective, discrete adjoint gradient,
//! quasi-Newton minimisation and the extension construction for boundary
//! controls.

mod adjoint;
mod extension;
mod lbfgs;
mod objective;

pub use adjoint::{
    checkpoint_interval, directional_check, evaluate_objective, gradient, gradient_with, DirectionalCheck,
    GradientOptions, ObjectiveGradient, DEFAULT_MEMORY_BUDGET,
};
pub use extension::{boundary_flux_norm, extend_initial_state, synthesize_boundary_via_extension, ExtensionResult};
pub use lbfgs::{minimize, MinimizeOptions, SynthesisResult};
pub use objective::{ControlProblem, ObjectiveSpec};
