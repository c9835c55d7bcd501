//! Time frames, control signals and integration of the chain dynamics.

mod frame;
mod integrator;
mod signal;
mod trajectory;
mod tridiagonal;

pub use frame::{FrameKind, TimeFrame};
pub use integrator::{default_stride, integrate, IntegrateOptions, Stepper, System};
pub use signal::ControlSignal;
pub use trajectory::{weighted_norm, StepDiagnostics, Trajectory};
pub use tridiagonal::TridiagonalLu;
