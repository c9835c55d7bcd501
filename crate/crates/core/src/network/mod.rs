//! Chain operators, control layouts, nonlinearities and controllability tests.

mod chain;
mod controllability;
mod layout;
mod nonlinearity;

pub use chain::{ChainOperator, Flavor, AVERAGING};
pub use controllability::{
    eigen_decompose, kalman_rank, kalman_rank_exact, kalman_rank_hautus, EigenDecomposition,
    KalmanReport, RankMethod, HAUTUS_TOL, RANK_EXACT_THRESHOLD,
};
pub use layout::{extension_half_width, ControlLayout, LayoutKind, LayoutSpec};
pub use nonlinearity::{central_difference, NonlinearitySpec, ScalarFn, ScalarMap, Scaling};
