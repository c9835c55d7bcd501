//! Boundary controls for the Neumann chain obtained from an interior-control
//! problem on the extended Dirichlet chain.
//!
//! The extended chain carries labels `-h..=n+h`, actuated on `-h+1..=0`. Its
//! restriction to `1..=n` solves the original Neumann system driven at the two
//! ends by the discrete normal derivatives
//! `u₁ = (N²/3)(y₀ − y₁)` and `u₂ = (N²/3)(y_{N+1} − y_N)`.
//!
//! Because the scheme treats the coupling implicitly-explicitly, the discrete
//! control held on step `k` is the average of the difference over the knots
//! `k` and `k+1`; re-integration is then exact up to rounding.

use crate::dynamics::{integrate, ControlSignal, IntegrateOptions, System, TimeFrame, Trajectory};
use crate::error::{Error, Result};
use crate::network::{extension_half_width, ChainOperator, ControlLayout, Flavor, NonlinearitySpec, Scaling};

use super::lbfgs::{minimize, MinimizeOptions, SynthesisResult};
use super::objective::{ControlProblem, ObjectiveSpec};

#[derive(Debug, Clone)]
pub struct ExtensionResult {
    /// Two channels `(u₁, u₂)` in the rescaled frame of the original chain.
    pub boundary_control: ControlSignal,
    /// Extended trajectory restricted to labels `1..=n`, every step stored.
    pub inner_trajectory: Trajectory,
    /// Full extended trajectory, every step stored.
    pub extended_trajectory: Trajectory,
    pub extended_result: SynthesisResult,
    pub boundary_flux_norm: f64,
}

/// Zero extension of `y0` onto the extended chain.
pub fn extend_initial_state(y0: &[f64]) -> Result<Vec<f64>> {
    let n = y0.len();
    let layout = ControlLayout::extension(n)?;
    let mut out = vec![0.0; layout.n_agents()];
    let first = layout.row_of_label(1);
    out[first..first + n].copy_from_slice(y0);
    Ok(out)
}

fn junction_rows(n: usize) -> (usize, usize, usize, usize) {
    let h = extension_half_width(n);
    // labels 0, 1, n, n+1
    (h, h + 1, h + n, h + n + 1)
}

/// Per-step averaged junction differences `(y₀ − y₁, y_{N+1} − y_N)` between
/// consecutive stored states, with the interval length in `τ`.
fn junction_differences(extended: &Trajectory, n: usize) -> Vec<(f64, f64, f64)> {
    let (r0, r1, rn, rn1) = junction_rows(n);
    let steps = extended.stored_steps();
    let states = extended.states();
    (0..steps.len().saturating_sub(1))
        .map(|i| {
            let (a, b) = (&states[i], &states[i + 1]);
            let left = 0.5 * ((a[r0] - a[r1]) + (b[r0] - b[r1]));
            let right = 0.5 * ((a[rn1] - a[rn]) + (b[rn1] - b[rn]));
            (extended.tau(steps[i + 1]) - extended.tau(steps[i]), left, right)
        })
        .collect()
}

/// `N·(‖y₀ − y₁‖_{L²_τ} + ‖y_{N+1} − y_N‖_{L²_τ})` on the extended trajectory
/// of an `n`-agent network.
pub fn boundary_flux_norm(extended: &Trajectory, n: usize) -> f64 {
    let (mut l, mut r) = (0.0, 0.0);
    for (w, left, right) in junction_differences(extended, n) {
        l += w * left * left;
        r += w * right * right;
    }
    n as f64 * (l.sqrt() + r.sqrt())
}

/// Solve the interior problem on the extended chain and read off the two
/// boundary controls of the original `n`-agent Neumann chain.
pub fn synthesize_boundary_via_extension(
    n: usize,
    nonlinearity: &NonlinearitySpec,
    y0: &[f64],
    horizon: f64,
    n_steps: usize,
    objective: &ObjectiveSpec,
    options: &MinimizeOptions,
) -> Result<ExtensionResult> {
    if y0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {}, network has {n} agents",
            y0.len()
        )));
    }
    if !nonlinearity.is_zero() && nonlinearity.scaling() != Scaling::InverseNSquared {
        return Err(Error::Nonlinearity(format!(
            "the extension construction needs the 1/N² scaling, got {}",
            nonlinearity.scaling().name()
        )));
    }
    let layout = ControlLayout::extension(n)?;
    let ext_dim = layout.n_agents();
    let system = System::new(ChainOperator::new(ext_dim, Flavor::Dirichlet)?, nonlinearity.clone()).with_layout(layout);
    // time is rescaled with the original N
    let frame = TimeFrame::rescaled(n, horizon)?;
    let problem = ControlProblem::new(system.clone(), extend_initial_state(y0)?, frame, n_steps)?;
    let extended_result = minimize(&problem, objective, &problem.zero_control(), options)?;

    let extended_trajectory = integrate(
        &system,
        Some(&extended_result.control),
        &problem.y0,
        &frame,
        n_steps,
        IntegrateOptions::dense(),
    )?;
    let first = extension_half_width(n) + 1;
    let inner_trajectory = extended_trajectory.restrict(first..first + n);

    let gain = frame.n_squared() / 3.0;
    let values: Vec<f64> = junction_differences(&extended_trajectory, n)
        .into_iter()
        .flat_map(|(_, l, r)| [gain * l, gain * r])
        .collect();
    let boundary_control = ControlSignal::from_values(frame, 2, n_steps, values)?;
    let boundary_flux_norm = boundary_flux_norm(&extended_trajectory, n);
    Ok(ExtensionResult {
        boundary_control,
        inner_trajectory,
        extended_trajectory,
        extended_result,
        boundary_flux_norm,
    })
}
