//! Objective evaluation and its exact discrete gradient.
//!
//! The backward sweep transposes one IMEX midpoint step at a time:
//!
//! ```text
//! μ_k   = M⁻¹ λ_{k+1}
//! ∂J/∂u_k = Δ·Bᵀμ_k + 2c·u_k
//! λ_k   = (I + Δ/2·L) μ_k + Δ·c_G·G'(y_k) ⊙ μ_k
//! ```
//!
//! starting from `λ_n = ∂J/∂y_n`. Forward states are checkpointed so that
//! the stored history stays within a memory budget; windows between
//! checkpoints are recomputed during the backward sweep.

use crate::dynamics::{ControlSignal, Stepper};
use crate::error::{Error, Result};

use super::objective::{ControlProblem, ObjectiveSpec};

pub const DEFAULT_MEMORY_BUDGET: usize = 256 << 20;

#[derive(Debug, Clone, Copy)]
pub struct GradientOptions {
    /// Upper bound on the bytes spent storing forward states.
    pub memory_budget: usize,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self {
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

/// Checkpoint spacing so that checkpoints plus one recompute window fit in
/// `budget` bytes.
pub fn checkpoint_interval(n_steps: usize, dim: usize, budget: usize) -> usize {
    let bytes_per_state = dim * std::mem::size_of::<f64>();
    let cost = |k: usize| (n_steps.div_ceil(k) + 1 + k) * bytes_per_state;
    if (n_steps + 1) * bytes_per_state <= budget {
        return 1;
    }
    let mut k = ((n_steps as f64).sqrt().ceil() as usize).max(2);
    while k < n_steps && cost(k) > budget {
        k *= 2;
    }
    k.min(n_steps)
}

/// Objective value and gradient with respect to the control values, in the
/// control's frame units, step-major.
#[derive(Debug, Clone)]
pub struct ObjectiveGradient {
    pub value: f64,
    pub terminal_state: Vec<f64>,
    pub grad: Vec<f64>,
    pub n_steps: usize,
    pub n_channels: usize,
}

impl ObjectiveGradient {
    pub fn norm(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn dot(&self, direction: &[f64]) -> f64 {
        self.grad.iter().zip(direction).map(|(g, d)| g * d).sum()
    }
}

struct Forward {
    checkpoints: Vec<Vec<f64>>,
    interval: usize,
    terminal: Vec<f64>,
}

fn forward(
    stepper: &Stepper,
    problem: &ControlProblem,
    values: &[f64],
    interval: usize,
) -> Result<Forward> {
    let m = problem.n_channels();
    let mut y = problem.y0.clone();
    let mut next = vec![0.0; y.len()];
    let mut checkpoints = vec![y.clone()];
    for k in 0..problem.n_steps {
        stepper.step(&y, Some(&values[k * m..(k + 1) * m]), &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: k + 1 });
        }
        std::mem::swap(&mut y, &mut next);
        if (k + 1) % interval == 0 && k + 1 < problem.n_steps {
            checkpoints.push(y.clone());
        }
    }
    Ok(Forward {
        checkpoints,
        interval,
        terminal: y,
    })
}

pub fn evaluate_objective(
    problem: &ControlProblem,
    control: &ControlSignal,
    objective: &ObjectiveSpec,
) -> Result<f64> {
    problem.check_control(control)?;
    objective.validate(problem.dim())?;
    let stepper = problem.stepper()?;
    let values = control.values();
    // interval n_steps keeps only y0
    let fwd = forward(&stepper, problem, &values, problem.n_steps.max(1) + 1)?;
    let penalty = objective.penalty_coefficient(&problem.frame, problem.dt())
        * values.iter().map(|v| v * v).sum::<f64>();
    Ok(objective.terminal_cost(&fwd.terminal) + penalty)
}

pub fn gradient(
    problem: &ControlProblem,
    control: &ControlSignal,
    objective: &ObjectiveSpec,
) -> Result<ObjectiveGradient> {
    gradient_with(problem, control, objective, GradientOptions::default())
}

pub fn gradient_with(
    problem: &ControlProblem,
    control: &ControlSignal,
    objective: &ObjectiveSpec,
    options: GradientOptions,
) -> Result<ObjectiveGradient> {
    problem.check_control(control)?;
    gradient_of_values(problem, &control.values(), objective, options)
}

/// Same as [`gradient_with`] on raw frame-unit values.
pub(crate) fn gradient_of_values(
    problem: &ControlProblem,
    values: &[f64],
    objective: &ObjectiveSpec,
    options: GradientOptions,
) -> Result<ObjectiveGradient> {
    objective.validate(problem.dim())?;
    problem.system.nonlinearity.ensure_differentiable()?;
    let stepper = problem.stepper()?;
    let n = problem.n_steps;
    let m = problem.n_channels();
    let dim = problem.dim();
    let interval = checkpoint_interval(n, dim, options.memory_budget);
    let fwd = forward(&stepper, problem, values, interval)?;

    let pen = objective.penalty_coefficient(&problem.frame, problem.dt());
    let value = objective.terminal_cost(&fwd.terminal) + pen * values.iter().map(|v| v * v).sum::<f64>();

    let mut grad = vec![0.0; n * m];
    let mut lambda = vec![0.0; dim];
    objective.terminal_gradient(&fwd.terminal, &mut lambda);
    let mut lambda_prev = vec![0.0; dim];
    let mut mu = vec![0.0; dim];
    let mut window: Vec<Vec<f64>> = Vec::with_capacity(fwd.interval);

    for (w, checkpoint) in fwd.checkpoints.iter().enumerate().rev() {
        let start = w * fwd.interval;
        let end = (start + fwd.interval).min(n);
        // states start..end
        window.clear();
        window.push(checkpoint.clone());
        for k in start..end - 1 {
            let mut next = vec![0.0; dim];
            stepper.step(&window[k - start], Some(&values[k * m..(k + 1) * m]), &mut next);
            window.push(next);
        }
        for k in (start..end).rev() {
            let g = &mut grad[k * m..(k + 1) * m];
            stepper.adjoint_step(&window[k - start], &lambda, &mut lambda_prev, g, &mut mu)?;
            for (gc, &uc) in g.iter_mut().zip(&values[k * m..(k + 1) * m]) {
                *gc += 2.0 * pen * uc;
            }
            std::mem::swap(&mut lambda, &mut lambda_prev);
        }
    }

    Ok(ObjectiveGradient {
        value,
        terminal_state: fwd.terminal,
        grad,
        n_steps: n,
        n_channels: m,
    })
}

/// Outcome of one directional finite-difference probe.
#[derive(Debug, Clone, Copy)]
pub struct DirectionalCheck {
    pub adjoint: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
}

/// Compare `∇J·d` with the central difference `(J(u+εd) − J(u−εd))/(2ε)`.
pub fn directional_check(
    problem: &ControlProblem,
    control: &ControlSignal,
    objective: &ObjectiveSpec,
    direction: &[f64],
    eps: f64,
) -> Result<DirectionalCheck> {
    let g = gradient(problem, control, objective)?;
    let base = control.values();
    let shifted = |sign: f64| -> Result<f64> {
        let vals: Vec<f64> = base.iter().zip(direction).map(|(u, d)| u + sign * eps * d).collect();
        let c = problem.control_from_values(vals)?;
        evaluate_objective(problem, &c, objective)
    };
    let (plus, minus) = rayon::join(|| shifted(1.0), || shifted(-1.0));
    let fd = (plus? - minus?) / (2.0 * eps);
    let adjoint = g.dot(direction);
    let scale = adjoint.abs().max(fd.abs()).max(f64::MIN_POSITIVE);
    Ok(DirectionalCheck {
        adjoint,
        finite_difference: fd,
        relative_error: (adjoint - fd).abs() / scale,
    })
}
