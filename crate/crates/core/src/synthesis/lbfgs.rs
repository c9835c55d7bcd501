//! Limited-memory BFGS on the normalised objective `J/J₀`.

use std::collections::VecDeque;

use serde::Serialize;

use crate::dynamics::{integrate, ControlSignal, IntegrateOptions, Trajectory};
use crate::error::Result;

use super::adjoint::{gradient_of_values, GradientOptions};
use super::objective::{ControlProblem, ObjectiveSpec};

const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Tolerance on `‖∇J‖/J₀`.
    pub grad_tol: f64,
    pub memory: usize,
    pub max_backtracks: usize,
    /// Bytes available for forward checkpoints.
    pub memory_budget: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            grad_tol: 1e-10,
            memory: 10,
            max_backtracks: 40,
            memory_budget: super::adjoint::DEFAULT_MEMORY_BUDGET,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub control: ControlSignal,
    pub trajectory: Trajectory,
    pub objective_value: f64,
    pub terminal_norm: f64,
    /// `L²` norm of the control in its own frame.
    pub control_cost: f64,
    pub iterations: usize,
    /// `‖∇J‖/J₀` at the returned iterate (`‖∇J‖` when `J₀ = 0`).
    pub gradient_norm: f64,
    pub converged: bool,
    /// Objective value after each accepted iterate, starting with `J₀`.
    pub history: Vec<f64>,
}

impl SynthesisResult {
    fn assemble(
        problem: &ControlProblem,
        objective: &ObjectiveSpec,
        values: Vec<f64>,
        iterations: usize,
        gradient_norm: f64,
        converged: bool,
        history: Vec<f64>,
    ) -> Result<Self> {
        let control = problem.control_from_values(values)?;
        let trajectory = integrate(
            &problem.system,
            Some(&control),
            &problem.y0,
            &problem.frame,
            problem.n_steps,
            IntegrateOptions::default(),
        )?;
        let objective_value = objective.terminal_cost(trajectory.terminal_state()) + objective.penalty(&control);
        Ok(Self {
            terminal_norm: trajectory.terminal_norm(),
            control_cost: control.l2_norm(),
            control,
            trajectory,
            objective_value,
            iterations,
            gradient_norm,
            converged,
            history,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-loop recursion: `d = −H·g`.
fn direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimise `J` from `init` (in the problem's frame units).
pub fn minimize(
    problem: &ControlProblem,
    objective: &ObjectiveSpec,
    init: &ControlSignal,
    options: &MinimizeOptions,
) -> Result<SynthesisResult> {
    problem.check_control(init)?;
    let gopts = GradientOptions {
        memory_budget: options.memory_budget,
    };
    let eval = |x: &[f64]| gradient_of_values(problem, x, objective, gopts);

    let mut x = init.values();
    let first = eval(&x)?;
    let j0 = first.value;
    if !j0.is_finite() {
        return Err(crate::Error::Divergence { step: problem.n_steps });
    }
    let mut history = vec![j0];
    if j0 == 0.0 {
        let gn = first.norm();
        return SynthesisResult::assemble(problem, objective, x, 0, gn, gn <= options.grad_tol, history);
    }
    let scale = 1.0 / j0;
    let mut f = j0 * scale;
    let mut g: Vec<f64> = first.grad.iter().map(|v| v * scale).collect();
    let mut gnorm = dot(&g, &g).sqrt();
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(options.memory);
    let mut iterations = 0;
    let mut converged = gnorm <= options.grad_tol;

    while !converged && iterations < options.max_iters {
        let mut d = direction(&g, &pairs);
        let mut slope = dot(&g, &d);
        if slope.is_nan() || slope >= 0.0 {
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut alpha = if pairs.is_empty() {
            (1.0 / gnorm).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..=options.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            match eval(&trial) {
                Ok(res) if (res.value * scale) <= f + ARMIJO_C * alpha * slope => {
                    accepted = Some((trial, res));
                    break;
                }
                // overshoot into divergence counts as a failed trial step
                Ok(_) | Err(crate::Error::Divergence { .. }) => alpha *= BACKTRACK,
                Err(e) => return Err(e),
            }
        }
        let Some((x_new, res)) = accepted else {
            if pairs.is_empty() {
                break;
            }
            // retry once from steepest descent before giving up
            pairs.clear();
            continue;
        };

        let g_new: Vec<f64> = res.grad.iter().map(|v| v * scale).collect();
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if pairs.len() == options.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        g = g_new;
        f = res.value * scale;
        gnorm = dot(&g, &g).sqrt();
        history.push(res.value);
        iterations += 1;
        converged = gnorm <= options.grad_tol;
    }

    SynthesisResult::assemble(problem, objective, x, iterations, gnorm, converged, history)
}
