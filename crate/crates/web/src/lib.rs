//! Browser bindings. Each export takes plain numbers and strings and returns
//! a JSON document; the native functions of the same name without the
//! `js_` prefix do the work and are what the tests call.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use opinion_core::dynamics::{integrate, weighted_norm, IntegrateOptions, TimeFrame, Trajectory};
use opinion_core::experiments::{evaluate_bounds, BoundConstants, InitialState};
use opinion_core::network::{
    kalman_rank, ChainOperator, ControlLayout, Flavor, LayoutSpec, NonlinearitySpec, RankMethod, ScalarMap,
    Scaling,
};
use opinion_core::synthesis::{minimize, ControlProblem, MinimizeOptions, ObjectiveSpec};

/// Largest chain the page accepts.
pub const MAX_AGENTS: usize = 128;

type Out = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn json<T: Serialize>(v: &T) -> Out {
    serde_json::to_string(v).map_err(err)
}

#[derive(Serialize)]
struct Curve {
    tau: Vec<f64>,
    norm: Vec<f64>,
    terminal: Vec<f64>,
}

impl Curve {
    fn of(traj: &Trajectory) -> Self {
        let n = traj.frame().n;
        Self {
            tau: traj.stored_steps().iter().map(|&k| traj.tau(k)).collect(),
            norm: traj.states().iter().map(|y| weighted_norm(y, n)).collect(),
            terminal: traj.terminal_state().to_vec(),
        }
    }
}

#[derive(Serialize)]
struct FreeVsControlled {
    n: usize,
    initial: Vec<f64>,
    initial_norm: f64,
    free: Curve,
    controlled: Curve,
    iterations: usize,
    converged: bool,
    control_cost: f64,
    /// Rescaled-frame boundary controls sampled on the stored steps.
    control_tau: Vec<f64>,
    control_left: Vec<f64>,
    control_right: Vec<f64>,
}

/// Neumann chain, both end agents actuated, `G(s) = s·exp(−s²)` scaled by
/// `1/N²`, sine initial state: free run against the optimised run.
pub fn free_vs_controlled(n: usize, horizon: f64, beta: f64, max_iters: usize) -> Out {
    if !(2..=MAX_AGENTS).contains(&n) {
        return Err(format!("N must lie in 2..={MAX_AGENTS}, got {n}"));
    }
    let nl = NonlinearitySpec::new(ScalarMap::GaussianDamped, Scaling::InverseNSquared).map_err(err)?;
    let op = ChainOperator::new(n, Flavor::Neumann).map_err(err)?;
    let system = opinion_core::dynamics::System::new(op, nl)
        .with_layout(ControlLayout::two_boundary(n).map_err(err)?);
    let frame = TimeFrame::rescaled(n, horizon).map_err(err)?;
    let steps = frame.default_steps();
    let y0 = InitialState::Sine.generate(n, 0);
    let free = integrate(&system, None, &y0, &frame, steps, IntegrateOptions::default()).map_err(err)?;
    let problem = ControlProblem::new(system, y0.clone(), frame, steps).map_err(err)?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(format!("beta must be non-negative, got {beta}"));
    }
    let options = MinimizeOptions {
        max_iters,
        ..Default::default()
    };
    let result = minimize(&problem, &ObjectiveSpec::new(beta), &problem.zero_control(), &options).map_err(err)?;
    let stored = result.trajectory.stored_steps();
    let last = result.control.n_steps() - 1;
    let at = |c: usize| stored.iter().map(|&k| result.control.value(k.min(last), c)).collect();
    json(&FreeVsControlled {
        n,
        initial_norm: weighted_norm(&y0, n),
        initial: y0,
        free: Curve::of(&free),
        controlled: Curve::of(&result.trajectory),
        iterations: result.iterations,
        converged: result.converged,
        control_cost: result.control_cost,
        control_tau: stored.iter().map(|&k| result.trajectory.tau(k)).collect(),
        control_left: at(0),
        control_right: at(1),
    })
}

#[derive(Serialize)]
struct KalmanRow {
    n: usize,
    rank: usize,
    satisfied: bool,
    method: &'static str,
}

/// Kalman rank for every `N` in `n_min..=n_max`.
pub fn kalman_table(n_min: usize, n_max: usize, flavor: &str, layout: &str) -> Out {
    if n_min < 2 || n_max < n_min || n_max > MAX_AGENTS {
        return Err(format!("need 2 <= N_min <= N_max <= {MAX_AGENTS}, got {n_min}..{n_max}"));
    }
    let flavor: Flavor = flavor.parse().map_err(err)?;
    let layout: LayoutSpec = layout.parse().map_err(err)?;
    let rows = (n_min..=n_max)
        .map(|n| {
            let op = ChainOperator::new(n, flavor)?;
            let r = kalman_rank(&op, &ControlLayout::build(n, &layout)?)?;
            Ok(KalmanRow {
                n,
                rank: r.rank,
                satisfied: r.satisfied,
                method: match r.method {
                    RankMethod::ExactRational => "exact",
                    RankMethod::Hautus => "hautus",
                },
            })
        })
        .collect::<opinion_core::Result<Vec<_>>>()
        .map_err(err)?;
    json(&rows)
}

/// Cost and remainder constants.
pub fn bounds(g_inf: f64, horizon: f64, n: usize, c0: f64, c1: f64, c_beta: f64) -> Out {
    let b = evaluate_bounds(g_inf, horizon, n, BoundConstants { c0, c1, c_beta }).map_err(err)?;
    json(&b)
}

fn js(r: Out) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = freeVsControlled)]
pub fn js_free_vs_controlled(n: usize, horizon: f64, beta: f64, max_iters: usize) -> Result<String, JsError> {
    js(free_vs_controlled(n, horizon, beta, max_iters))
}

#[wasm_bindgen(js_name = kalmanTable)]
pub fn js_kalman_table(n_min: usize, n_max: usize, flavor: &str, layout: &str) -> Result<String, JsError> {
    js(kalman_table(n_min, n_max, flavor, layout))
}

#[wasm_bindgen(js_name = bounds)]
pub fn js_bounds(g_inf: f64, horizon: f64, n: usize, c0: f64, c1: f64, c_beta: f64) -> Result<String, JsError> {
    js(bounds(g_inf, horizon, n, c0, c1, c_beta))
}
