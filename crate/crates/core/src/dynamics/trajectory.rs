use serde::Serialize;

use super::frame::TimeFrame;
use super::signal::ControlSignal;

/// `sqrt((1/n)·Σ y_j²)`.
pub fn weighted_norm(state: &[f64], n: usize) -> f64 {
    debug_assert!(n >= 1);
    (state.iter().map(|y| y * y).sum::<f64>() / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub norm2: f64,
    pub mean: f64,
    pub maxabs: f64,
}

impl StepDiagnostics {
    pub fn of(state: &[f64], weight_n: usize) -> Self {
        let mean = state.iter().sum::<f64>() / state.len() as f64;
        Self {
            norm2: weighted_norm(state, weight_n),
            mean,
            maxabs: state.iter().fold(0.0f64, |m, y| m.max(y.abs())),
        }
    }
}

/// State history of one integration.
///
/// Every `stride`-th state is kept together with the terminal one; weighted
/// norms use the frame's `N` as weight.
#[derive(Debug, Clone)]
pub struct Trajectory {
    frame: TimeFrame,
    dim: usize,
    n_steps: usize,
    stored_steps: Vec<usize>,
    states: Vec<Vec<f64>>,
    diagnostics: Vec<StepDiagnostics>,
    applied_control: Option<ControlSignal>,
}

impl Trajectory {
    pub(crate) fn new(frame: TimeFrame, dim: usize, n_steps: usize) -> Self {
        Self {
            frame,
            dim,
            n_steps,
            stored_steps: Vec::new(),
            states: Vec::new(),
            diagnostics: Vec::with_capacity(n_steps + 1),
            applied_control: None,
        }
    }

    pub(crate) fn record(&mut self, step: usize, state: &[f64], keep: bool) {
        self.diagnostics.push(StepDiagnostics::of(state, self.frame.n));
        if keep {
            self.stored_steps.push(step);
            self.states.push(state.to_vec());
        }
    }

    pub(crate) fn set_applied_control(&mut self, signal: ControlSignal) {
        self.applied_control = Some(signal);
    }

    pub fn frame(&self) -> &TimeFrame {
        &self.frame
    }

    /// Chain dimension (length of each state).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.frame.horizon() / self.n_steps as f64
    }

    /// Time of step `k` in the trajectory's own frame.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn tau(&self, k: usize) -> f64 {
        self.frame.to_tau(self.time(k))
    }

    pub fn t(&self, k: usize) -> f64 {
        self.frame.to_t(self.time(k))
    }

    pub fn stored_steps(&self) -> &[usize] {
        &self.stored_steps
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.states[0]
    }

    pub fn terminal_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// Per-step diagnostics for every step `0..=n_steps`.
    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.diagnostics
    }

    pub fn initial_norm(&self) -> f64 {
        self.diagnostics[0].norm2
    }

    pub fn terminal_norm(&self) -> f64 {
        self.diagnostics.last().map(|d| d.norm2).unwrap_or(0.0)
    }

    /// Whether every step was stored.
    pub fn is_dense(&self) -> bool {
        self.states.len() == self.n_steps + 1
    }

    /// Effective control applied per step when the system carries boundary
    /// feedback.
    pub fn applied_control(&self) -> Option<&ControlSignal> {
        self.applied_control.as_ref()
    }

    /// Keep components `rows` of every stored state.
    pub fn restrict(&self, rows: std::ops::Range<usize>) -> Trajectory {
        let dim = rows.len();
        let states: Vec<Vec<f64>> = self.states.iter().map(|s| s[rows.clone()].to_vec()).collect();
        let mut out = Trajectory::new(self.frame, dim, self.n_steps);
        // diagnostics are only exact on stored steps; a dense parent gives a
        // dense restriction
        out.stored_steps = self.stored_steps.clone();
        out.diagnostics = if self.is_dense() {
            states.iter().map(|s| StepDiagnostics::of(s, self.frame.n)).collect()
        } else {
            Vec::new()
        };
        out.states = states;
        out
    }

    /// `max_k |y_k − z_k|₂` over common stored steps.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        let mut sup = 0.0f64;
        let mut j = 0;
        for (i, &step) in self.stored_steps.iter().enumerate() {
            while j < other.stored_steps.len() && other.stored_steps[j] < step {
                j += 1;
            }
            if j < other.stored_steps.len() && other.stored_steps[j] == step {
                let diff: Vec<f64> = self.states[i]
                    .iter()
                    .zip(&other.states[j])
                    .map(|(a, b)| a - b)
                    .collect();
                sup = sup.max(weighted_norm(&diff, self.frame.n));
            }
        }
        sup
    }

    /// Component `row` at every stored step.
    pub fn component(&self, row: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[row]).collect()
    }
}
