use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlSignal, FrameKind, Stepper, System, TimeFrame};
use crate::error::{Error, Result};

/// `J(v) = Σ_i w_i·|y_i(horizon) − target_i|² + β·∫ Σ_c |v_c(t)|² dt`.
///
/// The energy term is always measured on the physical-time control `v`,
/// whatever frame the control is expressed in, so `J` is frame invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub beta: f64,
    /// Consensus target; zero when absent.
    pub target: Option<Vec<f64>>,
    /// Per-agent terminal weight; uniform 1 when absent.
    pub terminal_weight: Option<Vec<f64>>,
}

impl ObjectiveSpec {
    pub fn new(beta: f64) -> Self {
        Self {
            beta,
            target: None,
            terminal_weight: None,
        }
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain(format!("beta must be non-negative, got {}", self.beta)));
        }
        for (name, v) in [("target", &self.target), ("terminal_weight", &self.terminal_weight)] {
            if let Some(v) = v {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "{name} has length {}, state has {dim}",
                        v.len()
                    )));
                }
            }
        }
        Ok(())
    }

    fn target(&self, i: usize) -> f64 {
        self.target.as_ref().map_or(0.0, |t| t[i])
    }

    fn weight(&self, i: usize) -> f64 {
        self.terminal_weight.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn terminal_cost(&self, y: &[f64]) -> f64 {
        y.iter()
            .enumerate()
            .map(|(i, &yi)| {
                let d = yi - self.target(i);
                self.weight(i) * d * d
            })
            .sum()
    }

    pub(crate) fn terminal_gradient(&self, y: &[f64], out: &mut [f64]) {
        for (i, (o, &yi)) in out.iter_mut().zip(y).enumerate() {
            *o = 2.0 * self.weight(i) * (yi - self.target(i));
        }
    }

    /// Coefficient `c` with `penalty = c·Σ_k Σ_c value_{k,c}²` for values in
    /// `frame` units on a grid of step `dt` (frame units).
    pub(crate) fn penalty_coefficient(&self, frame: &TimeFrame, dt: f64) -> f64 {
        let unit = match frame.kind {
            FrameKind::Physical => 1.0,
            FrameKind::Rescaled => frame.n_squared(),
        };
        self.beta * frame.to_t(dt) / (unit * unit)
    }

    pub fn penalty(&self, control: &ControlSignal) -> f64 {
        self.beta * control.physical_energy()
    }
}

/// An optimal-control problem: actuated system, initial state, frame and grid.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub system: System,
    pub y0: Vec<f64>,
    pub frame: TimeFrame,
    pub n_steps: usize,
}

impl ControlProblem {
    pub fn new(system: System, y0: Vec<f64>, frame: TimeFrame, n_steps: usize) -> Result<Self> {
        let Some(layout) = &system.layout else {
            return Err(Error::Layout("an optimal-control problem needs a control layout".into()));
        };
        if layout.n_agents() != system.dim() {
            return Err(Error::DimensionMismatch(format!(
                "layout addresses {} agents, chain has {}",
                layout.n_agents(),
                system.dim()
            )));
        }
        if y0.len() != system.dim() {
            return Err(Error::DimensionMismatch(format!(
                "initial state has length {}, chain has {}",
                y0.len(),
                system.dim()
            )));
        }
        if n_steps == 0 {
            return Err(Error::Domain("n_steps must be at least 1".into()));
        }
        Ok(Self {
            system,
            y0,
            frame,
            n_steps,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.system.n_channels()
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn dt(&self) -> f64 {
        self.frame.horizon() / self.n_steps as f64
    }

    pub fn zero_control(&self) -> ControlSignal {
        ControlSignal::zeros(self.frame, self.n_channels(), self.n_steps)
    }

    pub fn control_from_values(&self, values: Vec<f64>) -> Result<ControlSignal> {
        ControlSignal::from_values(self.frame, self.n_channels(), self.n_steps, values)
    }

    pub(crate) fn stepper(&self) -> Result<Stepper> {
        Stepper::new(&self.system, &self.frame, self.n_steps)
    }

    pub(crate) fn check_control(&self, control: &ControlSignal) -> Result<()> {
        if control.frame().kind != self.frame.kind || !control.frame().compatible(&self.frame) {
            return Err(Error::Frame("control frame differs from the problem frame".into()));
        }
        if control.n_steps() != self.n_steps || control.n_channels() != self.n_channels() {
            return Err(Error::DimensionMismatch(format!(
                "control is {}x{}, problem expects {}x{}",
                control.n_steps(),
                control.n_channels(),
                self.n_steps,
                self.n_channels()
            )));
        }
        Ok(())
    }
}
