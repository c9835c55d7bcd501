use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::synthesis::{ObjectiveSpec, SynthesisResult};

/// Summary of one synthesis run, written next to its CSV dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMetadata {
    pub iterations: usize,
    pub objective_value: f64,
    pub terminal_norm: f64,
    pub initial_norm: f64,
    pub control_cost: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    pub frame: String,
    pub n: usize,
    pub horizon: f64,
    pub n_steps: usize,
    pub n_channels: usize,
    pub beta: f64,
    /// Objective after each accepted iterate.
    pub history: Vec<f64>,
}

impl ResultMetadata {
    pub fn new(result: &SynthesisResult, objective: &ObjectiveSpec) -> Self {
        let frame = result.control.frame();
        Self {
            iterations: result.iterations,
            objective_value: result.objective_value,
            terminal_norm: result.terminal_norm,
            initial_norm: result.trajectory.initial_norm(),
            control_cost: result.control_cost,
            gradient_norm: result.gradient_norm,
            converged: result.converged,
            frame: frame.kind.name().into(),
            n: frame.n,
            horizon: frame.base_horizon,
            n_steps: result.control.n_steps(),
            n_channels: result.control.n_channels(),
            beta: objective.beta,
            history: result.history.clone(),
        }
    }
}

pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}
