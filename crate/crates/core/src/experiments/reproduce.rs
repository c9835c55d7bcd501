use serde::Serialize;

use crate::dynamics::{integrate, IntegrateOptions, System, TimeFrame, Trajectory};
use crate::error::Result;
use crate::network::{ChainOperator, ControlLayout, Flavor, NonlinearitySpec, ScalarMap, Scaling};
use crate::synthesis::{minimize, ControlProblem, MinimizeOptions, ObjectiveSpec, SynthesisResult};

use super::sweep::InitialState;

/// The reference run: `N = 45` agents on the Neumann chain, both end agents
/// actuated, `G(s) = s·exp(−s²)` scaled by `1/N²`, `y⁰_j = sin(πj/N)`,
/// horizon `T = 2` in the rescaled frame and `β = 10⁻¹⁵`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceConfig {
    pub n: usize,
    pub horizon: f64,
    pub beta: f64,
    pub n_steps: usize,
    pub options: MinimizeOptions,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        let n = 45;
        Self {
            n,
            horizon: 2.0,
            beta: 1e-15,
            n_steps: TimeFrame::rescaled(n, 2.0).expect("valid").default_steps(),
            options: MinimizeOptions {
                max_iters: 300,
                ..Default::default()
            },
        }
    }
}

impl ReferenceConfig {
    pub fn problem(&self) -> Result<ControlProblem> {
        let nl = NonlinearitySpec::new(ScalarMap::GaussianDamped, Scaling::InverseNSquared)?;
        let system = System::new(ChainOperator::new(self.n, Flavor::Neumann)?, nl)
            .with_layout(ControlLayout::two_boundary(self.n)?);
        let frame = TimeFrame::rescaled(self.n, self.horizon)?;
        ControlProblem::new(system, InitialState::Sine.generate(self.n, 0), frame, self.n_steps)
    }
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub config: ReferenceConfig,
    pub free: Trajectory,
    pub controlled: SynthesisResult,
}

impl Reproduction {
    pub fn initial_norm(&self) -> f64 {
        self.free.initial_norm()
    }
}

/// Run the free and the optimally controlled reference dynamics.
pub fn reproduce_reference_run(config: &ReferenceConfig) -> Result<Reproduction> {
    let problem = config.problem()?;
    let free = integrate(
        &problem.system,
        None,
        &problem.y0,
        &problem.frame,
        problem.n_steps,
        IntegrateOptions::default(),
    )?;
    let controlled = minimize(
        &problem,
        &ObjectiveSpec::new(config.beta),
        &problem.zero_control(),
        &config.options,
    )?;
    Ok(Reproduction {
        config: *config,
        free,
        controlled,
    })
}
