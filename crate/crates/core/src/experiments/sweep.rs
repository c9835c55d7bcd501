use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{FrameKind, System, TimeFrame};
use crate::error::{Error, Result};
use crate::network::{ChainOperator, ControlLayout, Flavor, LayoutSpec, NonlinearitySpec, ScalarMap, Scaling};
use crate::synthesis::{minimize, ControlProblem, MinimizeOptions, ObjectiveSpec, SynthesisResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HorizonMode {
    /// Rescaled horizon `T` for every `N`, i.e. physical horizon `N²T`.
    TimeGrowsAsN2,
    /// Physical horizon `T` for every `N`, i.e. rescaled horizon `T/N²`.
    FixedT,
}

impl HorizonMode {
    pub fn name(self) -> &'static str {
        match self {
            HorizonMode::TimeGrowsAsN2 => "time-grows-as-n2",
            HorizonMode::FixedT => "fixed-t",
        }
    }

    /// Rescaled horizon of an `n`-agent run.
    pub fn rescaled_horizon(self, base_t: f64, n: usize) -> f64 {
        match self {
            HorizonMode::TimeGrowsAsN2 => base_t,
            HorizonMode::FixedT => base_t / (n * n) as f64,
        }
    }
}

impl fmt::Display for HorizonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for HorizonMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "time-grows-as-n2" | "n2" | "grows" => Ok(HorizonMode::TimeGrowsAsN2),
            "fixed-t" | "fixed" => Ok(HorizonMode::FixedT),
            other => Err(Error::Domain(format!("unknown horizon mode '{other}'"))),
        }
    }
}

/// Initial-state generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialState {
    /// `y_j = sin(πj/N)`
    Sine,
    /// `y_j = c`
    Constant(f64),
    /// `y_j = cos(kπ(j − 1/2)/N)`, the `k`-th Neumann eigenvector
    Mode(usize),
    /// Independent uniform values in `[−a, a]`, seeded by `(seed, N)`
    Random { amplitude: f64 },
}

impl InitialState {
    pub fn generate(&self, n: usize, seed: u64) -> Vec<f64> {
        let nf = n as f64;
        match *self {
            InitialState::Sine => (1..=n).map(|j| (PI * j as f64 / nf).sin()).collect(),
            InitialState::Constant(c) => vec![c; n],
            InitialState::Mode(k) => (1..=n)
                .map(|j| (k as f64 * PI * (j as f64 - 0.5) / nf).cos())
                .collect(),
            InitialState::Random { amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                (0..n).map(|_| rng.gen_range(-amplitude..=amplitude)).collect()
            }
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Sine => write!(f, "sine"),
            InitialState::Constant(c) => write!(f, "constant:{c}"),
            InitialState::Mode(k) => write!(f, "mode:{k}"),
            InitialState::Random { amplitude } => write!(f, "random:{amplitude}"),
        }
    }
}

impl std::str::FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::Domain(format!("unknown initial state '{s}'"));
        if s == "sine" || s == "sin" {
            return Ok(InitialState::Sine);
        }
        let (head, arg) = s.split_once(':').ok_or_else(bad)?;
        match head {
            "constant" => arg.parse().map(InitialState::Constant).map_err(|_| bad()),
            "mode" => arg.parse().map(InitialState::Mode).map_err(|_| bad()),
            "random" => arg
                .parse()
                .map(|amplitude| InitialState::Random { amplitude })
                .map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

/// Problem shared by every run of a sweep.
#[derive(Debug, Clone)]
pub struct ProblemTemplate {
    pub flavor: Flavor,
    pub layout: LayoutSpec,
    pub map: ScalarMap,
    pub initial: InitialState,
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub n_values: Vec<usize>,
    pub regimes: Vec<Scaling>,
    pub horizon_mode: HorizonMode,
    pub base_t: f64,
    pub template: ProblemTemplate,
    pub beta: f64,
    pub options: MinimizeOptions,
    /// Steps per run; the frame default when absent.
    pub n_steps: Option<usize>,
    pub seed: u64,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.regimes.is_empty() {
            return Err(Error::Domain("sweep needs at least one N and one regime".into()));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("n_values must be strictly increasing".into()));
        }
        if self.n_values[0] < 2 {
            return Err(Error::InvalidDimension("every chain needs at least 2 agents".into()));
        }
        for (i, r) in self.regimes.iter().enumerate() {
            if self.regimes[..i].contains(r) {
                return Err(Error::Domain(format!("regime {r} listed twice")));
            }
        }
        if !(self.base_t > 0.0 && self.base_t.is_finite()) {
            return Err(Error::Domain(format!("base_T must be positive, got {}", self.base_t)));
        }
        Ok(())
    }

    /// The control problem of one run.
    pub fn problem(&self, n: usize, regime: Scaling) -> Result<ControlProblem> {
        let nl = NonlinearitySpec::new(self.template.map.clone(), regime)?;
        let layout = ControlLayout::build(n, &self.template.layout)?;
        let system = System::new(ChainOperator::new(n, self.template.flavor)?, nl).with_layout(layout);
        let frame = TimeFrame::rescaled(n, self.horizon_mode.rescaled_horizon(self.base_t, n))?;
        let steps = self.n_steps.unwrap_or_else(|| frame.default_steps());
        ControlProblem::new(system, self.template.initial.generate(n, self.seed), frame, steps)
    }
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub regime: Scaling,
    pub horizon_mode: HorizonMode,
    #[serde(rename = "base_T")]
    pub base_t: f64,
    pub terminal_norm: f64,
    pub cost_physical: f64,
    pub cost_rescaled: f64,
    pub iterations: usize,
    pub converged: bool,
    pub runtime_ms: u64,
    /// `ok`, `diverged` or `error: <message>`.
    pub status: String,
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "N",
    "regime",
    "horizon_mode",
    "base_T",
    "terminal_norm",
    "cost_physical",
    "cost_rescaled",
    "iterations",
    "converged",
    "runtime_ms",
    "status",
];

fn run_one(plan: &SweepPlan, n: usize, regime: Scaling) -> SweepRecord {
    let start = Instant::now();
    let outcome = plan.problem(n, regime).and_then(|p| {
        let r = minimize(&p, &ObjectiveSpec::new(plan.beta), &p.zero_control(), &plan.options)?;
        Ok((p, r))
    });
    let mut rec = SweepRecord {
        n,
        regime,
        horizon_mode: plan.horizon_mode,
        base_t: plan.base_t,
        terminal_norm: f64::NAN,
        cost_physical: f64::NAN,
        cost_rescaled: f64::NAN,
        iterations: 0,
        converged: false,
        runtime_ms: 0,
        status: String::new(),
    };
    match outcome {
        Ok((p, r)) => fill(&mut rec, &p, &r),
        Err(Error::Divergence { step }) => rec.status = format!("diverged at step {step}"),
        Err(e) => rec.status = format!("error: {e}"),
    }
    rec.runtime_ms = start.elapsed().as_millis() as u64;
    rec
}

fn fill(rec: &mut SweepRecord, p: &ControlProblem, r: &SynthesisResult) {
    let physical = p.frame.with_kind(FrameKind::Physical);
    rec.terminal_norm = r.terminal_norm;
    rec.cost_rescaled = r.control.l2_norm();
    rec.cost_physical = r
        .control
        .convert(&physical)
        .expect("same problem")
        .l2_norm();
    rec.iterations = r.iterations;
    rec.converged = r.converged;
    rec.status = "ok".into();
}

/// Run every `(N, regime)` pair of the plan in parallel. Records come back
/// ordered by `N`, then by the plan's regime order. Failed runs are recorded
/// with their status and do not stop the sweep.
pub fn run_scaling_sweep(plan: &SweepPlan) -> Result<Vec<SweepRecord>> {
    plan.validate()?;
    let keys: Vec<(usize, usize)> = plan
        .n_values
        .iter()
        .flat_map(|&n| (0..plan.regimes.len()).map(move |r| (n, r)))
        .collect();
    let mut out: Vec<((usize, usize), SweepRecord)> = keys
        .par_iter()
        .map(|&(n, r)| ((n, r), run_one(plan, n, plan.regimes[r])))
        .collect();
    out.sort_by_key(|(k, _)| *k);
    Ok(out.into_iter().map(|(_, rec)| rec).collect())
}

/// Records of one regime, in sweep order.
pub fn regime_records(records: &[SweepRecord], regime: Scaling) -> Vec<SweepRecord> {
    records.iter().filter(|r| r.regime == regime).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan() -> SweepPlan {
        SweepPlan {
            n_values: vec![4, 6],
            regimes: vec![Scaling::Unscaled, Scaling::InverseNSquared],
            horizon_mode: HorizonMode::TimeGrowsAsN2,
            base_t: 0.2,
            template: ProblemTemplate {
                flavor: Flavor::Neumann,
                layout: LayoutSpec::TwoBoundary,
                map: ScalarMap::GaussianDamped,
                initial: InitialState::Sine,
            },
            beta: 1e-8,
            options: MinimizeOptions {
                max_iters: 5,
                ..Default::default()
            },
            n_steps: Some(100),
            seed: 1,
        }
    }

    #[test]
    fn records_are_keyed_and_consistent() {
        let recs = run_scaling_sweep(&plan()).unwrap();
        let keys: Vec<_> = recs.iter().map(|r| (r.n, r.regime)).collect();
        assert_eq!(
            keys,
            vec![
                (4, Scaling::Unscaled),
                (4, Scaling::InverseNSquared),
                (6, Scaling::Unscaled),
                (6, Scaling::InverseNSquared)
            ]
        );
        for r in &recs {
            assert_eq!(r.status, "ok");
            let expected = r.n as f64 * r.cost_physical;
            assert!((r.cost_rescaled - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn plan_validation() {
        let mut p = plan();
        p.n_values = vec![6, 4];
        assert!(run_scaling_sweep(&p).is_err());
        let mut p = plan();
        p.regimes = vec![Scaling::Unscaled, Scaling::Unscaled];
        assert!(p.validate().is_err());
        let mut p = plan();
        p.base_t = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn initial_state_parsing_and_seeding() {
        for s in ["sine", "constant:0.5", "mode:2", "random:0.25"] {
            let g: InitialState = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        let r = InitialState::Random { amplitude: 1.0 };
        assert_eq!(r.generate(8, 3), r.generate(8, 3));
        assert_ne!(r.generate(8, 3), r.generate(8, 4));
        assert!(r.generate(8, 3).iter().all(|v| v.abs() <= 1.0));
    }
}
