use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    /// `t ∈ [0, N²T]`, drift `A`.
    Physical,
    /// `τ = t/N² ∈ [0, T]`, drift `N²A`.
    Rescaled,
}

impl FrameKind {
    pub fn name(self) -> &'static str {
        match self {
            FrameKind::Physical => "physical",
            FrameKind::Rescaled => "rescaled",
        }
    }
}

impl std::str::FromStr for FrameKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "physical" | "t" => Ok(FrameKind::Physical),
            "rescaled" | "tau" => Ok(FrameKind::Rescaled),
            other => Err(Error::Frame(format!("unknown frame '{other}'"))),
        }
    }
}

/// A time frame for an `N`-agent problem with rescaled horizon `T`.
///
/// `n` is the agent count used for the time scaling `t = N²τ`; for an
/// extended chain it is the size of the original network, not the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeFrame {
    pub kind: FrameKind,
    pub n: usize,
    /// Horizon `T` in rescaled units.
    pub base_horizon: f64,
}

impl TimeFrame {
    pub fn new(kind: FrameKind, n: usize, base_horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Frame("frame needs N ≥ 1".into()));
        }
        if !(base_horizon > 0.0 && base_horizon.is_finite()) {
            return Err(Error::Frame(format!("horizon must be positive, got {base_horizon}")));
        }
        Ok(Self {
            kind,
            n,
            base_horizon,
        })
    }

    pub fn rescaled(n: usize, horizon: f64) -> Result<Self> {
        Self::new(FrameKind::Rescaled, n, horizon)
    }

    pub fn physical(n: usize, horizon: f64) -> Result<Self> {
        Self::new(FrameKind::Physical, n, horizon)
    }

    pub fn n_squared(&self) -> f64 {
        let n = self.n as f64;
        n * n
    }

    /// Length of the time interval in this frame's own units.
    pub fn horizon(&self) -> f64 {
        match self.kind {
            FrameKind::Physical => self.n_squared() * self.base_horizon,
            FrameKind::Rescaled => self.base_horizon,
        }
    }

    /// Factor multiplying the diffusion matrix: `1` or `N²`.
    pub fn drift_scale(&self) -> f64 {
        match self.kind {
            FrameKind::Physical => 1.0,
            FrameKind::Rescaled => self.n_squared(),
        }
    }

    pub fn with_kind(&self, kind: FrameKind) -> Self {
        Self { kind, ..*self }
    }

    /// Same problem, differing at most in the t/τ parametrisation.
    pub fn compatible(&self, other: &TimeFrame) -> bool {
        self.n == other.n && self.base_horizon == other.base_horizon
    }

    /// Convert an instant of this frame to rescaled time τ.
    pub fn to_tau(&self, time: f64) -> f64 {
        match self.kind {
            FrameKind::Physical => time / self.n_squared(),
            FrameKind::Rescaled => time,
        }
    }

    /// Convert an instant of this frame to physical time t.
    pub fn to_t(&self, time: f64) -> f64 {
        match self.kind {
            FrameKind::Physical => time,
            FrameKind::Rescaled => time * self.n_squared(),
        }
    }

    /// Default step count: `max(4000, 20·N)`.
    pub fn default_steps(&self) -> usize {
        (20 * self.n).max(4000)
    }
}
