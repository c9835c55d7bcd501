//! IMEX midpoint scheme
//!
//! ```text
//! (I − Δ/2·L) y_{k+1} = (I + Δ/2·L) y_k + Δ·(c·G(y_k) + B u_k)
//! ```
//!
//! with `L = s·(A + F)`, `s ∈ {1, N²}` the frame's drift scale, `F` the
//! optional boundary-feedback diagonal, and `c = s·(scaling factor)` so that
//! the rescaled frame sees `N²·G_N`.

use super::frame::TimeFrame;
use super::signal::ControlSignal;
use super::trajectory::Trajectory;
use super::tridiagonal::TridiagonalLu;
use crate::error::{Error, Result};
use crate::network::{ChainOperator, ControlLayout, NonlinearitySpec};

/// Linear chain, nonlinearity and (optional) actuators.
#[derive(Debug, Clone)]
pub struct System {
    pub op: ChainOperator,
    pub nonlinearity: NonlinearitySpec,
    pub layout: Option<ControlLayout>,
    /// When set, the applied control is `v̄ = v + gain·Bᵀy`; the feedback part
    /// is integrated with the implicit half of the scheme.
    pub boundary_feedback: Option<f64>,
}

impl System {
    pub fn new(op: ChainOperator, nonlinearity: NonlinearitySpec) -> Self {
        Self {
            op,
            nonlinearity,
            layout: None,
            boundary_feedback: None,
        }
    }

    pub fn with_layout(mut self, layout: ControlLayout) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn with_boundary_feedback(mut self, gain: f64) -> Self {
        self.boundary_feedback = Some(gain);
        self
    }

    pub fn dim(&self) -> usize {
        self.op.n()
    }

    pub fn n_channels(&self) -> usize {
        self.layout.as_ref().map_or(0, |l| l.n_channels())
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if let Some(layout) = &self.layout {
            if layout.n_agents() != self.op.n() {
                return Err(Error::DimensionMismatch(format!(
                    "layout addresses {} agents, chain has {}",
                    layout.n_agents(),
                    self.op.n()
                )));
            }
        } else if self.boundary_feedback.is_some() {
            return Err(Error::Layout("boundary feedback requires a control layout".into()));
        }
        Ok(())
    }
}

/// One IMEX midpoint step with the implicit matrix factored once.
#[derive(Debug, Clone)]
pub struct Stepper {
    dim: usize,
    dt: f64,
    /// diagonal and off-diagonal of L
    l_diag: Vec<f64>,
    l_off: Vec<f64>,
    lu: TridiagonalLu,
    nonlinear_factor: f64,
    nonlinearity: NonlinearitySpec,
    rows: Vec<usize>,
    feedback: Option<f64>,
    drift_scale: f64,
}

impl Stepper {
    pub fn new(system: &System, frame: &TimeFrame, n_steps: usize) -> Result<Self> {
        system.validate()?;
        if n_steps == 0 {
            return Err(Error::Domain("n_steps must be at least 1".into()));
        }
        let dim = system.dim();
        let s = frame.drift_scale();
        let dt = frame.horizon() / n_steps as f64;
        let mut l_diag: Vec<f64> = system.op.diagonal().iter().map(|d| s * d).collect();
        let l_off: Vec<f64> = system.op.off_diagonal().iter().map(|o| s * o).collect();
        let rows = system.layout.as_ref().map(|l| l.rows()).unwrap_or_default();
        if let Some(gain) = system.boundary_feedback {
            for &r in &rows {
                l_diag[r] += s * gain;
            }
        }
        let m_diag: Vec<f64> = l_diag.iter().map(|d| 1.0 - 0.5 * dt * d).collect();
        let m_off: Vec<f64> = l_off.iter().map(|o| -0.5 * dt * o).collect();
        let lu = TridiagonalLu::new(&m_off, &m_diag, &m_off);
        Ok(Self {
            dim,
            dt,
            l_diag,
            l_off,
            lu,
            nonlinear_factor: s * system.nonlinearity.scaling().factor(frame.n),
            nonlinearity: system.nonlinearity.clone(),
            rows,
            feedback: system.boundary_feedback,
            drift_scale: s,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = (I + Δ/2·L)·x`
    fn explicit_part(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        let h = 0.5 * self.dt;
        for i in 0..n {
            let mut lx = self.l_diag[i] * x[i];
            if i > 0 {
                lx += self.l_off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                lx += self.l_off[i] * x[i + 1];
            }
            out[i] = x[i] + h * lx;
        }
    }

    /// Advance `y` by one step with control values `u` (frame units).
    pub fn step(&self, y: &[f64], u: Option<&[f64]>, out: &mut [f64]) {
        self.explicit_part(y, out);
        if !self.nonlinearity.is_zero() {
            let c = self.dt * self.nonlinear_factor;
            for (o, &yi) in out.iter_mut().zip(y) {
                *o += c * self.nonlinearity.g_scalar(yi);
            }
        }
        if let Some(u) = u {
            for (&r, &uc) in self.rows.iter().zip(u) {
                out[r] += self.dt * uc;
            }
        }
        self.lu.solve_in_place(out);
    }

    /// Transpose of one step's linearisation.
    ///
    /// Given `λ_{k+1}` and the state `y_k`, writes `λ_k` into `lambda_out` and
    /// `∂(λ_{k+1}·y_{k+1})/∂u_k` into `grad_u`.
    pub fn adjoint_step(
        &self,
        y: &[f64],
        lambda_next: &[f64],
        lambda_out: &mut [f64],
        grad_u: &mut [f64],
        mu: &mut [f64],
    ) -> Result<()> {
        mu.copy_from_slice(lambda_next);
        // M is symmetric
        self.lu.solve_in_place(mu);
        for (g, &r) in grad_u.iter_mut().zip(&self.rows) {
            *g = self.dt * mu[r];
        }
        self.explicit_part(mu, lambda_out);
        if !self.nonlinearity.is_zero() {
            let c = self.dt * self.nonlinear_factor;
            for i in 0..self.dim {
                lambda_out[i] += c * self.nonlinearity.g_derivative(y[i])? * mu[i];
            }
        }
        Ok(())
    }

    /// Effective feedback control `v + gain·Bᵀ(y_k + y_{k+1})/2` on one step,
    /// in frame units (the feedback gain is scaled by the drift factor).
    fn realized_feedback(&self, y: &[f64], y_next: &[f64], u: Option<&[f64]>, out: &mut [f64]) {
        let gain = self.drift_scale * self.feedback.unwrap_or(0.0);
        for (c, &r) in self.rows.iter().enumerate() {
            let base = u.map_or(0.0, |u| u[c]);
            out[c] = base + gain * 0.5 * (y[r] + y_next[r]);
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IntegrateOptions {
    /// Keep every `stride`-th state; default `ceil(n_steps / 1000)`.
    pub stride: Option<usize>,
}

impl IntegrateOptions {
    pub fn dense() -> Self {
        Self { stride: Some(1) }
    }
}

pub fn default_stride(n_steps: usize) -> usize {
    n_steps.div_ceil(1000).max(1)
}

fn check_control(system: &System, frame: &TimeFrame, n_steps: usize, c: &ControlSignal) -> Result<()> {
    let Some(layout) = &system.layout else {
        return Err(Error::Layout("control signal given but the system has no actuators".into()));
    };
    if c.frame().kind != frame.kind || !c.frame().compatible(frame) {
        return Err(Error::Frame(format!(
            "control lives in the {} frame (N={}, T={}), integration in the {} frame (N={}, T={})",
            c.frame().kind.name(),
            c.frame().n,
            c.frame().base_horizon,
            frame.kind.name(),
            frame.n,
            frame.base_horizon
        )));
    }
    if c.n_steps() != n_steps {
        return Err(Error::DimensionMismatch(format!(
            "control has {} steps, integration uses {n_steps}",
            c.n_steps()
        )));
    }
    if c.n_channels() != layout.n_channels() {
        return Err(Error::DimensionMismatch(format!(
            "control has {} channels, layout has {}",
            c.n_channels(),
            layout.n_channels()
        )));
    }
    Ok(())
}

/// Integrate `system` from `y0` over the frame's horizon in `n_steps` steps.
pub fn integrate(
    system: &System,
    control: Option<&ControlSignal>,
    y0: &[f64],
    frame: &TimeFrame,
    n_steps: usize,
    options: IntegrateOptions,
) -> Result<Trajectory> {
    if y0.len() != system.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {}, chain has {} agents",
            y0.len(),
            system.dim()
        )));
    }
    if let Some(c) = control {
        check_control(system, frame, n_steps, c)?;
    }
    let stepper = Stepper::new(system, frame, n_steps)?;
    let stride = options.stride.unwrap_or_else(|| default_stride(n_steps)).max(1);
    let channels = system.n_channels();

    let mut traj = Trajectory::new(*frame, system.dim(), n_steps);
    let mut y = y0.to_vec();
    let mut next = vec![0.0; y.len()];
    let mut u = vec![0.0; channels];
    let mut applied = system
        .boundary_feedback
        .map(|_| vec![0.0; channels * n_steps]);
    traj.record(0, &y, true);
    for k in 0..n_steps {
        let u_k = control.map(|c| {
            c.step_values(k, &mut u);
            u.as_slice()
        });
        stepper.step(&y, u_k, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: k + 1 });
        }
        if let Some(applied) = applied.as_mut() {
            stepper.realized_feedback(&y, &next, u_k, &mut applied[k * channels..(k + 1) * channels]);
        }
        std::mem::swap(&mut y, &mut next);
        let step = k + 1;
        traj.record(step, &y, step % stride == 0 || step == n_steps);
    }
    if let Some(applied) = applied {
        traj.set_applied_control(ControlSignal::from_values(*frame, channels, n_steps, applied)?);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::FrameKind;
    use crate::network::{Flavor, ScalarMap, Scaling};

    fn free(flavor: Flavor, n: usize) -> System {
        System::new(ChainOperator::new(n, flavor).unwrap(), NonlinearitySpec::zero())
    }

    #[test]
    fn zero_stays_zero() {
        let sys = free(Flavor::Neumann, 6);
        let frame = TimeFrame::rescaled(6, 1.0).unwrap();
        let tr = integrate(&sys, None, &[0.0; 6], &frame, 50, IntegrateOptions::default()).unwrap();
        assert!(tr.terminal_state().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stride_keeps_terminal_state() {
        let sys = free(Flavor::Dirichlet, 5);
        let frame = TimeFrame::rescaled(5, 1.0).unwrap();
        let y0 = [1.0, -1.0, 0.5, 0.2, 0.0];
        let tr = integrate(&sys, None, &y0, &frame, 2500, IntegrateOptions::default()).unwrap();
        assert_eq!(tr.stored_steps().first(), Some(&0));
        assert_eq!(tr.stored_steps().last(), Some(&2500));
        assert_eq!(tr.stored_steps()[1], 3);
        assert_eq!(tr.diagnostics().len(), 2501);
        assert_eq!(tr.terminal_norm(), tr.diagnostics()[2500].norm2);
        assert_eq!(tr.terminal_state(), tr.states().last().unwrap().as_slice());
    }

    #[test]
    fn unscaled_linear_growth_diverges_with_step_index() {
        let op = ChainOperator::new(40, Flavor::Neumann).unwrap();
        let nl = NonlinearitySpec::new(ScalarMap::Linear { slope: 50.0 }, Scaling::Unscaled).unwrap();
        let sys = System::new(op, nl);
        let frame = TimeFrame::rescaled(40, 1.0).unwrap();
        let err = integrate(&sys, None, &[1.0; 40], &frame, 400, IntegrateOptions::default()).unwrap_err();
        match err {
            Error::Divergence { step } => assert!(step > 1 && step <= 400),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn control_frame_must_match() {
        let sys = free(Flavor::Neumann, 4).with_layout(ControlLayout::two_boundary(4).unwrap());
        let frame = TimeFrame::rescaled(4, 1.0).unwrap();
        let c = ControlSignal::zeros(frame.with_kind(FrameKind::Physical), 2, 10);
        assert!(matches!(
            integrate(&sys, Some(&c), &[0.0; 4], &frame, 10, IntegrateOptions::default()),
            Err(Error::Frame(_))
        ));
        let c = ControlSignal::zeros(frame, 2, 11);
        assert!(integrate(&sys, Some(&c), &[0.0; 4], &frame, 10, IntegrateOptions::default()).is_err());
    }

    #[test]
    fn control_without_layout_rejected() {
        let sys = free(Flavor::Neumann, 4);
        let frame = TimeFrame::rescaled(4, 1.0).unwrap();
        let c = ControlSignal::zeros(frame, 2, 10);
        assert!(integrate(&sys, Some(&c), &[0.0; 4], &frame, 10, IntegrateOptions::default()).is_err());
    }

    #[test]
    fn wrong_initial_length_rejected() {
        let sys = free(Flavor::Neumann, 4);
        let frame = TimeFrame::rescaled(4, 1.0).unwrap();
        assert!(matches!(
            integrate(&sys, None, &[0.0; 3], &frame, 10, IntegrateOptions::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
