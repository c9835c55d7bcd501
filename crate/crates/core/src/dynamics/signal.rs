use super::frame::{FrameKind, TimeFrame};
use crate::error::{Error, Result};

/// Multi-channel control sampled on the uniform grid of `n_steps` intervals
/// spanning a frame's horizon. Value `k` is held on `[time_k, time_{k+1})`.
///
/// Values are stored in physical units `v`; a rescaled view reads
/// `u = N²·v`, so frame conversion only relabels the signal and a round trip
/// is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    frame: TimeFrame,
    n_channels: usize,
    n_steps: usize,
    physical: Vec<f64>,
}

impl ControlSignal {
    pub fn zeros(frame: TimeFrame, n_channels: usize, n_steps: usize) -> Self {
        Self {
            frame,
            n_channels,
            n_steps,
            physical: vec![0.0; n_channels * n_steps],
        }
    }

    /// Build from step-major values expressed in `frame`'s units.
    pub fn from_values(
        frame: TimeFrame,
        n_channels: usize,
        n_steps: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != n_channels * n_steps {
            return Err(Error::DimensionMismatch(format!(
                "expected {} control values ({} steps x {} channels), got {}",
                n_channels * n_steps,
                n_steps,
                n_channels,
                values.len()
            )));
        }
        let physical = match frame.kind {
            FrameKind::Physical => values,
            FrameKind::Rescaled => {
                let n2 = frame.n_squared();
                values.into_iter().map(|u| u / n2).collect()
            }
        };
        Ok(Self {
            frame,
            n_channels,
            n_steps,
            physical,
        })
    }

    /// Sample `f(time, channel)` at the left knot of every step.
    pub fn from_fn(
        frame: TimeFrame,
        n_channels: usize,
        n_steps: usize,
        f: impl Fn(f64, usize) -> f64,
    ) -> Self {
        let dt = frame.horizon() / n_steps as f64;
        let values = (0..n_steps)
            .flat_map(|k| (0..n_channels).map(move |c| (k, c)))
            .map(|(k, c)| f(k as f64 * dt, c))
            .collect();
        Self::from_values(frame, n_channels, n_steps, values).expect("sized by construction")
    }

    pub fn frame(&self) -> &TimeFrame {
        &self.frame
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.frame.horizon() / self.n_steps as f64
    }

    pub fn knot_time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    fn unit_scale(&self) -> f64 {
        match self.frame.kind {
            FrameKind::Physical => 1.0,
            FrameKind::Rescaled => self.frame.n_squared(),
        }
    }

    /// Value of channel `c` on step `k`, in this frame's units.
    pub fn value(&self, k: usize, c: usize) -> f64 {
        self.unit_scale() * self.physical[k * self.n_channels + c]
    }

    pub fn step_values(&self, k: usize, out: &mut [f64]) {
        let s = self.unit_scale();
        let row = &self.physical[k * self.n_channels..(k + 1) * self.n_channels];
        for (o, v) in out.iter_mut().zip(row) {
            *o = s * v;
        }
    }

    /// All values, step-major, in this frame's units.
    pub fn values(&self) -> Vec<f64> {
        let s = self.unit_scale();
        self.physical.iter().map(|v| s * v).collect()
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        (0..self.n_steps).map(|k| self.value(k, c)).collect()
    }

    /// Relabel into another frame of the same problem.
    pub fn convert(&self, target: &TimeFrame) -> Result<Self> {
        if !self.frame.compatible(target) {
            return Err(Error::Frame(format!(
                "cannot convert between (N={}, T={}) and (N={}, T={})",
                self.frame.n, self.frame.base_horizon, target.n, target.base_horizon
            )));
        }
        Ok(Self {
            frame: *target,
            ..self.clone()
        })
    }

    /// `L²` norm over the horizon with the piecewise-constant quadrature, in
    /// this frame's units.
    pub fn l2_norm(&self) -> f64 {
        let s = self.unit_scale();
        let sum: f64 = self.physical.iter().map(|v| (s * v) * (s * v)).sum();
        (self.dt() * sum).sqrt()
    }

    /// `∫ Σ_c |v_c(t)|² dt` in physical units, whatever the frame.
    pub fn physical_energy(&self) -> f64 {
        let dt = self.frame.to_t(self.dt());
        dt * self.physical.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        let s = self.unit_scale();
        self.physical.iter().fold(0.0f64, |m, v| m.max((s * v).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_signal_scales_by_n_squared() {
        let phys = TimeFrame::physical(2, 1.5).unwrap();
        let v = ControlSignal::from_fn(phys, 1, 10, |_, _| 1.0);
        assert_eq!(v.frame().horizon(), 6.0);
        let u = v.convert(&phys.with_kind(FrameKind::Rescaled)).unwrap();
        assert_eq!(u.frame().horizon(), 1.5);
        assert!(u.values().iter().all(|&x| x == 4.0));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phys = TimeFrame::physical(7, 0.8).unwrap();
        let vals: Vec<f64> = (0..60).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let v = ControlSignal::from_values(phys, 2, 30, vals.clone()).unwrap();
        let back = v
            .convert(&phys.with_kind(FrameKind::Rescaled))
            .unwrap()
            .convert(&phys)
            .unwrap();
        assert_eq!(back, v);
        assert_eq!(back.values(), vals);
    }

    #[test]
    fn knot_relation_is_exact() {
        let phys = TimeFrame::physical(7, 1.0).unwrap();
        let v = ControlSignal::from_fn(phys, 2, 40, |t, c| (t * 0.01 + c as f64).cos());
        let u = v.convert(&phys.with_kind(FrameKind::Rescaled)).unwrap();
        for k in 0..40 {
            for c in 0..2 {
                assert_eq!(u.value(k, c), 49.0 * v.value(k, c));
            }
        }
    }

    #[test]
    fn norm_identity_by_direct_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 7;
        let phys = TimeFrame::physical(n, 1.3).unwrap();
        let vals: Vec<f64> = (0..2 * 50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = ControlSignal::from_values(phys, 2, 50, vals.clone()).unwrap();
        let u = v.convert(&phys.with_kind(FrameKind::Rescaled)).unwrap();

        // independent quadratures on each side
        let dt = 49.0 * 1.3 / 50.0;
        let dtau = 1.3 / 50.0;
        let v_norm = (dt * vals.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let u_norm = (dtau * vals.iter().map(|x| (49.0 * x) * (49.0 * x)).sum::<f64>()).sqrt();
        assert!((u_norm - n as f64 * v_norm).abs() <= 1e-12 * u_norm);
        assert!((u.l2_norm() - u_norm).abs() <= 1e-12 * u_norm);
        assert!((v.l2_norm() - v_norm).abs() <= 1e-12 * v_norm);
        assert!((u.physical_energy() - v_norm * v_norm).abs() <= 1e-12 * v_norm * v_norm);
    }

    #[test]
    fn mismatched_frames_rejected() {
        let a = TimeFrame::physical(7, 1.0).unwrap();
        let b = TimeFrame::rescaled(8, 1.0).unwrap();
        let c = TimeFrame::rescaled(7, 2.0).unwrap();
        let s = ControlSignal::zeros(a, 2, 10);
        assert!(matches!(s.convert(&b), Err(Error::Frame(_))));
        assert!(s.convert(&c).is_err());
    }

    #[test]
    fn wrong_length_rejected() {
        let a = TimeFrame::physical(7, 1.0).unwrap();
        assert!(ControlSignal::from_values(a, 2, 10, vec![0.0; 19]).is_err());
    }
}
