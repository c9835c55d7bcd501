use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Power of `N` dividing the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    /// `G_N = G / N²`
    InverseNSquared,
    /// `G_N = G / N`
    InverseN,
    /// `G_N = G`
    Unscaled,
}

impl Scaling {
    pub const ALL: [Scaling; 3] = [Scaling::InverseNSquared, Scaling::InverseN, Scaling::Unscaled];

    /// Multiplier applied to `G` on an `n`-agent chain.
    pub fn factor(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            Scaling::InverseNSquared => 1.0 / (n * n),
            Scaling::InverseN => 1.0 / n,
            Scaling::Unscaled => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scaling::InverseNSquared => "inverse-n-squared",
            Scaling::InverseN => "inverse-n",
            Scaling::Unscaled => "unscaled",
        }
    }
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inverse-n-squared" | "inverse_n_squared" | "1/n2" | "1/n^2" => Ok(Scaling::InverseNSquared),
            "inverse-n" | "inverse_n" | "1/n" => Ok(Scaling::InverseN),
            "unscaled" | "1" => Ok(Scaling::Unscaled),
            other => Err(Error::Nonlinearity(format!("unknown scaling '{other}'"))),
        }
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The scalar map `G`.
#[derive(Clone)]
pub enum ScalarMap {
    Zero,
    /// `G(s) = s·exp(−s²)`
    GaussianDamped,
    /// `G(s) = slope·s`
    Linear { slope: f64 },
    /// `G(s) = tanh(s)`
    Tanh,
    /// `G(s) = sin(s)`; zeros at every multiple of π.
    Sine,
    /// User-supplied map. Without `derivative`, gradients fall back to a
    /// central difference only if `numeric_derivative` is set.
    Custom {
        name: String,
        map: ScalarFn,
        derivative: Option<ScalarFn>,
        numeric_derivative: bool,
    },
}

impl fmt::Debug for ScalarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMap::Custom {
                name,
                derivative,
                numeric_derivative,
                ..
            } => f
                .debug_struct("Custom")
                .field("name", name)
                .field("analytic_derivative", &derivative.is_some())
                .field("numeric_derivative", numeric_derivative)
                .finish(),
            other => f.write_str(&other.name()),
        }
    }
}

impl ScalarMap {
    pub fn name(&self) -> String {
        match self {
            ScalarMap::Zero => "zero".into(),
            ScalarMap::GaussianDamped => "gaussian-damped".into(),
            ScalarMap::Linear { slope } => format!("linear:{slope}"),
            ScalarMap::Tanh => "tanh".into(),
            ScalarMap::Sine => "sine".into(),
            ScalarMap::Custom { name, .. } => name.clone(),
        }
    }

    /// Parses a built-in map name: `zero`, `gaussian-damped`, `linear:<slope>`,
    /// `tanh`, `sine`.
    pub fn parse_builtin(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "zero" | "none" => Ok(ScalarMap::Zero),
            "gaussian-damped" | "gaussian" | "s*exp(-s^2)" => Ok(ScalarMap::GaussianDamped),
            "tanh" => Ok(ScalarMap::Tanh),
            "sine" | "sin" => Ok(ScalarMap::Sine),
            "linear" => Ok(ScalarMap::Linear { slope: 1.0 }),
            _ => match s.strip_prefix("linear:") {
                Some(v) => v
                    .parse()
                    .map(|slope| ScalarMap::Linear { slope })
                    .map_err(|_| Error::Nonlinearity(format!("bad slope in '{s}'"))),
                None => Err(Error::Nonlinearity(format!("unknown nonlinearity '{s}'"))),
            },
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            ScalarMap::Zero => 0.0,
            ScalarMap::GaussianDamped => s * (-s * s).exp(),
            ScalarMap::Linear { slope } => slope * s,
            ScalarMap::Tanh => s.tanh(),
            ScalarMap::Sine => s.sin(),
            ScalarMap::Custom { map, .. } => map(s),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarMap::Zero)
    }

    fn has_derivative(&self) -> bool {
        match self {
            ScalarMap::Custom {
                derivative,
                numeric_derivative,
                ..
            } => derivative.is_some() || *numeric_derivative,
            _ => true,
        }
    }

    fn derivative(&self, s: f64) -> f64 {
        match self {
            ScalarMap::Zero => 0.0,
            ScalarMap::GaussianDamped => (1.0 - 2.0 * s * s) * (-s * s).exp(),
            ScalarMap::Linear { slope } => *slope,
            ScalarMap::Tanh => {
                let t = s.tanh();
                1.0 - t * t
            }
            ScalarMap::Sine => s.cos(),
            ScalarMap::Custom {
                map, derivative, ..
            } => match derivative {
                Some(d) => d(s),
                None => central_difference(map.as_ref(), s),
            },
        }
    }
}

/// Central difference with step `1e-6·(1+|s|)`.
pub fn central_difference(f: &dyn Fn(f64) -> f64, s: f64) -> f64 {
    let h = 1e-6 * (1.0 + s.abs());
    (f(s + h) - f(s - h)) / (2.0 * h)
}

/// A componentwise nonlinearity `y ↦ (G_N(y₁), …, G_N(y_N))` together with its
/// scaling regime and consensus shift.
#[derive(Debug, Clone)]
pub struct NonlinearitySpec {
    map: ScalarMap,
    scaling: Scaling,
    consensus_shift: f64,
    lipschitz_bound: Option<f64>,
}

const ZERO_TOL: f64 = 1e-12;

impl NonlinearitySpec {
    pub fn new(map: ScalarMap, scaling: Scaling) -> Result<Self> {
        Self::with_shift(map, scaling, 0.0)
    }

    pub fn zero() -> Self {
        Self {
            map: ScalarMap::Zero,
            scaling: Scaling::InverseNSquared,
            consensus_shift: 0.0,
            lipschitz_bound: Some(0.0),
        }
    }

    /// Translate `G(y) → G(y + ȳ)`; `ȳ` must be a zero of `G` so that the
    /// translated map vanishes at 0.
    pub fn with_shift(map: ScalarMap, scaling: Scaling, shift: f64) -> Result<Self> {
        let at_zero = map.eval(shift);
        if !at_zero.is_finite() || at_zero.abs() > ZERO_TOL * (1.0 + shift.abs()) {
            return Err(Error::Nonlinearity(format!(
                "G must vanish at the consensus value {shift}, got G({shift}) = {at_zero}"
            )));
        }
        Ok(Self {
            map,
            scaling,
            consensus_shift: shift,
            lipschitz_bound: None,
        })
    }

    /// Supply ‖g‖_∞ instead of estimating it.
    pub fn with_lipschitz_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(Error::Nonlinearity(format!("invalid bound {bound}")));
        }
        self.lipschitz_bound = Some(bound);
        Ok(self)
    }

    pub fn with_scaling(&self, scaling: Scaling) -> Self {
        Self {
            scaling,
            ..self.clone()
        }
    }

    pub fn map(&self) -> &ScalarMap {
        &self.map
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    pub fn consensus_shift(&self) -> f64 {
        self.consensus_shift
    }

    pub fn is_zero(&self) -> bool {
        self.map.is_zero()
    }

    /// Unscaled `G(s + ȳ)`.
    pub fn g_scalar(&self, s: f64) -> f64 {
        self.map.eval(s + self.consensus_shift)
    }

    /// `G'(s + ȳ)`. Errors for a custom map without analytic or numerical
    /// derivative.
    pub fn g_derivative(&self, s: f64) -> Result<f64> {
        self.ensure_differentiable()?;
        Ok(self.map.derivative(s + self.consensus_shift))
    }

    pub fn ensure_differentiable(&self) -> Result<()> {
        if self.map.has_derivative() {
            Ok(())
        } else {
            Err(Error::Nonlinearity(format!(
                "'{}' has no analytic derivative; supply one or enable numeric differentiation",
                self.map.name()
            )))
        }
    }

    /// `g(s) = G(s)/s`, continued at 0 by `G'(0)` (central difference).
    pub fn ratio(&self, s: f64) -> f64 {
        if s.abs() < 1e-8 {
            central_difference(&|x| self.g_scalar(x), 0.0)
        } else {
            self.g_scalar(s) / s
        }
    }

    /// Supplied ‖g‖_∞, or an estimate by dense sampling of |g| on `[−R, R]`
    /// with `R = 10·max|y⁰|` (at least 1), plus the limit at 0.
    pub fn lipschitz_bound(&self, y0_max_abs: f64) -> f64 {
        if let Some(b) = self.lipschitz_bound {
            return b;
        }
        if self.map.is_zero() {
            return 0.0;
        }
        let r = (10.0 * y0_max_abs).max(1.0);
        const SAMPLES: usize = 20_001;
        let mut sup = self.ratio(0.0).abs();
        for k in 0..SAMPLES {
            let s = -r + 2.0 * r * k as f64 / (SAMPLES - 1) as f64;
            let v = self.ratio(s).abs();
            if v.is_finite() && v > sup {
                sup = v;
            }
        }
        sup
    }

    /// `G_N(s)` on an `n`-agent chain.
    pub fn scaled(&self, n: usize, s: f64) -> f64 {
        self.scaling.factor(n) * self.g_scalar(s)
    }

    /// Componentwise `G_N`.
    pub fn apply(&self, n: usize, state: &[f64]) -> Vec<f64> {
        let f = self.scaling.factor(n);
        state.iter().map(|&s| f * self.g_scalar(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(scaling: Scaling) -> NonlinearitySpec {
        NonlinearitySpec::new(ScalarMap::GaussianDamped, scaling).unwrap()
    }

    #[test]
    fn gaussian_all_ones_at_n45() {
        let out = gaussian(Scaling::InverseNSquared).apply(45, &[1.0; 45]);
        let expected = (-1.0f64).exp() / 2025.0;
        for v in out {
            assert!((v - expected).abs() < 1e-18);
            assert!((v - 1.8167e-4).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_state_maps_to_zero() {
        for map in [
            ScalarMap::Zero,
            ScalarMap::GaussianDamped,
            ScalarMap::Tanh,
            ScalarMap::Sine,
            ScalarMap::Linear { slope: -2.0 },
        ] {
            for scaling in Scaling::ALL {
                let spec = NonlinearitySpec::new(map.clone(), scaling).unwrap();
                assert!(spec.apply(7, &[0.0; 7]).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn unscaled_single_component() {
        let out = gaussian(Scaling::Unscaled).apply(1, &[1.0]);
        assert_eq!(out, vec![(-1.0f64).exp()]);
    }

    #[test]
    fn scaling_factors() {
        assert_eq!(Scaling::InverseNSquared.factor(10), 0.01);
        assert_eq!(Scaling::InverseN.factor(10), 0.1);
        assert_eq!(Scaling::Unscaled.factor(10), 1.0);
    }

    #[test]
    fn shift_must_be_a_zero() {
        assert!(NonlinearitySpec::with_shift(ScalarMap::Sine, Scaling::Unscaled, 1.0).is_err());
        let spec = NonlinearitySpec::with_shift(ScalarMap::Sine, Scaling::Unscaled, std::f64::consts::PI)
            .unwrap();
        assert!(spec.g_scalar(0.0).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_estimates() {
        // |g| = e^{-s²} peaks at 1 in s = 0
        let b = gaussian(Scaling::InverseNSquared).lipschitz_bound(1.0);
        assert!((b - 1.0).abs() < 1e-8, "{b}");
        let lin = NonlinearitySpec::new(ScalarMap::Linear { slope: -2.5 }, Scaling::Unscaled).unwrap();
        assert!((lin.lipschitz_bound(3.0) - 2.5).abs() < 1e-6);
        let supplied = gaussian(Scaling::Unscaled).with_lipschitz_bound(0.5).unwrap();
        assert_eq!(supplied.lipschitz_bound(1.0), 0.5);
        assert_eq!(NonlinearitySpec::zero().lipschitz_bound(1.0), 0.0);
    }

    #[test]
    fn analytic_derivatives_match_central_difference() {
        for map in [ScalarMap::GaussianDamped, ScalarMap::Tanh, ScalarMap::Sine] {
            let spec = NonlinearitySpec::new(map, Scaling::Unscaled).unwrap();
            for &s in &[-2.0, -0.3, 0.0, 0.7, 1.9] {
                let fd = central_difference(&|x| spec.g_scalar(x), s);
                assert!((spec.g_derivative(s).unwrap() - fd).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn custom_map_without_derivative_is_rejected_for_gradients() {
        let map = ScalarMap::Custom {
            name: "cubic-damped".into(),
            map: Arc::new(|s: f64| s / (1.0 + s * s)),
            derivative: None,
            numeric_derivative: false,
        };
        let spec = NonlinearitySpec::new(map.clone(), Scaling::Unscaled).unwrap();
        assert!(spec.g_derivative(0.5).is_err());

        let ScalarMap::Custom { name, map, .. } = map else { unreachable!() };
        let numeric = NonlinearitySpec::new(
            ScalarMap::Custom {
                name,
                map,
                derivative: None,
                numeric_derivative: true,
            },
            Scaling::Unscaled,
        )
        .unwrap();
        let exact = (1.0 - 0.25) / (1.25f64 * 1.25);
        assert!((numeric.g_derivative(0.5).unwrap() - exact).abs() < 1e-8);
    }

    #[test]
    fn builtin_parsing() {
        assert!(matches!(ScalarMap::parse_builtin("gaussian-damped").unwrap(), ScalarMap::GaussianDamped));
        assert!(matches!(
            ScalarMap::parse_builtin("linear:0.5").unwrap(),
            ScalarMap::Linear { slope } if slope == 0.5
        ));
        assert!(ScalarMap::parse_builtin("cubic").is_err());
    }
}
