use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants of the uniform controllability estimate. They are never known
/// numerically; the defaults of 1 make the formulas inspectable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c0: f64,
    pub c1: f64,
    pub c_beta: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            c0: 1.0,
            c1: 1.0,
            c_beta: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundEvaluation {
    pub g_inf: f64,
    pub horizon: f64,
    pub n: usize,
    /// Remainder factor of the target ball.
    pub k: f64,
    pub c_alpha: f64,
    pub cost_bound: f64,
    /// Remainder factor without the 1/N² scaling.
    pub k_n: f64,
    /// Minimal chain length for the estimate to apply.
    pub n_min: f64,
    /// Radius factor `K·exp(−C₀N)` of the target ball.
    pub target_ball: f64,
    pub constants: BoundConstants,
}

/// Evaluate the cost and remainder formulas for `‖g‖_∞ = g_inf`, horizon `T`
/// and `n` agents.
///
/// ```text
/// K   = exp{C₁(1 + 1/T + T·g + g^{2/3})}
/// C_α = 2g + 1
/// cost = (C_β/C_α)·((e^{C_α T}·C_α T + 1 + T)·K² + C_α·e^{C_α T})^{1/2}
/// K_N = exp{C₁(1 + 1/T + T·N²·g + N^{4/3}·g^{2/3})}
/// N_min = C₁(1 + 1/T + g^{2/3})
/// ```
pub fn evaluate_bounds(g_inf: f64, horizon: f64, n: usize, constants: BoundConstants) -> Result<BoundEvaluation> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    if !(g_inf >= 0.0 && g_inf.is_finite()) {
        return Err(Error::Domain(format!("sup-norm bound must be non-negative, got {g_inf}")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let BoundConstants { c0, c1, c_beta } = constants;
    let t = horizon;
    let g23 = g_inf.powf(2.0 / 3.0);
    let k = (c1 * (1.0 + 1.0 / t + t * g_inf + g23)).exp();
    let c_alpha = 2.0 * g_inf + 1.0;
    let e = (c_alpha * t).exp();
    let cost_bound = c_beta / c_alpha * ((e * c_alpha * t + 1.0 + t) * k * k + c_alpha * e).sqrt();
    let nf = n as f64;
    let k_n = (c1 * (1.0 + 1.0 / t + t * nf * nf * g_inf + nf.powf(4.0 / 3.0) * g23)).exp();
    let n_min = c1 * (1.0 + 1.0 / t + g23);
    Ok(BoundEvaluation {
        g_inf,
        horizon,
        n,
        k,
        c_alpha,
        cost_bound,
        k_n,
        n_min,
        target_ball: k * (-c0 * nf).exp(),
        constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let b = evaluate_bounds(0.0, 1.0, 10, BoundConstants::default()).unwrap();
        assert!((b.k - 2f64.exp()).abs() < 1e-12);
        assert_eq!(b.k, b.k_n);
        let b = evaluate_bounds(1.0, 1.0, 10, BoundConstants::default()).unwrap();
        assert!((b.k - 4f64.exp()).abs() < 1e-12);
        assert!((b.k - 54.598).abs() < 1e-3);
        assert_eq!(b.c_alpha, 3.0);
    }

    #[test]
    fn nonpositive_horizon_rejected() {
        for t in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                evaluate_bounds(1.0, t, 4, BoundConstants::default()),
                Err(Error::Domain(_))
            ));
        }
    }
}
