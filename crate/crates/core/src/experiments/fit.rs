use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::sweep::SweepRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GrowthModel {
    /// `log cost = a`
    Bounded,
    /// `log cost = a + r·N`
    ExpInN,
    /// `log cost = a + r·N²`
    ExpInN2,
}

impl GrowthModel {
    pub const ALL: [GrowthModel; 3] = [GrowthModel::Bounded, GrowthModel::ExpInN, GrowthModel::ExpInN2];

    pub fn name(self) -> &'static str {
        match self {
            GrowthModel::Bounded => "bounded",
            GrowthModel::ExpInN => "exp_in_N",
            GrowthModel::ExpInN2 => "exp_in_N2",
        }
    }

    fn feature(self, n: f64) -> Option<f64> {
        match self {
            GrowthModel::Bounded => None,
            GrowthModel::ExpInN => Some(n),
            GrowthModel::ExpInN2 => Some(n * n),
        }
    }

    /// Fitted cost at `n` for intercept `a` and rate `r`.
    pub fn predict(self, intercept: f64, rate: f64, n: f64) -> f64 {
        (intercept + rate * self.feature(n).unwrap_or(0.0)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelScore {
    pub model: GrowthModel,
    pub intercept: f64,
    pub rate: f64,
    pub rss: f64,
    /// Bayesian information criterion; lower is better.
    pub criterion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub model: GrowthModel,
    pub fitted_rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub scores: Vec<ModelScore>,
}

fn least_squares(xs: Option<&[f64]>, ys: &[f64]) -> (f64, f64) {
    let m = ys.len() as f64;
    let my = ys.iter().sum::<f64>() / m;
    let Some(xs) = xs else {
        return (my, 0.0);
    };
    let mx = xs.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let rate = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - rate * mx, rate)
}

/// Fit `log cost` against `{1}`, `{1, N}` and `{1, N²}` and keep the model
/// with the lowest information criterion. A non-positive rate is reported as
/// bounded.
pub fn fit_growth(points: &[(usize, f64)]) -> Result<GrowthFit> {
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "growth fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    if let Some(&(n, c)) = points.iter().find(|(_, c)| !(*c > 0.0 && c.is_finite())) {
        return Err(Error::Domain(format!("cost at N={n} is not a positive number: {c}")));
    }
    let ns: Vec<f64> = points.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, c)| c.ln()).collect();
    let m = ys.len() as f64;
    let scale = 1.0 + ys.iter().fold(0.0f64, |a, y| a.max(y.abs()));
    // residuals below rounding level are indistinguishable
    let floor = (1e-10 * scale).powi(2);

    let scores: Vec<ModelScore> = GrowthModel::ALL
        .iter()
        .map(|&model| {
            let xs: Option<Vec<f64>> = model.feature(0.0).map(|_| ns.iter().map(|&n| model.feature(n).unwrap()).collect());
            let (intercept, rate) = least_squares(xs.as_deref(), &ys);
            let rss: f64 = ns
                .iter()
                .zip(&ys)
                .map(|(&n, &y)| {
                    let r = y - (intercept + rate * model.feature(n).unwrap_or(0.0));
                    r * r
                })
                .sum();
            let k = if xs.is_some() { 2.0 } else { 1.0 };
            let criterion = m * (rss / m).max(floor).ln() + k * m.ln();
            ModelScore {
                model,
                intercept,
                rate,
                rss,
                criterion,
            }
        })
        .collect();

    let mut best = scores
        .iter()
        .min_by(|a, b| a.criterion.total_cmp(&b.criterion))
        .expect("three candidates");
    if best.rate <= 0.0 {
        best = &scores[0];
    }
    let my = ys.iter().sum::<f64>() / m;
    let tss: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if tss > floor * m { 1.0 - best.rss / tss } else { 1.0 };
    Ok(GrowthFit {
        model: best.model,
        fitted_rate: best.rate,
        intercept: best.intercept,
        r_squared,
        scores,
    })
}

/// Growth fit of the physical-frame cost column of one regime's records.
/// Records whose run failed are skipped.
pub fn fit_cost_growth(records: &[SweepRecord]) -> Result<GrowthFit> {
    let Some(first) = records.first() else {
        return Err(Error::InsufficientData("no sweep records".into()));
    };
    if records.iter().any(|r| r.regime != first.regime) {
        return Err(Error::Domain("records mix several scaling regimes".into()));
    }
    let points: Vec<(usize, f64)> = records
        .iter()
        .filter(|r| r.status == "ok")
        .map(|r| (r.n, r.cost_physical))
        .collect();
    fit_growth(&points)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NS: [usize; 5] = [8, 16, 24, 32, 48];

    #[test]
    fn constant_cost_is_bounded() {
        let pts: Vec<_> = NS.iter().map(|&n| (n, 7.0)).collect();
        let f = fit_growth(&pts).unwrap();
        assert_eq!(f.model, GrowthModel::Bounded);
        assert_eq!(f.fitted_rate, 0.0);
    }

    #[test]
    fn planted_models_are_recovered() {
        let pts: Vec<_> = NS.iter().map(|&n| (n, (0.3 * (n * n) as f64).exp())).collect();
        let f = fit_growth(&pts).unwrap();
        assert_eq!(f.model, GrowthModel::ExpInN2);
        assert!((f.fitted_rate - 0.3).abs() <= 1e-6);
        assert!(f.r_squared > 1.0 - 1e-12);

        let pts: Vec<_> = NS.iter().map(|&n| (n, 2.0 * (0.7 * n as f64).exp())).collect();
        let f = fit_growth(&pts).unwrap();
        assert_eq!(f.model, GrowthModel::ExpInN);
        assert!((f.fitted_rate - 0.7).abs() <= 1e-9);
        assert!((f.intercept - 2f64.ln()).abs() <= 1e-9);
    }

    #[test]
    fn decreasing_cost_is_bounded() {
        let pts: Vec<_> = NS.iter().map(|&n| (n, (-0.1 * n as f64).exp())).collect();
        assert_eq!(fit_growth(&pts).unwrap().model, GrowthModel::Bounded);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            fit_growth(&[(8, 1.0), (16, 2.0), (24, 3.0)]),
            Err(Error::InsufficientData(_))
        ));
    }
}
