use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Corner structure of the chain Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// Zero-flux corners: the two end agents only average with one neighbour,
    /// so every row sums to zero.
    Neumann,
    /// Absorbing corners: diagonal −2/3 everywhere.
    Dirichlet,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::Neumann => "neumann",
            Flavor::Dirichlet => "dirichlet",
        }
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "neumann" => Ok(Flavor::Neumann),
            "dirichlet" => Ok(Flavor::Dirichlet),
            other => Err(Error::Domain(format!("unknown flavor '{other}'"))),
        }
    }
}

/// Averaging factor applied to the three-point stencil.
pub const AVERAGING: f64 = 1.0 / 3.0;

/// Symmetric tridiagonal diffusion matrix of a chain of `n` agents, scaled by
/// the 1/3 averaging factor. Stored as three bands.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOperator {
    n: usize,
    flavor: Flavor,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl ChainOperator {
    pub fn new(n: usize, flavor: Flavor) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(format!(
                "a chain needs at least 2 agents, got {n}"
            )));
        }
        let mut diag = vec![-2.0 * AVERAGING; n];
        if flavor == Flavor::Neumann {
            diag[0] = -AVERAGING;
            diag[n - 1] = -AVERAGING;
        }
        Ok(Self {
            n,
            flavor,
            diag,
            off: vec![AVERAGING; n - 1],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Super- (equivalently sub-) diagonal, length `n - 1`.
    pub fn off_diagonal(&self) -> &[f64] {
        &self.off
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i.abs_diff(j) == 1 {
            self.off[i.min(j)]
        } else {
            0.0
        }
    }

    /// Exact entry as a rational number (numerator over 3).
    pub fn entry_rational(&self, i: usize, j: usize) -> BigRational {
        let three = BigRational::from_integer(3.into());
        let numer: i64 = if i == j {
            let corner = i == 0 || i == self.n - 1;
            if corner && self.flavor == Flavor::Neumann {
                -1
            } else {
                -2
            }
        } else if i.abs_diff(j) == 1 {
            1
        } else {
            return BigRational::zero();
        };
        BigRational::from_integer(numer.into()) / three
    }

    pub fn row_sum_rational(&self, i: usize) -> BigRational {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(self.n - 1);
        (lo..=hi).fold(BigRational::zero(), |acc, j| acc + self.entry_rational(i, j))
    }

    /// `out = scale * A * y`.
    pub fn apply_scaled(&self, y: &[f64], scale: f64, out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(y.len(), n);
        debug_assert_eq!(out.len(), n);
        for i in 0..n {
            let mut acc = self.diag[i] * y[i];
            if i > 0 {
                acc += self.off[i - 1] * y[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * y[i + 1];
            }
            out[i] = scale * acc;
        }
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_scaled(y, 1.0, &mut out);
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j))
    }

    /// Exact dense matrix, row-major.
    pub fn to_rational(&self) -> Vec<Vec<BigRational>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.entry_rational(i, j)).collect())
            .collect()
    }

    /// Closed-form eigenvalue of index `k` (0-based, descending order).
    ///
    /// Neumann: −(4/3)·sin²(kπ/(2N)), k = 0..N−1.
    /// Dirichlet: −(4/3)·sin²((k+1)π/(2(N+1))).
    pub fn eigenvalue_closed_form(&self, k: usize) -> f64 {
        let n = self.n as f64;
        let s = match self.flavor {
            Flavor::Neumann => (k as f64 * std::f64::consts::PI / (2.0 * n)).sin(),
            Flavor::Dirichlet => ((k + 1) as f64 * std::f64::consts::PI / (2.0 * (n + 1.0))).sin(),
        };
        -4.0 / 3.0 * s * s
    }
}
