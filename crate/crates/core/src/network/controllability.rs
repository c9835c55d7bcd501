use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use super::chain::ChainOperator;
use super::layout::ControlLayout;
use crate::error::{Error, Result};

/// Below or at this size the Kalman rank is computed exactly in rational
/// arithmetic; above it the Hautus eigenvector test is used.
pub const RANK_EXACT_THRESHOLD: usize = 24;

/// `|Bᵀv|₂ > HAUTUS_TOL·|v|₂` declares an eigenvector controllable.
pub const HAUTUS_TOL: f64 = 1e-9;

/// Eigenpairs of a chain operator, eigenvalues sorted descending and
/// eigenvectors (columns) orthonormal in the unweighted inner product.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k).into_owned()
    }
}

pub fn eigen_decompose(op: &ChainOperator) -> EigenDecomposition {
    let eig = SymmetricEigen::new(op.to_dense());
    let n = op.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        v /= v.norm();
        // sign convention: first nonzero component positive
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        vectors.set_column(dst, &v);
    }
    EigenDecomposition {
        eigenvalues,
        eigenvectors: vectors,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RankMethod {
    ExactRational,
    Hautus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KalmanReport {
    pub n: usize,
    pub rank: usize,
    pub satisfied: bool,
    pub method: RankMethod,
}

fn check_dims(op: &ChainOperator, layout: &ControlLayout) -> Result<()> {
    if op.n() != layout.n_agents() {
        return Err(Error::DimensionMismatch(format!(
            "operator has {} rows but layout addresses {} agents",
            op.n(),
            layout.n_agents()
        )));
    }
    Ok(())
}

/// Rank of `[B, AB, …, A^{N−1}B]`, exact for `N ≤ RANK_EXACT_THRESHOLD` and
/// by the Hautus test above.
pub fn kalman_rank(op: &ChainOperator, layout: &ControlLayout) -> Result<KalmanReport> {
    if op.n() <= RANK_EXACT_THRESHOLD {
        kalman_rank_exact(op, layout)
    } else {
        kalman_rank_hautus(op, layout)
    }
}

/// Exact rank of the Kalman block matrix by Gaussian elimination over ℚ.
pub fn kalman_rank_exact(op: &ChainOperator, layout: &ControlLayout) -> Result<KalmanReport> {
    check_dims(op, layout)?;
    let n = op.n();
    let a = op.to_rational();
    let rows = layout.rows();

    // columns of A^k B, k = 0..n-1
    let mut columns: Vec<Vec<BigRational>> = Vec::with_capacity(n * rows.len());
    for &r in &rows {
        let mut col = vec![BigRational::zero(); n];
        col[r] = BigRational::from_integer(1.into());
        for _ in 0..n {
            let next = tridiagonal_mul(&a, &col);
            columns.push(std::mem::replace(&mut col, next));
        }
    }
    // matrix n x (n*m), row-major
    let mut m: Vec<Vec<BigRational>> = (0..n)
        .map(|i| columns.iter().map(|c| c[i].clone()).collect())
        .collect();
    let rank = rational_rank(&mut m);
    Ok(KalmanReport {
        n,
        rank,
        satisfied: rank == n,
        method: RankMethod::ExactRational,
    })
}

fn tridiagonal_mul(a: &[Vec<BigRational>], x: &[BigRational]) -> Vec<BigRational> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            (lo..=hi).fold(BigRational::zero(), |acc, j| acc + &a[i][j] * &x[j])
        })
        .collect()
}

fn rational_rank(m: &mut [Vec<BigRational>]) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let p = m[rank][col].clone();
        for r in rank + 1..rows {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &p;
            for c in col..cols {
                let delta = &factor * &m[rank][c];
                m[r][c] -= delta;
            }
        }
        rank += 1;
    }
    rank
}

/// Hautus test: every eigenvector `v` of `A` must satisfy `Bᵀv ≠ 0`.
///
/// Chain operators are Jacobi matrices with simple spectrum, so each
/// eigenvalue has a one-dimensional eigenspace and the uncontrollable
/// subspace is spanned by the eigenvectors annihilated by `Bᵀ`. The reported
/// rank is `N` minus their count.
pub fn kalman_rank_hautus(op: &ChainOperator, layout: &ControlLayout) -> Result<KalmanReport> {
    check_dims(op, layout)?;
    let n = op.n();
    let eig = eigen_decompose(op);
    let rows = layout.rows();
    let annihilated = (0..n)
        .filter(|&k| {
            let v = eig.eigenvectors.column(k);
            let bt_v = rows.iter().map(|&r| v[r] * v[r]).sum::<f64>().sqrt();
            bt_v <= HAUTUS_TOL * v.norm()
        })
        .count();
    let rank = n - annihilated;
    Ok(KalmanReport {
        n,
        rank,
        satisfied: rank == n,
        method: RankMethod::Hautus,
    })
}
