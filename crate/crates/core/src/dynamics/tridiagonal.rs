//! Thomas algorithm with the factorisation kept, for repeated solves against
//! a constant tridiagonal matrix.

#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    /// sub-diagonal of the original matrix
    lower: Vec<f64>,
    /// modified super-diagonal c'_i = c_i / denom_i
    upper: Vec<f64>,
    /// reciprocal pivots 1 / denom_i
    inv_pivot: Vec<f64>,
}

impl TridiagonalLu {
    /// Factor the matrix with sub-diagonal `lower`, diagonal `diag` and
    /// super-diagonal `upper` (`lower`/`upper` of length `n − 1`).
    ///
    /// The matrix must not need pivoting; diagonally dominant systems such as
    /// `I − θΔ·L` for a chain Laplacian `L` qualify.
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        assert!(n >= 1);
        assert_eq!(lower.len() + 1, n);
        assert_eq!(upper.len() + 1, n);
        let mut c = vec![0.0; n.saturating_sub(1)];
        let mut inv = vec![0.0; n];
        inv[0] = 1.0 / diag[0];
        for i in 0..n - 1 {
            c[i] = upper[i] * inv[i];
            let denom = diag[i + 1] - lower[i] * c[i];
            inv[i + 1] = 1.0 / denom;
        }
        Self {
            lower: lower.to_vec(),
            upper: c,
            inv_pivot: inv,
        }
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }
}
