//! Ordinary least squares through a Householder QR factorisation.

use nalgebra::{DMatrix, DVector};

/// Columns whose QR pivot falls below this fraction of their own norm are
/// treated as linearly dependent.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    pub beta: Vec<f64>,
    pub ssr: f64,
    pub nobs: usize,
    /// Diagonal of `(X'X)^-1`.
    pub xtx_inv_diag: Vec<f64>,
}

impl LeastSquares {
    pub fn sigma2(&self) -> f64 {
        self.ssr / (self.nobs - self.beta.len()) as f64
    }

    pub fn std_error(&self, i: usize) -> f64 {
        (self.sigma2() * self.xtx_inv_diag[i]).sqrt()
    }

    /// Gaussian log-likelihood at the ML variance estimate.
    pub fn log_likelihood(&self) -> f64 {
        let n = self.nobs as f64;
        -n / 2.0 * ((2.0 * std::f64::consts::PI).ln() + (self.ssr / n).ln() + 1.0)
    }

    pub fn aic(&self) -> f64 {
        -2.0 * self.log_likelihood() + 2.0 * self.beta.len() as f64
    }
}

/// Solves `min ||y - X b||`. Returns `None` when `X` is rank deficient or has
/// no more rows than columns.
pub(crate) fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<LeastSquares> {
    let (n, k) = x.shape();
    if n <= k || k == 0 {
        return None;
    }
    let qr = x.clone().qr();
    let r = qr.r();
    for i in 0..k {
        let col_norm = x.column(i).norm();
        if col_norm == 0.0 || r[(i, i)].abs() <= RANK_TOL * col_norm {
            return None;
        }
    }
    let qty = qr.q().transpose() * y;
    let beta = r.solve_upper_triangular(&qty)?;
    let resid = y - x * &beta;
    let r_inv = r.solve_upper_triangular(&DMatrix::identity(k, k))?;
    let xtx_inv_diag = (0..k).map(|i| r_inv.row(i).norm_squared()).collect();
    Some(LeastSquares {
        beta: beta.iter().copied().collect(),
        ssr: resid.norm_squared(),
        nobs: n,
        xtx_inv_diag,
    })
}
