//! Dense Cholesky factorization for the symmetric positive-definite systems
//! arising from ridge normal equations.

use nalgebra::DMatrix;

use crate::error::{ElmError, Result};

/// Lower-triangular factor `G` with `A = G·Gᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    factor: DMatrix<f64>,
}

impl Cholesky {
    /// Factors `a`, reading only its lower triangle.
    pub fn factor(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(ElmError::shape(format!("{}x{} matrix is not square", n, a.ncols())));
        }
        let mut g = a.clone();
        // Column-major storage: column j is contiguous, so the update of
        // column j subtracts earlier columns scaled by row j entries.
        for j in 0..n {
            for k in 0..j {
                let gjk = g[(j, k)];
                if gjk != 0.0 {
                    let (left, mut right) = g.columns_range_pair_mut(k, j);
                    let src = left.rows_range(j..n);
                    let mut dst = right.rows_range_mut(j..n);
                    dst.axpy(-gjk, &src, 1.0);
                }
            }
            let d = g[(j, j)];
            if !d.is_finite() || d <= 0.0 {
                return Err(ElmError::Singular { pivot: j, value: d });
            }
            let d = d.sqrt();
            g[(j, j)] = d;
            for i in j + 1..n {
                g[(i, j)] /= d;
            }
        }
        for j in 1..n {
            for i in 0..j {
                g[(i, j)] = 0.0;
            }
        }
        Ok(Cholesky { factor: g })
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Solves `A·X = B` column by column.
    pub fn solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.factor.nrows();
        if b.nrows() != n {
            return Err(ElmError::shape(format!(
                "right-hand side has {} rows, system has {n}",
                b.nrows()
            )));
        }
        let g = &self.factor;
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            // G y = b
            for j in 0..n {
                let yj = col[j] / g[(j, j)];
                col[j] = yj;
                for i in j + 1..n {
                    col[i] -= g[(i, j)] * yj;
                }
            }
            // Gᵀ x = y
            for i in (0..n).rev() {
                let gi = g.column(i);
                let mut s = col[i];
                for k in i + 1..n {
                    s -= gi[k] * col[k];
                }
                col[i] = s / g[(i, i)];
            }
        }
        Ok(x)
    }
}
