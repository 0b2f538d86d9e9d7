//! Streaming ridge regression via accumulated normal equations.
//!
//! Only `A = HᵀH` (`L × L`) and `C = HᵀY` (`L × outputs`) are kept, so
//! memory is independent of the number of instances and batches can be
//! accumulated in any order or on separate shards and merged.

use nalgebra::DMatrix;

use crate::batch::FeatureBatch;
use crate::cholesky::Cholesky;
use crate::error::{ElmError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NormalEqAccumulator {
    gram: DMatrix<f64>,
    cross: DMatrix<f64>,
    count: usize,
}

impl NormalEqAccumulator {
    pub fn new(hidden: usize, outputs: usize) -> Self {
        NormalEqAccumulator {
            gram: DMatrix::zeros(hidden, hidden),
            cross: DMatrix::zeros(hidden, outputs),
            count: 0,
        }
    }

    pub fn hidden(&self) -> usize {
        self.gram.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.cross.ncols()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Running `HᵀH`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Running `HᵀY`.
    pub fn cross(&self) -> &DMatrix<f64> {
        &self.cross
    }

    fn check_hidden(&self, h: &DMatrix<f64>) -> Result<()> {
        if h.ncols() != self.hidden() {
            return Err(ElmError::shape(format!(
                "hidden batch has {} columns, accumulator expects {}",
                h.ncols(),
                self.hidden()
            )));
        }
        Ok(())
    }

    /// `A += HᵀH`, `C += HᵀY`.
    pub fn accumulate(&mut self, h: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
        self.check_hidden(h)?;
        if y.nrows() != h.nrows() || y.ncols() != self.outputs() {
            return Err(ElmError::shape(format!(
                "targets are {}x{}, expected {}x{}",
                y.nrows(),
                y.ncols(),
                h.nrows(),
                self.outputs()
            )));
        }
        if h.nrows() == 0 {
            return Ok(());
        }
        let ht = h.transpose();
        self.gram.gemm(1.0, &ht, h, 1.0);
        self.cross.gemm(1.0, &ht, y, 1.0);
        self.count += h.nrows();
        Ok(())
    }

    /// Like [`accumulate`](Self::accumulate) with the targets given as a
    /// feature batch, e.g. an autoencoder reconstructing its own sparse inputs.
    pub fn accumulate_batch_targets<B: FeatureBatch + ?Sized>(
        &mut self,
        h: &DMatrix<f64>,
        targets: &B,
    ) -> Result<()> {
        self.check_hidden(h)?;
        if targets.nrows() != h.nrows() || targets.ncols() != self.outputs() {
            return Err(ElmError::shape(format!(
                "targets are {}x{}, expected {}x{}",
                targets.nrows(),
                targets.ncols(),
                h.nrows(),
                self.outputs()
            )));
        }
        if h.nrows() == 0 {
            return Ok(());
        }
        self.gram.gemm(1.0, &h.transpose(), h, 1.0);
        targets.add_transposed_product(h, &mut self.cross);
        self.count += h.nrows();
        Ok(())
    }

    /// Folds another shard into this one.
    pub fn merge(&mut self, other: &NormalEqAccumulator) -> Result<()> {
        if other.gram.shape() != self.gram.shape() || other.cross.shape() != self.cross.shape() {
            return Err(ElmError::shape("accumulators of different shapes"));
        }
        self.gram += &other.gram;
        self.cross += &other.cross;
        self.count += other.count;
        Ok(())
    }

    /// Solves `(A + λI)·W = C` by Cholesky factorization followed by two
    /// steps of iterative refinement.
    pub fn ridge_solve(&self, lambda: f64) -> Result<DMatrix<f64>> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(ElmError::Numeric(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let mut system = self.gram.clone();
        for i in 0..system.nrows() {
            system[(i, i)] += lambda;
        }
        // Symmetrize so the factor sees the average of both triangles.
        let system = (&system + system.transpose()) * 0.5;
        let chol = Cholesky::factor(&system)?;
        let mut w = chol.solve(&self.cross)?;
        for _ in 0..2 {
            let residual = &self.cross - &system * &w;
            w += chol.solve(&residual)?;
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(ElmError::Numeric("ridge solution is not finite".into()));
        }
        Ok(w)
    }

    /// `‖(A + λI)·W − C‖_max`.
    pub fn residual_max(&self, w: &DMatrix<f64>, lambda: f64) -> f64 {
        let mut r = &self.gram * w + w * lambda;
        r -= &self.cross;
        r.abs().max()
    }
}
