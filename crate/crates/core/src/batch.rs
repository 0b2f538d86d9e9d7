//! Row batches fed to hidden layers, and in-memory datasets that hand them out.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::encode::EncodedInstance;
use crate::error::{ElmError, Result};

/// A batch of input rows, sparse or dense.
///
/// Implementations never densify sparse rows: products touch only the
/// stored non-zeros.
pub trait FeatureBatch {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `self · rhs` for a `ncols × k` matrix.
    fn mul(&self, rhs: &DMatrix<f64>) -> DMatrix<f64>;

    /// `out += lhsᵀ · self` for a `nrows × k` matrix `lhs`.
    fn add_transposed_product(&self, lhs: &DMatrix<f64>, out: &mut DMatrix<f64>);

    fn row_squared_norms(&self) -> Vec<f64>;
}

impl FeatureBatch for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn mul(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self * rhs
    }

    fn add_transposed_product(&self, lhs: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        out.gemm(1.0, &lhs.transpose(), self, 1.0);
    }

    fn row_squared_norms(&self) -> Vec<f64> {
        self.row_iter().map(|r| r.norm_squared()).collect()
    }
}

/// Borrowed view over hashed sparse instances of a fixed dimension.
#[derive(Debug, Clone, Copy)]
pub struct SparseBatch<'a> {
    dim: usize,
    rows: &'a [EncodedInstance],
}

impl<'a> SparseBatch<'a> {
    pub fn new(dim: usize, rows: &'a [EncodedInstance]) -> Result<Self> {
        if let Some(bad) = rows
            .iter()
            .find(|r| r.indices.last().is_some_and(|&i| i as usize >= dim))
        {
            return Err(ElmError::shape(format!(
                "sparse index {} outside input dimension {dim}",
                bad.indices.last().unwrap()
            )));
        }
        Ok(SparseBatch { dim, rows })
    }

    pub fn rows(&self) -> &'a [EncodedInstance] {
        self.rows
    }
}

impl FeatureBatch for SparseBatch<'_> {
    fn nrows(&self) -> usize {
        self.rows.len()
    }

    fn ncols(&self) -> usize {
        self.dim
    }

    fn mul(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let k = rhs.ncols();
        let n = self.rows.len();
        // Row-major scratch so each non-zero streams one contiguous rhs row.
        let rhs_t = rhs.transpose();
        let rhs_rows = rhs_t.as_slice();
        let mut acc = vec![0.0; k];
        let mut out = DMatrix::zeros(n, k);
        for (i, row) in self.rows.iter().enumerate() {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for (idx, v) in row.iter() {
                let w = &rhs_rows[idx * k..(idx + 1) * k];
                for (a, wj) in acc.iter_mut().zip(w) {
                    *a += v * wj;
                }
            }
            for (j, a) in acc.iter().enumerate() {
                out[(i, j)] = *a;
            }
        }
        out
    }

    fn add_transposed_product(&self, lhs: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        // out[:, idx] += v · lhs[i, :]ᵀ for each stored (i, idx, v)
        for (i, row) in self.rows.iter().enumerate() {
            let l = lhs.row(i);
            for (idx, v) in row.iter() {
                let mut col = out.column_mut(idx);
                col.axpy(v, &l.transpose(), 1.0);
            }
        }
    }

    fn row_squared_norms(&self) -> Vec<f64> {
        self.rows.iter().map(EncodedInstance::squared_norm).collect()
    }
}

/// Random-access training data: inputs by row range plus real-valued targets.
pub trait Dataset {
    type Batch<'a>: FeatureBatch
    where
        Self: 'a;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dim(&self) -> usize;

    fn outputs(&self) -> usize;

    fn batch(&self, rows: Range<usize>) -> Self::Batch<'_>;

    /// `rows.len() × outputs()` target matrix.
    fn targets(&self, rows: Range<usize>) -> DMatrix<f64>;
}

/// Hashed instances held in memory; the target is the 0/1 label.
#[derive(Debug, Clone)]
pub struct SparseDataset {
    dim: usize,
    instances: Vec<EncodedInstance>,
}

impl SparseDataset {
    pub fn new(dim: usize, instances: Vec<EncodedInstance>) -> Result<Self> {
        SparseBatch::new(dim, &instances)?;
        Ok(SparseDataset { dim, instances })
    }

    pub fn instances(&self) -> &[EncodedInstance] {
        &self.instances
    }

    pub fn labels(&self) -> Vec<u8> {
        self.instances.iter().map(|i| i.label).collect()
    }
}

impl Dataset for SparseDataset {
    type Batch<'a> = SparseBatch<'a>;

    fn len(&self) -> usize {
        self.instances.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn outputs(&self) -> usize {
        1
    }

    fn batch(&self, rows: Range<usize>) -> SparseBatch<'_> {
        SparseBatch {
            dim: self.dim,
            rows: &self.instances[rows],
        }
    }

    fn targets(&self, rows: Range<usize>) -> DMatrix<f64> {
        let labels = &self.instances[rows];
        DMatrix::from_iterator(labels.len(), 1, labels.iter().map(|i| f64::from(i.label)))
    }
}

/// Dense inputs (`n × D`) with dense targets (`n × outputs`).
#[derive(Debug, Clone)]
pub struct DenseDataset {
    inputs: DMatrix<f64>,
    targets: DMatrix<f64>,
}

impl DenseDataset {
    pub fn new(inputs: DMatrix<f64>, targets: DMatrix<f64>) -> Result<Self> {
        if inputs.nrows() != targets.nrows() {
            return Err(ElmError::shape(format!(
                "{} input rows but {} target rows",
                inputs.nrows(),
                targets.nrows()
            )));
        }
        Ok(DenseDataset { inputs, targets })
    }

    /// Single-output dataset from row vectors and scalar targets.
    pub fn from_rows(rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(ElmError::shape("rows of unequal length"));
        }
        let inputs = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        Self::new(inputs, DMatrix::from_column_slice(targets.len(), 1, targets))
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn all_targets(&self) -> &DMatrix<f64> {
        &self.targets
    }
}

impl Dataset for DenseDataset {
    type Batch<'a> = DMatrix<f64>;

    fn len(&self) -> usize {
        self.inputs.nrows()
    }

    fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    fn outputs(&self) -> usize {
        self.targets.ncols()
    }

    fn batch(&self, rows: Range<usize>) -> DMatrix<f64> {
        self.inputs.rows(rows.start, rows.len()).into_owned()
    }

    fn targets(&self, rows: Range<usize>) -> DMatrix<f64> {
        self.targets.rows(rows.start, rows.len()).into_owned()
    }
}

/// A contiguous row range of another dataset, e.g. one split.
#[derive(Debug, Clone)]
pub struct Subset<'d, D> {
    inner: &'d D,
    range: Range<usize>,
}

impl<'d, D: Dataset> Subset<'d, D> {
    pub fn new(inner: &'d D, range: Range<usize>) -> Result<Self> {
        if range.end > inner.len() || range.start > range.end {
            return Err(ElmError::shape(format!(
                "range {range:?} outside dataset of {} rows",
                inner.len()
            )));
        }
        Ok(Subset { inner, range })
    }

    fn shift(&self, rows: Range<usize>) -> Range<usize> {
        assert!(rows.end <= self.range.len(), "row range outside subset");
        self.range.start + rows.start..self.range.start + rows.end
    }
}

impl<D: Dataset> Dataset for Subset<'_, D> {
    type Batch<'a>
        = D::Batch<'a>
    where
        Self: 'a;

    fn len(&self) -> usize {
        self.range.len()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn outputs(&self) -> usize {
        self.inner.outputs()
    }

    fn batch(&self, rows: Range<usize>) -> D::Batch<'_> {
        self.inner.batch(self.shift(rows))
    }

    fn targets(&self, rows: Range<usize>) -> DMatrix<f64> {
        self.inner.targets(self.shift(rows))
    }
}
