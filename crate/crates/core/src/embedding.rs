//! Field embedding tables that turn raw categorical records into dense ELM
//! inputs, and a one-pass logistic surrogate that trains them.
//!
//! Values are bucketed with the same portable hash as feature hashing, so
//! there is no vocabulary: unseen and rare values share buckets.

use std::ops::Range;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::batch::{Dataset, DenseDataset};
use crate::error::{ElmError, Result};
use crate::hashing::{derive_seed, value_hash};
use crate::schema::RawRecord;

pub const DEFAULT_DIM: usize = 8;
pub const INIT_SCALE: f32 = 0.05;

/// Rows of one field, `buckets × dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    buckets: usize,
    dim: usize,
    data: Vec<f32>,
}

impl FieldTable {
    pub fn new(buckets: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if buckets == 0 || dim == 0 {
            return Err(ElmError::shape("embedding tables need at least one bucket and dimension"));
        }
        if data.len() != buckets * dim {
            return Err(ElmError::shape(format!(
                "{} values for a {buckets}x{dim} table",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ElmError::Numeric("embedding values must be finite".into()));
        }
        Ok(FieldTable { buckets, dim, data })
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, bucket: usize) -> &[f32] {
        &self.data[bucket * self.dim..(bucket + 1) * self.dim]
    }
}

/// One embedding table per schema field, all of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    fields: Vec<FieldTable>,
    hash_seed: u64,
}

/// A record mapped through an [`EmbeddingTable`]: field vectors concatenated
/// in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseInstance {
    pub vector: Vec<f64>,
    pub label: u8,
}

impl EmbeddingTable {
    pub fn new(fields: Vec<FieldTable>, hash_seed: u64) -> Result<Self> {
        let Some(first) = fields.first() else {
            return Err(ElmError::shape("embedding table needs at least one field"));
        };
        let dim = first.dim;
        if fields.iter().any(|f| f.dim != dim) {
            return Err(ElmError::shape("all fields must share one embedding dimension"));
        }
        Ok(EmbeddingTable { fields, hash_seed })
    }

    /// Rows drawn uniform on `[-0.05, 0.05]`, field by field.
    pub fn random(buckets: &[usize], dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xE3B));
        let fields = buckets
            .iter()
            .map(|&b| {
                let data = (0..b * dim).map(|_| rng.random_range(-INIT_SCALE..=INIT_SCALE)).collect();
                FieldTable::new(b, dim, data)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(fields, seed)
    }

    pub fn fields(&self) -> &[FieldTable] {
        &self.fields
    }

    pub fn field_count(&self) -> usize {
        self.fields.len()
    }

    pub fn dim(&self) -> usize {
        self.fields[0].dim
    }

    pub fn hash_seed(&self) -> u64 {
        self.hash_seed
    }

    /// Length of every transformed vector.
    pub fn output_dim(&self) -> usize {
        self.fields.len() * self.dim()
    }

    pub fn bucket(&self, field: usize, value: &str) -> usize {
        (value_hash(self.hash_seed, field, value.as_bytes()) % self.fields[field].buckets as u64) as usize
    }

    fn check_record(&self, record: &RawRecord) -> Result<()> {
        if record.values.len() != self.fields.len() {
            return Err(ElmError::shape(format!(
                "record has {} fields, embedding table has {}",
                record.values.len(),
                self.fields.len()
            )));
        }
        Ok(())
    }

    /// Writes the embedding of `record` into `out` (length `output_dim`).
    /// Missing fields contribute zeros.
    pub fn embed_into(&self, record: &RawRecord, out: &mut [f64]) -> Result<()> {
        self.check_record(record)?;
        let d = self.dim();
        for (f, (cell, slot)) in record.values.iter().zip(out.chunks_exact_mut(d)).enumerate() {
            match cell {
                Some(v) => {
                    let row = self.fields[f].row(self.bucket(f, v));
                    for (o, r) in slot.iter_mut().zip(row) {
                        *o = f64::from(*r);
                    }
                }
                None => slot.fill(0.0),
            }
        }
        Ok(())
    }

    pub fn embed_transform(&self, record: &RawRecord) -> Result<DenseInstance> {
        let mut vector = vec![0.0; self.output_dim()];
        self.embed_into(record, &mut vector)?;
        Ok(DenseInstance {
            vector,
            label: record.label,
        })
    }

    /// Embeds a list of records into an in-memory dense dataset.
    pub fn transform_records(&self, records: &[RawRecord]) -> Result<DenseDataset> {
        let width = self.output_dim();
        // Fill row-major then transpose into nalgebra's column-major storage.
        let mut rows = vec![0.0; records.len() * width];
        for (r, chunk) in records.iter().zip(rows.chunks_exact_mut(width.max(1))) {
            self.embed_into(r, chunk)?;
        }
        let inputs = DMatrix::from_row_slice(records.len(), width, &rows);
        let targets = DMatrix::from_iterator(records.len(), 1, records.iter().map(|r| f64::from(r.label)));
        DenseDataset::new(inputs, targets)
    }

    /// Returns a copy with every row multiplied by `alpha`.
    pub fn scaled(&self, alpha: f32) -> Self {
        let fields = self
            .fields
            .iter()
            .map(|f| FieldTable {
                buckets: f.buckets,
                dim: f.dim,
                data: f.data.iter().map(|v| v * alpha).collect(),
            })
            .collect();
        EmbeddingTable {
            fields,
            hash_seed: self.hash_seed,
        }
    }
}

const MISSING: u32 = u32::MAX;

/// Records stored as one bucket id per field and embedded batch by batch.
#[derive(Debug, Clone)]
pub struct EmbeddedDataset {
    table: EmbeddingTable,
    buckets: Vec<u32>,
    labels: Vec<u8>,
}

impl EmbeddedDataset {
    pub fn new(table: EmbeddingTable) -> Self {
        EmbeddedDataset {
            table,
            buckets: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn from_records(table: EmbeddingTable, records: &[RawRecord]) -> Result<Self> {
        let mut ds = Self::new(table);
        for r in records {
            ds.push(r)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, record: &RawRecord) -> Result<()> {
        self.table.check_record(record)?;
        for (f, cell) in record.values.iter().enumerate() {
            self.buckets.push(match cell {
                Some(v) => self.table.bucket(f, v) as u32,
                None => MISSING,
            });
        }
        self.labels.push(record.label);
        Ok(())
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

impl Dataset for EmbeddedDataset {
    type Batch<'a> = DMatrix<f64>;

    fn len(&self) -> usize {
        self.labels.len()
    }

    fn dim(&self) -> usize {
        self.table.output_dim()
    }

    fn outputs(&self) -> usize {
        1
    }

    fn batch(&self, rows: Range<usize>) -> DMatrix<f64> {
        let fields = self.table.field_count();
        let d = self.table.dim();
        let mut out = DMatrix::zeros(rows.len(), fields * d);
        for (i, r) in rows.enumerate() {
            for (f, &b) in self.buckets[r * fields..(r + 1) * fields].iter().enumerate() {
                if b != MISSING {
                    for (k, v) in self.table.fields[f].row(b as usize).iter().enumerate() {
                        out[(i, f * d + k)] = f64::from(*v);
                    }
                }
            }
        }
        out
    }

    fn targets(&self, rows: Range<usize>) -> DMatrix<f64> {
        let labels = &self.labels[rows];
        DMatrix::from_iterator(labels.len(), 1, labels.iter().map(|&y| f64::from(y)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainConfig {
    pub dim: usize,
    /// Buckets per field; a single entry applies to every field.
    pub buckets: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            dim: DEFAULT_DIM,
            buckets: vec![1 << 14],
            epochs: 1,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

impl PretrainConfig {
    fn buckets_for(&self, fields: usize) -> Result<Vec<usize>> {
        match self.buckets.len() {
            1 => Ok(vec![self.buckets[0]; fields]),
            n if n == fields => Ok(self.buckets.clone()),
            n => Err(ElmError::shape(format!("{n} bucket counts for {fields} fields"))),
        }
    }
}

/// Result of surrogate pretraining: the embedding table plus the logistic
/// head `σ(w₀ + Σ_f u_fᵀ e_f)` it was trained with.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub table: EmbeddingTable,
    pub bias: f64,
    pub field_weights: Vec<Vec<f64>>,
    /// Log loss of each step, measured before that step's update.
    pub step_losses: Vec<f64>,
}

impl Pretrained {
    pub fn probability(&self, record: &RawRecord) -> Result<f64> {
        let e = self.table.embed_transform(record)?;
        let d = self.table.dim();
        let z = self.bias
            + e.vector
                .chunks_exact(d)
                .zip(&self.field_weights)
                .map(|(ev, u)| ev.iter().zip(u).map(|(a, b)| a * b).sum::<f64>())
                .sum::<f64>();
        Ok(sigmoid(z))
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `−[y ln σ(z) + (1 − y) ln(1 − σ(z))]` without overflow.
fn logistic_loss(z: f64, y: f64) -> f64 {
    let softplus = |t: f64| if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() };
    y * softplus(-z) + (1.0 - y) * softplus(z)
}

/// Trains field embeddings with a logistic model over the concatenated
/// embeddings by plain SGD on log loss, one record per step, in data order.
/// Embeddings and field weights start uniform on [-0.05, 0.05]; `w₀` at 0.
pub fn pretrain_embeddings(records: &[RawRecord], config: &PretrainConfig) -> Result<Pretrained> {
    let Some(first) = records.first() else {
        return Err(ElmError::shape("cannot pretrain on an empty dataset"));
    };
    if config.epochs == 0 {
        return Err(ElmError::shape("epochs must be at least 1"));
    }
    if !config.learning_rate.is_finite() || config.learning_rate < 0.0 {
        return Err(ElmError::Numeric(format!(
            "learning rate must be finite and >= 0, got {}",
            config.learning_rate
        )));
    }
    let n_fields = first.values.len();
    let init = EmbeddingTable::random(&config.buckets_for(n_fields)?, config.dim, config.seed)?;
    let d = config.dim;
    let mut rows: Vec<Vec<f64>> = init
        .fields
        .iter()
        .map(|f| f.data.iter().map(|v| f64::from(*v)).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0x0EAD));
    let mut weights: Vec<Vec<f64>> = (0..n_fields)
        .map(|_| (0..d).map(|_| rng.random_range(-0.05..=0.05)).collect())
        .collect();
    let mut bias = 0.0;
    let lr = config.learning_rate;
    let mut losses = Vec::with_capacity(records.len() * config.epochs);
    let mut buckets = vec![None; n_fields];
    for _ in 0..config.epochs {
        for record in records {
            init.check_record(record)?;
            let mut z = bias;
            for (f, cell) in record.values.iter().enumerate() {
                buckets[f] = cell.as_ref().map(|v| init.bucket(f, v));
                if let Some(b) = buckets[f] {
                    let e = &rows[f][b * d..(b + 1) * d];
                    z += e.iter().zip(&weights[f]).map(|(a, w)| a * w).sum::<f64>();
                }
            }
            let y = f64::from(record.label);
            let loss = logistic_loss(z, y);
            if !loss.is_finite() {
                return Err(ElmError::Divergence { step: losses.len() });
            }
            losses.push(loss);
            let g = sigmoid(z) - y;
            bias -= lr * g;
            for (f, bucket) in buckets.iter().enumerate() {
                let Some(b) = *bucket else { continue };
                let e = &mut rows[f][b * d..(b + 1) * d];
                for (ek, uk) in e.iter_mut().zip(weights[f].iter_mut()) {
                    let (e_old, u_old) = (*ek, *uk);
                    *uk -= lr * g * e_old;
                    *ek -= lr * g * u_old;
                }
            }
        }
    }
    let fields = rows
        .into_iter()
        .zip(&init.fields)
        .map(|(r, f)| FieldTable::new(f.buckets, d, r.into_iter().map(|v| v as f32).collect()))
        .collect::<Result<Vec<_>>>()
        .map_err(|_| ElmError::Divergence { step: losses.len() })?;
    Ok(Pretrained {
        table: EmbeddingTable::new(fields, config.seed)?,
        bias,
        field_weights: weights,
        step_losses: losses,
    })
}
