//! Single-hidden-layer extreme learning machine.
//!
//! Training draws a frozen random layer, streams every batch through it while
//! accumulating the normal equations, and solves for the output weights once.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use crate::accumulator::NormalEqAccumulator;
use crate::activation::ActivationKind;
use crate::batch::{Dataset, FeatureBatch};
use crate::error::{ElmError, Result};
use crate::layer::RandomLayer;
use crate::split::batch_ranges;

pub const DEFAULT_HIDDEN: usize = 1000;
pub const DEFAULT_BATCH_SIZE: usize = 10_000;
pub const DEFAULT_LAMBDA: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct ElmConfig {
    pub hidden: usize,
    pub activation: ActivationKind,
    pub lambda: f64,
    pub seed: u64,
    pub batch_size: usize,
    /// Adds one constant hidden unit acting as an intercept.
    pub constant_unit: bool,
}

impl Default for ElmConfig {
    fn default() -> Self {
        ElmConfig {
            hidden: DEFAULT_HIDDEN,
            activation: ActivationKind::Relu,
            lambda: DEFAULT_LAMBDA,
            seed: 0,
            batch_size: DEFAULT_BATCH_SIZE,
            constant_unit: false,
        }
    }
}

impl ElmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(ElmError::shape("hidden layer size must be positive"));
        }
        if self.batch_size == 0 {
            return Err(ElmError::shape("batch size must be positive"));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(ElmError::Numeric(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Wall-clock cost of a training run.
///
/// Batch times cover hidden-layer evaluation plus accumulation only;
/// `total` additionally covers any feature mapping and the solves.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimingReport {
    pub batch_seconds: Vec<f64>,
    pub total_seconds: f64,
    pub instances: usize,
}

impl TimingReport {
    pub fn batches(&self) -> usize {
        self.batch_seconds.len()
    }

    pub fn mean_batch_seconds(&self) -> f64 {
        if self.batch_seconds.is_empty() {
            0.0
        } else {
            self.batch_seconds.iter().sum::<f64>() / self.batch_seconds.len() as f64
        }
    }

    pub fn instances_per_second(&self) -> f64 {
        if self.total_seconds > 0.0 {
            self.instances as f64 / self.total_seconds
        } else {
            0.0
        }
    }

    pub(crate) fn record_batch(&mut self, elapsed: Duration, rows: usize) {
        self.batch_seconds.push(elapsed.as_secs_f64());
        self.instances += rows;
    }

    pub fn absorb(&mut self, other: TimingReport) {
        self.batch_seconds.extend(other.batch_seconds);
        self.instances += other.instances;
    }
}

/// Random layer plus learned output weights `W` (`L × outputs`).
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    layer: RandomLayer,
    output: DMatrix<f64>,
    lambda: f64,
}

impl ElmModel {
    pub fn new(layer: RandomLayer, output: DMatrix<f64>, lambda: f64) -> Result<Self> {
        if output.nrows() != layer.hidden_dim() {
            return Err(ElmError::shape(format!(
                "output weights have {} rows, layer has {} hidden units",
                output.nrows(),
                layer.hidden_dim()
            )));
        }
        if output.ncols() == 0 {
            return Err(ElmError::shape("model needs at least one output"));
        }
        if output.iter().any(|v| !v.is_finite()) {
            return Err(ElmError::Numeric("output weights are not finite".into()));
        }
        Ok(ElmModel {
            layer,
            output,
            lambda,
        })
    }

    pub fn layer(&self) -> &RandomLayer {
        &self.layer
    }

    pub fn output_weights(&self) -> &DMatrix<f64> {
        &self.output
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn input_dim(&self) -> usize {
        self.layer.input_dim()
    }

    pub fn outputs(&self) -> usize {
        self.output.ncols()
    }

    /// Raw scores `hidden(x)·W`, one row per instance.
    pub fn predict<B: FeatureBatch + ?Sized>(&self, x: &B) -> Result<DMatrix<f64>> {
        Ok(self.layer.hidden(x)? * &self.output)
    }

    /// First-output scores over a whole dataset, in row order.
    pub fn scores<D: Dataset>(&self, data: &D, batch_size: usize) -> Result<Vec<f64>> {
        collect_scores(data, batch_size, |b| self.predict(b))
    }
}

pub(crate) fn collect_scores<D, F>(data: &D, batch_size: usize, mut f: F) -> Result<Vec<f64>>
where
    D: Dataset,
    F: FnMut(&D::Batch<'_>) -> Result<DMatrix<f64>>,
{
    let mut out = Vec::with_capacity(data.len());
    for range in batch_ranges(0..data.len(), batch_size.max(1)) {
        let s = f(&data.batch(range))?;
        out.extend(s.column(0).iter());
    }
    Ok(out)
}

/// Streams `data` through `layer` into a fresh accumulator. `map` turns each
/// raw batch into the layer's input (identity for a plain ELM).
pub(crate) fn accumulate_pass<D, M>(
    data: &D,
    layer: &RandomLayer,
    outputs: usize,
    batch_size: usize,
    mut map: M,
    timing: &mut TimingReport,
) -> Result<NormalEqAccumulator>
where
    D: Dataset,
    M: FnMut(&D::Batch<'_>) -> Result<Option<DMatrix<f64>>>,
{
    let mut acc = NormalEqAccumulator::new(layer.hidden_dim(), outputs);
    for range in batch_ranges(0..data.len(), batch_size) {
        let batch = data.batch(range.clone());
        let targets = data.targets(range.clone());
        let mapped = map(&batch)?;
        let start = Instant::now();
        let h = match &mapped {
            Some(x) => layer.hidden(x)?,
            None => layer.hidden(&batch)?,
        };
        acc.accumulate(&h, &targets)?;
        timing.record_batch(start.elapsed(), range.len());
    }
    Ok(acc)
}

/// Draws the random layer and accumulates `HᵀH` and `HᵀY` batch by batch,
/// stopping short of the solve. Accumulators from disjoint shards built with
/// the same config can be merged before solving.
pub fn accumulate_elm<D: Dataset>(
    data: &D,
    config: &ElmConfig,
) -> Result<(RandomLayer, NormalEqAccumulator, TimingReport)> {
    config.validate()?;
    if data.is_empty() {
        return Err(ElmError::shape("cannot train on an empty dataset"));
    }
    let started = Instant::now();
    let mut layer = RandomLayer::random(data.dim(), config.hidden, config.seed, config.activation);
    if config.constant_unit {
        layer = layer.with_constant_unit();
    }
    let mut timing = TimingReport::default();
    let acc = accumulate_pass(data, &layer, data.outputs(), config.batch_size, |_| Ok(None), &mut timing)?;
    timing.total_seconds = started.elapsed().as_secs_f64();
    Ok((layer, acc, timing))
}

/// Draws the random layer, accumulates `HᵀH` and `HᵀY` batch by batch, and
/// solves the ridge system.
pub fn train_elm<D: Dataset>(data: &D, config: &ElmConfig) -> Result<(ElmModel, TimingReport)> {
    let started = Instant::now();
    let (layer, acc, mut timing) = accumulate_elm(data, config)?;
    let output = acc.ridge_solve(config.lambda)?;
    let model = ElmModel::new(layer, output, config.lambda)?;
    timing.total_seconds = started.elapsed().as_secs_f64();
    Ok((model, timing))
}
