//! ELM autoencoder layers.
//!
//! The hidden layer uses orthonormal random weights and a unit-norm bias.
//! The ridge reconstruction weights `W_ridge = (HᵀH + λI)⁻¹HᵀX` are replaced
//! by their orthogonal polar factor (the orthogonal Procrustes solution), and
//! the transpose of that factor maps inputs to learned features.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::accumulator::NormalEqAccumulator;
use crate::activation::ActivationKind;
use crate::batch::{Dataset, FeatureBatch};
use crate::elm::TimingReport;
use crate::error::{ElmError, Result};
use crate::layer::RandomLayer;
use crate::split::batch_ranges;

/// Draws a `D × L` matrix uniform on [-1, 1] and orthonormalizes it by QR on
/// its smaller side (columns when `L ≤ D`, rows otherwise), plus a
/// unit-norm bias of length `L`. Rank-deficient draws are redrawn.
pub fn init_orthogonal(input_dim: usize, hidden: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    assert!(input_dim >= 1 && hidden >= 1, "layer dimensions must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = loop {
        let raw = DMatrix::from_fn(input_dim, hidden, |_, _| rng.random_range(-1.0..=1.0));
        let tall = hidden <= input_dim;
        let m = if tall { raw } else { raw.transpose() };
        let qr = m.qr();
        let r = qr.r();
        let diag_max = r.diagonal().abs().max();
        let diag_min = r.diagonal().abs().min();
        if diag_max > 0.0 && diag_min > 1e-10 * diag_max {
            let q = qr.q();
            break if tall { q } else { q.transpose() };
        }
    };
    let bias = loop {
        let b = DVector::from_fn(hidden, |_, _| rng.random_range(-1.0..=1.0));
        let norm = b.norm();
        if norm > 1e-12 {
            break b / norm;
        }
    };
    (weights, bias)
}

/// Orthogonal random layer for an autoencoder.
pub fn orthogonal_layer(
    input_dim: usize,
    hidden: usize,
    seed: u64,
    activation: ActivationKind,
) -> RandomLayer {
    let (w, b) = init_orthogonal(input_dim, hidden, seed);
    RandomLayer::from_parts(w, b, activation, seed).expect("shapes agree by construction")
}

/// Ridge reconstruction weights `(HᵀH + λI)⁻¹HᵀX` from an accumulator whose
/// targets were the inputs themselves.
pub fn ae_ridge_targets(acc: &NormalEqAccumulator, lambda: f64) -> Result<DMatrix<f64>> {
    acc.ridge_solve(lambda)
}

/// Nearest semi-orthogonal matrix to `w` in Frobenius norm: `U·Vᵀ` for
/// `w = U·Σ·Vᵀ`. Equivalently it maximizes `tr(wᵀQ)` over semi-orthogonal `Q`.
pub fn procrustes_orthogonalize(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if w.is_empty() {
        return Err(ElmError::shape("empty matrix"));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(ElmError::Numeric("cannot orthogonalize a non-finite matrix".into()));
    }
    let svd = w
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| ElmError::Numeric("SVD did not converge".into()))?;
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    Ok(u * v_t)
}

/// One trained autoencoder layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AeLayer {
    random: RandomLayer,
    // L × D polar factor, and its transpose used as the feature map.
    output: DMatrix<f64>,
    projection: DMatrix<f64>,
    lambda: f64,
    feature_activation: ActivationKind,
}

impl AeLayer {
    pub fn new(
        random: RandomLayer,
        output: DMatrix<f64>,
        lambda: f64,
        feature_activation: ActivationKind,
    ) -> Result<Self> {
        if output.shape() != (random.hidden_dim(), random.input_dim()) {
            return Err(ElmError::shape(format!(
                "autoencoder output weights are {:?}, expected {}x{}",
                output.shape(),
                random.hidden_dim(),
                random.input_dim()
            )));
        }
        let projection = output.transpose();
        Ok(AeLayer {
            random,
            output,
            projection,
            lambda,
            feature_activation,
        })
    }

    pub fn random_layer(&self) -> &RandomLayer {
        &self.random
    }

    /// `W_orth`, `L × D`.
    pub fn output_weights(&self) -> &DMatrix<f64> {
        &self.output
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn feature_activation(&self) -> ActivationKind {
        self.feature_activation
    }

    pub fn input_dim(&self) -> usize {
        self.random.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.random.hidden_dim()
    }

    /// Features `g(X·W_orthᵀ)`, `batch × L`. The autoencoder bias is not used.
    pub fn transform<B: FeatureBatch + ?Sized>(&self, x: &B) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(ElmError::shape(format!(
                "batch has {} columns, autoencoder expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let mut f = x.mul(&self.projection);
        let g = self.feature_activation;
        if g != ActivationKind::Identity {
            f.apply(|v| *v = g.apply(*v));
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeConfig {
    pub hidden: usize,
    pub activation: ActivationKind,
    /// Activation of the feature map; defaults to `activation`.
    pub feature_activation: Option<ActivationKind>,
    pub lambda: f64,
    pub seed: u64,
    pub batch_size: usize,
}

/// Trains one autoencoder layer on `data`, with `map` producing the layer's
/// input for each raw batch (`None` meaning the batch itself).
pub(crate) fn train_ae_with<D, M>(
    data: &D,
    input_dim: usize,
    config: &AeConfig,
    mut map: M,
    timing: &mut TimingReport,
) -> Result<AeLayer>
where
    D: Dataset,
    M: FnMut(&D::Batch<'_>) -> Result<Option<DMatrix<f64>>>,
{
    if config.hidden == 0 || config.batch_size == 0 {
        return Err(ElmError::shape("autoencoder sizes must be positive"));
    }
    let random = orthogonal_layer(input_dim, config.hidden, config.seed, config.activation);
    let mut acc = NormalEqAccumulator::new(config.hidden, input_dim);
    for range in batch_ranges(0..data.len(), config.batch_size) {
        let batch = data.batch(range.clone());
        let mapped = map(&batch)?;
        let start = Instant::now();
        match &mapped {
            Some(x) => {
                let h = random.hidden(x)?;
                acc.accumulate_batch_targets(&h, x)?;
            }
            None => {
                let h = random.hidden(&batch)?;
                acc.accumulate_batch_targets(&h, &batch)?;
            }
        }
        timing.record_batch(start.elapsed(), range.len());
    }
    let ridge = ae_ridge_targets(&acc, config.lambda)?;
    let orth = procrustes_orthogonalize(&ridge)?;
    let feature = config.feature_activation.unwrap_or(config.activation);
    AeLayer::new(random, orth, config.lambda, feature)
}

/// Trains an autoencoder that reconstructs the inputs of `data`.
pub fn train_autoencoder<D: Dataset>(data: &D, config: &AeConfig) -> Result<(AeLayer, TimingReport)> {
    if data.is_empty() {
        return Err(ElmError::shape("cannot train on an empty dataset"));
    }
    let started = Instant::now();
    let mut timing = TimingReport::default();
    let layer = train_ae_with(data, data.dim(), config, |_| Ok(None), &mut timing)?;
    timing.total_seconds = started.elapsed().as_secs_f64();
    Ok((layer, timing))
}

/// `max |QᵀQ − I|` on the smaller side of `q`.
pub fn orthonormality_error(q: &DMatrix<f64>) -> f64 {
    let gram = if q.nrows() >= q.ncols() {
        q.transpose() * q
    } else {
        q * q.transpose()
    };
    let n = gram.nrows();
    (gram - DMatrix::identity(n, n)).abs().max()
}
