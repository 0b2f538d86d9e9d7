//! Multilayer ELM: greedily stacked autoencoder feature layers topped by an
//! ordinary ELM head.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::activation::ActivationKind;
use crate::autoencoder::{train_ae_with, AeConfig, AeLayer};
use crate::batch::{Dataset, FeatureBatch};
use crate::elm::{accumulate_pass, collect_scores, ElmConfig, ElmModel, TimingReport};
use crate::error::{ElmError, Result};
use crate::hashing::derive_seed;
use crate::layer::RandomLayer;

#[derive(Debug, Clone, PartialEq)]
pub struct MlElmConfig {
    /// Width of each autoencoder layer, input side first.
    pub ae_layers: Vec<usize>,
    pub lambda_ae: f64,
    /// Feature activation of the autoencoder layers; defaults to the head's.
    pub ae_activation: Option<ActivationKind>,
    /// Head configuration; its seed is the run seed all layer seeds derive from.
    pub head: ElmConfig,
}

impl MlElmConfig {
    pub fn new(ae_layers: Vec<usize>, head: ElmConfig) -> Self {
        MlElmConfig {
            ae_layers,
            lambda_ae: head.lambda,
            ae_activation: None,
            head,
        }
    }

    /// Seed of autoencoder layer `index`.
    pub fn layer_seed(&self, index: usize) -> u64 {
        derive_seed(self.head.seed, index as u64 + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlElmModel {
    ae_layers: Vec<AeLayer>,
    head: ElmModel,
    seed: u64,
}

impl MlElmModel {
    /// Checks that layer dimensions chain: `D → L₁ → … → head input`.
    pub fn new(ae_layers: Vec<AeLayer>, head: ElmModel, seed: u64) -> Result<Self> {
        if ae_layers.is_empty() {
            return Err(ElmError::shape("a multilayer ELM needs at least one autoencoder layer"));
        }
        for (i, pair) in ae_layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(ElmError::shape(format!(
                    "layer {} outputs {} features but layer {} expects {}",
                    i,
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        let last = ae_layers.last().expect("non-empty").output_dim();
        if last != head.input_dim() {
            return Err(ElmError::shape(format!(
                "last autoencoder outputs {last} features but the head expects {}",
                head.input_dim()
            )));
        }
        Ok(MlElmModel {
            ae_layers,
            head,
            seed,
        })
    }

    pub fn ae_layers(&self) -> &[AeLayer] {
        &self.ae_layers
    }

    pub fn head(&self) -> &ElmModel {
        &self.head
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.ae_layers[0].input_dim()
    }

    /// `[D, L₁, …, L_k, head hidden]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.ae_layers.iter().map(AeLayer::output_dim))
            .chain(std::iter::once(self.head.layer().hidden_dim()))
            .collect()
    }

    /// Maps a batch through every autoencoder layer.
    pub fn features<B: FeatureBatch + ?Sized>(&self, x: &B) -> Result<DMatrix<f64>> {
        Ok(feature_chain(&self.ae_layers, x)?.expect("model has at least one layer"))
    }

    pub fn predict<B: FeatureBatch + ?Sized>(&self, x: &B) -> Result<DMatrix<f64>> {
        self.head.predict(&self.features(x)?)
    }

    pub fn scores<D: Dataset>(&self, data: &D, batch_size: usize) -> Result<Vec<f64>> {
        collect_scores(data, batch_size, |b| self.predict(b))
    }
}

/// Applies `layers` in order; `None` when there are no layers.
fn feature_chain<B: FeatureBatch + ?Sized>(layers: &[AeLayer], x: &B) -> Result<Option<DMatrix<f64>>> {
    let Some((first, rest)) = layers.split_first() else {
        return Ok(None);
    };
    let mut f = first.transform(x)?;
    for layer in rest {
        f = layer.transform(&f)?;
    }
    Ok(Some(f))
}

/// Trains autoencoder layers one at a time, each on the representation
/// produced by the layers before it, then fits the ELM head on the final
/// representation. Costs one pass over `data` per layer plus one for the head.
pub fn train_ml_elm<D: Dataset>(data: &D, config: &MlElmConfig) -> Result<(MlElmModel, TimingReport)> {
    config.head.validate()?;
    if config.ae_layers.is_empty() {
        return Err(ElmError::shape("layer list must not be empty"));
    }
    if config.ae_layers.contains(&0) {
        return Err(ElmError::shape("layer widths must be positive"));
    }
    if data.is_empty() {
        return Err(ElmError::shape("cannot train on an empty dataset"));
    }
    let started = Instant::now();
    let mut timing = TimingReport::default();
    let mut layers: Vec<AeLayer> = Vec::with_capacity(config.ae_layers.len());
    let mut dim = data.dim();
    for (k, &width) in config.ae_layers.iter().enumerate() {
        let ae = AeConfig {
            hidden: width,
            activation: config.head.activation,
            feature_activation: config.ae_activation,
            lambda: config.lambda_ae,
            seed: config.layer_seed(k),
            batch_size: config.head.batch_size,
        };
        let layer = train_ae_with(data, dim, &ae, |b| feature_chain(&layers, b), &mut timing)?;
        dim = layer.output_dim();
        layers.push(layer);
    }

    let head_cfg = &config.head;
    let mut random = RandomLayer::random(dim, head_cfg.hidden, head_cfg.seed, head_cfg.activation);
    if head_cfg.constant_unit {
        random = random.with_constant_unit();
    }
    let acc = accumulate_pass(
        data,
        &random,
        data.outputs(),
        head_cfg.batch_size,
        |b| feature_chain(&layers, b),
        &mut timing,
    )?;
    let output = acc.ridge_solve(head_cfg.lambda)?;
    let head = ElmModel::new(random, output, head_cfg.lambda)?;
    let model = MlElmModel::new(layers, head, head_cfg.seed)?;
    timing.total_seconds = started.elapsed().as_secs_f64();
    Ok((model, timing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::{orthogonal_layer, orthonormality_error};
    use crate::batch::{DenseDataset, SparseDataset};
    use crate::elm::train_elm;
    use crate::encode::EncodedInstance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(n: usize, d: usize, seed: u64) -> DenseDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(n, 1, |i, _| (x[(i, 0)] + x[(i, 1)] > 0.0) as u8 as f64);
        DenseDataset::new(x, y).unwrap()
    }

    fn head(hidden: usize, seed: u64) -> ElmConfig {
        ElmConfig {
            hidden,
            activation: ActivationKind::Sigmoid,
            lambda: 1e-3,
            seed,
            batch_size: 50,
            constant_unit: false,
        }
    }

    #[test]
    fn two_layer_shape() {
        let data = random_dense(300, 10, 1);
        let cfg = MlElmConfig::new(vec![8, 6], head(12, 4));
        let (m, timing) = train_ml_elm(&data, &cfg).unwrap();
        assert_eq!(m.layer_dims(), vec![10, 8, 6, 12]);
        for layer in m.ae_layers() {
            assert!(orthonormality_error(layer.output_weights()) < 1e-8);
        }
        // Three passes of six batches each.
        assert_eq!(timing.batches(), 18);
        assert_eq!(timing.instances, 900);
    }

    #[test]
    fn deterministic() {
        let data = random_dense(120, 5, 2);
        let cfg = MlElmConfig::new(vec![4], head(9, 7));
        assert_eq!(train_ml_elm(&data, &cfg).unwrap().0, train_ml_elm(&data, &cfg).unwrap().0);
    }

    #[test]
    fn predict_composes_layers() {
        let data = random_dense(100, 6, 3);
        let (m, _) = train_ml_elm(&data, &MlElmConfig::new(vec![5, 3], head(7, 1))).unwrap();
        let x = data.inputs();
        let scores = m.predict(x).unwrap();
        // Reference: explicit loops for each layer.
        for i in 0..x.nrows() {
            let mut rep: Vec<f64> = x.row(i).iter().copied().collect();
            for layer in m.ae_layers() {
                let w = layer.output_weights();
                rep = (0..w.nrows())
                    .map(|j| {
                        let s: f64 = (0..w.ncols()).map(|k| rep[k] * w[(j, k)]).sum();
                        layer.feature_activation().apply(s)
                    })
                    .collect();
            }
            let hl = m.head().layer();
            let mut score = 0.0;
            for j in 0..hl.hidden_dim() {
                let pre: f64 = (0..rep.len()).map(|k| rep[k] * hl.weights()[(k, j)]).sum::<f64>() + hl.bias()[j];
                score += hl.activation().apply(pre) * m.head().output_weights()[(j, 0)];
            }
            assert!((scores[(i, 0)] - score).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_size_invariant_predictions() {
        let data = random_dense(64, 4, 5);
        let (m, _) = train_ml_elm(&data, &MlElmConfig::new(vec![3], head(6, 2))).unwrap();
        let all = m.scores(&data, 10_000).unwrap();
        let single = m.scores(&data, 1).unwrap();
        for (a, b) in all.iter().zip(&single) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn identity_chain_equals_head_alone() {
        let random = orthogonal_layer(4, 4, 0, ActivationKind::Identity);
        let ae = AeLayer::new(random, DMatrix::identity(4, 4), 0.0, ActivationKind::Identity).unwrap();
        let data = random_dense(50, 4, 6);
        let (head_model, _) = train_elm(&data, &head(8, 3)).unwrap();
        let m = MlElmModel::new(vec![ae], head_model.clone(), 3).unwrap();
        assert_eq!(m.predict(data.inputs()).unwrap(), head_model.predict(data.inputs()).unwrap());
    }

    #[test]
    fn sparse_input() {
        let rows: Vec<EncodedInstance> = (0..200u32)
            .map(|i| EncodedInstance::from_pairs(vec![(i % 11, 1.0), (11 + i % 5, 1.0)], (i % 11 < 3) as u8))
            .collect();
        let data = SparseDataset::new(16, rows).unwrap();
        let mut cfg = MlElmConfig::new(vec![12], head(30, 9));
        cfg.head.activation = ActivationKind::Relu;
        let (m, _) = train_ml_elm(&data, &cfg).unwrap();
        assert_eq!(m.scores(&data, 64).unwrap().len(), 200);
    }

    #[test]
    fn chain_mismatch_rejected() {
        let a = AeLayer::new(
            orthogonal_layer(5, 3, 0, ActivationKind::Relu),
            DMatrix::zeros(3, 5),
            0.0,
            ActivationKind::Relu,
        )
        .unwrap();
        let b = AeLayer::new(
            orthogonal_layer(4, 2, 0, ActivationKind::Relu),
            DMatrix::zeros(2, 4),
            0.0,
            ActivationKind::Relu,
        )
        .unwrap();
        let head_ok = ElmModel::new(RandomLayer::random(3, 2, 0, ActivationKind::Relu), DMatrix::zeros(2, 1), 0.0).unwrap();
        assert!(MlElmModel::new(vec![a.clone(), b], head_ok.clone(), 0).is_err());
        assert!(MlElmModel::new(vec![], head_ok.clone(), 0).is_err());
        let head_bad = ElmModel::new(RandomLayer::random(4, 2, 0, ActivationKind::Relu), DMatrix::zeros(2, 1), 0.0).unwrap();
        assert!(MlElmModel::new(vec![a.clone()], head_bad, 0).is_err());
        assert!(MlElmModel::new(vec![a], head_ok, 0).is_ok());
    }

    #[test]
    fn config_errors() {
        let data = random_dense(20, 3, 0);
        assert!(train_ml_elm(&data, &MlElmConfig::new(vec![], head(4, 0))).is_err());
        assert!(train_ml_elm(&data, &MlElmConfig::new(vec![0], head(4, 0))).is_err());
    }

    #[test]
    fn layer_seeds_differ() {
        let cfg = MlElmConfig::new(vec![5, 5], head(4, 11));
        assert_ne!(cfg.layer_seed(0), cfg.layer_seed(1));
        assert_ne!(cfg.layer_seed(0), cfg.head.seed);
    }
}
