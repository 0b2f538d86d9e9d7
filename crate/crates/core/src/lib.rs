//! Extreme learning machines for click-through-rate prediction.
//!
//! Hidden layers are random and frozen; only output weights are learned, by
//! a ridge solve over normal equations accumulated batch by batch. The crate
//! covers the full pipeline: delimited-data parsing and feature hashing,
//! single-layer and autoencoder-stacked models, field embeddings, metrics and
//! binary model files.

pub mod accumulator;
pub mod activation;
pub mod autoencoder;
pub mod batch;
pub mod cholesky;
pub mod elm;
pub mod embedding;
pub mod encode;
pub mod error;
pub mod hashing;
pub mod io;
pub mod layer;
pub mod metrics;
pub mod ml_elm;
pub mod schema;
pub mod split;
pub mod synthetic;

pub use accumulator::NormalEqAccumulator;
pub use activation::ActivationKind;
pub use autoencoder::{procrustes_orthogonalize, AeConfig, AeLayer};
pub use batch::{Dataset, DenseDataset, FeatureBatch, SparseBatch, SparseDataset, Subset};
pub use elm::{accumulate_elm, train_elm, ElmConfig, ElmModel, TimingReport};
pub use embedding::{pretrain_embeddings, DenseInstance, EmbeddedDataset, EmbeddingTable, PretrainConfig, Pretrained};
pub use encode::{hash_encode, EncodedInstance};
pub use error::{ElmError, Result};
pub use io::{load_embeddings, load_model, save_embeddings, SavedModel};
pub use layer::RandomLayer;
pub use metrics::MetricReport;
pub use ml_elm::{train_ml_elm, MlElmConfig, MlElmModel};
pub use schema::{parse_record, FeatureSchema, Field, FieldKind, RawRecord};
pub use split::{split_dataset, SplitSpec, Splits};
