//! Fixtures shared by the benchmarks.

use elm_ctr::synthetic::{generate, planted_schema, PlantedConfig, PlantedData};
use elm_ctr::{hash_encode, FeatureSchema, SparseDataset};

pub const FIELDS: usize = 39;

pub fn planted(instances: usize) -> (PlantedData, FeatureSchema) {
    let data = generate(&PlantedConfig {
        instances,
        fields: FIELDS,
        cardinality: 1000,
        ..Default::default()
    })
    .expect("planted data");
    (data, planted_schema(FIELDS))
}

pub fn hashed(instances: usize, dims: usize) -> SparseDataset {
    let (data, schema) = planted(instances);
    let rows = data.records.iter().map(|r| hash_encode(r, &schema, dims, 0)).collect();
    SparseDataset::new(dims, rows).expect("sparse dataset")
}
