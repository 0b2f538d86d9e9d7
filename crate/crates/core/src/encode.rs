//! Feature hashing of raw records into sparse vectors.

use crate::hashing::{field_hash, value_hash};
use crate::schema::{FeatureSchema, FieldKind, RawRecord};

/// Sparse feature vector with a binary label.
///
/// `indices` are strictly increasing and below the hashing dimension; values
/// of colliding features have been summed.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInstance {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
    pub label: u8,
}

impl EncodedInstance {
    /// Builds an instance from unordered `(index, value)` pairs, summing duplicates.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>, label: u8) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut indices: Vec<u32> = Vec::with_capacity(pairs.len());
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if indices.last() == Some(&i) {
                *values.last_mut().expect("parallel vectors") += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        EncodedInstance {
            indices,
            values,
            label,
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }
}

/// Integer feature transform: `ln(1 + max(z, 0))`.
pub fn log_count(z: i64) -> f64 {
    (z.max(0) as f64).ln_1p()
}

/// Hashes `record` into a `hash_dims`-dimensional sparse vector.
///
/// Categorical cells map to `value_hash(seed, field, value) mod hash_dims`
/// with value 1. Integer cells map to `field_hash(seed, field) mod hash_dims`
/// with value `log_count(z)`; integer cells that do not parse are hashed as
/// categorical tokens. Missing cells emit nothing.
pub fn hash_encode(
    record: &RawRecord,
    schema: &FeatureSchema,
    hash_dims: usize,
    seed: u64,
) -> EncodedInstance {
    assert!(hash_dims >= 1, "hash_dims must be positive");
    assert!(hash_dims <= u32::MAX as usize + 1, "hash_dims exceeds u32 index space");
    debug_assert_eq!(record.values.len(), schema.field_count());
    let dims = hash_dims as u64;
    let mut pairs = Vec::with_capacity(record.values.len());
    for (f, (cell, field)) in record.values.iter().zip(schema.fields()).enumerate() {
        let Some(cell) = cell else { continue };
        let integer = match field.kind {
            FieldKind::Integer => cell.trim().parse::<i64>().ok(),
            FieldKind::Categorical => None,
        };
        let pair = match integer {
            Some(z) => ((field_hash(seed, f) % dims) as u32, log_count(z)),
            None => ((value_hash(seed, f, cell.as_bytes()) % dims) as u32, 1.0),
        };
        pairs.push(pair);
    }
    EncodedInstance::from_pairs(pairs, record.label)
}
