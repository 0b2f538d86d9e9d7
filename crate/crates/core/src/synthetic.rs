//! Synthetic click logs with a planted logistic ground truth.
//!
//! Each field value carries a hidden weight; a click is drawn with
//! probability `σ(β₀ + Σ_f β_f[v_f])`, with `β₀` solved so the expected click
//! rate over the generated rows hits the requested target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ElmError, Result};
use crate::schema::{FeatureSchema, Field, FieldKind, RawRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub instances: usize,
    pub fields: usize,
    /// Distinct values per field.
    pub cardinality: usize,
    /// Value weights are uniform on `[-scale, scale]`.
    pub weight_scale: f64,
    pub positive_rate: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            instances: 100_000,
            fields: 20,
            cardinality: 50,
            weight_scale: 1.0,
            positive_rate: 0.17,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedData {
    pub records: Vec<RawRecord>,
    /// True click probability of each record.
    pub probabilities: Vec<f64>,
    pub intercept: f64,
    /// `weights[f][v]`.
    pub weights: Vec<Vec<f64>>,
}

impl PlantedData {
    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Value ids as generated, before string formatting.
    pub fn value_id(record: &RawRecord, field: usize) -> Option<usize> {
        let v = record.values[field].as_deref()?;
        v.rsplit('_').next()?.parse().ok()
    }

    /// Writes records as delimited lines in the column order of `schema`.
    pub fn to_lines(&self, schema: &FeatureSchema) -> String {
        let delim = schema.delimiter();
        let mut out = String::new();
        for r in &self.records {
            let mut values = r.values.iter();
            for col in 0..schema.column_count() {
                if col > 0 {
                    out.push(delim);
                }
                if col == schema.label_column() {
                    out.push(if r.label == 1 { '1' } else { '0' });
                } else if let Some(Some(v)) = values.next() {
                    out.push_str(v);
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Tab-separated schema for planted data: label first, then `C1..CF`.
pub fn planted_schema(fields: usize) -> FeatureSchema {
    let fields = (1..=fields)
        .map(|i| Field {
            name: format!("C{i}"),
            kind: FieldKind::Categorical,
        })
        .collect();
    FeatureSchema::tab_separated(fields).expect("generated names are unique")
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn generate(config: &PlantedConfig) -> Result<PlantedData> {
    if config.instances == 0 || config.fields == 0 || config.cardinality == 0 {
        return Err(ElmError::shape("planted data needs instances, fields and values"));
    }
    if !(config.positive_rate > 0.0 && config.positive_rate < 1.0) {
        return Err(ElmError::Numeric(format!(
            "positive rate must lie in (0, 1), got {}",
            config.positive_rate
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let s = config.weight_scale;
    let weights: Vec<Vec<f64>> = (0..config.fields)
        .map(|_| (0..config.cardinality).map(|_| rng.random_range(-s..=s)).collect())
        .collect();
    let ids: Vec<Vec<usize>> = (0..config.instances)
        .map(|_| (0..config.fields).map(|_| rng.random_range(0..config.cardinality)).collect())
        .collect();
    let logits: Vec<f64> = ids
        .iter()
        .map(|row| row.iter().zip(&weights).map(|(&v, w)| w[v]).sum())
        .collect();

    // Mean click rate is increasing in the intercept; bisect.
    let rate = |b: f64| logits.iter().map(|z| sigmoid(z + b)).sum::<f64>() / logits.len() as f64;
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) < config.positive_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let intercept = 0.5 * (lo + hi);

    let mut probabilities = Vec::with_capacity(config.instances);
    let records = ids
        .iter()
        .zip(&logits)
        .map(|(row, z)| {
            let p = sigmoid(z + intercept);
            probabilities.push(p);
            RawRecord {
                values: row.iter().enumerate().map(|(f, v)| Some(format!("f{f}_{v}"))).collect(),
                label: rng.random_bool(p) as u8,
            }
        })
        .collect();
    Ok(PlantedData {
        records,
        probabilities,
        intercept,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_record;

    #[test]
    fn hits_target_rate() {
        let data = generate(&PlantedConfig { instances: 20_000, ..Default::default() }).unwrap();
        let mean_p = data.probabilities.iter().sum::<f64>() / 20_000.0;
        assert!((mean_p - 0.17).abs() < 1e-9);
        let observed = data.labels().iter().filter(|&&y| y == 1).count() as f64 / 20_000.0;
        assert!((observed - 0.17).abs() < 0.01, "{observed}");
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let cfg = PlantedConfig { instances: 500, ..Default::default() };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        let c = generate(&PlantedConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn lines_parse_back() {
        let cfg = PlantedConfig { instances: 50, fields: 4, ..Default::default() };
        let data = generate(&cfg).unwrap();
        let schema = planted_schema(4);
        let text = data.to_lines(&schema);
        for (i, (line, r)) in text.lines().zip(&data.records).enumerate() {
            assert_eq!(&parse_record(line, i + 1, &schema).unwrap(), r);
        }
        assert!(PlantedData::value_id(&data.records[0], 2).unwrap() < 50);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(generate(&PlantedConfig { instances: 0, ..Default::default() }).is_err());
        assert!(generate(&PlantedConfig { positive_rate: 1.0, ..Default::default() }).is_err());
    }
}
