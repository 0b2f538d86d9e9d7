//! Deterministic train/validation/test splits and batch ranges.

use std::ops::Range;

use crate::error::{ElmError, Result};

/// Train/validation/test ratios. Splits are contiguous in file order unless a
/// shuffle seed is set, in which case they are contiguous in the order given
/// by [`shuffled_order`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    ratios: [f64; 3],
    shuffle: Option<u64>,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let ratios = [train, validation, test];
        if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(ElmError::Split(format!("ratios must be non-negative, got {ratios:?}")));
        }
        let sum: f64 = ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(ElmError::Split(format!("ratios must sum to 1, got {sum}")));
        }
        Ok(SplitSpec {
            ratios,
            shuffle: None,
        })
    }

    pub fn with_shuffle(mut self, seed: u64) -> Self {
        self.shuffle = Some(seed);
        self
    }

    pub fn ratios(&self) -> [f64; 3] {
        self.ratios
    }

    pub fn shuffle_seed(&self) -> Option<u64> {
        self.shuffle
    }
}

impl Default for SplitSpec {
    /// 8/1/1.
    fn default() -> Self {
        SplitSpec {
            ratios: [0.8, 0.1, 0.1],
            shuffle: None,
        }
    }
}

impl std::str::FromStr for SplitSpec {
    type Err = ElmError;

    /// Accepts `0.8,0.1,0.1` or relative weights such as `8/1/1`.
    fn from_str(s: &str) -> Result<Self> {
        let sep = if s.contains('/') { '/' } else { ',' };
        let parts = s
            .split(sep)
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| ElmError::Split(format!("cannot parse split {s:?}")))?;
        if parts.len() != 3 {
            return Err(ElmError::Split(format!("split needs three parts, got {s:?}")));
        }
        if sep == '/' {
            let total: f64 = parts.iter().sum();
            if total.is_nan() || total <= 0.0 {
                return Err(ElmError::Split(format!("split weights must be positive, got {s:?}")));
            }
            // Normalise, then absorb rounding drift into the training share.
            let v = parts[1] / total;
            let t = parts[2] / total;
            return SplitSpec::new(1.0 - v - t, v, t);
        }
        SplitSpec::new(parts[0], parts[1], parts[2])
    }
}

impl std::fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [a, b, c] = self.ratios;
        write!(f, "{a},{b},{c}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

impl Splits {
    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.validation.len(), self.test.len()]
    }
}

/// Splits `0..n` into contiguous train, validation and test ranges.
///
/// Validation and test receive `round(n * ratio)` instances each; training
/// takes the remainder.
pub fn split_dataset(n: usize, spec: &SplitSpec) -> Result<Splits> {
    if n < 3 {
        return Err(ElmError::Split(format!("need at least 3 instances, got {n}")));
    }
    let [_, rv, rt] = spec.ratios;
    let val = (n as f64 * rv).round() as usize;
    let test = (n as f64 * rt).round() as usize;
    for (name, ratio, size) in [("validation", rv, val), ("test", rt, test)] {
        if ratio > 0.0 && size == 0 {
            return Err(ElmError::Split(format!(
                "{name} ratio {ratio} gives an empty split for {n} instances"
            )));
        }
    }
    if val + test > n {
        return Err(ElmError::Split(format!("split sizes exceed {n} instances")));
    }
    let train = n - val - test;
    Ok(Splits {
        train: 0..train,
        validation: train..train + val,
        test: train + val..n,
    })
}

/// Fisher-Yates permutation of `0..n` driven by a ChaCha8 stream.
pub fn shuffled_order(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Consecutive batch ranges covering `range`; all full except possibly the last.
pub fn batch_ranges(range: Range<usize>, batch_size: usize) -> impl Iterator<Item = Range<usize>> {
    assert!(batch_size >= 1, "batch_size must be positive");
    let end = range.end;
    range
        .step_by(batch_size)
        .map(move |start| start..(start + batch_size).min(end))
}
