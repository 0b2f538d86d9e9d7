//! Frozen random hidden layers.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activation::ActivationKind;
use crate::batch::FeatureBatch;
use crate::error::{ElmError, Result};

/// Random input weights `W̃` (`D × L`) and biases `b` (length `L`), never trained.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomLayer {
    weights: DMatrix<f64>,
    bias: DVector<f64>,
    activation: ActivationKind,
    seed: u64,
    // ‖w̃_j‖² per column, cached for radial nodes.
    column_norms: Vec<f64>,
}

impl RandomLayer {
    /// Draws `W̃` i.i.d. uniform on [-1, 1]; `b` uniform on [-1, 1] for
    /// additive nodes and on (0, 1] for radial nodes. Entries are drawn
    /// column by column (weights then bias) from a ChaCha8 stream seeded
    /// with `seed`.
    pub fn random(input_dim: usize, hidden: usize, seed: u64, activation: ActivationKind) -> Self {
        assert!(input_dim >= 1 && hidden >= 1, "layer dimensions must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = DMatrix::zeros(input_dim, hidden);
        let mut bias = DVector::zeros(hidden);
        for j in 0..hidden {
            for i in 0..input_dim {
                weights[(i, j)] = rng.random_range(-1.0..=1.0);
            }
            bias[j] = if activation.is_radial() {
                1.0 - rng.random::<f64>()
            } else {
                rng.random_range(-1.0..=1.0)
            };
        }
        Self::from_parts(weights, bias, activation, seed).expect("shapes agree by construction")
    }

    pub fn from_parts(
        weights: DMatrix<f64>,
        bias: DVector<f64>,
        activation: ActivationKind,
        seed: u64,
    ) -> Result<Self> {
        if weights.ncols() != bias.len() {
            return Err(ElmError::shape(format!(
                "{} weight columns but {} biases",
                weights.ncols(),
                bias.len()
            )));
        }
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(ElmError::shape("empty layer"));
        }
        let column_norms = weights.column_iter().map(|c| c.norm_squared()).collect();
        Ok(RandomLayer {
            weights,
            bias,
            activation,
            seed,
            column_norms,
        })
    }

    /// Appends a unit with zero input weights whose output is a non-zero
    /// constant, giving the linear head an intercept.
    pub fn with_constant_unit(self) -> Self {
        let (d, l) = self.weights.shape();
        let weights = self.weights.insert_column(l, 0.0);
        let mut bias = self.bias.insert_row(l, 0.0);
        bias[l] = self.activation.constant_unit_bias();
        debug_assert_eq!(weights.nrows(), d);
        Self::from_parts(weights, bias, self.activation, self.seed).expect("consistent shapes")
    }

    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &DVector<f64> {
        &self.bias
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Hidden layer output `H` (`batch × L`).
    ///
    /// Additive nodes: `H = g(X·W̃ + b)`. Radial nodes:
    /// `H_ij = g(b_j·‖x_i − w̃_j‖)` with the distance expanded as
    /// `‖x‖² − 2·xᵀw̃ + ‖w̃‖²` and clamped at zero.
    pub fn hidden<B: FeatureBatch + ?Sized>(&self, x: &B) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(ElmError::shape(format!(
                "batch has {} columns, layer expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let mut h = x.mul(&self.weights);
        let g = self.activation;
        if g.is_radial() {
            let row_norms = x.row_squared_norms();
            for (j, mut col) in h.column_iter_mut().enumerate() {
                let (b, wn) = (self.bias[j], self.column_norms[j]);
                for (v, xn) in col.iter_mut().zip(&row_norms) {
                    let dist = (xn - 2.0 * *v + wn).max(0.0).sqrt();
                    *v = g.apply(b * dist);
                }
            }
        } else {
            for (j, mut col) in h.column_iter_mut().enumerate() {
                let b = self.bias[j];
                col.apply(|v| *v = g.apply(*v + b));
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::SparseBatch;
    use crate::encode::EncodedInstance;

    #[test]
    fn deterministic_in_seed() {
        let a = RandomLayer::random(3, 5, 42, ActivationKind::Sigmoid);
        let b = RandomLayer::random(3, 5, 42, ActivationKind::Sigmoid);
        assert_eq!(a, b);
        assert_ne!(a, RandomLayer::random(3, 5, 43, ActivationKind::Sigmoid));
    }

    #[test]
    fn support_of_weights_and_biases() {
        let l = RandomLayer::random(7, 40, 1, ActivationKind::Relu);
        assert!(l.weights().iter().all(|w| w.abs() <= 1.0));
        assert!(l.bias().iter().all(|b| b.abs() <= 1.0));
        assert!(l.bias().iter().any(|b| *b < 0.0));
        let r = RandomLayer::random(7, 400, 1, ActivationKind::GaussianRbf);
        assert!(r.bias().iter().all(|b| *b > 0.0 && *b <= 1.0));
    }

    #[test]
    fn weight_mean_near_zero() {
        let l = RandomLayer::random(2, 10_000, 9, ActivationKind::Sine);
        let mean = l.weights().mean();
        // sd of the mean of 20000 U[-1,1] draws is 0.0041
        assert!(mean.abs() < 0.02, "{mean}");
    }

    #[test]
    fn zero_input_gives_activation_of_bias() {
        let l = RandomLayer::random(4, 6, 3, ActivationKind::Sigmoid);
        let h = l.hidden(&DMatrix::zeros(1, 4)).unwrap();
        for j in 0..6 {
            assert_eq!(h[(0, j)], 1.0 / (1.0 + (-l.bias()[j]).exp()));
        }
    }

    #[test]
    fn relu_clamps() {
        let w = DMatrix::from_element(1, 1, 1.0);
        let b = DVector::from_element(1, 0.0);
        let l = RandomLayer::from_parts(w, b, ActivationKind::Relu, 0).unwrap();
        let h = l.hidden(&DMatrix::from_element(1, 1, -0.5)).unwrap();
        assert_eq!(h[(0, 0)], 0.0);
    }

    #[test]
    fn sine_matches_scalar_loop() {
        let x = DMatrix::from_row_slice(3, 2, &[0.5, -1.0, 2.0, 0.25, -0.75, 1.5]);
        let w = DMatrix::from_row_slice(2, 3, &[0.1, -0.4, 0.9, 0.7, 0.2, -0.3]);
        let b = DVector::from_vec(vec![0.05, -0.6, 0.33]);
        let l = RandomLayer::from_parts(w.clone(), b.clone(), ActivationKind::Sine, 0).unwrap();
        let h = l.hidden(&x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut pre = b[j];
                for k in 0..2 {
                    pre += x[(i, k)] * w[(k, j)];
                }
                assert!((h[(i, j)] - pre.sin()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rbf_matches_direct_distance() {
        let l = RandomLayer::random(5, 8, 11, ActivationKind::GaussianRbf);
        let x = DMatrix::from_fn(4, 5, |i, j| ((i * 5 + j) as f64 * 0.37).sin());
        let h = l.hidden(&x).unwrap();
        for i in 0..4 {
            for j in 0..8 {
                let d = (x.row(i).transpose() - l.weights().column(j)).norm();
                let expect = (-(l.bias()[j] * d).powi(2)).exp();
                assert!((h[(i, j)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sparse_and_dense_inputs_agree() {
        for act in ActivationKind::ALL {
            let l = RandomLayer::random(6, 5, 2, act);
            let rows = vec![
                EncodedInstance::from_pairs(vec![(1, 1.0), (4, 0.5)], 0),
                EncodedInstance::from_pairs(vec![(0, 2.0)], 1),
            ];
            let mut dense = DMatrix::zeros(2, 6);
            dense[(0, 1)] = 1.0;
            dense[(0, 4)] = 0.5;
            dense[(1, 0)] = 2.0;
            let hs = l.hidden(&SparseBatch::new(6, &rows).unwrap()).unwrap();
            let hd = l.hidden(&dense).unwrap();
            assert!((hs - hd).abs().max() < 1e-14, "{act}");
        }
    }

    #[test]
    fn hidden_entries_respect_ranges() {
        let x = DMatrix::from_fn(50, 3, |i, j| ((i * 3 + j) as f64).cos() * 3.0);
        let s = RandomLayer::random(3, 20, 5, ActivationKind::Sigmoid).hidden(&x).unwrap();
        assert!(s.iter().all(|v| *v > 0.0 && *v < 1.0));
        let r = RandomLayer::random(3, 20, 5, ActivationKind::Relu).hidden(&x).unwrap();
        assert!(r.iter().all(|v| *v >= 0.0 && v.is_finite()));
    }

    #[test]
    fn dimension_mismatch() {
        let l = RandomLayer::random(3, 2, 0, ActivationKind::Relu);
        assert!(matches!(l.hidden(&DMatrix::zeros(1, 4)), Err(ElmError::Shape(_))));
        let w = DMatrix::zeros(2, 3);
        assert!(RandomLayer::from_parts(w, DVector::zeros(2), ActivationKind::Relu, 0).is_err());
    }

    #[test]
    fn constant_unit_is_constant() {
        for act in ActivationKind::ALL {
            let l = RandomLayer::random(3, 4, 1, act).with_constant_unit();
            assert_eq!(l.hidden_dim(), 5);
            let x = DMatrix::from_fn(6, 3, |i, j| (i as f64 - j as f64) * 0.7);
            let h = l.hidden(&x).unwrap();
            let c = h.column(4);
            assert!(c.iter().all(|v| (v - c[0]).abs() < 1e-15 && v.abs() > 0.1), "{act}");
        }
    }
}
