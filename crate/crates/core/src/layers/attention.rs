//! Linear attention pooling over nodes, and the uniform mean pool used when
//! attention is ablated.
//!
//! Each node column gets a scalar score `s_i = x[:, i]ᵀ·w + b`; the pooled
//! vector is `Σ_i softmax(s)_i · x[:, i]`.

use super::Param;
use crate::error::{Error, Result};
use crate::numerics::{softmax, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    /// F × 1
    pub weight: Param,
    /// 1 × 1. Softmax is shift invariant, so this never affects the output.
    pub bias: Param,
}

#[derive(Clone, Debug)]
pub struct AttentionCache {
    pub input: Matrix,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct AttentionGrads {
    pub input: Matrix,
    pub weight: Matrix,
    pub bias: Matrix,
}

impl AttentionParams {
    pub fn new(weight: &[f64], bias: f64) -> Result<Self> {
        Ok(Self {
            weight: Param::new(Matrix::column_vector(weight)?),
            bias: Param::new(Matrix::row_vector(&[bias])?),
        })
    }

    pub fn zeros(features: usize) -> Self {
        Self {
            weight: Param::new(Matrix::zeros(features, 1)),
            bias: Param::new(Matrix::zeros(1, 1)),
        }
    }

    pub fn features(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.rows() != self.features() {
            return Err(Error::shape("attention_pool", x.shape(), self.weight.shape()));
        }
        let b = self.bias.value[(0, 0)];
        Ok(x
            .transpose_mul_vec(self.weight.value.as_slice())?
            .into_iter()
            .map(|s| s + b)
            .collect())
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Vec<f64>, AttentionCache)> {
        let weights = softmax(&self.scores(x)?)?;
        let pooled = x.mul_vec(&weights)?;
        Ok((
            pooled,
            AttentionCache {
                input: x.clone(),
                weights,
            },
        ))
    }

    pub fn backward(&self, cache: &AttentionCache, upstream: &[f64]) -> Result<AttentionGrads> {
        let x = &cache.input;
        if upstream.len() != x.rows() || x.rows() != self.features() {
            return Err(Error::shape("attention_backward", x.shape(), (upstream.len(), 1)));
        }
        let alpha = &cache.weights;
        // dL/dα_i = upstream · x[:, i]
        let d_alpha = x.transpose_mul_vec(upstream)?;
        let mean: f64 = alpha.iter().zip(&d_alpha).map(|(a, g)| a * g).sum();
        let d_scores: Vec<f64> = alpha.iter().zip(&d_alpha).map(|(a, g)| a * (g - mean)).collect();

        let weight = Matrix::column_vector(&x.mul_vec(&d_scores)?)?;
        let bias = Matrix::row_vector(&[d_scores.iter().sum()])?;
        let w = self.weight.value.as_slice();
        let input = Matrix::from_fn(x.rows(), x.cols(), |f, i| alpha[i] * upstream[f] + d_scores[i] * w[f]);
        Ok(AttentionGrads { input, weight, bias })
    }
}

pub fn mean_pool(x: &Matrix) -> Vec<f64> {
    let n = x.cols() as f64;
    x.row_sums().into_iter().map(|s| s / n).collect()
}

pub fn mean_pool_backward(shape: (usize, usize), upstream: &[f64]) -> Result<Matrix> {
    if upstream.len() != shape.0 {
        return Err(Error::shape("mean_pool_backward", shape, (upstream.len(), 1)));
    }
    let n = shape.1 as f64;
    Ok(Matrix::from_fn(shape.0, shape.1, |f, _| upstream[f] / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_weight_gives_mean() {
        let att = AttentionParams::zeros(2);
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 6.0], vec![-3.0, 0.0, 3.0]]).unwrap();
        let (pooled, cache) = att.forward(&x).unwrap();
        assert_abs_diff_eq!(pooled[0], 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pooled[1], 0.0, epsilon = 1e-15);
        assert_eq!(pooled.len(), 2);
        for w in cache.weights {
            assert_abs_diff_eq!(w, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(mean_pool(&x), vec![3.0, 0.0]);
    }

    #[test]
    fn single_node_passthrough() {
        let att = AttentionParams::new(&[5.0, -2.0], 0.3).unwrap();
        let x = Matrix::column_vector(&[0.7, -1.1]).unwrap();
        let (pooled, _) = att.forward(&x).unwrap();
        assert_eq!(pooled, vec![0.7, -1.1]);
    }

    #[test]
    fn hand_evaluated_weights() {
        let att = AttentionParams::new(&[3.0f64.ln()], 0.0).unwrap();
        let x = Matrix::row_vector(&[1.0, 3.0]).unwrap();
        let (pooled, cache) = att.forward(&x).unwrap();
        assert_abs_diff_eq!(cache.weights[0], 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(cache.weights[1], 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(pooled[0], 2.8, epsilon = 1e-12);
    }

    #[test]
    fn feature_mismatch_is_shape_error() {
        let att = AttentionParams::zeros(3);
        assert!(matches!(att.forward(&Matrix::zeros(2, 4)), Err(Error::Shape { .. })));
    }

    #[test]
    fn bias_gradient_vanishes() {
        let att = AttentionParams::new(&[0.4, -0.9], 1.5).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 0.5], vec![-1.0, 0.25, 3.0]]).unwrap();
        let (_, cache) = att.forward(&x).unwrap();
        let g = att.backward(&cache, &[0.3, -0.8]).unwrap();
        assert!(g.bias[(0, 0)].abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn pooled_inside_hull_and_shift_invariant(
            xv in proptest::collection::vec(-5.0f64..5.0, 12),
            wv in proptest::collection::vec(-3.0f64..3.0, 3),
            b in -10.0f64..10.0,
            shift in -50.0f64..50.0,
        ) {
            let x = Matrix::new(3, 4, xv).unwrap();
            let att = AttentionParams::new(&wv, b).unwrap();
            let (pooled, cache) = att.forward(&x).unwrap();
            prop_assert!((cache.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for (f, p) in pooled.iter().enumerate() {
                let lo = x.row(f).iter().copied().fold(f64::INFINITY, f64::min);
                let hi = x.row(f).iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(*p >= lo - 1e-12 && *p <= hi + 1e-12);
            }
            let shifted = AttentionParams::new(&wv, b + shift).unwrap();
            let (pooled_s, _) = shifted.forward(&x).unwrap();
            for (p, q) in pooled.iter().zip(&pooled_s) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
        }
    }
}
