//! Graph convolution: every node keeps a self transform and adds a
//! transform of its adjacency-weighted neighbourhood sum.
//!
//! ```text
//! out[:, i] = W1 · x[:, i] + W2 · Σ_j e[j][i] · x[:, j] + b[:, i]
//! ```
//!
//! In matrix form `W1·X + W2·(X·E) + B`.

use serde::{Deserialize, Serialize};

use super::Param;
use crate::error::{Error, Result};
use crate::graphgen::NeighborAggregation;
use crate::numerics::{matmul, matmul_nt, matmul_tn, Matrix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphBias {
    /// One bias column per node (G_out × N); ties the layer to a fixed N.
    #[default]
    PerNode,
    /// One bias per output channel, broadcast across nodes.
    Shared,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphConvParams {
    pub w1: Param,
    pub w2: Param,
    pub bias: Param,
    pub bias_mode: GraphBias,
}

#[derive(Clone, Debug)]
pub struct GraphConvCache {
    pub input: Matrix,
    /// `X · E`
    pub aggregated: Matrix,
}

#[derive(Clone, Debug)]
pub struct GraphConvGrads {
    pub input: Matrix,
    pub w1: Matrix,
    pub w2: Matrix,
    pub bias: Matrix,
}

impl GraphConvParams {
    pub fn new(w1: Matrix, w2: Matrix, bias: Matrix, bias_mode: GraphBias) -> Result<Self> {
        if w1.shape() != w2.shape() {
            return Err(Error::shape("GraphConvParams::new", w1.shape(), w2.shape()));
        }
        if bias.rows() != w1.rows() || (bias_mode == GraphBias::Shared && bias.cols() != 1) {
            return Err(Error::shape("GraphConvParams::new", w1.shape(), bias.shape()));
        }
        Ok(Self {
            w1: Param::new(w1),
            w2: Param::new(w2),
            bias: Param::new(bias),
            bias_mode,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize, nodes: usize, bias_mode: GraphBias) -> Self {
        let bias_cols = match bias_mode {
            GraphBias::PerNode => nodes,
            GraphBias::Shared => 1,
        };
        Self {
            w1: Param::new(Matrix::zeros(out_dim, in_dim)),
            w2: Param::new(Matrix::zeros(out_dim, in_dim)),
            bias: Param::new(Matrix::zeros(out_dim, bias_cols)),
            bias_mode,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w1.value.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.w1.value.rows()
    }

    fn check(&self, x: &Matrix, adjacency: &dyn NeighborAggregation) -> Result<()> {
        if x.rows() != self.in_dim() {
            return Err(Error::shape("graphconv", x.shape(), self.w1.shape()));
        }
        let n = x.cols();
        if adjacency.nodes() != n {
            return Err(Error::shape("graphconv", x.shape(), (adjacency.nodes(), adjacency.nodes())));
        }
        if self.bias_mode == GraphBias::PerNode && self.bias.value.cols() != n {
            return Err(Error::shape("graphconv", x.shape(), self.bias.shape()));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Matrix, adjacency: &dyn NeighborAggregation) -> Result<(Matrix, GraphConvCache)> {
        self.check(x, adjacency)?;
        let aggregated = adjacency.aggregate(x)?;
        let mut y = matmul(&self.w1.value, x)?;
        y.add_assign(&matmul(&self.w2.value, &aggregated)?)?;
        let b = &self.bias.value;
        for g in 0..y.rows() {
            for (i, v) in y.row_mut(g).iter_mut().enumerate() {
                *v += match self.bias_mode {
                    GraphBias::PerNode => b[(g, i)],
                    GraphBias::Shared => b[(g, 0)],
                };
            }
        }
        Ok((
            y,
            GraphConvCache {
                input: x.clone(),
                aggregated,
            },
        ))
    }

    pub fn backward(
        &self,
        cache: &GraphConvCache,
        adjacency: &dyn NeighborAggregation,
        upstream: &Matrix,
    ) -> Result<GraphConvGrads> {
        self.check(&cache.input, adjacency)?;
        if upstream.shape() != (self.out_dim(), cache.input.cols()) {
            return Err(Error::shape("graphconv_backward", upstream.shape(), (self.out_dim(), cache.input.cols())));
        }
        let w1 = matmul_nt(upstream, &cache.input)?;
        let w2 = matmul_nt(upstream, &cache.aggregated)?;
        let bias = match self.bias_mode {
            GraphBias::PerNode => upstream.clone(),
            GraphBias::Shared => Matrix::column_vector(&upstream.row_sums())?,
        };
        let mut input = matmul_tn(&self.w1.value, upstream)?;
        let through_edges = adjacency.aggregate_adjoint(&matmul_tn(&self.w2.value, upstream)?)?;
        input.add_assign(&through_edges)?;
        Ok(GraphConvGrads { input, w1, w2, bias })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::build_adjacency;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar_layer(w1: f64, w2: f64, n: usize) -> GraphConvParams {
        GraphConvParams::new(
            Matrix::row_vector(&[w1]).unwrap(),
            Matrix::row_vector(&[w2]).unwrap(),
            Matrix::zeros(1, n),
            GraphBias::PerNode,
        )
        .unwrap()
    }

    #[test]
    fn two_node_example() {
        let layer = scalar_layer(2.0, 1.0, 2);
        let adj = Matrix::from_rows(&[vec![1.0, 1.5], vec![1.5, 9.0]]).unwrap();
        let x = Matrix::row_vector(&[1.0, 3.0]).unwrap();
        let (y, cache) = layer.forward(&x, &adj).unwrap();
        assert_eq!(cache.aggregated.as_slice(), &[5.5, 28.5]);
        assert_eq!(y.as_slice(), &[7.5, 34.5]);
    }

    fn random_layer(rng: &mut ChaCha8Rng, d: usize, g: usize, n: usize) -> GraphConvParams {
        GraphConvParams::new(
            Matrix::from_fn(g, d, |_, _| rng.random_range(-1.0..1.0)),
            Matrix::from_fn(g, d, |_, _| rng.random_range(-1.0..1.0)),
            Matrix::from_fn(g, n, |_, _| rng.random_range(-1.0..1.0)),
            GraphBias::PerNode,
        )
        .unwrap()
    }

    #[test]
    fn decoupled_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (d, g, n) = (3, 2, 5);
        let mut layer = random_layer(&mut rng, d, g, n);
        let x = Matrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0));
        let h: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let adj = build_adjacency(&h).unwrap();
        let local = matmul(&layer.w1.value, &x).unwrap().add(&layer.bias.value).unwrap();

        let (y_no_edges, _) = layer.forward(&x, &Matrix::zeros(n, n)).unwrap();
        assert_eq!(y_no_edges, local);

        layer.w2.value.fill(0.0);
        let (y_no_w2, _) = layer.forward(&x, &adj).unwrap();
        assert_eq!(y_no_w2, local);
    }

    #[test]
    fn node_count_mismatch_is_shape_error() {
        let layer = scalar_layer(1.0, 1.0, 3);
        let x = Matrix::row_vector(&[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(layer.forward(&x, &Matrix::zeros(4, 4)), Err(Error::Shape { .. })));
        let x4 = Matrix::row_vector(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(layer.forward(&x4, &Matrix::zeros(4, 4)), Err(Error::Shape { .. })));
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (d, g, n) = (2, 3, 6);
        let layer = random_layer(&mut rng, d, g, n);
        let x = Matrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0));
        let h: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let adj = build_adjacency(&h).unwrap();
        let perm = [3usize, 0, 5, 1, 4, 2];

        let x_p = Matrix::from_fn(d, n, |c, i| x[(c, perm[i])]);
        let adj_p = Matrix::from_fn(n, n, |i, j| adj[(perm[i], perm[j])]);
        let mut layer_p = layer.clone();
        layer_p.bias.value = Matrix::from_fn(g, n, |c, i| layer.bias.value[(c, perm[i])]);

        let (y, _) = layer.forward(&x, &adj).unwrap();
        let (y_p, _) = layer_p.forward(&x_p, &adj_p).unwrap();
        for c in 0..g {
            for i in 0..n {
                assert!((y_p[(c, i)] - y[(c, perm[i])]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn shared_bias_broadcasts() {
        let layer = GraphConvParams::new(
            Matrix::row_vector(&[1.0]).unwrap(),
            Matrix::row_vector(&[0.0]).unwrap(),
            Matrix::column_vector(&[0.5]).unwrap(),
            GraphBias::Shared,
        )
        .unwrap();
        let (y, _) = layer.forward(&Matrix::row_vector(&[1.0, 2.0, 3.0]).unwrap(), &Matrix::zeros(3, 3)).unwrap();
        assert_eq!(y.as_slice(), &[1.5, 2.5, 3.5]);
    }
}
