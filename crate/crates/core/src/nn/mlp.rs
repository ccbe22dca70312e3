//! Multilayer perceptrons with hand-written reverse-mode gradients.

use serde::{Deserialize, Serialize};

use super::matrix::{gemm, matmul_tn, Matrix};
use super::rng::RngStream;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    fn apply(self, m: &mut Matrix) {
        match self {
            Activation::Tanh => m.map_inplace(f64::tanh),
            Activation::Relu => m.map_inplace(|v| v.max(0.0)),
            Activation::Identity => {}
        }
    }

    /// Multiplies `grad` in place by the derivative, given the activated output.
    fn backprop(self, activated: &Matrix, grad: &mut Matrix) {
        let g = grad.as_mut_slice();
        let a = activated.as_slice();
        match self {
            Activation::Tanh => {
                for (gi, ai) in g.iter_mut().zip(a) {
                    *gi *= 1.0 - ai * ai;
                }
            }
            Activation::Relu => {
                for (gi, ai) in g.iter_mut().zip(a) {
                    if *ai <= 0.0 {
                        *gi = 0.0;
                    }
                }
            }
            Activation::Identity => {}
        }
    }
}

/// One affine layer, `y = W x + b` with `W: out×in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    layers: Vec<Dense>,
    hidden_activation: Activation,
    output_activation: Activation,
}

/// Gradients laid out exactly like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<Dense>,
}

/// Activations retained from a batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `acts[0]` is the input; `acts[i + 1]` the activated output of layer `i`.
    acts: Vec<Matrix>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.acts.last().expect("cache holds the input at least")
    }
}

impl MlpNetwork {
    pub fn new(
        layers: Vec<Dense>,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(Error::Shape(format!(
                    "layer {i}: bias length {} != out dim {}",
                    l.bias.len(),
                    l.out_dim()
                )));
            }
            if !l.weight.is_finite() || l.bias.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    layer: i,
                    what: "parameter",
                });
            }
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(Error::Shape(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    w[0].out_dim(),
                    i + 1,
                    w[1].in_dim()
                )));
            }
        }
        Ok(MlpNetwork {
            layers,
            hidden_activation,
            output_activation,
        })
    }

    /// Glorot-uniform weights and zero biases, drawn in layer order.
    pub fn init(
        dims: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Shape("need input and output dimensions".into()));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut weight = Matrix::zeros(fan_out, fan_in);
                for v in weight.as_mut_slice() {
                    *v = (2.0 * rng.uniform() - 1.0) * limit;
                }
                Dense {
                    weight,
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        MlpNetwork::new(layers, hidden_activation, output_activation)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum()
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Single-vector forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = Matrix::from_vec(1, input.len(), input.to_vec())?;
        Ok(self.forward_batch(&x)?.into_vec())
    }

    /// Forward pass over the rows of `input`.
    pub fn forward_batch(&self, input: &Matrix) -> Result<Matrix> {
        Ok(self.forward_cached(input)?.acts.pop().expect("non-empty"))
    }

    pub fn forward_cached(&self, input: &Matrix) -> Result<ForwardCache> {
        if input.cols() != self.in_dim() {
            return Err(Error::Shape(format!(
                "input has {} features, network expects {}",
                input.cols(),
                self.in_dim()
            )));
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let x = &acts[i];
            let mut y = gemm(x, &layer.weight.transpose(), Some(&layer.bias));
            self.activation_of(i).apply(&mut y);
            if !y.is_finite() {
                return Err(Error::NonFinite {
                    layer: i,
                    what: "forward activation",
                });
            }
            acts.push(y);
        }
        Ok(ForwardCache { acts })
    }

    /// Backpropagates `d_output` (dL/d output, same shape as the output)
    /// through a cached forward pass. Returns parameter gradients and dL/d input.
    pub fn backward(&self, cache: &ForwardCache, d_output: &Matrix) -> Result<(MlpGrads, Matrix)> {
        let out = cache.output();
        if d_output.rows() != out.rows() || d_output.cols() != out.cols() {
            return Err(Error::Shape(format!(
                "output gradient is {}x{}, output is {}x{}",
                d_output.rows(),
                d_output.cols(),
                out.rows(),
                out.cols()
            )));
        }
        let mut grads: Vec<Option<Dense>> = vec![None; self.layers.len()];
        let mut delta = d_output.clone();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            self.activation_of(i).backprop(&cache.acts[i + 1], &mut delta);
            let x = &cache.acts[i];
            // dW = deltaᵀ x, db = column sums of delta
            let weight = matmul_tn(&delta, x)?;
            let mut bias = vec![0.0; layer.out_dim()];
            for r in delta.row_iter() {
                for (b, d) in bias.iter_mut().zip(r) {
                    *b += d;
                }
            }
            if !weight.is_finite() || bias.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    layer: i,
                    what: "gradient",
                });
            }
            // dX = delta W
            let dx = gemm(&delta, &layer.weight, None);
            grads[i] = Some(Dense { weight, bias });
            delta = dx;
        }
        let layers = grads.into_iter().map(|g| g.expect("filled")).collect();
        Ok((MlpGrads { layers }, delta))
    }

    /// Parameter tensors in a fixed order: for each layer, weight then bias.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weight.as_mut_slice());
            out.push(l.bias.as_mut_slice());
        }
        out
    }

    pub fn params(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            out.push(l.weight.as_slice());
            out.push(l.bias.as_slice());
        }
        out
    }
}

impl MlpGrads {
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            out.push(l.weight.as_slice());
            out.push(l.bias.as_slice());
        }
        out
    }
}

/// Loss and gradients of `loss_fn` at `net(input)`.
///
/// `loss_fn` maps the batch output to the scalar loss and dL/d output.
pub fn mlp_gradient<F>(net: &MlpNetwork, input: &Matrix, loss_fn: F) -> Result<(f64, MlpGrads)>
where
    F: FnOnce(&Matrix) -> (f64, Matrix),
{
    let cache = net.forward_cached(input)?;
    let (loss, d_out) = loss_fn(cache.output());
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            layer: net.layers.len() - 1,
            what: "loss",
        });
    }
    let (grads, _) = net.backward(&cache, &d_out)?;
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(w: Vec<Vec<f64>>, b: Vec<f64>) -> MlpNetwork {
        MlpNetwork::new(
            vec![Dense {
                weight: Matrix::from_rows(&w).unwrap(),
                bias: b,
            }],
            Activation::Tanh,
            Activation::Identity,
        )
        .unwrap()
    }

    #[test]
    fn identity_layer() {
        let net = single(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]);
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn diagonal_affine_layer() {
        let net = single(vec![vec![2.0, 0.0], vec![0.0, 3.0]], vec![1.0, 1.0]);
        assert_eq!(net.forward(&[1.0, 1.0]).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn input_dimension_mismatch_is_shape_error() {
        let net = single(vec![vec![1.0, 0.0]], vec![0.0]);
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn layer_chain_is_checked() {
        let a = Dense {
            weight: Matrix::zeros(3, 2),
            bias: vec![0.0; 3],
        };
        let b = Dense {
            weight: Matrix::zeros(1, 4),
            bias: vec![0.0],
        };
        assert!(MlpNetwork::new(vec![a, b], Activation::Tanh, Activation::Identity).is_err());
    }

    #[test]
    fn linear_net_weight_gradient_is_input() {
        // loss = y = w·x + b, so dL/dw = x
        let net = single(vec![vec![0.3, -0.7, 1.1]], vec![0.2]);
        let x = Matrix::from_rows(&[vec![1.5, -2.0, 0.25]]).unwrap();
        let (_, g) = mlp_gradient(&net, &x, |y| (y.get(0, 0), Matrix::from_vec(1, 1, vec![1.0]).unwrap()))
            .unwrap();
        assert_eq!(g.layers[0].weight.row(0), &[1.5, -2.0, 0.25]);
        assert_eq!(g.layers[0].bias, vec![1.0]);
    }

    #[test]
    fn zeroed_weights_block_upstream_gradient() {
        // with the last layer zeroed, nothing reaches the first layer's weights
        let mut rng = RngStream::new(3);
        let mut net = MlpNetwork::init(&[3, 4, 2], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        for v in net.layers_mut()[1].weight.as_mut_slice() {
            *v = 0.0;
        }
        let x = Matrix::from_rows(&[vec![0.5, -1.0, 2.0]]).unwrap();
        let (_, g) = mlp_gradient(&net, &x, |y| {
            let mut d = y.clone();
            d.scale(2.0);
            (y.as_slice().iter().map(|v| v * v).sum(), d)
        })
        .unwrap();
        assert!(g.layers[0].weight.as_slice().iter().all(|&v| v == 0.0));
        assert!(g.layers[0].bias.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_finite_reports_layer() {
        let net = single(vec![vec![1e308, 1e308]], vec![0.0]);
        let err = net.forward(&[1e10, 1e10]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { layer: 0, .. }));
    }
}
