use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    /// `max(0, z)`, with derivative 0 at exactly `z = 0`.
    Relu,
}

impl Activation {
    #[inline]
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(T::zero()),
        }
    }

    #[inline]
    fn derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// Dense layer `y = x W + b` with `W` of shape `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }
}

/// Feed-forward network: ReLU between layers, `output_activation` after the last.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    layers: Vec<Layer<T>>,
    output_activation: Activation,
}

/// Per-layer inputs and pre-activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    inputs: Vec<Matrix<T>>,
    pre: Vec<Matrix<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn batch_size(&self) -> usize {
        self.inputs.first().map_or(0, |m| m.rows())
    }
}

/// Gradients laid out like the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients<T> {
    pub weights: Vec<Matrix<T>>,
    pub biases: Vec<Vec<T>>,
}

impl<T: Scalar> MlpGradients<T> {
    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, &y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = T> + '_ {
        self.weights
            .iter()
            .flat_map(|w| w.as_slice().iter().copied())
            .chain(self.biases.iter().flat_map(|b| b.iter().copied()))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl<T: Scalar> MlpModel<T> {
    /// Glorot-uniform weights in `±√(6/(fan_in+fan_out))`, zero biases.
    pub fn init(sizes: &[usize], output_activation: Activation, rng: &mut Rng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::invalid(format!("invalid layer sizes {sizes:?}")));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| T::of(rng.uniform_range(-limit, limit)))
                    .collect();
                Layer {
                    weights: Matrix::from_vec(fan_in, fan_out, data).expect("sized above"),
                    bias: vec![T::zero(); fan_out],
                }
            })
            .collect();
        Ok(Self {
            layers,
            output_activation,
        })
    }

    pub fn from_layers(layers: Vec<Layer<T>>, output_activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("an MLP needs at least one layer"));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(Error::shape("MlpModel bias", l.out_dim(), format!("{} in layer {k}", l.bias.len())));
            }
            if l.bias.iter().any(|b| !b.is_finite()) || !l.weights.is_finite() {
                return Err(Error::NonFinite("MlpModel parameters"));
            }
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::shape(
                    "MlpModel layers",
                    format!("layer {} input {}", k + 1, pair[0].out_dim()),
                    pair[1].in_dim(),
                ));
            }
        }
        Ok(Self {
            layers,
            output_activation,
        })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(Layer::out_dim));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output_activation
        } else {
            Activation::Relu
        }
    }

    pub fn forward(&self, x: &Matrix<T>) -> Result<(Matrix<T>, ForwardCache<T>)> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape("forward", format!("{} input columns", self.input_dim()), x.cols()));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = h.matmul(&layer.weights)?;
            for i in 0..z.rows() {
                for (v, &b) in z.row_mut(i).iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let act = self.activation(k);
            let out = z.map(|v| act.apply(v));
            inputs.push(h);
            pre.push(z);
            h = out;
        }
        Ok((h, ForwardCache { inputs, pre }))
    }

    /// Output only, for evaluation.
    pub fn predict(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        Ok(self.forward(x)?.0)
    }

    /// Reverse-mode pass: parameter gradients and the gradient w.r.t. the input.
    pub fn backward(&self, cache: &ForwardCache<T>, grad_output: &Matrix<T>) -> Result<(MlpGradients<T>, Matrix<T>)> {
        if cache.pre.len() != self.layers.len() {
            return Err(Error::shape("backward cache", self.layers.len(), cache.pre.len()));
        }
        let last = &cache.pre[self.layers.len() - 1];
        if grad_output.shape() != last.shape() {
            return Err(Error::shape(
                "backward",
                format!("{}x{}", last.rows(), last.cols()),
                format!("{}x{}", grad_output.rows(), grad_output.cols()),
            ));
        }
        let n = self.layers.len();
        let mut weights = Vec::with_capacity(n);
        let mut biases = Vec::with_capacity(n);
        let mut upstream = grad_output.clone();
        for k in (0..n).rev() {
            let act = self.activation(k);
            let z = &cache.pre[k];
            let mut dz = upstream;
            for (g, &zv) in dz.as_mut_slice().iter_mut().zip(z.as_slice()) {
                *g *= act.derivative(zv);
            }
            weights.push(cache.inputs[k].t_matmul(&dz)?);
            biases.push(dz.sum_rows());
            upstream = dz.matmul_t(&self.layers[k].weights)?;
        }
        weights.reverse();
        biases.reverse();
        Ok((MlpGradients { weights, biases }, upstream))
    }

    pub fn zero_gradients(&self) -> MlpGradients<T> {
        MlpGradients {
            weights: self.layers.iter().map(|l| Matrix::zeros(l.in_dim(), l.out_dim())).collect(),
            biases: self.layers.iter().map(|l| vec![T::zero(); l.out_dim()]).collect(),
        }
    }

    /// `θ ← θ − rate · g`. A negative rate ascends.
    pub fn apply_gradients(&mut self, grads: &MlpGradients<T>, rate: T) {
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(grads.weights.iter().zip(&grads.biases)) {
            for (w, &g) in layer.weights.as_mut_slice().iter_mut().zip(gw.as_slice()) {
                *w -= rate * g;
            }
            for (b, &g) in layer.bias.iter_mut().zip(gb) {
                *b -= rate * g;
            }
        }
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    /// Flat parameter access in [`MlpGradients::iter`] order: all weight
    /// matrices first, then all biases.
    pub fn param_mut(&mut self, idx: usize) -> &mut T {
        let weight_total: usize = self.layers.iter().map(|l| l.weights.as_slice().len()).sum();
        let (mut idx, in_weights) = if idx < weight_total {
            (idx, true)
        } else {
            (idx - weight_total, false)
        };
        for layer in &mut self.layers {
            let len = if in_weights {
                layer.weights.as_slice().len()
            } else {
                layer.bias.len()
            };
            if idx < len {
                return if in_weights {
                    &mut layer.weights.as_mut_slice()[idx]
                } else {
                    &mut layer.bias[idx]
                };
            }
            idx -= len;
        }
        panic!("parameter index out of range");
    }

    pub fn params(&self) -> impl Iterator<Item = T> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().copied())
            .chain(self.layers.iter().flat_map(|l| l.bias.iter().copied()))
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn mat(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn zero_layer_outputs_zero() {
        let m = MlpModel::from_layers(
            vec![Layer { weights: Matrix::zeros(3, 2), bias: vec![0.0; 2] }],
            Activation::Identity,
        )
        .unwrap();
        let (y, _) = m.forward(&mat(&[&[1.0, -2.0, 3.0]])).unwrap();
        assert_eq!(y, Matrix::zeros(1, 2));
    }

    #[test]
    fn identity_layer_passes_input() {
        let m = MlpModel::from_layers(
            vec![Layer { weights: Matrix::identity(3), bias: vec![0.0; 3] }],
            Activation::Identity,
        )
        .unwrap();
        let x = mat(&[&[1.0, -2.0, 3.0], &[0.5, 0.0, -1.0]]);
        assert_eq!(m.forward(&x).unwrap().0, x);
    }

    #[test]
    fn hand_forward_pass() {
        // h = relu([1, 2] W1 + b1) with W1 = [[1, -1], [0.5, 1]], b1 = [0, -1]
        //   = relu([2, 0]) = [2, 0]; y = h [3, 4]ᵀ + 0.5 = 6.5
        let m = MlpModel::from_layers(
            vec![
                Layer { weights: mat(&[&[1.0, -1.0], &[0.5, 1.0]]), bias: vec![0.0, -1.0] },
                Layer { weights: mat(&[&[3.0], &[4.0]]), bias: vec![0.5] },
            ],
            Activation::Identity,
        )
        .unwrap();
        let (y, cache) = m.forward(&mat(&[&[1.0, 2.0]])).unwrap();
        assert_eq!(y.as_slice(), &[6.5]);
        // The second hidden unit sits exactly at z = 0: its ReLU derivative is 0.
        let (g, _) = m.backward(&cache, &mat(&[&[1.0]])).unwrap();
        assert_eq!(g.weights[0].as_slice(), &[3.0, 0.0, 6.0, 0.0]);
        assert_eq!(g.biases[0], vec![3.0, 0.0]);
        assert_eq!(g.weights[1].as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = Rng::new(0);
        let m = MlpModel::<f64>::init(&[3, 5, 2], Activation::Identity, &mut rng).unwrap();
        let x = mat(&[&[0.3, -0.1, 0.9], &[1.0, 2.0, -0.5]]);
        let (_, cache) = m.forward(&x).unwrap();
        let (g, gx) = m.backward(&cache, &Matrix::zeros(2, 2)).unwrap();
        assert!(g.iter().all(|v| v == 0.0));
        assert!(gx.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_least_squares_gradient() {
        // L = ||XW − y||² / (2n): dL/dW = Xᵀ(XW − y)/n.
        let x = mat(&[&[1.0, 2.0], &[3.0, -1.0], &[0.5, 0.5]]);
        let y = mat(&[&[1.0], &[0.0], &[2.0]]);
        let w = mat(&[&[0.2], &[-0.3]]);
        let m = MlpModel::from_layers(vec![Layer { weights: w, bias: vec![0.0] }], Activation::Identity).unwrap();
        let (yhat, cache) = m.forward(&x).unwrap();
        let n = 3.0;
        let resid = Matrix::from_vec(3, 1, yhat.as_slice().iter().zip(y.as_slice()).map(|(a, b)| (a - b) / n).collect()).unwrap();
        let (g, _) = m.backward(&cache, &resid).unwrap();
        let expected = x.transpose().matmul(&resid).unwrap();
        for (a, b) in g.weights[0].as_slice().iter().zip(expected.as_slice()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
    }

    #[test]
    fn shape_errors() {
        let mut rng = Rng::new(1);
        let m = MlpModel::<f64>::init(&[2, 3, 1], Activation::Identity, &mut rng).unwrap();
        assert!(m.forward(&Matrix::zeros(1, 3)).is_err());
        let (_, cache) = m.forward(&Matrix::zeros(4, 2)).unwrap();
        assert!(m.backward(&cache, &Matrix::zeros(4, 2)).is_err());
        assert!(MlpModel::<f64>::init(&[2], Activation::Identity, &mut rng).is_err());
        let bad = vec![
            Layer { weights: Matrix::<f64>::zeros(2, 3), bias: vec![0.0; 3] },
            Layer { weights: Matrix::zeros(2, 1), bias: vec![0.0] },
        ];
        assert!(MlpModel::from_layers(bad, Activation::Identity).is_err());
    }

    #[test]
    fn init_respects_glorot_bounds() {
        let mut rng = Rng::new(2);
        let m = MlpModel::<f64>::init(&[4, 8], Activation::Relu, &mut rng).unwrap();
        let limit = (6.0f64 / 12.0).sqrt();
        assert!(m.layers()[0].weights.as_slice().iter().all(|w| w.abs() <= limit));
        assert_eq!(m.num_params(), 4 * 8 + 8);
        assert_eq!(m.sizes(), vec![4, 8]);
    }
}
