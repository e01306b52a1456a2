use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

use super::HIDDEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Relu,
    Linear,
    /// Projects each output row onto the unit sphere. Final layer only.
    L2Norm,
}

/// One affine map followed by an activation. Parameters live in the owning
/// [`Mlp`]'s flat buffer: the `outputs x inputs` weight block at `offset`,
/// then the bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    offset: usize,
}

impl Layer {
    fn weight_len(&self) -> usize {
        self.inputs * self.outputs
    }

    fn param_len(&self) -> usize {
        self.weight_len() + self.outputs
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
    params: Vec<f64>,
    #[serde(skip)]
    grads: Vec<f64>,
}

/// Per-layer activations recorded by [`Mlp::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
    outputs: Vec<Matrix>,
    /// Pre-normalization row norms of an `L2Norm` final layer.
    norms: Vec<f64>,
}

impl Mlp {
    /// Builds a network from `(width, activation)` pairs with Glorot-uniform
    /// weights and zero biases.
    pub fn new(input_dim: usize, spec: &[(usize, Activation)], seed: u64) -> Result<Self> {
        if input_dim == 0 || spec.is_empty() || spec.iter().any(|&(w, _)| w == 0) {
            return Err(Error::InvalidDimension("network layers need positive widths".into()));
        }
        if spec[..spec.len() - 1]
            .iter()
            .any(|&(_, a)| a == Activation::L2Norm)
        {
            return Err(Error::InvalidDimension(
                "l2norm is only allowed on the final layer".into(),
            ));
        }
        let mut layers = Vec::with_capacity(spec.len());
        let mut offset = 0;
        let mut inputs = input_dim;
        for &(outputs, activation) in spec {
            let layer = Layer {
                inputs,
                outputs,
                activation,
                offset,
            };
            offset += layer.param_len();
            inputs = outputs;
            layers.push(layer);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; offset];
        for layer in &layers {
            let bound = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut params[layer.offset..layer.offset + layer.weight_len()] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(Self {
            layers,
            grads: vec![0.0; params.len()],
            params,
        })
    }

    /// `input -> 64 tanh -> 64 tanh -> key_dim -> unit sphere`.
    pub fn inference_net(input_dim: usize, key_dim: usize, seed: u64) -> Result<Self> {
        Self::new(
            input_dim,
            &[
                (HIDDEN, Activation::Tanh),
                (HIDDEN, Activation::Tanh),
                (key_dim, Activation::L2Norm),
            ],
            seed,
        )
    }

    /// `input -> 64 tanh -> 64 tanh -> output_dim linear`.
    pub fn generator(input_dim: usize, output_dim: usize, seed: u64) -> Result<Self> {
        Self::new(
            input_dim,
            &[
                (HIDDEN, Activation::Tanh),
                (HIDDEN, Activation::Tanh),
                (output_dim, Activation::Linear),
            ],
            seed,
        )
    }

    /// Plain discriminator body producing one logit per row.
    pub fn logit_net(input_dim: usize, seed: u64) -> Result<Self> {
        Self::new(
            input_dim,
            &[
                (HIDDEN, Activation::Tanh),
                (HIDDEN, Activation::Tanh),
                (1, Activation::Linear),
            ],
            seed,
        )
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn grads(&self) -> &[f64] {
        &self.grads
    }

    /// Parameters and accumulated gradients, split for an optimizer step.
    pub fn params_and_grads(&mut self) -> (&mut [f64], &[f64]) {
        (&mut self.params, &self.grads)
    }

    pub fn zero_grad(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = 0.0);
    }

    /// Forward pass without recording activations.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        let mut x = input.clone();
        for layer in &self.layers {
            let (out, _) = self.apply_layer(layer, &x);
            x = out;
        }
        Ok(x)
    }

    /// Forward pass that records what [`Mlp::backward`] needs.
    pub fn forward(&self, input: &Matrix) -> Result<(Matrix, ForwardCache)> {
        self.check_input(input)?;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            outputs: Vec::with_capacity(self.layers.len()),
            norms: Vec::new(),
        };
        let mut x = input.clone();
        for layer in &self.layers {
            let (out, norms) = self.apply_layer(layer, &x);
            cache.inputs.push(x);
            cache.outputs.push(out.clone());
            if let Some(n) = norms {
                cache.norms = n;
            }
            x = out;
        }
        Ok((x, cache))
    }

    /// Back-propagates `grad_output` through the cached pass, accumulating
    /// parameter gradients and returning the gradient with respect to the input.
    pub fn backward(&mut self, cache: &ForwardCache, grad_output: &Matrix) -> Result<Matrix> {
        let mut grads = std::mem::take(&mut self.grads);
        let out = self.backprop(cache, grad_output, Some(&mut grads));
        self.grads = grads;
        out
    }

    /// Gradient with respect to the input only; parameter gradients are left alone.
    pub fn backward_input(&self, cache: &ForwardCache, grad_output: &Matrix) -> Result<Matrix> {
        self.backprop(cache, grad_output, None)
    }

    fn backprop(&self, cache: &ForwardCache, grad_output: &Matrix, mut grads: Option<&mut Vec<f64>>) -> Result<Matrix> {
        if cache.inputs.len() != self.layers.len()
            || cache
                .inputs
                .iter()
                .zip(&self.layers)
                .any(|(x, l)| x.cols() != l.inputs)
        {
            return Err(Error::CacheMismatch);
        }
        let batch = cache.inputs[0].rows();
        if grad_output.rows() != batch || grad_output.cols() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: batch * self.output_dim(),
                got: grad_output.rows() * grad_output.cols(),
            });
        }
        let mut upstream = grad_output.clone();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let out = &cache.outputs[li];
            let x = &cache.inputs[li];
            // Gradient with respect to the pre-activation.
            let mut dz = upstream;
            match layer.activation {
                Activation::Linear => {}
                Activation::Tanh => {
                    for (d, a) in dz.as_mut_slice().iter_mut().zip(out.as_slice()) {
                        *d *= 1.0 - a * a;
                    }
                }
                Activation::Relu => {
                    for (d, a) in dz.as_mut_slice().iter_mut().zip(out.as_slice()) {
                        if *a <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                Activation::L2Norm => {
                    // (I - y y^T) g / |u|
                    for r in 0..batch {
                        let y = out.row(r);
                        let n = cache.norms[r];
                        let row = dz.row_mut(r);
                        let proj = dot(y, row);
                        for (d, yi) in row.iter_mut().zip(y) {
                            *d = if n > 0.0 { (*d - proj * yi) / n } else { 0.0 };
                        }
                    }
                }
            }
            let (w_off, b_off) = (layer.offset, layer.offset + layer.weight_len());
            let (ni, no) = (layer.inputs, layer.outputs);
            if let Some(grads) = grads.as_deref_mut() {
                for r in 0..batch {
                    let d = dz.row(r);
                    let xr = x.row(r);
                    for o in 0..no {
                        let g = d[o];
                        if g == 0.0 {
                            continue;
                        }
                        grads[b_off + o] += g;
                        let wg = &mut grads[w_off + o * ni..w_off + (o + 1) * ni];
                        for (w, xi) in wg.iter_mut().zip(xr) {
                            *w += g * xi;
                        }
                    }
                }
            }
            let mut dx = Matrix::zeros(batch, ni);
            let w = &self.params[w_off..b_off];
            for r in 0..batch {
                let d = dz.row(r);
                let out_row = dx.row_mut(r);
                for o in 0..no {
                    let g = d[o];
                    if g == 0.0 {
                        continue;
                    }
                    for (xo, wi) in out_row.iter_mut().zip(&w[o * ni..(o + 1) * ni]) {
                        *xo += g * wi;
                    }
                }
            }
            upstream = dx;
        }
        Ok(upstream)
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        if input.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: input.cols(),
            });
        }
        Ok(())
    }

    fn apply_layer(&self, layer: &Layer, x: &Matrix) -> (Matrix, Option<Vec<f64>>) {
        let (ni, no) = (layer.inputs, layer.outputs);
        let w = &self.params[layer.offset..layer.offset + layer.weight_len()];
        let b = &self.params[layer.offset + layer.weight_len()..layer.offset + layer.param_len()];
        let mut out = Matrix::zeros(x.rows(), no);
        for r in 0..x.rows() {
            let xr = x.row(r);
            let row = out.row_mut(r);
            for o in 0..no {
                row[o] = dot(&w[o * ni..(o + 1) * ni], xr) + b[o];
            }
        }
        let mut norms = None;
        match layer.activation {
            Activation::Linear => {}
            Activation::Tanh => out.as_mut_slice().iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Relu => out.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::L2Norm => {
                let mut ns = Vec::with_capacity(out.rows());
                for r in 0..out.rows() {
                    ns.push(crate::linalg::normalize(out.row_mut(r)));
                }
                norms = Some(ns);
            }
        }
        (out, norms)
    }

    /// Rebuilds gradient buffers after deserialization and checks the layer chain.
    pub fn validate(&mut self) -> Result<()> {
        let mut offset = 0;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.offset != offset
                || (i > 0 && layer.inputs != self.layers[i - 1].outputs)
                || (layer.activation == Activation::L2Norm && i + 1 != self.layers.len())
            {
                return Err(Error::IncompatibleCheckpoint("malformed layer chain".into()));
            }
            offset += layer.param_len();
        }
        if self.layers.is_empty() || offset != self.params.len() {
            return Err(Error::ShapeMismatch {
                expected: offset,
                got: self.params.len(),
            });
        }
        self.grads = vec![0.0; offset];
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(w: f64, b: f64, act: Activation) -> Mlp {
        let mut net = Mlp::new(1, &[(1, act)], 0).unwrap();
        net.params_mut().copy_from_slice(&[w, b]);
        net
    }

    #[test]
    fn affine_example() {
        let net = single(2.0, 1.0, Activation::Linear);
        let out = net.predict(&Matrix::from_rows(&[vec![3.0]]).unwrap()).unwrap();
        assert_eq!(out.as_slice(), &[7.0]);
    }

    #[test]
    fn l2norm_example() {
        let mut net = Mlp::new(2, &[(2, Activation::L2Norm)], 0).unwrap();
        net.params_mut().copy_from_slice(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let out = net.predict(&Matrix::from_rows(&[vec![3.0, 4.0]]).unwrap()).unwrap();
        assert!((out.get(0, 0) - 0.6).abs() < 1e-15 && (out.get(0, 1) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn identity_passes_through() {
        let mut net = Mlp::new(3, &[(3, Activation::Linear)], 0).unwrap();
        let p = net.params_mut();
        p.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..3 {
            p[i * 3 + i] = 1.0;
        }
        let x = Matrix::from_rows(&[vec![0.5, -1.0, 2.0]]).unwrap();
        assert_eq!(net.predict(&x).unwrap(), x);
    }

    #[test]
    fn square_derivative() {
        // loss = y^2 with y = w x and x = 1, so dloss/dw = 2 w
        let mut net = single(3.0, 0.0, Activation::Linear);
        let x = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let (out, cache) = net.forward(&x).unwrap();
        let upstream = Matrix::from_rows(&[vec![2.0 * out.get(0, 0)]]).unwrap();
        net.backward(&cache, &upstream).unwrap();
        assert_eq!(net.grads()[0], 6.0);
    }

    #[test]
    fn l2norm_backward_example() {
        let mut net = Mlp::new(2, &[(2, Activation::L2Norm)], 0).unwrap();
        net.params_mut().copy_from_slice(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let x = Matrix::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let (_, cache) = net.forward(&x).unwrap();
        let g = net
            .backward(&cache, &Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap())
            .unwrap();
        assert!((g.get(0, 0) - 0.128).abs() < 1e-15);
        assert!((g.get(0, 1) + 0.096).abs() < 1e-15);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut net = Mlp::inference_net(3, 4, 1).unwrap();
        let x = Matrix::from_rows(&[vec![0.1, 0.2, 0.3], vec![-1.0, 0.0, 1.0]]).unwrap();
        let (_, cache) = net.forward(&x).unwrap();
        net.backward(&cache, &Matrix::zeros(2, 4)).unwrap();
        assert!(net.grads().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn foreign_cache_rejected() {
        let a = Mlp::generator(3, 2, 1).unwrap();
        let mut b = Mlp::inference_net(5, 2, 1).unwrap();
        let (_, cache) = a.forward(&Matrix::zeros(1, 3)).unwrap();
        assert!(matches!(
            b.backward(&cache, &Matrix::zeros(1, 2)),
            Err(Error::CacheMismatch)
        ));
    }

    #[test]
    fn l2norm_only_last() {
        assert!(Mlp::new(2, &[(2, Activation::L2Norm), (2, Activation::Linear)], 0).is_err());
    }

    #[test]
    fn input_dim_checked() {
        let net = Mlp::generator(3, 2, 1).unwrap();
        assert!(matches!(
            net.predict(&Matrix::zeros(1, 4)),
            Err(Error::DimensionMismatch { expected: 3, got: 4 })
        ));
    }
}
