use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fully connected network: tanh on hidden layers, linear output.
///
/// All parameters live in one flat vector. Each layer contributes its
/// row-major `out x in` weight matrix followed by its bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer activations recorded by [`Mlp::forward_cached`]. Entry 0 is the
/// input, the last entry is the network output.
#[derive(Debug, Clone, Default)]
pub struct Activations {
    layers: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// All-zero network with layer widths `sizes` (input first, output last).
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::arg("network needs at least two non-empty layers"));
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            params: vec![0.0; param_count(sizes)],
        })
    }

    /// Uniform fan-in initialization with weight variance `1/in`, scaled by
    /// `output_gain` on the last layer. Biases start at zero.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let n_layers = sizes.len() - 1;
        let mut offset = 0;
        for (l, w) in sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let gain = if l + 1 == n_layers { output_gain } else { 1.0 };
            let bound = gain * (3.0 / n_in as f64).sqrt();
            for p in &mut net.params[offset..offset + n_in * n_out] {
                *p = rng.random_range(-bound..=bound);
            }
            offset += n_in * n_out + n_out;
        }
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Checks the parameter count against the layer sizes and that every
    /// weight is finite. Needed after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 || self.sizes.contains(&0) {
            return Err(Error::validation(
                "network.sizes",
                "need at least two non-empty layers",
            ));
        }
        if self.params.len() != param_count(&self.sizes) {
            return Err(Error::validation(
                "network.params",
                "length does not match layer sizes",
            ));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::validation("network.params", "non-finite weight"));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut acts = Activations::default();
        self.forward_cached(x, &mut acts);
        acts.layers.pop().unwrap_or_default()
    }

    /// Forward pass keeping every layer's activation for [`Mlp::backward`].
    pub fn forward_cached(&self, x: &[f64], acts: &mut Activations) {
        debug_assert_eq!(x.len(), self.input_dim());
        acts.layers.clear();
        acts.layers.push(x.to_vec());
        let n_layers = self.sizes.len() - 1;
        let mut offset = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let input = &acts.layers[l];
            let mut out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    b[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            if l + 1 < n_layers {
                for v in &mut out {
                    *v = v.tanh();
                }
            }
            acts.layers.push(out);
            offset += n_in * n_out + n_out;
        }
    }

    /// Reverse pass: adds `d(loss)/d(params)` into `grad` given
    /// `d(loss)/d(output)` for the activations in `acts`.
    pub fn backward(&self, acts: &Activations, grad_out: &[f64], grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.params.len());
        debug_assert_eq!(grad_out.len(), self.output_dim());
        let n_layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }
        let mut delta = grad_out.to_vec();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let input = &acts.layers[l];
            {
                let (gw, rest) = grad[off..].split_at_mut(n_in * n_out);
                for o in 0..n_out {
                    let d = delta[o];
                    if d != 0.0 {
                        for (g, a) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                            *g += d * a;
                        }
                    }
                    rest[o] += d;
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[off..off + n_in * n_out];
            let mut next = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d != 0.0 {
                    for (n, wi) in next.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *n += d * wi;
                    }
                }
            }
            // input of layer l is tanh output of layer l-1
            for (n, a) in next.iter_mut().zip(input) {
                *n *= 1.0 - a * a;
            }
            delta = next;
        }
    }
}
