//! Small dense networks with exact backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Fully connected layer, `weights` row-major `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Glorot-uniform weights multiplied by `gain`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, gain: f64, rng: &mut R) -> Self {
        let limit = gain * (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.bias.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }));
    }

    fn shape_matches(&self, other: &Dense) -> bool {
        self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.weights.len() == other.weights.len()
            && self.bias.len() == other.bias.len()
    }
}

/// Dense layers with tanh between them and an identity output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Per-layer activations from a forward pass; `acts[0]` is the input.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    pub acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Mlp {
    /// `sizes = [in, hidden.., out]`. Hidden layers use the tanh gain 5/3, the
    /// output layer uses `out_gain`.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], out_gain: f64, rng: &mut R) -> Self {
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|l| {
                let gain = if l + 1 == n { out_gain } else { 5.0 / 3.0 };
                Dense::glorot(sizes[l], sizes[l + 1], gain, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.inputs).collect();
        s.extend(self.layers.last().map(|l| l.outputs));
        s
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.shape_matches(b))
    }

    /// Internally consistent layer dimensions.
    pub fn is_well_formed(&self) -> bool {
        !self.layers.is_empty()
            && self
                .layers
                .iter()
                .all(|l| l.weights.len() == l.inputs * l.outputs && l.bias.len() == l.outputs)
            && self.layers.windows(2).all(|w| w[0].outputs == w[1].inputs)
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn all_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut cache = ForwardCache::default();
        self.forward_cached(x, &mut cache);
        cache.acts.pop().unwrap_or_default()
    }

    pub fn forward_cached(&self, x: &[f64], cache: &mut ForwardCache) {
        let n = self.layers.len();
        cache.acts.resize_with(n + 1, Vec::new);
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(x);
        for (l, layer) in self.layers.iter().enumerate() {
            let (head, tail) = cache.acts.split_at_mut(l + 1);
            let out = &mut tail[0];
            layer.forward_into(&head[l], out);
            if l + 1 < n {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
        }
    }

    /// Accumulate `∂L/∂θ` into `grad` given `∂L/∂output` for the forward pass
    /// recorded in `cache`.
    pub fn backward_into(&self, cache: &ForwardCache, d_out: &[f64], grad: &mut Mlp) {
        let n = self.layers.len();
        let mut delta = d_out.to_vec();
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let g = &mut grad.layers[l];
            let input = &cache.acts[l];
            for (o, &d) in delta.iter().enumerate() {
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(input).for_each(|(gw, x)| *gw += d * x);
            }
            if l == 0 {
                break;
            }
            // propagate through W and the tanh that produced `input`
            let mut prev = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
            }
            prev.iter_mut()
                .zip(input)
                .for_each(|(p, a)| *p *= 1.0 - a * a);
            delta = prev;
        }
    }

    pub fn scale(&mut self, k: f64) {
        self.params_mut().for_each(|p| *p *= k);
    }

    pub fn fill(&mut self, v: f64) {
        self.params_mut().for_each(|p| *p = v);
    }
}
