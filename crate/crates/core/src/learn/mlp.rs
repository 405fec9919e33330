use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::schedule::{Matrix, PreferenceMatrix};

/// Feedforward network `d → h → h/2 → n` with ReLU hidden layers and a
/// softmax output, applied independently to each defendant's features.
///
/// Parameters live in one flat vector, layer by layer, each layer as a
/// row-major `out × in` weight block followed by its bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Activations of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `acts[l][r]` is the input to layer `l` for row `r`.
    acts: Vec<Vec<Vec<f64>>>,
    output: Matrix,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

fn layer_sizes(dims: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    dims.windows(2).map(|w| (w[0], w[1]))
}

impl MlpModel {
    /// Dimensions `[input, hidden, hidden / 2, outputs]`.
    pub fn architecture(input: usize, hidden: usize, outputs: usize) -> Result<Vec<usize>> {
        if input == 0 || outputs == 0 || hidden < 2 || !hidden.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "invalid architecture {input} -> {hidden} -> {} -> {outputs}",
                hidden / 2
            )));
        }
        Ok(vec![input, hidden, hidden / 2, outputs])
    }

    pub fn num_params_for(dims: &[usize]) -> usize {
        layer_sizes(dims).map(|(i, o)| o * i + o).sum()
    }

    /// Glorot-uniform weights and zero biases from a seeded generator.
    pub fn new(dims: Vec<usize>, seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::invalid(format!("invalid layer dims {dims:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(Self::num_params_for(&dims));
        for (fan_in, fan_out) in layer_sizes(&dims) {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(MlpModel { dims, params })
    }

    pub fn from_parts(dims: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::invalid(format!("invalid layer dims {dims:?}")));
        }
        check_len(Self::num_params_for(&dims), params.len())?;
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite model parameter".into()));
        }
        Ok(MlpModel { dims, params })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("dims nonempty")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Zeroes the last layer so every output row is uniform.
    pub fn zero_output_layer(&mut self) {
        let (i, o) = layer_sizes(&self.dims).last().expect("at least one layer");
        let len = self.params.len();
        self.params[len - (i * o + o)..].iter_mut().for_each(|p| *p = 0.0);
    }

    /// Weight and bias blocks of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let mut off = 0;
        for (k, (i, o)) in layer_sizes(&self.dims).enumerate() {
            if k == l {
                return (&self.params[off..off + i * o], &self.params[off + i * o..off + i * o + o]);
            }
            off += i * o + o;
        }
        panic!("layer {l} out of range");
    }

    /// Runs every feature row through the network. Output rows are softmax
    /// distributions over the `n` slots; the pool must have exactly `n` rows.
    pub fn forward(&self, features: &[Vec<f64>]) -> Result<ForwardCache> {
        let n = self.output_dim();
        check_len(n, features.len())?;
        let layers = self.dims.len() - 1;
        let mut acts: Vec<Vec<Vec<f64>>> = Vec::with_capacity(layers);
        let mut current: Vec<Vec<f64>> = features
            .iter()
            .map(|x| {
                check_len(self.input_dim(), x.len())?;
                Ok(x.clone())
            })
            .collect::<Result<_>>()?;
        let mut off = 0;
        for (l, (fan_in, fan_out)) in layer_sizes(&self.dims).enumerate() {
            let w = &self.params[off..off + fan_in * fan_out];
            let b = &self.params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
            off += fan_in * fan_out + fan_out;
            let next: Vec<Vec<f64>> = current
                .iter()
                .map(|x| {
                    (0..fan_out)
                        .map(|o| {
                            let row = &w[o * fan_in..(o + 1) * fan_in];
                            let z = b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                            if l + 1 < layers {
                                z.max(0.0)
                            } else {
                                z
                            }
                        })
                        .collect()
                })
                .collect();
            acts.push(current);
            current = next;
        }
        let rows = current.into_iter().map(|z| softmax(&z)).collect();
        let output = Matrix::from_rows(rows)?;
        if !output.is_finite() {
            return Err(Error::Numeric("non-finite network output".into()));
        }
        Ok(ForwardCache { acts, output })
    }

    /// Predicted preference matrix for one pool.
    pub fn predict(&self, features: &[Vec<f64>]) -> Result<PreferenceMatrix> {
        let m = self.forward(features)?.output;
        // Softmax rows sum to 1 up to rounding; renormalize before the
        // strict row-sum check.
        let rows = m
            .rows()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.iter().map(|v| v / s).collect()
            })
            .collect();
        PreferenceMatrix::from_rows(rows)
    }

    /// Gradient of a loss with respect to all parameters, given the loss
    /// gradient `d_output` with respect to the softmax outputs.
    pub fn backward(&self, cache: &ForwardCache, d_output: &Matrix) -> Result<Vec<f64>> {
        let n = cache.output.n();
        check_len(n, d_output.n())?;
        let layers = self.dims.len() - 1;
        // Through the softmax: dz = y ⊙ (dy − ⟨dy, y⟩).
        let mut delta: Vec<Vec<f64>> = (0..n)
            .map(|r| {
                let y = cache.output.row(r);
                let dy = d_output.row(r);
                let dot: f64 = y.iter().zip(dy).map(|(a, b)| a * b).sum();
                y.iter().zip(dy).map(|(yi, di)| yi * (di - dot)).collect()
            })
            .collect();

        let mut grad = vec![0.0; self.params.len()];
        let offsets: Vec<usize> = layer_sizes(&self.dims)
            .scan(0, |off, (i, o)| {
                let start = *off;
                *off += i * o + o;
                Some(start)
            })
            .collect();
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let off = offsets[l];
            let inputs = &cache.acts[l];
            {
                let (gw, gb) = grad[off..off + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
                for (x, d) in inputs.iter().zip(&delta) {
                    for o in 0..fan_out {
                        if d[o] == 0.0 {
                            continue;
                        }
                        gb[o] += d[o];
                        let row = &mut gw[o * fan_in..(o + 1) * fan_in];
                        for (g, xi) in row.iter_mut().zip(x) {
                            *g += d[o] * xi;
                        }
                    }
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[off..off + fan_in * fan_out];
            delta = inputs
                .iter()
                .zip(&delta)
                .map(|(x, d)| {
                    (0..fan_in)
                        .map(|k| {
                            // Inputs to layer l > 0 are ReLU outputs.
                            if x[k] <= 0.0 {
                                return 0.0;
                            }
                            (0..fan_out).map(|o| d[o] * w[o * fan_in + k]).sum()
                        })
                        .collect()
                })
                .collect();
        }
        Ok(grad)
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
