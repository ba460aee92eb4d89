use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{Activation, CellKind, LayerSpec, NetworkConfig};
use super::NnError;

/// One named weight or bias block inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    /// Layer family: `conv`, `recurrent`, `dense`, `policy` or `value`.
    pub group: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl ParamBlock {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    pub fn is_bias(&self) -> bool {
        let suffix = self.name.rsplit('.').next().unwrap_or("");
        suffix.starts_with('b')
    }
}

#[derive(Debug, Clone)]
enum Layer {
    Conv {
        in_len: usize,
        in_ch: usize,
        out_len: usize,
        filters: usize,
        width: usize,
        stride: usize,
        pad: usize,
        w: usize,
        b: usize,
    },
    Gated {
        len: usize,
        input: usize,
        units: usize,
        wf: usize,
        uf: usize,
        bf: usize,
        wh: usize,
        uh: usize,
        bh: usize,
    },
    Simple {
        len: usize,
        input: usize,
        units: usize,
        w: usize,
        u: usize,
        b: usize,
    },
    Dense {
        input: usize,
        units: usize,
        activation: Activation,
        w: usize,
        b: usize,
    },
}

/// Compiled layout of a [`NetworkConfig`]: where each block lives in the
/// flat parameter vector and the shapes flowing between layers.
#[derive(Debug, Clone)]
pub struct Network {
    config: NetworkConfig,
    layers: Vec<Layer>,
    hidden: usize,
    policy_w: usize,
    policy_b: usize,
    value_w: usize,
    value_b: usize,
    blocks: Vec<ParamBlock>,
    n_params: usize,
}

/// Activations kept from a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub value: f64,
    /// `acts[0]` is the input; `acts[i + 1]` is the output of hidden layer `i`.
    acts: Vec<Vec<f64>>,
    /// Recurrent layers: hidden states, gates and candidates per time step.
    aux: Vec<Vec<f64>>,
}

impl ForwardPass {
    /// Sign pattern of every ReLU unit; finite-difference probes that change
    /// it crossed a kink.
    pub fn relu_pattern(&self, net: &Network) -> Vec<bool> {
        let mut out = Vec::new();
        for (i, layer) in net.layers.iter().enumerate() {
            let relu = match layer {
                Layer::Conv { .. } => true,
                Layer::Dense { activation, .. } => *activation == Activation::Relu,
                _ => false,
            };
            if relu {
                out.extend(self.acts[i + 1].iter().map(|&v| v > 0.0));
            }
        }
        out
    }
}

struct Builder {
    blocks: Vec<ParamBlock>,
    next: usize,
}

impl Builder {
    fn block(&mut self, name: String, group: &str, rows: usize, cols: usize) -> usize {
        let offset = self.next;
        self.blocks.push(ParamBlock {
            name,
            group: group.to_string(),
            rows,
            cols,
            offset,
        });
        self.next += rows * cols;
        offset
    }
}

impl Network {
    pub fn new(config: NetworkConfig) -> Result<Self, NnError> {
        config.validate()?;
        let mut b = Builder { blocks: Vec::new(), next: 0 };
        let mut layers = Vec::new();
        // Current shape: (sequence length, channels); length 0 means a flat vector of `ch`.
        let (mut len, mut ch) = (config.window, config.features);
        for (i, spec) in config.layers.iter().enumerate() {
            match *spec {
                LayerSpec::Conv1d { filters, width, stride } => {
                    let w = b.block(format!("conv{i}.w"), "conv", filters, width * ch);
                    let bias = b.block(format!("conv{i}.b"), "conv", filters, 1);
                    let out_len = len.div_ceil(stride);
                    layers.push(Layer::Conv {
                        in_len: len,
                        in_ch: ch,
                        out_len,
                        filters,
                        width,
                        stride,
                        pad: (width - 1) / 2,
                        w,
                        b: bias,
                    });
                    len = out_len;
                    ch = filters;
                }
                LayerSpec::Recurrent { units, cell } => {
                    let layer = match cell {
                        CellKind::Gated => Layer::Gated {
                            len,
                            input: ch,
                            units,
                            wf: b.block(format!("rec{i}.wf"), "recurrent", units, ch),
                            uf: b.block(format!("rec{i}.uf"), "recurrent", units, units),
                            bf: b.block(format!("rec{i}.bf"), "recurrent", units, 1),
                            wh: b.block(format!("rec{i}.wh"), "recurrent", units, ch),
                            uh: b.block(format!("rec{i}.uh"), "recurrent", units, units),
                            bh: b.block(format!("rec{i}.bh"), "recurrent", units, 1),
                        },
                        CellKind::Simple => Layer::Simple {
                            len,
                            input: ch,
                            units,
                            w: b.block(format!("rec{i}.w"), "recurrent", units, ch),
                            u: b.block(format!("rec{i}.u"), "recurrent", units, units),
                            b: b.block(format!("rec{i}.b"), "recurrent", units, 1),
                        },
                    };
                    layers.push(layer);
                    len = 0;
                    ch = units;
                }
                LayerSpec::Dense { units, activation } => {
                    let input = if len == 0 { ch } else { len * ch };
                    let w = b.block(format!("dense{i}.w"), "dense", units, input);
                    let bias = b.block(format!("dense{i}.b"), "dense", units, 1);
                    layers.push(Layer::Dense { input, units, activation, w, b: bias });
                    len = 0;
                    ch = units;
                }
            }
        }
        let hidden = if len == 0 { ch } else { len * ch };
        let policy_w = b.block("policy.w".into(), "policy", config.actions, hidden);
        let policy_b = b.block("policy.b".into(), "policy", config.actions, 1);
        let value_w = b.block("value.w".into(), "value", 1, hidden);
        let value_b = b.block("value.b".into(), "value", 1, 1);
        Ok(Self {
            config,
            layers,
            hidden,
            policy_w,
            policy_b,
            value_w,
            value_b,
            n_params: b.next,
            blocks: b.blocks,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn param_count(&self) -> usize {
        self.n_params
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    /// Weights uniform in ±√(6 / (fan_in + fan_out)), biases zero.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut params = vec![0.0; self.n_params];
        for (idx, block) in self.blocks.iter().enumerate() {
            if block.is_bias() {
                continue;
            }
            let (fan_in, fan_out) = match self.block_layer(idx) {
                Some(Layer::Conv { in_ch, filters, width, .. }) => (width * in_ch, width * filters),
                _ => (block.cols, block.rows),
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[block.range()] {
                *p = rng.gen_range(-limit..=limit);
            }
        }
        params
    }

    fn block_layer(&self, block_idx: usize) -> Option<&Layer> {
        let offset = self.blocks[block_idx].offset;
        self.layers.iter().find(|l| match **l {
            Layer::Conv { w, .. } => w == offset,
            _ => false,
        })
    }

    fn check_params(&self, params: &[f64]) -> Result<(), NnError> {
        if params.len() != self.n_params {
            return Err(NnError::Shape { expected: self.n_params, got: params.len() });
        }
        Ok(())
    }

    /// Policy probabilities and value for one `window × features` observation
    /// (row-major, one row per time step).
    pub fn forward(&self, params: &[f64], obs: &[f64]) -> Result<ForwardPass, NnError> {
        self.check_params(params)?;
        let expected = self.config.input_len();
        if obs.len() != expected {
            return Err(NnError::Shape { expected, got: obs.len() });
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut aux = Vec::with_capacity(self.layers.len());
        acts.push(obs.to_vec());
        for layer in &self.layers {
            let x = acts.last().expect("input pushed above");
            let (y, a) = layer_forward(layer, params, x);
            acts.push(y);
            aux.push(a);
        }
        let h = acts.last().expect("at least one layer");
        let k = self.config.actions;
        let mut logits = params[self.policy_b..self.policy_b + k].to_vec();
        for (i, l) in logits.iter_mut().enumerate() {
            *l += dot(&params[self.policy_w + i * self.hidden..][..self.hidden], h);
        }
        let value = params[self.value_b] + dot(&params[self.value_w..][..self.hidden], h);
        let probs = softmax(&logits);
        Ok(ForwardPass { logits, probs, value, acts, aux })
    }

    /// Accumulate into `grad` the gradient of a scalar loss whose partial
    /// derivatives with respect to the logits and the value are given.
    pub fn backward(
        &self,
        params: &[f64],
        pass: &ForwardPass,
        d_logits: &[f64],
        d_value: f64,
        grad: &mut [f64],
    ) -> Result<(), NnError> {
        self.check_params(params)?;
        if grad.len() != self.n_params {
            return Err(NnError::Shape { expected: self.n_params, got: grad.len() });
        }
        let k = self.config.actions;
        if d_logits.len() != k {
            return Err(NnError::Shape { expected: k, got: d_logits.len() });
        }
        let hdim = self.hidden;
        let h = pass.acts.last().expect("at least one layer");
        let mut dh = vec![0.0; hdim];
        for (i, &g) in d_logits.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad[self.policy_b + i] += g;
            let w = self.policy_w + i * hdim;
            for j in 0..hdim {
                grad[w + j] += g * h[j];
                dh[j] += g * params[w + j];
            }
        }
        if d_value != 0.0 {
            grad[self.value_b] += d_value;
            for j in 0..hdim {
                grad[self.value_w + j] += d_value * h[j];
                dh[j] += d_value * params[self.value_w + j];
            }
        }
        let mut dy = dh;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            dy = layer_backward(layer, params, &pass.acts[i], &pass.acts[i + 1], &pass.aux[i], &dy, grad);
        }
        Ok(())
    }

    /// Fresh gradient vector for one sample.
    pub fn gradient(
        &self,
        params: &[f64],
        pass: &ForwardPass,
        d_logits: &[f64],
        d_value: f64,
    ) -> Result<Vec<f64>, NnError> {
        let mut grad = vec![0.0; self.n_params];
        self.backward(params, pass, d_logits, d_value, &mut grad)?;
        Ok(grad)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

/// `out[r] += Σ_c m[r, c] v[c]` for a row-major block at `off`.
fn matvec_add(params: &[f64], off: usize, rows: usize, cols: usize, v: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        out[r] += dot(&params[off + r * cols..][..cols], v);
    }
}

/// Gradient of `y = M v` pieces: `dM += dy vᵀ`, `dv += Mᵀ dy`.
fn matvec_back(
    params: &[f64],
    off: usize,
    rows: usize,
    cols: usize,
    v: &[f64],
    dy: &[f64],
    grad: &mut [f64],
    dv: &mut [f64],
) {
    for r in 0..rows {
        let g = dy[r];
        if g == 0.0 {
            continue;
        }
        let base = off + r * cols;
        for c in 0..cols {
            grad[base + c] += g * v[c];
            dv[c] += g * params[base + c];
        }
    }
}

fn layer_forward(layer: &Layer, params: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    match *layer {
        Layer::Conv { in_len, in_ch, out_len, filters, width, stride, pad, w, b } => {
            let mut y = vec![0.0; out_len * filters];
            for o in 0..out_len {
                for f in 0..filters {
                    let mut s = params[b + f];
                    for k in 0..width {
                        let Some(i) = (o * stride + k).checked_sub(pad).filter(|&i| i < in_len) else {
                            continue;
                        };
                        s += dot(&params[w + (f * width + k) * in_ch..][..in_ch], &x[i * in_ch..][..in_ch]);
                    }
                    y[o * filters + f] = s.max(0.0);
                }
            }
            (y, Vec::new())
        }
        Layer::Gated { len, input, units, wf, uf, bf, wh, uh, bh } => {
            // aux layout: hidden states (len + 1) × units, then gates, then candidates.
            let mut aux = vec![0.0; (3 * len + 1) * units];
            let (hs, rest) = aux.split_at_mut((len + 1) * units);
            let (fs, gs) = rest.split_at_mut(len * units);
            let mut af = vec![0.0; units];
            let mut ah = vec![0.0; units];
            let mut r = vec![0.0; units];
            for t in 0..len {
                let xt = &x[t * input..][..input];
                let h = hs[t * units..][..units].to_vec();
                af.copy_from_slice(&params[bf..bf + units]);
                matvec_add(params, wf, units, input, xt, &mut af);
                matvec_add(params, uf, units, units, &h, &mut af);
                let f = &mut fs[t * units..][..units];
                for j in 0..units {
                    f[j] = sigmoid(af[j]);
                    r[j] = f[j] * h[j];
                }
                ah.copy_from_slice(&params[bh..bh + units]);
                matvec_add(params, wh, units, input, xt, &mut ah);
                matvec_add(params, uh, units, units, &r, &mut ah);
                let g = &mut gs[t * units..][..units];
                let next = &mut hs[(t + 1) * units..][..units];
                for j in 0..units {
                    g[j] = ah[j].tanh();
                    next[j] = (1.0 - f[j]) * h[j] + f[j] * g[j];
                }
            }
            let y = hs[len * units..].to_vec();
            (y, aux)
        }
        Layer::Simple { len, input, units, w, u, b } => {
            let mut hs = vec![0.0; (len + 1) * units];
            let mut a = vec![0.0; units];
            for t in 0..len {
                let xt = &x[t * input..][..input];
                a.copy_from_slice(&params[b..b + units]);
                matvec_add(params, w, units, input, xt, &mut a);
                matvec_add(params, u, units, units, &hs[t * units..][..units], &mut a);
                for j in 0..units {
                    hs[(t + 1) * units + j] = a[j].tanh();
                }
            }
            let y = hs[len * units..].to_vec();
            (y, hs)
        }
        Layer::Dense { input, units, activation, w, b } => {
            let mut y = params[b..b + units].to_vec();
            matvec_add(params, w, units, input, x, &mut y);
            for v in &mut y {
                *v = match activation {
                    Activation::Relu => v.max(0.0),
                    Activation::Tanh => v.tanh(),
                    Activation::Linear => *v,
                };
            }
            (y, Vec::new())
        }
    }
}

/// Backpropagate `dy` through one layer, accumulating parameter gradients
/// and returning the gradient with respect to the layer input.
fn layer_backward(
    layer: &Layer,
    params: &[f64],
    x: &[f64],
    y: &[f64],
    aux: &[f64],
    dy: &[f64],
    grad: &mut [f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; x.len()];
    match *layer {
        Layer::Conv { in_len, in_ch, out_len, filters, width, stride, pad, w, b } => {
            for o in 0..out_len {
                for f in 0..filters {
                    let idx = o * filters + f;
                    if y[idx] <= 0.0 || dy[idx] == 0.0 {
                        continue;
                    }
                    let g = dy[idx];
                    grad[b + f] += g;
                    for k in 0..width {
                        let Some(i) = (o * stride + k).checked_sub(pad).filter(|&i| i < in_len) else {
                            continue;
                        };
                        let wo = w + (f * width + k) * in_ch;
                        for c in 0..in_ch {
                            grad[wo + c] += g * x[i * in_ch + c];
                            dx[i * in_ch + c] += g * params[wo + c];
                        }
                    }
                }
            }
        }
        Layer::Gated { len, input, units, wf, uf, bf, wh, uh, bh } => {
            let hs = &aux[..(len + 1) * units];
            let fs = &aux[(len + 1) * units..(2 * len + 1) * units];
            let gs = &aux[(2 * len + 1) * units..];
            let mut dh = dy.to_vec();
            let mut dr = vec![0.0; units];
            let mut dh_prev = vec![0.0; units];
            let mut dah = vec![0.0; units];
            let mut daf = vec![0.0; units];
            let mut r = vec![0.0; units];
            for t in (0..len).rev() {
                let xt = &x[t * input..][..input];
                let h = &hs[t * units..][..units];
                let f = &fs[t * units..][..units];
                let g = &gs[t * units..][..units];
                for j in 0..units {
                    r[j] = f[j] * h[j];
                    dah[j] = dh[j] * f[j] * (1.0 - g[j] * g[j]);
                    dh_prev[j] = dh[j] * (1.0 - f[j]);
                    dr[j] = 0.0;
                }
                for j in 0..units {
                    grad[bh + j] += dah[j];
                }
                let dxt = &mut dx[t * input..][..input];
                matvec_back(params, wh, units, input, xt, &dah, grad, dxt);
                matvec_back(params, uh, units, units, &r, &dah, grad, &mut dr);
                for j in 0..units {
                    dh_prev[j] += dr[j] * f[j];
                    let df = dh[j] * (g[j] - h[j]) + dr[j] * h[j];
                    daf[j] = df * f[j] * (1.0 - f[j]);
                    grad[bf + j] += daf[j];
                }
                matvec_back(params, wf, units, input, xt, &daf, grad, dxt);
                matvec_back(params, uf, units, units, h, &daf, grad, &mut dh_prev);
                std::mem::swap(&mut dh, &mut dh_prev);
            }
        }
        Layer::Simple { len, input, units, w, u, b } => {
            let hs = aux;
            let mut dh = dy.to_vec();
            let mut da = vec![0.0; units];
            for t in (0..len).rev() {
                let next = &hs[(t + 1) * units..][..units];
                for j in 0..units {
                    da[j] = dh[j] * (1.0 - next[j] * next[j]);
                    grad[b + j] += da[j];
                }
                let dxt = &mut dx[t * input..][..input];
                matvec_back(params, w, units, input, &x[t * input..][..input], &da, grad, dxt);
                let mut dprev = vec![0.0; units];
                matvec_back(params, u, units, units, &hs[t * units..][..units], &da, grad, &mut dprev);
                dh = dprev;
            }
        }
        Layer::Dense { input, units, activation, w, b } => {
            let dz: Vec<f64> = (0..units)
                .map(|j| match activation {
                    Activation::Relu if y[j] <= 0.0 => 0.0,
                    Activation::Tanh => dy[j] * (1.0 - y[j] * y[j]),
                    _ => dy[j],
                })
                .collect();
            for j in 0..units {
                grad[b + j] += dz[j];
            }
            matvec_back(params, w, units, input, x, &dz, grad, &mut dx);
        }
    }
    dx
}
