//! Fully connected ReLU backbone with either a linear head or the structured
//! expert/advice head, operating on a flat parameter vector.
//!
//! Parameter layout: for every layer, the weight matrix (row-major,
//! `out x in`) followed by its bias. The structured head follows the backbone
//! as `a (J x d)`, `rho (J)`, `m (J x d)`, `g ((K+1) x d)`, `delta (K+1)`,
//! where `d` is the last hidden width and scores are
//! `s(j,k) = rho_j + <a_j, z> + delta_k + <m_j, g_k * z>`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeadConfig {
    Linear { outputs: usize },
    Structured { num_experts: usize, num_advice: usize },
}

impl HeadConfig {
    pub fn outputs(&self) -> usize {
        match *self {
            HeadConfig::Linear { outputs } => outputs,
            HeadConfig::Structured {
                num_experts,
                num_advice,
            } => num_experts * (num_advice + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub head: HeadConfig,
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    inputs: usize,
    outputs: usize,
    offset: usize,
}

impl Dense {
    fn weights<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.offset..self.offset + self.inputs * self.outputs]
    }

    fn bias<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        let start = self.offset + self.inputs * self.outputs;
        &p[start..start + self.outputs]
    }

    fn len(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }
}

#[derive(Debug, Clone, Copy)]
struct StructuredLayout {
    experts: usize,
    advice: usize,
    latent: usize,
    offset: usize,
}

impl StructuredLayout {
    fn a(&self) -> usize {
        self.offset
    }
    fn rho(&self) -> usize {
        self.a() + self.experts * self.latent
    }
    fn m(&self) -> usize {
        self.rho() + self.experts
    }
    fn g(&self) -> usize {
        self.m() + self.experts * self.latent
    }
    fn delta(&self) -> usize {
        self.g() + self.advice * self.latent
    }
    fn len(&self) -> usize {
        self.delta() + self.advice - self.offset
    }
}

/// A validated network shape with precomputed parameter offsets.
#[derive(Debug, Clone)]
pub struct Network {
    config: MlpConfig,
    hidden: Vec<Dense>,
    linear_head: Option<Dense>,
    structured: Option<StructuredLayout>,
    num_params: usize,
}

/// Per-sample activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct Activations {
    input: Vec<f64>,
    /// Post-ReLU outputs of each hidden layer.
    hidden: Vec<Vec<f64>>,
    scores: Vec<f64>,
}

impl Activations {
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

impl Network {
    pub fn new(config: MlpConfig) -> Result<Self> {
        if config.input_dim == 0 {
            return Err(invalid("input dimension must be positive"));
        }
        if config.hidden_dims.is_empty() || config.hidden_dims.contains(&0) {
            return Err(invalid("need at least one hidden layer, all widths positive"));
        }
        if config.head.outputs() == 0 {
            return Err(invalid("head must produce at least one score"));
        }
        let mut offset = 0;
        let mut inputs = config.input_dim;
        let mut hidden = Vec::with_capacity(config.hidden_dims.len());
        for &w in &config.hidden_dims {
            let d = Dense {
                inputs,
                outputs: w,
                offset,
            };
            offset += d.len();
            inputs = w;
            hidden.push(d);
        }
        let (linear_head, structured) = match config.head {
            HeadConfig::Linear { outputs } => {
                let d = Dense {
                    inputs,
                    outputs,
                    offset,
                };
                offset += d.len();
                (Some(d), None)
            }
            HeadConfig::Structured {
                num_experts,
                num_advice,
            } => {
                if num_experts == 0 {
                    return Err(invalid("structured head needs at least one expert"));
                }
                let s = StructuredLayout {
                    experts: num_experts,
                    advice: num_advice + 1,
                    latent: inputs,
                    offset,
                };
                offset += s.len();
                (None, Some(s))
            }
        };
        Ok(Self {
            config,
            hidden,
            linear_head,
            structured,
            num_params: offset,
        })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn num_outputs(&self) -> usize {
        self.config.head.outputs()
    }

    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for every weight and bias.
    pub fn init_params<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut p = vec![0.0; self.num_params];
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, rng: &mut R| {
            let bound = (1.0 / fan_in as f64).sqrt();
            for x in &mut p[range] {
                *x = rng.gen_range(-bound..=bound);
            }
        };
        for d in self.hidden.iter().chain(self.linear_head.as_ref()) {
            fill(d.offset..d.offset + d.len(), d.inputs, rng);
        }
        if let Some(s) = self.structured {
            fill(s.offset..s.offset + s.len(), s.latent, rng);
        }
        p
    }

    fn check(&self, params: &[f64], x: &[f64]) -> Result<()> {
        if params.len() != self.num_params {
            return Err(shape(format!("{} parameters, network has {}", params.len(), self.num_params)));
        }
        if x.len() != self.config.input_dim {
            return Err(shape(format!(
                "feature vector has {} entries, network expects {}",
                x.len(),
                self.config.input_dim
            )));
        }
        Ok(())
    }

    pub fn forward(&self, params: &[f64], x: &[f64], acts: &mut Activations) -> Result<()> {
        self.check(params, x)?;
        acts.input.clear();
        acts.input.extend_from_slice(x);
        acts.hidden.resize(self.hidden.len(), Vec::new());
        for (li, d) in self.hidden.iter().enumerate() {
            let (before, rest) = acts.hidden.split_at_mut(li);
            let input: &[f64] = if li == 0 { &acts.input } else { &before[li - 1] };
            let out = &mut rest[0];
            dense_forward(d, params, input, out);
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        let z = acts.hidden.last().expect("at least one hidden layer");
        if let Some(d) = &self.linear_head {
            dense_forward(d, params, z, &mut acts.scores);
        } else if let Some(s) = &self.structured {
            structured_forward(s, params, z, &mut acts.scores);
        }
        Ok(())
    }

    /// Convenience wrapper returning the score vector.
    pub fn scores(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let mut acts = Activations::default();
        self.forward(params, x, &mut acts)?;
        Ok(acts.scores)
    }

    /// Adds `d(loss)/d(params)` to `grad`, given `d(loss)/d(scores)` and the
    /// activations of a forward pass on the same parameters.
    pub fn backward(&self, params: &[f64], acts: &Activations, dscores: &[f64], grad: &mut [f64]) -> Result<()> {
        if dscores.len() != self.num_outputs() || grad.len() != self.num_params {
            return Err(shape("backward buffers do not match the network"));
        }
        let z = acts.hidden.last().expect("forward has run");
        let mut delta = vec![0.0; z.len()];
        if let Some(d) = &self.linear_head {
            dense_backward(d, params, z, dscores, grad, &mut delta);
        } else if let Some(s) = &self.structured {
            structured_backward(s, params, z, dscores, grad, &mut delta);
        }
        for li in (0..self.hidden.len()).rev() {
            let d = &self.hidden[li];
            let out = &acts.hidden[li];
            for (g, &o) in delta.iter_mut().zip(out) {
                if o <= 0.0 {
                    *g = 0.0;
                }
            }
            let input: &[f64] = if li == 0 { &acts.input } else { &acts.hidden[li - 1] };
            let mut next = vec![0.0; input.len()];
            dense_backward(d, params, input, &delta, grad, &mut next);
            delta = next;
        }
        Ok(())
    }
}

fn dense_forward(d: &Dense, params: &[f64], input: &[f64], out: &mut Vec<f64>) {
    let w = d.weights(params);
    let b = d.bias(params);
    out.clear();
    out.extend((0..d.outputs).map(|o| {
        let row = &w[o * d.inputs..(o + 1) * d.inputs];
        b[o] + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>()
    }));
}

fn dense_backward(d: &Dense, params: &[f64], input: &[f64], dout: &[f64], grad: &mut [f64], dinput: &mut [f64]) {
    let w = d.weights(params);
    let wb = d.offset;
    let bb = d.offset + d.inputs * d.outputs;
    for o in 0..d.outputs {
        let go = dout[o];
        if go == 0.0 {
            continue;
        }
        grad[bb + o] += go;
        let row = o * d.inputs;
        for i in 0..d.inputs {
            grad[wb + row + i] += go * input[i];
            dinput[i] += go * w[row + i];
        }
    }
}

fn structured_forward(s: &StructuredLayout, p: &[f64], z: &[f64], out: &mut Vec<f64>) {
    let d = s.latent;
    out.clear();
    for j in 0..s.experts {
        let a = &p[s.a() + j * d..s.a() + (j + 1) * d];
        let m = &p[s.m() + j * d..s.m() + (j + 1) * d];
        let route = p[s.rho() + j] + a.iter().zip(z).map(|(x, y)| x * y).sum::<f64>();
        for k in 0..s.advice {
            let g = &p[s.g() + k * d..s.g() + (k + 1) * d];
            let adjust: f64 = (0..d).map(|l| m[l] * g[l] * z[l]).sum();
            out.push(route + p[s.delta() + k] + adjust);
        }
    }
}

fn structured_backward(
    s: &StructuredLayout,
    p: &[f64],
    z: &[f64],
    ds: &[f64],
    grad: &mut [f64],
    dz: &mut [f64],
) {
    let d = s.latent;
    for j in 0..s.experts {
        let row = &ds[j * s.advice..(j + 1) * s.advice];
        let row_sum: f64 = row.iter().sum();
        grad[s.rho() + j] += row_sum;
        for l in 0..d {
            grad[s.a() + j * d + l] += row_sum * z[l];
            dz[l] += row_sum * p[s.a() + j * d + l];
        }
        for (k, &g_jk) in row.iter().enumerate() {
            if g_jk == 0.0 {
                continue;
            }
            grad[s.delta() + k] += g_jk;
            for l in 0..d {
                let m = p[s.m() + j * d + l];
                let g = p[s.g() + k * d + l];
                grad[s.m() + j * d + l] += g_jk * g * z[l];
                grad[s.g() + k * d + l] += g_jk * m * z[l];
                dz[l] += g_jk * m * g;
            }
        }
    }
}
