//! Minibatch training of score models under the three learning objectives.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{CompositeAction, CompositeActionSpace};
use crate::bayes::{argmax, mismatch_decompose};
use crate::dataset::Dataset;
use crate::error::{invalid, shape, Result};
use crate::losses::{augmented_surrogate_into, separated_surrogate_costs, SeparatedScores, TauParameter};
use crate::scorer::adamw::{AdamW, Scheduler};
use crate::scorer::decode::{decode_composite, decode_separated};
use crate::scorer::mlp::{Activations, HeadConfig, MlpConfig, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Augmented comp-sum surrogate over all composite actions.
    Augmented,
    /// The same surrogate restricted to the no-advice column.
    L2d,
    /// Binary router/query separated surrogate.
    Separated,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Augmented, Method::Separated, Method::L2d];

    pub fn name(self) -> &'static str {
        match self {
            Method::Augmented => "augmented",
            Method::L2d => "l2d",
            Method::Separated => "separated",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "augmented" => Ok(Method::Augmented),
            "l2d" => Ok(Method::L2d),
            "separated" => Ok(Method::Separated),
            other => Err(invalid(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub grad_clip_norm: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub tau: TauParameter,
    pub seed: u64,
    #[serde(default)]
    pub scheduler: Scheduler,
    pub hidden_dims: Vec<usize>,
    /// Use the structured routing + advice-adjustment head instead of a
    /// linear one (composite-action methods only).
    #[serde(default)]
    pub structured_head: bool,
}

impl TrainConfig {
    /// Protocol of the synthetic benchmark: MLP (32, 32), AdamW at 3e-3, no
    /// decay, clip 10, 120 epochs, batch 256, tau = 1, constant rate.
    pub fn synthetic(seed: u64) -> Self {
        Self {
            learning_rate: 3e-3,
            weight_decay: 0.0,
            grad_clip_norm: 10.0,
            epochs: 120,
            batch_size: 256,
            tau: TauParameter::LOGISTIC,
            seed,
            scheduler: Scheduler::Constant,
            hidden_dims: vec![32, 32],
            structured_head: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(invalid("learning rate must be positive"));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(invalid("weight decay must be non-negative"));
        }
        if !(self.grad_clip_norm.is_finite() && self.grad_clip_norm > 0.0) {
            return Err(invalid("gradient clip norm must be positive"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch size must be positive"));
        }
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return Err(invalid("need at least one positive hidden width"));
        }
        if let Scheduler::CosineWithWarmup { warmup_fraction } = self.scheduler {
            if !(0.0..1.0).contains(&warmup_fraction) {
                return Err(invalid("warmup fraction must lie in [0, 1)"));
            }
        }
        Ok(())
    }
}

/// A trained scorer together with everything needed to rebuild and decode it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPolicy {
    pub method: Method,
    /// Action space of the data the policy acts on (always the full space,
    /// also for the no-advice baseline).
    pub space: CompositeActionSpace,
    pub model: MlpConfig,
    pub parameters: Vec<f64>,
    pub config: TrainConfig,
    /// Mean training loss of every epoch.
    pub epoch_losses: Vec<f64>,
}

/// A policy with its network built, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct CompiledPolicy<'a> {
    policy: &'a TrainedPolicy,
    network: Network,
}

impl TrainedPolicy {
    pub fn compile(&self) -> Result<CompiledPolicy<'_>> {
        let network = Network::new(self.model.clone())?;
        if network.num_params() != self.parameters.len() {
            return Err(shape(format!(
                "policy stores {} parameters, architecture needs {}",
                self.parameters.len(),
                network.num_params()
            )));
        }
        let expected = expected_outputs(self.method, self.space)?;
        if network.num_outputs() != expected {
            return Err(shape(format!(
                "{} head emits {} scores, expected {expected}",
                self.method,
                network.num_outputs()
            )));
        }
        Ok(CompiledPolicy { policy: self, network })
    }
}

impl CompiledPolicy<'_> {
    pub fn method(&self) -> Method {
        self.policy.method
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.network.scores(&self.policy.parameters, x)
    }

    pub fn decode(&self, x: &[f64]) -> Result<CompositeAction> {
        let s = self.scores(x)?;
        Ok(self.decode_scores(&s))
    }

    pub fn decode_scores(&self, s: &[f64]) -> CompositeAction {
        match self.policy.method {
            Method::Augmented => decode_composite(s, self.policy.space),
            Method::L2d => CompositeAction::new(argmax(s), 0),
            Method::Separated => decode_separated(SeparatedScores::from_slice(s)),
        }
    }

    /// The advice this policy would request if routed to `expert`.
    pub fn learned_advice(&self, x: &[f64], expert: usize) -> Result<usize> {
        let s = self.scores(x)?;
        Ok(self.learned_advice_from_scores(&s, expert))
    }

    pub fn learned_advice_from_scores(&self, s: &[f64], expert: usize) -> usize {
        match self.policy.method {
            Method::Augmented => {
                let w = self.policy.space.row_len();
                argmax(&s[expert * w..(expert + 1) * w])
            }
            Method::L2d => 0,
            Method::Separated => usize::from(s[1 + expert] >= 0.0),
        }
    }
}

fn expected_outputs(method: Method, space: CompositeActionSpace) -> Result<usize> {
    match method {
        Method::Augmented => Ok(space.len()),
        Method::L2d => Ok(space.num_experts()),
        Method::Separated => {
            if space.num_experts() != 2 || space.num_advice() != 1 {
                Err(shape(format!(
                    "separated method needs J = 2, K = 1, got J = {}, K = {}",
                    space.num_experts(),
                    space.num_advice()
                )))
            } else {
                Ok(3)
            }
        }
    }
}

/// Per-instance objective: writes `d loss / d scores` and returns the loss.
trait Objective {
    fn eval(&self, instance: usize, scores: &[f64], dscores: &mut [f64]) -> f64;
}

struct Augmented {
    weights: Vec<Vec<f64>>,
    tau: TauParameter,
}

impl Objective for Augmented {
    fn eval(&self, i: usize, scores: &[f64], dscores: &mut [f64]) -> f64 {
        augmented_surrogate_into(scores, &self.weights[i], self.tau, dscores).expect("validated weights")
    }
}

struct Separated {
    costs: Vec<[f64; 4]>,
}

impl Objective for Separated {
    fn eval(&self, i: usize, scores: &[f64], dscores: &mut [f64]) -> f64 {
        let (v, g) = separated_surrogate_costs(SeparatedScores::from_slice(scores), &self.costs[i]);
        dscores.copy_from_slice(&g);
        v
    }
}

fn model_config(method: Method, data: &Dataset, config: &TrainConfig) -> Result<MlpConfig> {
    let space = data.space();
    let outputs = expected_outputs(method, space)?;
    let head = if config.structured_head {
        match method {
            Method::Augmented => HeadConfig::Structured {
                num_experts: space.num_experts(),
                num_advice: space.num_advice(),
            },
            Method::L2d => HeadConfig::Structured {
                num_experts: space.num_experts(),
                num_advice: 0,
            },
            Method::Separated => return Err(invalid("structured head is not defined for the separated method")),
        }
    } else {
        HeadConfig::Linear { outputs }
    };
    Ok(MlpConfig {
        input_dim: data.feature_dim(),
        hidden_dims: config.hidden_dims.clone(),
        head,
    })
}

fn fit<O: Objective>(
    network: &Network,
    data: &Dataset,
    config: &TrainConfig,
    objective: &O,
) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = network.init_params(&mut rng);
    let mut opt = AdamW::new(params.len());
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = vec![0.0; params.len()];
    let mut dscores = vec![0.0; network.num_outputs()];
    let mut acts = Activations::default();
    let batches_per_epoch = n.div_ceil(config.batch_size);
    let total_steps = batches_per_epoch * config.epochs;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut step = 0;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                network
                    .forward(&params, data.feature(i), &mut acts)
                    .expect("validated dimensions");
                epoch_loss += objective.eval(i, acts.scores(), &mut dscores);
                dscores.iter_mut().for_each(|d| *d *= scale);
                network
                    .backward(&params, &acts, &dscores, &mut grad)
                    .expect("validated dimensions");
            }
            let lr = config.scheduler.learning_rate(config.learning_rate, step, total_steps);
            opt.step(&mut params, &mut grad, lr, config.weight_decay, config.grad_clip_norm);
            step += 1;
        }
        epoch_losses.push(epoch_loss / n as f64);
    }
    (params, epoch_losses)
}

fn train_weighted(method: Method, data: &Dataset, fit_data: &Dataset, config: &TrainConfig) -> Result<TrainedPolicy> {
    config.validate()?;
    let model = model_config(method, fit_data, config)?;
    let network = Network::new(model.clone())?;
    let weights = fit_data
        .tables()
        .iter()
        .map(|t| mismatch_decompose(t).weights)
        .collect();
    let objective = Augmented {
        weights,
        tau: config.tau,
    };
    let (parameters, epoch_losses) = fit(&network, fit_data, config, &objective);
    Ok(TrainedPolicy {
        method,
        space: data.space(),
        model,
        parameters,
        config: config.clone(),
        epoch_losses,
    })
}

/// Trains a composite scorer under the augmented surrogate, with weights from
/// the mismatch decomposition of each realized cost table.
pub fn train_augmented(data: &Dataset, config: &TrainConfig) -> Result<TrainedPolicy> {
    train_weighted(Method::Augmented, data, data, config)
}

/// The no-advice baseline: the augmented pipeline on the `k = 0` column.
pub fn train_l2d(data: &Dataset, config: &TrainConfig) -> Result<TrainedPolicy> {
    train_weighted(Method::L2d, data, &data.restrict_no_advice(), config)
}

/// Trains a shared backbone with a three-score head under the separated
/// surrogate. Requires two experts and one advice source.
pub fn train_separated(data: &Dataset, config: &TrainConfig) -> Result<TrainedPolicy> {
    config.validate()?;
    let model = model_config(Method::Separated, data, config)?;
    let network = Network::new(model.clone())?;
    let costs = data
        .tables()
        .iter()
        .map(|t| t.as_slice().try_into().expect("2 x 2 table"))
        .collect();
    let (parameters, epoch_losses) = fit(&network, data, config, &Separated { costs });
    Ok(TrainedPolicy {
        method: Method::Separated,
        space: data.space(),
        model,
        parameters,
        config: config.clone(),
        epoch_losses,
    })
}

pub fn train(method: Method, data: &Dataset, config: &TrainConfig) -> Result<TrainedPolicy> {
    match method {
        Method::Augmented => train_augmented(data, config),
        Method::L2d => train_l2d(data, config),
        Method::Separated => train_separated(data, config),
    }
}

/// Mean training objective of `policy` on `data`, for diagnostics and tests.
pub fn objective_value(policy: &TrainedPolicy, data: &Dataset) -> Result<f64> {
    Ok(objective_gradient(policy, data)?.0)
}

/// Mean training objective of `policy` on `data` and its gradient with
/// respect to `policy.parameters`.
pub fn objective_gradient(policy: &TrainedPolicy, data: &Dataset) -> Result<(f64, Vec<f64>)> {
    let network = Network::new(policy.model.clone())?;
    policy.compile()?;
    let fit_data = if policy.method == Method::L2d {
        data.restrict_no_advice()
    } else {
        data.clone()
    };
    let expected = expected_outputs(policy.method, fit_data.space())?;
    if network.num_outputs() != expected {
        return Err(shape(format!("model emits {} scores, data needs {expected}", network.num_outputs())));
    }
    let scale = 1.0 / fit_data.len() as f64;
    let mut grad = vec![0.0; network.num_params()];
    let mut acts = Activations::default();
    let mut dscores = vec![0.0; expected];
    let mut total = 0.0;
    for i in 0..fit_data.len() {
        network.forward(&policy.parameters, fit_data.feature(i), &mut acts)?;
        let s = acts.scores();
        total += match policy.method {
            Method::Augmented | Method::L2d => {
                let w = mismatch_decompose(fit_data.table(i)).weights;
                augmented_surrogate_into(s, &w, policy.config.tau, &mut dscores)?
            }
            Method::Separated => {
                let c: [f64; 4] = fit_data.table(i).as_slice().try_into().expect("2 x 2 table");
                let (v, g) = separated_surrogate_costs(SeparatedScores::from_slice(s), &c);
                dscores.copy_from_slice(&g);
                v
            }
        };
        dscores.iter_mut().for_each(|d| *d *= scale);
        network.backward(&policy.parameters, &acts, &dscores, &mut grad)?;
    }
    Ok((total * scale, grad))
}
