//! The training-size sweep: every method and baseline on every `(n, seed)`,
//! evaluated on one shared held-out split.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::CompositeAction;
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::scorer::{train, Method, TrainConfig, TrainedPolicy};
use crate::seed::derive_seed;
use crate::synthbench::baselines::{baseline_actions, Baseline};
use crate::synthbench::evaluate::{
    bayes_actions, bayes_decision_map, decode_all, evaluate_actions, policy_decision_map, DecisionMap, Metrics,
};
use crate::synthbench::spec::{bayes_reference, generate, BayesReference, RegionSpec, REGION_MINUS, REGION_PLUS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub sizes: Vec<usize>,
    /// Number of seeds per training size.
    pub seeds: usize,
    pub test_size: usize,
    /// Seed of the held-out split; derived from `root_seed` when absent.
    pub test_seed: Option<u64>,
    pub root_seed: u64,
    pub spec: RegionSpec,
    /// Training protocol; its `seed` is replaced per run.
    pub train: TrainConfig,
    pub methods: Vec<Method>,
    pub baselines: Vec<Baseline>,
    /// Decision maps are drawn for seed 0 at the largest size; `0` disables them.
    pub grid_resolution: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            sizes: vec![250, 500, 1000, 2500, 5000],
            seeds: 5,
            test_size: 100_000,
            test_seed: None,
            root_seed: 0,
            spec: RegionSpec::default(),
            train: TrainConfig::synthetic(0),
            methods: Method::ALL.to_vec(),
            baselines: Baseline::SYNTHETIC.to_vec(),
            grid_resolution: 201,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.train.validate()?;
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(invalid("need at least one positive training size"));
        }
        if self.seeds == 0 {
            return Err(invalid("need at least one seed"));
        }
        if self.test_size == 0 {
            return Err(invalid("test size must be positive"));
        }
        if self.methods.is_empty() && self.baselines.is_empty() {
            return Err(invalid("nothing to run"));
        }
        if self.grid_resolution == 1 {
            return Err(invalid("grid resolution must be 0 (off) or at least 2"));
        }
        let policy_baselines = self.baselines.iter().any(|b| b.needs_policy());
        if policy_baselines && !self.methods.contains(&Method::Augmented) {
            return Err(invalid("policy-based baselines use the augmented policy; add it to the methods"));
        }
        Ok(())
    }

    pub fn resolved_test_seed(&self) -> u64 {
        self.test_seed.unwrap_or_else(|| derive_seed(self.root_seed, &[0]))
    }

    fn labels(&self) -> Vec<String> {
        self.methods
            .iter()
            .map(|m| m.name().to_owned())
            .chain(self.baselines.iter().map(|b| b.name().to_owned()))
            .collect()
    }
}

/// One evaluated `(n, seed, method-or-baseline)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: usize,
    pub seed_index: usize,
    /// Seed of the training split.
    pub data_seed: u64,
    /// Seed of training or of the baseline's randomization.
    pub run_seed: u64,
    pub method: String,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation over seeds.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

/// Aggregate of one `(n, method)` over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub method: String,
    pub runs: usize,
    pub risk: MeanStd,
    pub excess: MeanStd,
    pub advice_rate: MeanStd,
    pub bayes_match: MeanStd,
    pub risk_minus: MeanStd,
    pub risk_plus: MeanStd,
    pub match_minus: MeanStd,
    pub match_plus: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMap {
    pub label: String,
    pub n: usize,
    pub map: DecisionMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub test_seed: u64,
    pub reference: BayesReference,
    /// Bayes rule executed on the held-out split.
    pub oracle_test_risk: f64,
    /// Best no-advice rule executed on the held-out split.
    pub no_advice_oracle_test_risk: f64,
    /// Sorted by `(n, seed_index, method order)`.
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    pub decision_maps: Vec<LabeledMap>,
}

impl BenchmarkReport {
    pub fn row(&self, n: usize, method: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.n == n && r.method == method)
    }

    /// `(n, excess mean, excess std)` for one method, in increasing `n`.
    pub fn excess_vs_n(&self, method: &str) -> Vec<(usize, f64, f64)> {
        let mut v: Vec<_> = self
            .summary
            .iter()
            .filter(|r| r.method == method)
            .map(|r| (r.n, r.excess.mean, r.excess.std))
            .collect();
        v.sort_by_key(|t| t.0);
        v
    }
}

struct Cell {
    records: Vec<RunRecord>,
    maps: Vec<LabeledMap>,
}

fn run_cell(
    config: &BenchmarkConfig,
    reference: &BayesReference,
    test: &Dataset,
    n: usize,
    seed_index: usize,
    draw_maps: bool,
) -> Result<Cell> {
    let root = config.root_seed;
    let (ni, si) = (n as u64, seed_index as u64);
    let data_seed = derive_seed(root, &[1, ni, si]);
    let train_set = generate(n, data_seed, &config.spec)?;
    let mut records = Vec::new();
    let mut maps = Vec::new();
    let mut augmented: Option<TrainedPolicy> = None;
    for (mi, &method) in config.methods.iter().enumerate() {
        let run_seed = derive_seed(root, &[2, ni, si, mi as u64]);
        let tc = TrainConfig { seed: run_seed, ..config.train.clone() };
        let policy = train(method, &train_set, &tc)?;
        let compiled = policy.compile()?;
        let actions = decode_all(&compiled, test)?;
        records.push(RunRecord {
            n,
            seed_index,
            data_seed,
            run_seed,
            method: method.name().to_owned(),
            metrics: evaluate_actions(&actions, test, Some(reference))?,
        });
        if draw_maps {
            maps.push(LabeledMap {
                label: method.name().to_owned(),
                n,
                map: policy_decision_map(&compiled, config.grid_resolution)?,
            });
        }
        if method == Method::Augmented {
            augmented = Some(policy);
        }
    }
    let compiled = augmented.as_ref().map(|p| p.compile()).transpose()?;
    for (bi, &baseline) in config.baselines.iter().enumerate() {
        let run_seed = derive_seed(root, &[3, ni, si, bi as u64]);
        let actions = baseline_actions(baseline, &train_set, test, compiled.as_ref(), run_seed)?;
        records.push(RunRecord {
            n,
            seed_index,
            data_seed,
            run_seed,
            method: baseline.name().to_owned(),
            metrics: evaluate_actions(&actions, test, Some(reference))?,
        });
    }
    Ok(Cell { records, maps })
}

fn region_value(m: &Metrics, region: usize, f: fn(&crate::synthbench::RegionMetrics) -> f64) -> f64 {
    m.regions.as_ref().map(|r| f(&r[region])).unwrap_or(f64::NAN)
}

fn summarize(config: &BenchmarkConfig, records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    let mut sizes = config.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    for &n in &sizes {
        for label in config.labels() {
            let runs: Vec<&Metrics> =
                records.iter().filter(|r| r.n == n && r.method == label).map(|r| &r.metrics).collect();
            if runs.is_empty() {
                continue;
            }
            let stat = |f: &dyn Fn(&Metrics) -> f64| MeanStd::of(&runs.iter().map(|m| f(m)).collect::<Vec<_>>());
            rows.push(SummaryRow {
                n,
                method: label,
                runs: runs.len(),
                risk: stat(&|m| m.risk),
                excess: stat(&|m| m.excess.unwrap_or(f64::NAN)),
                advice_rate: stat(&|m| m.advice_rate),
                bayes_match: stat(&|m| m.bayes_match.unwrap_or(f64::NAN)),
                risk_minus: stat(&|m| region_value(m, REGION_MINUS, |r| r.risk)),
                risk_plus: stat(&|m| region_value(m, REGION_PLUS, |r| r.risk)),
                match_minus: stat(&|m| region_value(m, REGION_MINUS, |r| r.bayes_match)),
                match_plus: stat(&|m| region_value(m, REGION_PLUS, |r| r.bayes_match)),
            });
        }
    }
    rows
}

/// Runs every `(n, seed)` cell in parallel. Results do not depend on the
/// execution order.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let reference = bayes_reference(&config.spec)?;
    let test_seed = config.resolved_test_seed();
    let test = generate(config.test_size, test_seed, &config.spec)?;

    let oracle = evaluate_actions(&bayes_actions(&test, &reference), &test, Some(&reference))?;
    let no_advice: Vec<CompositeAction> = test
        .region_tags()
        .expect("generated data is tagged")
        .iter()
        .map(|&r| reference.no_advice_action(r))
        .collect();
    let no_advice = evaluate_actions(&no_advice, &test, Some(&reference))?;

    let largest = *config.sizes.iter().max().expect("validated");
    let jobs: Vec<(usize, usize)> =
        config.sizes.iter().flat_map(|&n| (0..config.seeds).map(move |s| (n, s))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(n, s)| {
            let draw = config.grid_resolution >= 2 && n == largest && s == 0;
            run_cell(config, &reference, &test, n, s, draw)
        })
        .collect::<Result<Vec<_>>>()?;

    let order = config.labels();
    let rank = |m: &str| order.iter().position(|l| l == m).unwrap_or(usize::MAX);
    let mut records = Vec::new();
    let mut decision_maps = Vec::new();
    for c in cells {
        records.extend(c.records);
        decision_maps.extend(c.maps);
    }
    records.sort_by(|a, b| (a.n, a.seed_index, rank(&a.method)).cmp(&(b.n, b.seed_index, rank(&b.method))));
    records.dedup_by(|a, b| a.n == b.n && a.seed_index == b.seed_index && a.method == b.method);
    if config.grid_resolution >= 2 {
        decision_maps.insert(
            0,
            LabeledMap {
                label: "bayes".to_owned(),
                n: largest,
                map: bayes_decision_map(&reference, config.grid_resolution)?,
            },
        );
    }
    let summary = summarize(config, &records);
    Ok(BenchmarkReport {
        config: config.clone(),
        test_seed,
        reference,
        oracle_test_risk: oracle.risk,
        no_advice_oracle_test_risk: no_advice.risk,
        records,
        summary,
        decision_maps,
    })
}
