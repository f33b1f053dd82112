//! Command implementations. Each returns a short human-readable summary; all
//! machine-readable output goes to files (or stdout when no path is given).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use advdefer::bayes::bayes_policy;
use advdefer::losses::{decode_router, fisher_counterexample, fisher_counterexample_with_delta, Counterexample, SeparatedScores};
use advdefer::scorer::{decode_separated, train, Method, TrainedPolicy};
use advdefer::synthbench::{
    bayes_reference, evaluate, generate, run_benchmark, BenchmarkConfig, BenchmarkReport, Metrics, RegionSpec,
};
use advdefer::{CompositeAction, Dataset};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::config::{DataSource, Provenance, RunConfig};
use crate::error::{CliError, CliResult};
use crate::tensor::CostTensor;

pub const POLICY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub provenance: Provenance,
    pub report: BenchmarkReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub format_version: u32,
    pub provenance: Provenance,
    pub policy: TrainedPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub provenance: Provenance,
    pub method: Method,
    /// Label of every histogram bin, `(expert,advice)` 0-based.
    pub action_labels: Vec<String>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesDecisionRow {
    pub lambda: Option<f64>,
    pub instance: usize,
    pub expert: usize,
    pub advice: usize,
    pub risk: f64,
    pub no_advice_expert: usize,
    pub no_advice_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesAggregate {
    pub lambda: Option<f64>,
    pub mean_risk: f64,
    pub no_advice_mean_risk: f64,
    /// `no_advice_mean_risk - mean_risk`, never negative.
    pub dominance_gap: f64,
    pub advice_rate: f64,
    pub selection_histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesOutput {
    pub provenance: Provenance,
    pub action_labels: Vec<String>,
    pub aggregates: Vec<BayesAggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherCertificate {
    pub provenance: Provenance,
    pub counterexample: Counterexample,
    /// Bayes action on the table, 0-based.
    pub bayes_action: CompositeAction,
    /// Numerical minimizer of the three-score separated surrogate.
    pub numeric_scores: SeparatedScores,
    pub numeric_expert: usize,
    pub numeric_action: CompositeAction,
    /// Bayes and the numerical surrogate minimizer route to different experts.
    pub verified: bool,
}

pub fn run(config: &RunConfig) -> CliResult<String> {
    config.validate()?;
    match config {
        RunConfig::Synth { benchmark, out } => synth(config, benchmark, out),
        RunConfig::Bayes { tensor, lambdas, out } => bayes(config, tensor, lambdas, out.as_deref()),
        RunConfig::Train { data, method, train, out } => train_cmd(config, data, *method, train, out),
        RunConfig::Eval { data, policy, out } => eval(config, data, policy, out.as_deref()),
        RunConfig::Fisher { b, epsilon, bound, delta, out } => fisher(config, *b, *epsilon, *bound, *delta, out.as_deref()),
        RunConfig::Report { input, out } => report(input, out.as_deref()),
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(runtime)?;
    s.push('\n');
    Ok(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_text(path, &to_json(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, format!("line {} column {}: {e}", e.line(), e.column())))
}

fn csv_string<T: Serialize>(rows: &[T]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(runtime)?;
    }
    String::from_utf8(w.into_inner().map_err(runtime)?).map_err(runtime)
}

fn action_labels(data: &Dataset) -> Vec<String> {
    data.space().actions().map(|a| format!("({},{})", a.expert, a.advice)).collect()
}

#[derive(Serialize)]
struct SummaryCsvRow<'a> {
    n: usize,
    method: &'a str,
    runs: usize,
    risk_mean: f64,
    risk_std: f64,
    excess_mean: f64,
    excess_std: f64,
    advice_rate_mean: f64,
    bayes_match_mean: f64,
    risk_minus_mean: f64,
    risk_plus_mean: f64,
    match_minus_mean: f64,
    match_plus_mean: f64,
}

#[derive(Serialize)]
struct RecordCsvRow<'a> {
    n: usize,
    seed_index: usize,
    data_seed: u64,
    run_seed: u64,
    method: &'a str,
    risk: f64,
    excess: f64,
    advice_rate: f64,
    bayes_match: f64,
}

#[derive(Serialize)]
struct ExcessCsvRow<'a> {
    method: &'a str,
    n: usize,
    excess_mean: f64,
    excess_std: f64,
}

/// Writes `report.csv`, `records.csv`, `excess_vs_n.csv` and one
/// `decision_map_<label>.csv` per map into `dir`. Returns the written paths.
pub fn write_report_tables(report: &BenchmarkReport, dir: &Path) -> CliResult<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let summary: Vec<_> = report
        .summary
        .iter()
        .map(|r| SummaryCsvRow {
            n: r.n,
            method: &r.method,
            runs: r.runs,
            risk_mean: r.risk.mean,
            risk_std: r.risk.std,
            excess_mean: r.excess.mean,
            excess_std: r.excess.std,
            advice_rate_mean: r.advice_rate.mean,
            bayes_match_mean: r.bayes_match.mean,
            risk_minus_mean: r.risk_minus.mean,
            risk_plus_mean: r.risk_plus.mean,
            match_minus_mean: r.match_minus.mean,
            match_plus_mean: r.match_plus.mean,
        })
        .collect();
    let records: Vec<_> = report
        .records
        .iter()
        .map(|r| RecordCsvRow {
            n: r.n,
            seed_index: r.seed_index,
            data_seed: r.data_seed,
            run_seed: r.run_seed,
            method: &r.method,
            risk: r.metrics.risk,
            excess: r.metrics.excess.unwrap_or(f64::NAN),
            advice_rate: r.metrics.advice_rate,
            bayes_match: r.metrics.bayes_match.unwrap_or(f64::NAN),
        })
        .collect();
    let mut excess = Vec::new();
    let mut methods: Vec<&str> = Vec::new();
    for r in &report.summary {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let series: Vec<_> = methods.iter().map(|m| (*m, report.excess_vs_n(m))).collect();
    for (m, s) in &series {
        for &(n, mean, std) in s {
            excess.push(ExcessCsvRow { method: m, n, excess_mean: mean, excess_std: std });
        }
    }
    for (name, text) in [
        ("report.csv", csv_string(&summary)?),
        ("records.csv", csv_string(&records)?),
        ("excess_vs_n.csv", csv_string(&excess)?),
    ] {
        let p = dir.join(name);
        write_text(&p, &text)?;
        written.push(p);
    }
    for m in &report.decision_maps {
        let mut text = String::new();
        for r in 0..m.map.resolution {
            let row: Vec<String> = m.map.row(r).iter().map(usize::to_string).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        let p = dir.join(format!("decision_map_{}.csv", m.label));
        write_text(&p, &text)?;
        written.push(p);
    }
    Ok(written)
}

/// Plain-text table of the summary rows at the largest training size.
pub fn render_summary(report: &BenchmarkReport) -> String {
    let largest = report.summary.iter().map(|r| r.n).max().unwrap_or(0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Bayes risk {:.3} (oracle on test {:.4}, best no-advice on test {:.4}); n = {largest}",
        report.reference.risk, report.oracle_test_risk, report.no_advice_oracle_test_risk
    );
    let _ = writeln!(
        s,
        "{:<30} {:>15} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "method", "risk", "excess", "advice%", "match%", "R- %", "R+ %"
    );
    for r in report.summary.iter().filter(|r| r.n == largest) {
        let _ = writeln!(
            s,
            "{:<30} {:>7.4} ± {:.4} {:>8.4} {:>8.1} {:>8.1} {:>8.1} {:>8.1}",
            r.method,
            r.risk.mean,
            r.risk.std,
            r.excess.mean,
            r.advice_rate.mean,
            r.bayes_match.mean,
            r.match_minus.mean,
            r.match_plus.mean
        );
    }
    s
}

fn synth(config: &RunConfig, benchmark: &BenchmarkConfig, out: &Path) -> CliResult<String> {
    let report = run_benchmark(benchmark)?;
    ensure_dir(out)?;
    let output = SynthOutput { provenance: Provenance::new(config), report };
    write_json(&out.join("report.json"), &output)?;
    write_report_tables(&output.report, out)?;
    Ok(render_summary(&output.report))
}

fn report(input: &Path, out: Option<&Path>) -> CliResult<String> {
    let output: SynthOutput = read_json(input)?;
    if let Some(dir) = out {
        write_report_tables(&output.report, dir)?;
    }
    Ok(render_summary(&output.report))
}

fn bayes(config: &RunConfig, tensor: &Path, lambdas: &[f64], out: Option<&Path>) -> CliResult<String> {
    let t = CostTensor::read(tensor)?;
    let mut rows = Vec::new();
    let mut aggregates = Vec::new();
    let mut labels = Vec::new();
    for lambda in t.resolve_lambdas(lambdas)? {
        let data = t.to_dataset(lambda)?;
        labels = action_labels(&data);
        let space = data.space();
        let mut hist = vec![0usize; space.len()];
        let (mut risk, mut no_adv, mut queried) = (0.0, 0.0, 0usize);
        for (i, table) in data.tables().iter().enumerate() {
            let d = bayes_policy(table);
            let l2d = bayes_policy(&table.no_advice_slice());
            hist[space.flatten(d.executed)?] += 1;
            queried += usize::from(d.executed.queries());
            risk += d.bayes_risk;
            no_adv += l2d.bayes_risk;
            rows.push(BayesDecisionRow {
                lambda,
                instance: i,
                expert: d.executed.expert,
                advice: d.executed.advice,
                risk: d.bayes_risk,
                no_advice_expert: l2d.router,
                no_advice_risk: l2d.bayes_risk,
            });
        }
        let n = data.len() as f64;
        aggregates.push(BayesAggregate {
            lambda,
            mean_risk: risk / n,
            no_advice_mean_risk: no_adv / n,
            dominance_gap: (no_adv - risk) / n,
            advice_rate: 100.0 * queried as f64 / n,
            selection_histogram: hist,
        });
    }
    let output = BayesOutput { provenance: Provenance::new(config), action_labels: labels, aggregates };
    let mut summary = String::new();
    for a in &output.aggregates {
        let lambda = a.lambda.map_or("stored".to_owned(), |l| l.to_string());
        let _ = writeln!(
            summary,
            "lambda {lambda}: Bayes risk {:.6}, no-advice risk {:.6}, gap {:.6}, advice rate {:.1}%",
            a.mean_risk, a.no_advice_mean_risk, a.dominance_gap, a.advice_rate
        );
    }
    match out {
        Some(dir) => {
            ensure_dir(dir)?;
            write_text(&dir.join("decisions.csv"), &csv_string(&rows)?)?;
            write_json(&dir.join("bayes.json"), &output)?;
            Ok(summary)
        }
        None => Ok(summary + &csv_string(&rows)?),
    }
}

/// Loads a data source; synthetic sources also yield their Bayes reference.
pub fn load_data(source: &DataSource) -> CliResult<(Dataset, Option<RegionSpec>)> {
    match source {
        DataSource::Tensor { path, lambda } => Ok((CostTensor::read(path)?.to_dataset(*lambda)?, None)),
        DataSource::Synthetic { n, seed, spec } => Ok((generate(*n, *seed, spec)?, Some(spec.clone()))),
    }
}

fn train_cmd(
    config: &RunConfig,
    data: &DataSource,
    method: Method,
    train_config: &advdefer::scorer::TrainConfig,
    out: &Path,
) -> CliResult<String> {
    let (dataset, _) = load_data(data)?;
    if dataset.feature_dim() == 0 {
        return Err(CliError::Validation("training needs features (feature_dim >= 1)".into()));
    }
    let policy = train(method, &dataset, train_config)?;
    let last = policy.epoch_losses.last().copied().unwrap_or(f64::NAN);
    let file = PolicyFile { format_version: POLICY_FORMAT_VERSION, provenance: Provenance::new(config), policy };
    write_json(out, &file)?;
    Ok(format!(
        "trained {method} on {} instances for {} epochs, final loss {last:.6}, wrote {}\n",
        dataset.len(),
        train_config.epochs,
        out.display()
    ))
}

pub fn read_policy(path: &Path) -> CliResult<PolicyFile> {
    let file: PolicyFile = read_json(path)?;
    if file.format_version != POLICY_FORMAT_VERSION {
        return Err(CliError::parse(
            path,
            format!("unsupported policy format_version {} (expected {POLICY_FORMAT_VERSION})", file.format_version),
        ));
    }
    Ok(file)
}

fn eval(config: &RunConfig, data: &DataSource, policy_path: &Path, out: Option<&Path>) -> CliResult<String> {
    let file = read_policy(policy_path)?;
    let compiled = file.policy.compile()?;
    let (dataset, spec) = load_data(data)?;
    if dataset.space() != file.policy.space {
        return Err(CliError::Validation(format!(
            "policy acts on {} experts x {} advice, data has {} x {}",
            file.policy.space.num_experts(),
            file.policy.space.num_advice(),
            dataset.space().num_experts(),
            dataset.space().num_advice()
        )));
    }
    if dataset.feature_dim() != file.policy.model.input_dim {
        return Err(CliError::Validation(format!(
            "policy expects {} features, data has {}",
            file.policy.model.input_dim,
            dataset.feature_dim()
        )));
    }
    let reference = spec.map(|s| bayes_reference(&s)).transpose()?;
    let metrics = evaluate(&compiled, &dataset, reference.as_ref())?;
    let output = EvalOutput {
        provenance: Provenance::new(config),
        method: file.policy.method,
        action_labels: action_labels(&dataset),
        metrics,
    };
    let m = &output.metrics;
    let mut summary = format!(
        "{} on {} instances: risk {:.4} ± {:.4}, advice rate {:.1}%",
        output.method, m.count, m.risk, m.risk_std_error, m.advice_rate
    );
    if let (Some(e), Some(b)) = (m.excess, m.bayes_match) {
        let _ = write!(summary, ", excess {e:.4}, Bayes match {b:.1}%");
    }
    summary.push('\n');
    match out {
        Some(p) => {
            write_json(p, &output)?;
            Ok(summary)
        }
        None => Ok(summary + &to_json(&output)?),
    }
}

/// Builds and numerically checks the separated-surrogate counterexample.
pub fn fisher_certificate(
    config: &RunConfig,
    b: f64,
    epsilon: f64,
    bound: f64,
    delta: Option<f64>,
) -> CliResult<FisherCertificate> {
    let cx = match delta {
        Some(d) => fisher_counterexample_with_delta(b, epsilon, bound, d)?,
        None => fisher_counterexample(b, epsilon, bound)?,
    };
    let scores = cx.numeric_minimizer()?;
    let bayes = bayes_policy(&cx.table);
    let numeric_expert = decode_router(scores.router);
    Ok(FisherCertificate {
        provenance: Provenance::new(config),
        bayes_action: bayes.executed,
        numeric_scores: scores,
        numeric_expert,
        numeric_action: decode_separated(scores),
        verified: bayes.router != numeric_expert && cx.disagrees(),
        counterexample: cx,
    })
}

fn fisher(
    config: &RunConfig,
    b: f64,
    epsilon: f64,
    bound: f64,
    delta: Option<f64>,
    out: Option<&Path>,
) -> CliResult<String> {
    let cert = fisher_certificate(config, b, epsilon, bound, delta)?;
    let cx = &cert.counterexample;
    let summary = format!(
        "table (({:.4}, {:.4}), ({:.4}, {:.4})), delta {:.6} (max {:.6})\n\
         F1 = {:.4}, F2 = {:.4}, router minimizer {:.4}\n\
         Bayes routes to expert {}, separated surrogate minimizer routes to expert {} (1-based)\n",
        cx.table.row(0)[0],
        cx.table.row(0)[1],
        cx.table.row(1)[0],
        cx.table.row(1)[1],
        cx.delta,
        cx.delta_max,
        cx.summary_expert1,
        cx.summary_expert2,
        cx.router_minimizer,
        cert.bayes_action.expert + 1,
        cert.numeric_expert + 1,
    );
    let text = to_json(&cert)?;
    if let Some(p) = out {
        write_text(p, &text)?;
    }
    if !cert.verified {
        return Err(CliError::Runtime("certificate failed verification: no Bayes/surrogate disagreement".into()));
    }
    Ok(if out.is_some() { summary } else { summary + &text })
}
