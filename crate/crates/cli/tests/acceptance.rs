//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use advdefer::bayes::{bayes_policy, brute_force_argmin, dominance_check, mismatch_decompose, mismatch_decompose_slice};
use advdefer::cost::true_loss;
use advdefer::gradcheck::{central_diff, rel_err};
use advdefer::losses::{
    augmented_surrogate, comp_sum, decode_router, fisher_counterexample, profiled_summary, separated_surrogate_costs,
    transfer_gamma, transfer_gamma_tilde, SeparatedScores, TauParameter,
};
use advdefer::optim::{minimize, MinimizeOptions};
use advdefer::scorer::{objective_gradient, objective_value, train, Method, TrainConfig, TrainedPolicy};
use advdefer::synthbench::{
    bayes_actions, bayes_reference, evaluate_actions, generate, run_benchmark, BenchmarkConfig, BenchmarkReport,
    RegionSpec,
};
use advdefer::{CompositeActionSpace, CostTable, Dataset};
use advdefer_cli::commands::fisher_certificate;
use advdefer_cli::RunConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Acceptance bounds.
mod tol {
    pub const F_LOGISTIC_ROW1: (f64, f64) = (0.8366, 0.8376);
    pub const F_LOGISTIC_ROW2: (f64, f64) = (0.6995, 0.7005);
    pub const BAYES_RISK: f64 = 0.280;
    pub const BAYES_EXACT: f64 = 1e-15;
    pub const ORACLE_MC: f64 = 0.005;
    pub const AUGMENTED_EXCESS_MAX: f64 = 0.010;
    pub const SEPARATED_EXCESS: (f64, f64) = (0.030, 0.090);
    pub const L2D_EXCESS: (f64, f64) = (0.050, 0.080);
    pub const SEPARATED_MATCH_MINUS_MAX: f64 = 35.0;
    pub const AUGMENTED_MATCH_MIN: f64 = 95.0;
    pub const L2D_MATCH_PLUS_MAX: f64 = 5.0;
    pub const RANDOM_PAIR: (f64, f64) = (0.53, 0.57);
    pub const RANDOM_ROUTE: (f64, f64) = (0.42, 0.45);
    pub const RECONSTRUCTION_REL: f64 = 1e-12;
    pub const FD_STEP: f64 = 1e-5;
    pub const FD_REL: f64 = 1e-4;
    pub const CONTINUITY: f64 = 1e-3;
    pub const MACHINE: f64 = 4.0 * f64::EPSILON;
}

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("[{}] criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn within(v: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&v)
}

fn criterion_1(r: &mut Report) {
    let f1 = profiled_summary(0.38, 1.08).unwrap().value;
    let f2 = profiled_summary(0.50, 0.51).unwrap().value;
    r.line(
        "1",
        within(f1, tol::F_LOGISTIC_ROW1) && within(f2, tol::F_LOGISTIC_ROW2),
        format!("profiled summaries F(0.38,1.08) = {f1:.6}, F(0.50,0.51) = {f2:.6}"),
    );
}

fn criterion_2(r: &mut Report) {
    let spec = RegionSpec::default();
    let reference = bayes_reference(&spec).unwrap();
    let test = generate(100_000, BenchmarkConfig::default().resolved_test_seed(), &spec).unwrap();
    let m = evaluate_actions(&bayes_actions(&test, &reference), &test, Some(&reference)).unwrap();
    r.line(
        "2",
        (reference.risk - tol::BAYES_RISK).abs() <= tol::BAYES_EXACT && (m.risk - tol::BAYES_RISK).abs() <= tol::ORACLE_MC,
        format!("analytic Bayes risk {:.15}, oracle on 1e5 test samples {:.4}", reference.risk, m.risk),
    );
}

fn largest_benchmark() -> BenchmarkReport {
    let config = BenchmarkConfig { sizes: vec![5000], grid_resolution: 0, ..BenchmarkConfig::default() };
    run_benchmark(&config).unwrap()
}

fn criteria_3_to_5(r: &mut Report, b: &BenchmarkReport) {
    let row = |m: &str| b.row(5000, m).unwrap_or_else(|| panic!("missing {m}"));
    let (aug, sep, l2d) = (row("augmented"), row("separated"), row("l2d"));
    r.line(
        "3",
        aug.excess.mean <= tol::AUGMENTED_EXCESS_MAX
            && within(sep.excess.mean, tol::SEPARATED_EXCESS)
            && within(l2d.excess.mean, tol::L2D_EXCESS),
        format!(
            "n=5000, {} seeds: excess augmented {:.4}±{:.4}, separated {:.4}±{:.4}, l2d {:.4}±{:.4}",
            aug.runs, aug.excess.mean, aug.excess.std, sep.excess.mean, sep.excess.std, l2d.excess.mean, l2d.excess.std
        ),
    );
    r.line(
        "4",
        sep.match_minus.mean <= tol::SEPARATED_MATCH_MINUS_MAX
            && aug.match_minus.mean >= tol::AUGMENTED_MATCH_MIN
            && aug.match_plus.mean >= tol::AUGMENTED_MATCH_MIN
            && l2d.match_plus.mean <= tol::L2D_MATCH_PLUS_MAX,
        format!(
            "Bayes match: separated R- {:.1}%, augmented R- {:.1}% R+ {:.1}%, l2d R+ {:.1}%",
            sep.match_minus.mean, aug.match_minus.mean, aug.match_plus.mean, l2d.match_plus.mean
        ),
    );
    let (rp, rr) = (row("random_pair"), row("random_route_no_advice"));
    r.line(
        "5",
        within(rp.risk.mean, tol::RANDOM_PAIR) && within(rr.risk.mean, tol::RANDOM_ROUTE),
        format!("random (j,k) risk {:.4}, random route without advice {:.4}", rp.risk.mean, rr.risk.mean),
    );
}

fn random_table(rng: &mut ChaCha8Rng, coarse: bool) -> CostTable {
    let space = CompositeActionSpace::new(rng.gen_range(1..=6), rng.gen_range(0..=5)).unwrap();
    let costs = (0..space.len())
        .map(|_| if coarse { f64::from(rng.gen_range(0..3u8)) / 2.0 } else { rng.gen_range(0.0..3.0) })
        .collect();
    CostTable::new(space, costs, 3.0).unwrap()
}

fn criterion_6(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut dominance = true;
    for _ in 0..10_000 {
        let t = random_table(&mut rng, false);
        let d = mismatch_decompose(&t);
        for a in t.space().actions() {
            let c = true_loss(a, &t).unwrap();
            let rebuilt = d.reconstruct(t.space().flatten(a).unwrap());
            worst = worst.max((rebuilt - c).abs() / c.abs().max(1.0));
        }
        let (with, without) = dominance_check(&t);
        dominance &= with <= without;
    }
    let mut mismatches = 0;
    for i in 0..1000 {
        let t = random_table(&mut rng, i % 2 == 0);
        mismatches += usize::from(bayes_policy(&t).executed != brute_force_argmin(&t));
        let (with, without) = dominance_check(&t);
        dominance &= with <= without;
    }
    r.line(
        "6",
        worst <= tol::RECONSTRUCTION_REL && mismatches == 0 && dominance,
        format!(
            "worst reconstruction error {worst:.2e} over 1e4 tables, oracle/brute-force mismatches {mismatches}/1000, dominance {}",
            if dominance { "holds" } else { "violated" }
        ),
    );
}

fn random_dataset(rng: &mut ChaCha8Rng, space: CompositeActionSpace) -> Dataset {
    let (n, d) = (4, 3);
    let features = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let tables = (0..n)
        .map(|_| CostTable::new(space, (0..space.len()).map(|_| rng.gen_range(0.0..1.0)).collect(), 1.0).unwrap())
        .collect();
    Dataset::new(d, features, tables, None).unwrap()
}

fn pipeline_error(method: Method, rng: &mut ChaCha8Rng) -> f64 {
    let space = match method {
        Method::Separated => CompositeActionSpace::new(2, 1).unwrap(),
        _ => CompositeActionSpace::new(rng.gen_range(2..4), rng.gen_range(1..3)).unwrap(),
    };
    let data = random_dataset(rng, space);
    let config = TrainConfig {
        epochs: 0,
        hidden_dims: vec![6, 5],
        tau: TauParameter::new(rng.gen_range(0.0..3.0)).unwrap(),
        ..TrainConfig::synthetic(rng.gen())
    };
    let mut policy = train(method, &data, &config).unwrap();
    policy.parameters.iter_mut().for_each(|p| *p = rng.gen_range(-1.0..1.0));
    let (_, grad) = objective_gradient(&policy, &data).unwrap();
    let fd = central_diff(
        |q| objective_value(&TrainedPolicy { parameters: q.to_vec(), ..policy.clone() }, &data).unwrap(),
        &policy.parameters,
        tol::FD_STEP,
    );
    rel_err(&grad, &fd)
}

fn criterion_7(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: Vec<(String, f64)> = Vec::new();
    let scores = |rng: &mut ChaCha8Rng, n: usize| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<f64>>();
    for t in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let tau = TauParameter::new(t).unwrap();
        let mut w = 0.0f64;
        for _ in 0..100 {
            let n = rng.gen_range(2..10);
            let s = scores(&mut rng, n);
            let label = rng.gen_range(0..n);
            let g = comp_sum(&s, label, tau).unwrap().1;
            let fd = central_diff(|x| comp_sum(x, label, tau).unwrap().0, &s, tol::FD_STEP);
            w = w.max(rel_err(&g, &fd));
        }
        worst.push((format!("comp_sum tau={t}"), w));
    }
    let mut w = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..10);
        let s = scores(&mut rng, n);
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        let tau = TauParameter::new(rng.gen_range(0.0..3.0)).unwrap();
        let g = augmented_surrogate(&s, &weights, tau).unwrap().1;
        let fd = central_diff(|x| augmented_surrogate(x, &weights, tau).unwrap().0, &s, tol::FD_STEP);
        w = w.max(rel_err(&g, &fd));
    }
    worst.push(("augmented".into(), w));
    let mut w = 0.0f64;
    for _ in 0..100 {
        let s = scores(&mut rng, 3);
        let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..1.5));
        let g = separated_surrogate_costs(SeparatedScores::from_slice(&s), &c).1;
        let fd = central_diff(|x| separated_surrogate_costs(SeparatedScores::from_slice(x), &c).0, &s, tol::FD_STEP);
        w = w.max(rel_err(&g, &fd));
    }
    worst.push(("separated".into(), w));
    for method in Method::ALL {
        let w = (0..100).map(|_| pipeline_error(method, &mut rng)).fold(0.0, f64::max);
        worst.push((format!("mlp+{method}"), w));
    }
    let pass = worst.iter().all(|(_, e)| *e < tol::FD_REL);
    let detail = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect::<Vec<_>>().join(", ");
    r.line("7", pass, format!("worst relative gradient errors: {detail}"));
}

fn criterion_8(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut parts = Vec::new();
    let mut pass = true;
    for card in [4usize, 6, 9] {
        for t in [0.5, 1.0, 2.0] {
            let tau = TauParameter::new(t).unwrap();
            let mut hits = 0;
            for _ in 0..100 {
                let costs: Vec<f64> = (0..card).map(|_| rng.gen_range(0.0..1.0)).collect();
                let weights = mismatch_decompose_slice(&costs).weights;
                let m = minimize(
                    |s| augmented_surrogate(s, &weights, tau).unwrap(),
                    &vec![0.0; card],
                    MinimizeOptions::default(),
                );
                let decoded = (0..card).fold(0, |b, i| if m.x[i] > m.x[b] { i } else { b });
                let heaviest = (0..card).fold(0, |b, i| if weights[i] > weights[b] { i } else { b });
                hits += usize::from(decoded == heaviest);
            }
            pass &= hits == 100;
            parts.push(format!("|Pi|={card} tau={t}: {hits}%"));
        }
    }
    r.line("8", pass, format!("minimizers decoding to the max-weight action: {}", parts.join(", ")));
}

fn criterion_9(r: &mut Report) {
    let run = RunConfig::Fisher { b: 0.5, epsilon: 0.01, bound: 1.08, delta: None, out: None };
    let cert = fisher_certificate(&run, 0.5, 0.01, 1.08, None).unwrap();
    let fixed = fisher_certificate(&run, 0.5, 0.01, 1.08, Some(0.12)).unwrap();
    let reference_ok = cert.verified
        && cert.bayes_action.expert == 0
        && cert.numeric_expert == 1
        && fixed.verified
        && fixed.numeric_expert == 1;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut agree = 0;
    for _ in 0..50 {
        let bound = rng.gen_range(0.3..3.0);
        let b = rng.gen_range(0.02..0.95) * bound;
        let epsilon = rng.gen_range(0.005..0.995) * (bound - b);
        let cx = fisher_counterexample(b, epsilon, bound).unwrap();
        let s = cx.numeric_minimizer().unwrap();
        agree += usize::from(bayes_policy(&cx.table).router == 0 && decode_router(s.router) == 1);
    }
    r.line(
        "9",
        reference_ok && agree == 50,
        format!(
            "(0.50, 0.01, 1.08): Bayes expert {}, numeric separated decode expert {} (1-based), delta {:.4}; random triples with disagreement {agree}/50",
            cert.bayes_action.expert + 1,
            cert.numeric_expert + 1,
            cert.counterexample.delta
        ),
    );
}

fn criterion_10(r: &mut Report) {
    let tau = |t: f64| TauParameter::new(t).unwrap();
    let grid: Vec<f64> = (0..=1000).map(|i| 10.0 * i as f64 / 1000.0).collect();
    let cards = [4usize, 6, 9];

    let mut worst = 0.0f64;
    for &u in &grid {
        for &c in &cards {
            let g = transfer_gamma(u, tau(1.0), c).unwrap();
            worst = worst.max((g - (2.0 * u).sqrt()).abs() / (2.0 * u).sqrt().max(1.0));
        }
    }
    r.line("10a", worst <= tol::MACHINE, format!("Gamma_1(u) vs sqrt(2u) on [0,10]: worst relative gap {worst:.1e}"));

    let eta = 1e-9;
    let gap_at = |boundary: f64| {
        let mut worst = 0.0f64;
        for &u in &grid {
            for &c in &cards {
                let below = transfer_gamma(u, tau(boundary - eta), c).unwrap();
                let at = transfer_gamma(u, tau(boundary), c).unwrap();
                worst = worst.max((below - at).abs());
            }
        }
        worst
    };
    let g1 = gap_at(1.0);
    r.line("10b", g1 <= tol::CONTINUITY, format!("continuity at tau=1 for u in [0,10]: max jump {g1:.2e}"));
    let g2 = gap_at(2.0);
    r.line(
        "10c",
        g2 <= tol::CONTINUITY,
        format!("continuity at tau=2 for u in [0,10]: max jump {g2:.3} (sqrt(2|Pi|u) below vs |Pi|u at the boundary)"),
    );

    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..1000 {
        let (u, m, t, c) = (rng.gen_range(0.0..10.0), rng.gen_range(0.1..5.0), rng.gen_range(0.0..4.0), cards[rng.gen_range(0..3)]);
        let lhs = transfer_gamma_tilde(u, tau(t), c, m).unwrap();
        let rhs = m * transfer_gamma(u / m, tau(t), c).unwrap();
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    r.line("10d", worst <= tol::MACHINE, format!("scaled transfer equals m * Gamma(u/m): worst relative gap {worst:.1e}"));
}

fn main() {
    let mut r = Report { failures: 0 };
    criterion_1(&mut r);
    criterion_2(&mut r);
    let benchmark = largest_benchmark();
    criteria_3_to_5(&mut r, &benchmark);
    criterion_6(&mut r);
    criterion_7(&mut r);
    criterion_8(&mut r);
    criterion_9(&mut r);
    criterion_10(&mut r);
    println!("acceptance: {} failing", r.failures);
    if r.failures > 0 {
        std::process::exit(1);
    }
}
