//! End-to-end gradients of (network, objective) against finite differences.

use advdefer::gradcheck::{central_diff, rel_err};
use advdefer::scorer::{objective_gradient, objective_value, train, Method, TrainConfig, TrainedPolicy};
use advdefer::{CompositeActionSpace, CostTable, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_data(rng: &mut ChaCha8Rng, n: usize, dim: usize, space: CompositeActionSpace) -> Dataset {
    let features = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let tables = (0..n)
        .map(|_| CostTable::new(space, (0..space.len()).map(|_| rng.gen_range(0.0..1.0)).collect(), 1.0).unwrap())
        .collect();
    Dataset::new(dim, features, tables, None).unwrap()
}

fn random_policy(method: Method, data: &Dataset, rng: &mut ChaCha8Rng, structured: bool) -> TrainedPolicy {
    let config = TrainConfig {
        epochs: 0,
        hidden_dims: vec![6, 5],
        tau: advdefer::losses::TauParameter::new(rng.gen_range(0.0..3.0)).unwrap(),
        structured_head: structured,
        ..TrainConfig::synthetic(rng.gen())
    };
    let mut p = train(method, data, &config).unwrap();
    p.parameters.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    p
}

fn check(method: Method, space: CompositeActionSpace, structured: bool, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let data = random_data(&mut rng, 4, 3, space);
        let policy = random_policy(method, &data, &mut rng, structured);
        let (value, grad) = objective_gradient(&policy, &data).unwrap();
        assert!((value - objective_value(&policy, &data).unwrap()).abs() < 1e-12);
        let base = policy.parameters.clone();
        let fd = central_diff(
            |q| {
                let probe = TrainedPolicy { parameters: q.to_vec(), ..policy.clone() };
                objective_value(&probe, &data).unwrap()
            },
            &base,
            1e-5,
        );
        let e = rel_err(&grad, &fd);
        assert!(e < 1e-4, "{method} relative error {e}");
    }
}

#[test]
fn augmented_linear_head() {
    check(Method::Augmented, CompositeActionSpace::new(3, 2).unwrap(), false, 1);
}

#[test]
fn augmented_structured_head() {
    check(Method::Augmented, CompositeActionSpace::new(2, 2).unwrap(), true, 2);
}

#[test]
fn l2d_head() {
    check(Method::L2d, CompositeActionSpace::new(3, 1).unwrap(), false, 3);
}

#[test]
fn separated_head() {
    check(Method::Separated, CompositeActionSpace::new(2, 1).unwrap(), false, 4);
}
