use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use platoon_bench::{chain_contexts, ProblemData};
use platoon_core::metric::admm::{AdmmConfig, AdmmState};
use platoon_core::metric::project_epd;
use platoon_core::mpc::{objective_gradient, solve, weight_gradients, SolverOptions, WeightGradient};
use platoon_core::platoon::{run, RunOptions};
use platoon_core::scenario::Scenario;

fn local_solve(c: &mut Criterion) {
    let opts = SolverOptions::default();
    let calm = ProblemData::perturbed(20, 0.3, 0.1);
    c.bench_function("solve_np20_small_error", |b| b.iter(|| solve(black_box(&calm.problem()), &opts).unwrap()));
    let hard = ProblemData::perturbed(20, 4.0, 1.5);
    c.bench_function("solve_np20_saturated", |b| b.iter(|| solve(black_box(&hard.problem()), &opts).unwrap()));
    let u = calm.assumed.controls().to_vec();
    c.bench_function("objective_gradient_np20", |b| {
        b.iter(|| objective_gradient(black_box(&u), &calm.problem()).unwrap())
    });
}

fn metric_learning(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
    let a = (&a + a.transpose()) * 0.5;
    c.bench_function("project_epd_5x5", |b| b.iter(|| project_epd(black_box(&a), 0.01).unwrap()));

    let ctx = chain_contexts(7);
    let data = ProblemData::perturbed(20, 0.3, 0.1);
    let traj = solve(&data.problem(), &SolverOptions::default()).unwrap().trajectory;
    let grads: Vec<WeightGradient> = (0..7).map(|_| weight_gradients(&traj, &data.problem()).unwrap()).collect();
    c.bench_function("admm_sweep_7_vehicles", |b| {
        b.iter_batched(
            || AdmmState::random(AdmmConfig::default(), &ctx, &mut ChaCha8Rng::seed_from_u64(2)),
            |mut state| state.sweep(&ctx, black_box(&grads)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn closed_loop(c: &mut Criterion) {
    let mut group = c.benchmark_group("reference_scenario");
    group.sample_size(10);
    let scenario = Scenario::reference();
    group.bench_function("pf_15s", |b| b.iter(|| run(black_box(&scenario), RunOptions::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, local_solve, metric_learning, closed_loop);
criterion_main!(benches);
