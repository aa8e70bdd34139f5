use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use bertrand_core::constructions::cce_symmetric;
use bertrand_core::equilibrium::{verify_ce, verify_cce, JointDist};
use bertrand_core::learners::{player_rng, LearnerConfig, LearnerFamily};
use bertrand_core::lp::{lp_best_cce_duopoly, lp_best_symmetric_cce, Objective};
use bertrand_core::{Demand, Game};

fn swap_round(c: &mut Criterion) {
    let game = Game::new(100, &[0.0, 0.5], Demand::Constant).unwrap();
    let cfg = LearnerConfig::new(LearnerFamily::HedgeSwap);
    let mut learner = cfg.build(100, 1_000_000).unwrap();
    let mut rng = player_rng(7, 0);
    let mut opp = 60;
    c.bench_function("hedge_swap_round_k100", |b| {
        b.iter(|| {
            let own = learner.act(&mut rng);
            let u = game.duopoly_utility_vector(0, opp);
            learner.update(own, opp, black_box(&u));
            opp = (opp + 37) % 100;
        })
    });
}

fn verifier(c: &mut Criterion) {
    let game = Game::new(100, &[0.0, 0.0], Demand::Linear).unwrap();
    let weights: Vec<f64> = (0..100 * 100).map(|i| ((i * 7919) % 101) as f64 + 1.0).collect();
    let total: f64 = weights.iter().sum();
    let dist = JointDist::dense2(100, weights.iter().map(|w| w / total).collect()).unwrap();
    c.bench_function("verify_cce_dense_k100", |b| b.iter(|| verify_cce(&game, black_box(&dist), 1e-10).unwrap()));
    c.bench_function("verify_ce_dense_k100", |b| b.iter(|| verify_ce(&game, black_box(&dist), 1e-10).unwrap()));
    let big = Game::new(1000, &[0.0, 0.0], Demand::Constant).unwrap();
    let (tail, _) = cce_symmetric(&big, None).unwrap();
    c.bench_function("verify_cce_tail_k1000", |b| b.iter(|| verify_cce(&big, black_box(&tail), 1e-10).unwrap()));
}

fn lp(c: &mut Criterion) {
    let mut group = c.benchmark_group("lp");
    group.sample_size(10);
    let sym = Game::new(100, &[0.0, 0.0], Demand::Constant).unwrap();
    group.bench_function("symmetric_cce_k100", |b| b.iter(|| lp_best_symmetric_cce(black_box(&sym)).unwrap()));
    let duo = Game::new(30, &[0.0, 0.5], Demand::Constant).unwrap();
    group.bench_function("duopoly_cce_k30", |b| b.iter(|| lp_best_cce_duopoly(black_box(&duo), Objective::P1).unwrap()));
    group.finish();
}

criterion_group!(benches, swap_round, verifier, lp);
criterion_main!(benches);
