//! Compares the data-parallel hot paths against single-threaded
//! execution of the same code. Both sides run the rayon-backed build;
//! the sequential baseline installs a one-thread pool, which matches
//! what the no-default-features build does.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;

use ltc_core::code::LinearCode;
use ltc_core::correct::build_ensemble;
use ltc_core::field::{corrupt_word, CoordSet, Field};
use ltc_core::grassmann::{grassmann_mas, GrassmannParams};
use ltc_core::system::Layer;
use ltc_core::tanner::{LiftTarget, LiftedCodeFamily};

use std::sync::Arc;

fn single_thread_pool() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("pool construction")
}

fn bench_sampler_lambda(c: &mut Criterion) {
    let inst = grassmann_mas(GrassmannParams {
        p: 2,
        n: 3,
        q0: 1,
        q1: 2,
        q2: 3,
    })
    .unwrap();
    let graph = inst.system.containment_graph(Layer::T, Layer::K).unwrap();
    let mut group = c.benchmark_group("sampler_lambda_exact_2_3");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| graph.sampler_lambda_exact(20).unwrap().lambda)
    });
    let pool = single_thread_pool();
    group.bench_function("sequential", |b| {
        b.iter(|| pool.install(|| graph.sampler_lambda_exact(20).unwrap().lambda))
    });
    group.finish();
}

fn bench_minimum_distance(c: &mut Criterion) {
    // a seeded random [32, 16] binary code: 65536 codewords to weigh
    let field = Field::new(2).unwrap();
    let coords = Arc::new(CoordSet::range(32));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12345);
    let checks: Vec<Vec<u16>> = (0..16)
        .map(|_| {
            (0..32)
                .map(|_| rand::Rng::gen_range(&mut rng, 0..2u16))
                .collect()
        })
        .collect();
    let code = LinearCode::from_check_rows(field, coords, checks).unwrap();
    let mut group = c.benchmark_group("minimum_distance_random_32");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| code.minimum_distance(1 << 24).unwrap())
    });
    let pool = single_thread_pool();
    group.bench_function("sequential", |b| {
        b.iter(|| pool.install(|| code.minimum_distance(1 << 24).unwrap()))
    });
    group.finish();
}

fn bench_build_ensemble(c: &mut Criterion) {
    let inst = grassmann_mas(GrassmannParams {
        p: 2,
        n: 4,
        q0: 1,
        q1: 2,
        q2: 3,
    })
    .unwrap();
    let field = Field::new(2).unwrap();
    let bases: Vec<LinearCode> = inst
        .system
        .layer_sets(Layer::T)
        .iter()
        .map(|t| LinearCode::from_check_rows(field, Arc::clone(t), vec![vec![1, 1]]).unwrap())
        .collect();
    let family = LiftedCodeFamily::new(Arc::clone(&inst.system), field, bases).unwrap();
    // prime the per-S code caches so the benchmark isolates decoding
    for s_idx in 0..inst.system.layer_len(Layer::S) {
        let _ = family.lift(LiftTarget::S(s_idx));
    }
    let code = family.lift(LiftTarget::Global);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(777);

    let mut group = c.benchmark_group("build_ensemble_2_4");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter_batched(
            || corrupt_word(&code.random_codeword(&mut rng), 2, &mut rng),
            |w| build_ensemble(&family, &w, 1 << 24).unwrap(),
            BatchSize::SmallInput,
        )
    });
    let pool = single_thread_pool();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(778);
    group.bench_function("sequential", |b| {
        b.iter_batched(
            || corrupt_word(&code.random_codeword(&mut rng), 2, &mut rng),
            |w| pool.install(|| build_ensemble(&family, &w, 1 << 24).unwrap()),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_sampler_lambda,
    bench_minimum_distance,
    bench_build_ensemble
);
criterion_main!(benches);
