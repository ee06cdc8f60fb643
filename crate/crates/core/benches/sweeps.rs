use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use localbounds::cut::{run_cut, CutOptions};
use localbounds::evolution::is::Is3Rules;
use localbounds::evolution::{integrate, EvolutionParams};
use localbounds::graph::Multigraph;
use localbounds::independent::{self, RoundSchedule};
use localbounds::par;

const N: usize = 20_000;

fn is_seed(seed: &u64) -> usize {
    let g = Multigraph::configuration(N, 3, *seed).unwrap();
    independent::run(&g, 3, &RoundSchedule::default(), *seed).unwrap().set.len()
}

fn cut_seed(seed: &u64) -> u64 {
    let g = Multigraph::configuration(N, 3, *seed).unwrap();
    run_cut(&g, *seed, &CutOptions::default()).unwrap().good
}

fn is3_at(eps: &f64) -> f64 {
    let rules = Is3Rules::default();
    let params = EvolutionParams::new(*eps);
    integrate(rules.initial(&params), &rules, &params).unwrap().final_state.independent
}

fn seed_sweeps(c: &mut Criterion) {
    let seeds: Vec<u64> = (0..8).collect();
    let mut group = c.benchmark_group("seed_sweep");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("is_sequential", N), &seeds, |b, s| {
        b.iter(|| par::sequential_map(s, is_seed))
    });
    group.bench_with_input(BenchmarkId::new("cut_sequential", N), &seeds, |b, s| {
        b.iter(|| par::sequential_map(s, cut_seed))
    });
    #[cfg(feature = "parallel")]
    {
        group.bench_with_input(BenchmarkId::new("is_parallel", N), &seeds, |b, s| {
            b.iter(|| par::parallel_map(s, is_seed))
        });
        group.bench_with_input(BenchmarkId::new("cut_parallel", N), &seeds, |b, s| {
            b.iter(|| par::parallel_map(s, cut_seed))
        });
    }
    group.finish();
}

fn step_sweeps(c: &mut Criterion) {
    let steps: Vec<f64> = (0..6).map(|k| 1e-4 / f64::powi(2.0, k)).collect();
    let mut group = c.benchmark_group("step_sweep");
    group.sample_size(10);
    group.bench_function("is3_sequential", |b| b.iter(|| par::sequential_map(&steps, is3_at)));
    #[cfg(feature = "parallel")]
    group.bench_function("is3_parallel", |b| b.iter(|| par::parallel_map(&steps, is3_at)));
    group.finish();
}

criterion_group!(benches, seed_sweeps, step_sweeps);
criterion_main!(benches);
