//! Rayon sweep versus the sequential fallback on the two data-parallel
//! surfaces: the determinism relabeling sweep and multi-production matching.
//!
//! Run with `cargo bench -p mgg-core`. Building with
//! `--no-default-features` uses the sequential path everywhere; this suite
//! compares both paths inside one (parallel-enabled) build.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use mgg_core::boolalg::{BoolMatrix, BoolVector, SplitMix64};
use mgg_core::graph::SimpleDigraph;
use mgg_core::matching::{Grammar, GrammarMode};
use mgg_core::production::{Mask, Production};
use mgg_core::sequence::{
    classify_determinism, classify_determinism_sequential, CompletedSequence, SequenceStep,
};
use mgg_core::boolalg::Permutation;

fn random_nodeless(rng: &mut SplitMix64, n: usize) -> Production {
    let mut l = BoolMatrix::zeros(n);
    let mut e = BoolMatrix::zeros(n);
    let mut r = BoolMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            match rng.below(8) {
                0 => {
                    l.set(i, j, true);
                    e.set(i, j, true);
                }
                1 => l.set(i, j, true),
                2 => r.set(i, j, true),
                _ => {}
            }
        }
    }
    let lhs = SimpleDigraph::from_parts(
        SimpleDigraph::uniform(n, "T").slots().to_vec(),
        l,
        BoolVector::ones(n),
    );
    Production::from_actions(
        "p",
        lhs,
        Mask { edges: e, nodes: BoolVector::zeros(n) },
        Mask { edges: r, nodes: BoolVector::zeros(n) },
    )
    .unwrap()
}

fn determinism_sweep(c: &mut Criterion) {
    let mut rng = SplitMix64::new(7);
    let n = 4; // 24 relabelings per step, 13824 tuples over three steps
    let universe = SimpleDigraph::uniform(n, "T").slots().to_vec();
    let steps: Vec<SequenceStep> = (0..3)
        .map(|_| SequenceStep {
            production: random_nodeless(&mut rng, n),
            sigma: Permutation::identity(n),
        })
        .collect();
    let s = CompletedSequence::new(universe, steps);

    let mut group = c.benchmark_group("determinism_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| classify_determinism(black_box(&s), None, 10_000_000).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| classify_determinism_sequential(black_box(&s), None, 10_000_000).unwrap())
    });
    group.finish();
}

fn match_sweep(c: &mut Criterion) {
    let mut rng = SplitMix64::new(11);
    let n = 14;
    let mut host = SimpleDigraph::uniform(n, "T");
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.bool_with(1, 2) {
                edges.push((i, j));
            }
        }
    }
    host = host.modified(&edges, &[]);
    let productions: Vec<Production> = (0..16).map(|_| random_nodeless(&mut rng, 4)).collect();
    let grammar = Grammar::new(productions, GrammarMode::Nodeless, host.clone()).unwrap();

    let mut group = c.benchmark_group("match_sweep");
    group.bench_function("parallel", |b| {
        b.iter(|| grammar.all_matches(black_box(&host)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| grammar.all_matches_sequential(black_box(&host)))
    });
    group.finish();
}

criterion_group!(benches, determinism_sweep, match_sweep);
criterion_main!(benches);
