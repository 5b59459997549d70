//! Velocity-optimizer and link-model benchmarks.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use uav_tsptw::channel::{approx_rate, marcum_q1, snr_gain, ChannelParams};
use uav_tsptw::planner::{PlanningCosts, Tour};
use uav_tsptw::velocity::optimize_velocities;
use uav_tsptw_bench::random_scenario;

fn bench_velocity(c: &mut Criterion) {
    let mut group = c.benchmark_group("velocity");
    for k in [2usize, 6, 12] {
        // deadlines with ~40% slack over the all-v_max completion times
        let probe = random_scenario(k, (1.0e6, 2.0e6), 40.0, 0xACE + k as u64);
        let costs = PlanningCosts::from_scenario(&probe).unwrap();
        let order: Vec<usize> = (1..=k).collect();
        let mut t = 0.0;
        let mut prev = 0usize;
        let mut etas = Vec::new();
        for &u in &order {
            t += costs.edge(prev, u);
            etas.push(t * 1.4);
            prev = u;
        }
        let mut users = probe.users.clone();
        for (u, eta) in users.iter_mut().zip(&etas) {
            u.deadline_s = *eta;
        }
        let s = uav_tsptw::Scenario::new(
            probe.depot,
            users,
            probe.uav.clone(),
            probe.channel.clone(),
            probe.power.clone(),
        )
        .unwrap();
        let tour = Tour::new(order);
        group.bench_with_input(BenchmarkId::new("optimize", k), &s, |b, s| {
            b.iter(|| black_box(optimize_velocities(&tour, s).unwrap().fly_objective_j))
        });
    }
    group.finish();
}

fn bench_channel(c: &mut Criterion) {
    let ch = ChannelParams::paper_defaults();
    let gain = snr_gain(&ch, 5.0, 50.0).unwrap();
    c.bench_function("approx_rate", |b| {
        b.iter(|| black_box(approx_rate(&ch, black_box(gain)).unwrap()))
    });
    c.bench_function("marcum_q1", |b| {
        b.iter(|| black_box(marcum_q1(black_box(7.95), black_box(5.70)).unwrap()))
    });
}

criterion_group!(benches, bench_velocity, bench_channel);
criterion_main!(benches);
