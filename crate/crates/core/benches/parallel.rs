//! Parallel against sequential execution on ensemble verification and on
//! per-node right-hand-side evaluation. Without the `parallel` feature both
//! variants run the same sequential loop.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use micropolar::analysis::{verify_bilinear, verify_embeddings, Ensemble, NonlinearEstimate};
use micropolar::exponents::{select_intermediate, ExponentConfig};
use micropolar::mild::{initial_trajectory, picard_step, Model, PicardConfig, TrajectoryState};
use micropolar::nonlinear::RhsOptions;
use micropolar::par::Exec;
use micropolar::spectral::random::{random_low_mode, rng};
use micropolar::spectral::GridSpec;

const MODES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn ensembles(c: &mut Criterion) {
    let g = GridSpec::new(2, 32).unwrap();
    let exps = select_intermediate(&ExponentConfig::base(2.0, 2.0, 2.0, 0.5, 0.5, 0.0)).unwrap();
    let model = Model::default();
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for (name, exec) in MODES {
        let ens = Ensemble::new(g, 32, 1).with_exec(exec);
        group.bench_function(BenchmarkId::new("embedding", name), |b| {
            b.iter(|| verify_embeddings(0.5, 2.0, 1, 2.0, &ens).unwrap())
        });
        group.bench_function(BenchmarkId::new("advection-velocity", name), |b| {
            b.iter(|| verify_bilinear(NonlinearEstimate::AdvectionVelocity, &exps, &model, &ens).unwrap())
        });
    }
    group.finish();
}

fn trajectory(exec: Exec) -> (TrajectoryState, PicardConfig, Model) {
    let g = GridSpec::new(2, 32).unwrap();
    let model = Model::default();
    let mut r = rng(9);
    let u = random_low_mode(g, 3, 4, 2.0, 0.1, &mut r);
    let w = random_low_mode(g, 3, 4, 2.0, 0.1, &mut r);
    let th = random_low_mode(g, 1, 4, 2.0, 0.1, &mut r);
    let mut pc = PicardConfig::new(0.2, 200);
    pc.exec = exec;
    let traj = initial_trajectory(&u, &w, &th, &pc, &model).unwrap();
    (traj, pc, model)
}

fn per_node(c: &mut Criterion) {
    let mut group = c.benchmark_group("per-node");
    group.sample_size(10);
    for (name, exec) in MODES {
        let (traj, pc, model) = trajectory(exec);
        group.bench_function(BenchmarkId::new("rhs", name), |b| {
            b.iter(|| {
                TrajectoryState::from_nodes(
                    traj.times.clone(),
                    traj.u.clone(),
                    traj.omega.clone(),
                    traj.theta.clone(),
                    0,
                    &model,
                    RhsOptions::default(),
                    exec,
                )
                .unwrap()
            })
        });
        group.bench_function(BenchmarkId::new("picard-step", name), |b| {
            b.iter(|| picard_step(&traj, &pc, &model).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ensembles, per_node);
criterion_main!(benches);
