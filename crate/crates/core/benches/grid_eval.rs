//! Benchmarks for the grid-heavy kernels of the pipeline: modulus sampling,
//! ratio/Jacobian assembly, and the two norm routines.
//!
//! The same suite serves both execution modes; benchmark IDs carry the mode
//! so results from `cargo bench` (rayon) and
//! `cargo bench --no-default-features` (sequential) land side by side in the
//! criterion report for comparison.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use schur_core::kernel::{mg_map, KernelParams, MackeyGlassParams, TransferKernel};
use schur_core::model::{objective_grad, ratios, SchurModel};
use schur_core::norms::{matrix_norm, nystrom_norm, truncation_matrix};
use schur_core::parallel::is_parallel;
use schur_core::quad::{sample_abs, JumpRule, QuadGrid};

fn mg_kernel_params() -> KernelParams {
    let (params, _) = mg_map(&MackeyGlassParams {
        gamma: 0.1,
        beta: 0.2,
        kappa: 10.0,
        tau_prime: 4.5,
    });
    KernelParams { nu0: 0.01, ..params }
}

fn mode() -> &'static str {
    if is_parallel() {
        "parallel"
    } else {
        "sequential"
    }
}

fn bench_grid_eval(c: &mut Criterion) {
    let params = mg_kernel_params();
    let kernel = TransferKernel::new(params).unwrap();
    let g = QuadGrid::new(params.tau, 251).unwrap();
    let kabs = sample_abs(&kernel, &g, &g, JumpRule::MeanAbs);
    let model = SchurModel::random_init(7);
    let pairs: Vec<(usize, usize)> = (0..8).map(|k| (31 * k % 251, 17 * k % 251)).collect();

    let mut group = c.benchmark_group("grid_eval");
    group.sample_size(20);

    group.bench_function(BenchmarkId::new("sample_abs_m251", mode()), |b| {
        b.iter(|| sample_abs(&kernel, &g, &g, JumpRule::MeanAbs))
    });

    group.bench_function(BenchmarkId::new("ratio_field_m251", mode()), |b| {
        b.iter(|| ratios(&kabs, &model, &g, &g).unwrap())
    });

    group.bench_function(BenchmarkId::new("objective_grad_8pairs_m251", mode()), |b| {
        b.iter(|| objective_grad(&kabs, &model, &g, &g, &pairs).unwrap())
    });

    group.bench_function(BenchmarkId::new("nystrom_norm_m251", mode()), |b| {
        b.iter(|| nystrom_norm(&kabs, &g, &g).unwrap())
    });

    group.bench_function(BenchmarkId::new("truncation_n50_m251", mode()), |b| {
        b.iter(|| matrix_norm(&truncation_matrix(&kernel, 50, &g, &g).unwrap()).unwrap())
    });

    group.finish();
}

criterion_group!(benches, bench_grid_eval);
criterion_main!(benches);
