use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use mortcast_bench::{gcn_fixture, mcp_design, mcp_problem, seasonal_ar_series, var_panel};
use mortcast_core::graph::{gcn_forward, Activation};
use mortcast_core::mcp::{cv_curve, solve_mcp};
use mortcast_core::sarimax::{fit, SarimaxSpec};
use mortcast_core::var::{fit_var, select_order_bic};
use mortcast_core::Error;

fn kalman(c: &mut Criterion) {
    let spec = SarimaxSpec::new(1, 0, 0).seasonal(1, 0, 0, 7);
    let y = seasonal_ar_series(700, 7);
    let model = fit(&spec, &y, &[]).expect("fit");
    c.bench_function("sarima_loglik_n700", |b| {
        b.iter(|| model.loglikelihood(black_box(&y), &[]).unwrap())
    });
    c.bench_function("sarima_fit_n700", |b| {
        b.iter(|| fit(&spec, black_box(&y), &[]).unwrap())
    });

    // Large state dimension: the study's (4,1,4)(3,1,1)_7 has r = 25.
    let spec = SarimaxSpec::new(4, 1, 4).seasonal(3, 1, 1, 7);
    let y = seasonal_ar_series(236, 11);
    // Only the filter is timed, so the optimizer's best point will do.
    let model = match fit(&spec, &y, &[]) {
        Ok(m) => m,
        Err(Error::SarimaxConvergence { best, .. }) => *best,
        Err(e) => panic!("fit: {e}"),
    };
    c.bench_function("sarima_414_311_loglik_n236", |b| {
        b.iter(|| model.loglikelihood(black_box(&y), &[]).unwrap())
    });
}

fn mcp(c: &mut Criterion) {
    let mut g = c.benchmark_group("mcp_solve");
    for cols in [7usize, 28, 70] {
        let (x, z) = mcp_problem(220, cols, 3);
        g.bench_with_input(BenchmarkId::from_parameter(cols), &cols, |b, _| {
            b.iter(|| solve_mcp(black_box(&x), black_box(&z), 0.05, 3.0, None).unwrap())
        });
    }
    g.finish();

    let design = mcp_design(220, 7, 5);
    c.bench_function("mcp_cv_path_7cols", |b| {
        b.iter(|| cv_curve(black_box(&design), 3.0, 5).unwrap())
    });
}

fn var(c: &mut Criterion) {
    let panel = var_panel(5, 236, 9);
    c.bench_function("var_fit_q2_5vars", |b| {
        b.iter(|| fit_var(black_box(&panel), 2).unwrap())
    });
    c.bench_function("var_bic_qmax14_5vars", |b| {
        b.iter(|| select_order_bic(black_box(&panel), 14).unwrap())
    });
}

fn gcn(c: &mut Criterion) {
    let f = gcn_fixture(16, 8, 1);
    c.bench_function("gcn_forward_51_states", |b| {
        b.iter(|| gcn_forward(black_box(&f.x), &f.a_hat, &f.weights, Activation::Sigmoid).unwrap())
    });
}

criterion_group!(benches, kalman, mcp, var, gcn);
criterion_main!(benches);
