//! Criterion benchmarks for the numerically heavy kernels: contour
//! construction, symbol sweeps, flow integration, operator assembly,
//! eigensolves, and the resolvent floor.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use num_complex::Complex64;

use cuspfunnel::dynamics::{integrate, FlowSetup, IntegrateOpts, PhasePoint};
use cuspfunnel::escape::{build_escape, verify_escape, EscapeConstants, EscapeGrid};
use cuspfunnel::geometry::{validate_surface, zero_volume, End, HypothesisGrid, ZeroVolumePlan};
use cuspfunnel::operators::{
    build_mode_operator, mode_eigenvalues, resolvent_floor, Grid1D, Scheme, Variant,
};
use cuspfunnel::scaling::{build_contour, verify_symbol_bounds, SymbolGrid};
use cuspfunnel_bench::{standard_contours, standard_surface, theta};

fn bench_contours(c: &mut Criterion) {
    let m = standard_surface();
    c.bench_function("build_contour_funnel_standard", |b| {
        b.iter(|| build_contour(End::Funnel, 1.0, m.theta, 1.0, &m.funnel).unwrap())
    });
    c.bench_function("build_contour_cusp_small_alpha", |b| {
        b.iter(|| build_contour(End::Cusp, 1.0, m.theta, 1e-9, &m.cusp).unwrap())
    });
}

fn bench_symbol_sweep(c: &mut Criterion) {
    let m = standard_surface();
    let contour = build_contour(End::Funnel, 1.0, m.theta, 1.0, &m.funnel).unwrap();
    let grid = SymbolGrid { r_points: 400, rho_points: 120, ..Default::default() };
    c.bench_function("verify_symbol_bounds_400x120", |b| {
        b.iter(|| verify_symbol_bounds(End::Funnel, &contour, &m.funnel, &grid).unwrap())
    });
}

fn bench_validate(c: &mut Criterion) {
    let m = standard_surface();
    let grid = HypothesisGrid::default();
    c.bench_function("validate_surface_default_grid", |b| {
        b.iter(|| validate_surface(&m, &grid).unwrap())
    });
    c.bench_function("zero_volume_default_plan", |b| {
        b.iter(|| zero_volume(&m, &ZeroVolumePlan::default()).unwrap())
    });
}

fn bench_flow(c: &mut Criterion) {
    let m = standard_surface();
    let setup = FlowSetup::global(&m, 0.3).unwrap();
    let opts = IntegrateOpts { t_max: 10.0, record_every: 1000, ..Default::default() };
    c.bench_function("integrate_rk4_10s", |b| {
        b.iter(|| integrate(&setup, PhasePoint { r: 0.0, rho: 0.5 }, &opts).unwrap())
    });
}

fn bench_operator(c: &mut Criterion) {
    let m = standard_surface();
    let (cc, cf) = standard_contours(&m);
    let span = cc.last_breakpoint().max(cf.last_breakpoint()) + 6.0;
    let grid = Grid1D::new(-span, span, 256, Scheme::Fd4).unwrap();
    c.bench_function("build_mode_operator_n256", |b| {
        b.iter(|| {
            build_mode_operator(&m, &cc, &cf, 0, 0.0, 0.1, &grid, Variant::Scaled).unwrap()
        })
    });
    let op = build_mode_operator(&m, &cc, &cf, 0, 0.0, 0.1, &grid, Variant::Scaled).unwrap();
    c.bench_function("mode_eigenvalues_n256", |b| {
        b.iter_batched(|| op.clone(), |o| mode_eigenvalues(&o).unwrap(), BatchSize::SmallInput)
    });
    let samples: Vec<Complex64> = (0..8)
        .map(|k| Complex64::from_polar(0.1, 2.0 * std::f64::consts::PI * k as f64 / 8.0))
        .collect();
    c.bench_function("resolvent_floor_8_samples_n256", |b| {
        b.iter(|| resolvent_floor(&op, &samples).unwrap())
    });
}

fn bench_escape(c: &mut Criterion) {
    let m = cuspfunnel::ModelSurface::parabolic_cylinder(2.0 * std::f64::consts::PI, theta(), 0.9);
    let cc = build_contour(End::Cusp, 5.0, m.theta, 1e-16, &m.cusp).unwrap();
    let cf = build_contour(End::Funnel, 5.0, m.theta, 1.0, &m.funnel).unwrap();
    let constants = EscapeConstants::from_contours(&cc, &cf);
    let set = build_escape(&m, 5.0, &constants).unwrap();
    let grid = EscapeGrid { r_points: 51, rho_points: 11, p_points: 3 };
    c.bench_function("verify_escape_51x11x3", |b| {
        b.iter(|| verify_escape(&set, &cc, &cf, &grid, None).unwrap())
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = bench_contours, bench_symbol_sweep, bench_validate, bench_flow, bench_operator,
        bench_escape
}
criterion_main!(kernels);
