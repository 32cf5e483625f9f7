use fracwick_core::fbm::{Ensemble, Generator, TimeGrid};
use fracwick_core::phi::{phi_norm_sq, CellKernels, PhiKernelContext, StepFunction};
use fracwick_core::stats::{variance_estimate, MeanEstimate, MonteCarloReport};
use fracwick_core::wick::*;
use std::sync::Arc;

fn ctx(h: f64) -> PhiKernelContext {
    PhiKernelContext::from_value(h).unwrap()
}

#[test]
fn cylinder_integrals_have_mean_zero() {
    let c = ctx(0.7);
    let g = TimeGrid::uniform(64, 1.0).unwrap();
    let e = Ensemble::generate(Generator::Circulant, &g, c.hurst(), 100, 10_000).unwrap();
    let k = CellKernels::new(e.grid.clone(), c);
    for h in ["x", "x^2", "x^3", "exp(0.5x)", "sin(2x)", "cos(x)"] {
        let h: Cylinder = h.parse().unwrap();
        let vals: Vec<f64> = e.paths.iter().map(|p| wick_integral_cylinder_with(&h, p, &k).unwrap().value).collect();
        let r = MonteCarloReport::from_mean(MeanEstimate::from_samples(&vals), 0.0);
        assert!(r.passed(), "{h}: {r:?}");
    }
}

#[test]
fn ordinary_riemann_sum_is_biased() {
    // Without the correction the sum for h = x has mean Σ past_overlap = ½(T^{2H} − ΣΔ^{2H}).
    let c = ctx(0.8);
    let g = TimeGrid::uniform(32, 1.0).unwrap();
    let e = Ensemble::generate(Generator::Circulant, &g, c.hurst(), 101, 10_000).unwrap();
    let raw: Vec<f64> = e
        .paths
        .iter()
        .map(|p| wick_integral_cylinder(&Cylinder::identity(), p, &c).unwrap().raw_riemann)
        .collect();
    let expected = 0.5 * (1.0 - 32.0 * (1.0f64 / 32.0).powf(1.6));
    assert!(MonteCarloReport::from_mean(MeanEstimate::from_samples(&raw), expected).passed());
    assert!(!MonteCarloReport::from_mean(MeanEstimate::from_samples(&raw), 0.0).passed());
}

#[test]
fn deterministic_integral_law() {
    let c = ctx(0.65);
    let g = TimeGrid::uniform(64, 2.0).unwrap();
    let e = Ensemble::generate(Generator::Hosking, &g, c.hurst(), 102, 10_000).unwrap();
    let f = StepFunction::new(Arc::new(TimeGrid::new(vec![0.0, 0.25, 1.0, 1.5, 2.0]).unwrap()), vec![2.0, -1.0, 0.5, 3.0]).unwrap();
    let vals: Vec<f64> = e.paths.iter().map(|p| wick_integral_deterministic(&f, p).unwrap()).collect();
    assert!(MonteCarloReport::from_mean(MeanEstimate::from_samples(&vals), 0.0).passed());
    let var = phi_norm_sq(&f, &c).unwrap();
    assert!(MonteCarloReport::from_mean(variance_estimate(&vals), var).passed());
}

#[test]
fn isometry_for_identity_integrand() {
    let c = ctx(0.75);
    let g = TimeGrid::uniform(256, 1.0).unwrap();
    let e = Ensemble::generate(Generator::Circulant, &g, c.hurst(), 103, 10_000).unwrap();
    let r = isometry_check(&IsometryIntegrand::Cylinder(Cylinder::identity()), &e.paths, &c).unwrap();
    assert!(r.paired.passed(), "{r:?}");
    assert!(MonteCarloReport::from_mean(r.lhs, 0.5).passed(), "{r:?}");
    // ‖1_{[0,T]} W‖²_φ and the trace term add up to T^{4H}/2 only together.
    assert!((r.norm_term.mean - 0.5).abs() > 0.1);
}

#[test]
fn isometry_for_constant_integrand_is_exact() {
    let c = ctx(0.6);
    let g = TimeGrid::uniform(16, 1.0).unwrap();
    let e = Ensemble::generate(Generator::Circulant, &g, c.hurst(), 104, 2000).unwrap();
    let r = isometry_check(&IsometryIntegrand::Cylinder(Cylinder::constant(1.0)), &e.paths, &c).unwrap();
    assert!((r.rhs.mean - 1.0).abs() < 1e-12);
    assert!(r.trace_term.mean == 0.0);
    assert!(r.paired.passed());
}
