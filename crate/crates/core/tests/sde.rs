mod common;

use common::{phi_of_distance, tanh_sinh};
use fracwick_core::fbm::{Ensemble, Generator, SamplePath, TimeGrid};
use fracwick_core::phi::PhiKernelContext;
use fracwick_core::sde::*;
use fracwick_core::Error;
use std::sync::Arc;

fn ctx(h: f64) -> PhiKernelContext {
    PhiKernelContext::from_value(h).unwrap()
}

fn noise(h: f64, n: usize, paths: usize, seed: u64) -> Ensemble {
    let g = TimeGrid::uniform(n, 1.0).unwrap();
    Ensemble::generate(Generator::Circulant, &g, ctx(h).hurst(), seed, paths).unwrap()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn all_solvers(sde: &SdeSpec, p: &SamplePath) -> Vec<SolverResult> {
    vec![
        solve_flow_transform(sde, p, Stepper::Euler).unwrap(),
        solve_flow_transform(sde, p, Stepper::Rk4).unwrap(),
        solve_direct_euler(sde, p).unwrap(),
        solve_picard(sde, p, 1e-12, 200).unwrap(),
    ]
}

#[test]
fn pure_noise_is_exact() {
    let sde = SdeSpec::pure_noise(0.7, 1.5, 1.0).unwrap();
    for p in &noise(0.75, 128, 5, 1).paths {
        for r in all_solvers(&sde, p) {
            for (x, w) in r.path.values.iter().zip(&p.values) {
                assert!((x - (1.5 + 0.7 * w)).abs() < 1e-13, "{}", r.method);
            }
        }
        let f = solve_flow_transform(&sde, p, Stepper::Rk4).unwrap();
        assert!(f.y_path.values.iter().all(|y| *y == 1.5));
        let pc = solve_picard(&sde, p, 1e-10, 10).unwrap();
        assert_eq!(pc.picard.unwrap().iterations, 1);
    }
}

#[test]
fn flow_identity_holds_at_every_node() {
    let sde = SdeSpec::ou(1.3, 0.9, -0.4, 1.0).unwrap();
    for p in &noise(0.7, 64, 5, 2).paths {
        for r in all_solvers(&sde, p) {
            for i in 0..p.values.len() {
                let x = r.path.values[i];
                let rebuilt = r.y_path.values[i] + sde.sigma * p.values[i];
                assert!((x - rebuilt).abs() <= 1e-14 * x.abs().max(1.0), "{}", r.method);
            }
        }
    }
}

#[test]
fn noise_free_rk4_is_accurate() {
    let sde = SdeSpec::ou(1.0, 0.0, 1.0, 1.0).unwrap();
    let p = &noise(0.7, 512, 1, 3).paths[0];
    let r = solve_flow_transform(&sde, p, Stepper::Rk4).unwrap();
    for (t, y) in p.grid.points().iter().zip(&r.y_path.values) {
        assert!((y - (-t).exp()).abs() < 1e-8);
    }
}

#[test]
fn flow_euler_and_direct_euler_coincide() {
    // Same recursion written in two coordinates; they differ by rounding only.
    let sde = SdeSpec::ou(1.0, 1.0, 1.0, 1.0).unwrap();
    for p in &noise(0.75, 512, 20, 4).paths {
        let a = solve_flow_transform(&sde, p, Stepper::Euler).unwrap();
        let b = solve_direct_euler(&sde, p).unwrap();
        assert!(max_gap(&a.path.values, &b.path.values) < 1e-12);
    }
}

#[test]
fn rk4_and_euler_differ_at_first_order() {
    let sde = SdeSpec::ou(1.0, 1.0, 1.0, 1.0).unwrap();
    let e = noise(0.75, 512, 50, 5);
    let mut gaps = Vec::new();
    for n in [64usize, 128, 256, 512] {
        let g = Arc::new(e.grid.coarsen(512 / n).unwrap());
        let mean: f64 = e
            .paths
            .iter()
            .map(|p| {
                let p = p.restrict(g.clone()).unwrap();
                let a = solve_flow_transform(&sde, &p, Stepper::Rk4).unwrap();
                let b = solve_direct_euler(&sde, &p).unwrap();
                max_gap(&a.path.values, &b.path.values)
            })
            .sum::<f64>()
            / e.len() as f64;
        gaps.push(mean);
    }
    assert!(gaps[3] < 1e-2);
    let ns = [64.0, 128.0, 256.0, 512.0];
    let slope = fracwick_core::stats::loglog_slope(&ns, &gaps).unwrap();
    assert!((slope + 1.0).abs() < 0.05, "{slope}");
}

#[test]
fn stiff_case_rk4_beats_euler() {
    // λ = 50 on 64 cells; the reference is RK4 on 4096 cells of the same noise.
    let sde = SdeSpec::ou(50.0, 1.0, 1.0, 1.0).unwrap();
    let e = noise(0.75, 4096, 200, 6);
    let g = Arc::new(e.grid.coarsen(64).unwrap());
    let (mut err_rk, mut err_eu) = (0.0, 0.0);
    for p in &e.paths {
        let reference = solve_flow_transform(&sde, p, Stepper::Rk4).unwrap().path.restrict(g.clone()).unwrap();
        let coarse = p.restrict(g.clone()).unwrap();
        let rk = solve_flow_transform(&sde, &coarse, Stepper::Rk4).unwrap();
        let eu = solve_direct_euler(&sde, &coarse).unwrap();
        err_rk += max_gap(&rk.path.values, &reference.values);
        err_eu += max_gap(&eu.path.values, &reference.values);
    }
    assert!(err_rk < err_eu, "rk4 {err_rk} euler {err_eu}");
}

#[test]
fn picard_matches_rk4() {
    let sde = SdeSpec::ou(1.0, 1.0, 1.0, 1.0).unwrap();
    let tol = 1e-10;
    for p in &noise(0.75, 512, 20, 7).paths {
        let pc = solve_picard(&sde, p, tol, 100).unwrap();
        let rk = solve_flow_transform(&sde, p, Stepper::Rk4).unwrap();
        assert!(max_gap(&pc.path.values, &rk.path.values) <= tol.max(1e-6));
    }
}

#[test]
fn picard_contracts_on_slabs() {
    let sde = SdeSpec::ou(4.0, 1.0, 1.0, 1.0).unwrap();
    let p = &noise(0.75, 256, 1, 8).paths[0];
    let r = solve_picard(&sde, p, 1e-10, 200).unwrap();
    let info = r.picard.unwrap();
    let slab = info.slab_cells as f64 / 256.0;
    assert!(slab * 4.0 <= 0.5);
    assert_eq!(info.deltas.len(), (256 + info.slab_cells - 1) / info.slab_cells);
    for d in &info.deltas {
        for w in d.windows(2) {
            if w[0] > 1e-13 {
                assert!(w[1] <= 0.5 * w[0] * (1.0 + 1e-9), "{:?}", d);
            }
        }
    }
}

#[test]
fn picard_from_different_starts_agrees() {
    let sde = SdeSpec::ou(2.0, 1.0, 0.5, 1.0).unwrap();
    let tol = 1e-10;
    for p in &noise(0.7, 128, 5, 9).paths {
        let mut o = PicardOptions::new(tol, 500);
        let a = solve_picard_with(&sde, p, o).unwrap();
        o.initial_offset = 10.0;
        let b = solve_picard_with(&sde, p, o).unwrap();
        assert!(max_gap(&a.path.values, &b.path.values) <= 10.0 * tol);
    }
}

#[test]
fn picard_reports_non_convergence() {
    let sde = SdeSpec::ou(1.0, 1.0, 1.0, 1.0).unwrap();
    let p = &noise(0.7, 64, 1, 10).paths[0];
    assert!(matches!(solve_picard(&sde, p, 1e-14, 2), Err(Error::NonConvergence { iterations: 2, .. })));
    assert!(solve_picard(&sde, p, 0.0, 10).is_err());
}

#[test]
fn drift_blowup_names_the_point() {
    let drift = Drift::custom("blows up above 0.5", |_, x| if x > 0.5 { f64::NAN } else { 1.0 });
    let sde = SdeSpec::new(drift, 0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
    let p = &noise(0.7, 16, 1, 11).paths[0];
    for r in [solve_flow_transform(&sde, p, Stepper::Euler), solve_direct_euler(&sde, p)] {
        match r {
            Err(Error::DriftBlowup { x, .. }) => assert!(x > 0.5),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn linear_growth_prevents_explosion() {
    let c = 1.5;
    let drift = Drift::custom("1.5 cos(5t)(1 + |x|)", move |t, x| c * (5.0 * t).cos() * (1.0 + x.abs()));
    let sde = SdeSpec::new(drift, 0.8, -0.3, 1.0, c, c).unwrap();
    assert!(sde.audit_constants(2000, 5.0, 3).is_empty());
    for p in &noise(0.7, 256, 50, 12).paths {
        let wmax = p.values.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let bound = (sde.x0.abs() + c * sde.horizon + sde.sigma * wmax) * (c * sde.horizon).exp();
        for r in [solve_flow_transform(&sde, p, Stepper::Euler).unwrap(), solve_direct_euler(&sde, p).unwrap()] {
            let xmax = r.path.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(xmax <= bound, "{xmax} > {bound}");
        }
    }
}

#[test]
fn mismatched_noise_is_rejected() {
    let sde = SdeSpec::ou(1.0, 1.0, 1.0, 2.0).unwrap();
    let p = &noise(0.7, 16, 1, 13).paths[0];
    assert!(matches!(solve_direct_euler(&sde, p), Err(Error::GridMismatch(_))));
}

/// `σ² ∫∫ e^{−λ(t−u)} e^{−λ(t−v)} φ(u, v) du dv` by nested quadrature.
fn fou_variance_quadrature(lambda: f64, sigma: f64, t: f64, h: f64) -> f64 {
    let tol = 1e-11;
    let k = |u: f64| (-lambda * (t - u)).exp();
    let inner = |u: f64| {
        let below = tanh_sinh(|v, _, dr| k(v) * phi_of_distance(dr, h), 0.0, u, tol);
        let above = tanh_sinh(|v, dl, _| k(v) * phi_of_distance(dl, h), u, t, tol);
        below + above
    };
    sigma * sigma * tanh_sinh(|u, _, _| k(u) * inner(u), 0.0, t, tol)
}

#[test]
fn fou_oracle_values() {
    let c = ctx(0.75);
    let g = TimeGrid::uniform(4, 1.0).unwrap();
    let (mean, var) = fou_oracle(1.0, 1.0, 1.0, &g, &c).unwrap();
    assert_eq!((mean[0], var[0]), (1.0, 0.0));
    assert!((mean[4] - 0.367879).abs() < 1e-6);
    for t in [0.25, 0.5, 1.0] {
        let a = fou_variance(1.0, 1.0, t, FOU_ORACLE_CELLS, &c).unwrap();
        let b = fou_variance(1.0, 1.0, t, 2 * FOU_ORACLE_CELLS, &c).unwrap();
        assert!((a - b).abs() <= 1e-6 * b);
        let q = fou_variance_quadrature(1.0, 1.0, t, 0.75);
        assert!((a - q).abs() <= 1e-6 * q, "t={t}: {a} vs {q}");
    }
    assert!((var[4] - 0.4116568).abs() < 1e-7);
}

#[test]
fn pure_noise_moments() {
    let c = ctx(0.7);
    let sde = SdeSpec::pure_noise(1.3, 0.25, 1.0).unwrap();
    let g = TimeGrid::uniform(64, 1.0).unwrap();
    let cps: Vec<CheckpointOracle> = [0.25, 0.5, 1.0]
        .iter()
        .map(|&t| CheckpointOracle { t, mean: 0.25, variance: 1.69 * t.powf(1.4) })
        .collect();
    let reps = sde_mc_stats(&sde, 10_000, &g, 20, SolverChoice::Flow(Stepper::Euler), &c, &cps).unwrap();
    for r in reps {
        assert!(r.mean.passed() && r.variance.passed(), "{r:?}");
    }
    let bad = [CheckpointOracle { t: 0.3, mean: 0.0, variance: 0.0 }];
    assert!(sde_mc_stats(&sde, 10, &g, 20, SolverChoice::DirectEuler, &c, &bad).is_err());
}

#[test]
fn solver_csv_layout() {
    let sde = SdeSpec::ou(1.0, 1.0, 1.0, 1.0).unwrap();
    let p = &noise(0.7, 4, 1, 14).paths[0];
    let r = solve_flow_transform(&sde, p, Stepper::Rk4).unwrap();
    let mut buf = Vec::new();
    r.write_csv(p, &mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "t,X,Y,W");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
}
