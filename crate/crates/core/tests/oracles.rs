//! Closed-form values checked against the grid implementations.

use std::f64::consts::PI;
use std::sync::Arc;

use landau_core::bounds::{self, BoundInputs};
use landau_core::functionals::{
    entropy_production, entropy_production_direct, fisher_directional, relative_entropy, MatrixField,
};
use landau_core::lifted::{self, LiftedField};
use landau_core::moments::{exact_temperature, moment, moment_rhs};
use landau_core::solver::{grid_maxwellian, ou_exact_radial, simulate, DiagnosticsOptions, Solver, SolverConfig};
use landau_core::{build_grid, normalize_fn, Density, GaussianMixture, SymMat, TemperatureTensor};

fn gaussian(d: usize, half: f64, n: usize, cov: &[f64]) -> Density {
    let grid = Arc::new(build_grid(d, half, n).unwrap());
    let mix = GaussianMixture::new(&[(1.0, vec![0.0; d], SymMat::from_diag(cov))]).unwrap();
    normalize_fn(grid, |v| mix.eval(v)).unwrap().0
}

#[test]
fn gaussian_functionals() {
    let f = gaussian(2, 7.0, 96, &[1.5, 0.5]);
    let t = TemperatureTensor::from_diag(&[1.5, 0.5]);
    // i_{T−Id} = tr((T − Id) T⁻¹) = 1/3 − 1
    let i_dev = fisher_directional(&f, &MatrixField::Constant(t.deviation()));
    assert!((i_dev + 2.0 / 3.0).abs() < 5e-3, "{i_dev}");
    let h = relative_entropy(&f);
    assert!((h - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-4, "{h}");
    let d = entropy_production(&f, f.temperature()).unwrap();
    assert!((d - 8.0 / 3.0).abs() < 2e-2, "{d}");
    let direct = entropy_production_direct(&f).unwrap();
    assert!((d - direct).abs() < 1e-2 * d, "{d} {direct}");
}

#[test]
fn tensorization_identity() {
    // wide enough that no product value falls below the positivity floor
    let grid = Arc::new(build_grid(2, 4.0, 20).unwrap());
    let mix = GaussianMixture::new(&[
        (0.6, vec![0.5, 0.1], SymMat::from_diag(&[0.8, 1.0])),
        (0.4, vec![-0.6, 0.3], SymMat::from_diag(&[0.9, 0.8])),
    ])
    .unwrap();
    let (f, _) = normalize_fn(grid, |v| mix.eval(v)).unwrap();
    let field = LiftedField::new(&f).unwrap();
    let c = SymMat::from_rows(&[vec![0.3, -0.2], vec![-0.2, 1.1]]);
    let lifted_value = lifted::lifted_fisher(&field, &lifted::lifted_constant(c));
    let single = fisher_directional(&f, &MatrixField::Constant(c));
    assert!((lifted_value - 2.0 * single).abs() < 1e-10 * single.abs(), "{lifted_value} {single}");
}

#[test]
fn bad_term_routes() {
    // the relative route needs the boundary terms of a summation by parts to vanish
    let grid = Arc::new(build_grid(2, 7.0, 28).unwrap());
    let mix = GaussianMixture::new(&[
        (0.6, vec![0.5, 0.1], SymMat::from_diag(&[0.8, 1.0])),
        (0.4, vec![-0.6, 0.3], SymMat::from_diag(&[0.9, 0.5])),
    ])
    .unwrap();
    let (f, _) = normalize_fn(grid, |v| mix.eval(v)).unwrap();
    let t = *f.temperature();
    let field = LiftedField::new(&f).unwrap();
    let bad = lifted::bad_term(&f, &t).unwrap();
    let route = lifted::bad_term_relative_route(&field, &t);
    assert!((bad - route).abs() < 1e-6 * bad.abs(), "{bad} {route}");
}

#[test]
fn maxwellian_is_stationary() {
    for d in [2, 3] {
        let grid = Arc::new(build_grid(d, 6.0, if d == 2 { 32 } else { 16 }).unwrap());
        let m = grid_maxwellian(grid.clone()).unwrap();
        let t0 = TemperatureTensor::new(SymMat::identity(d));
        let solver = Solver::new(grid, t0).unwrap();
        let dt = solver.max_stable_dt(0.9);
        let mut f = m.clone();
        for k in 0..20 {
            f = solver.step(&f, k as f64 * dt, dt).unwrap().density;
        }
        let drift = f.l1_distance(&m);
        assert!(drift < 1e-12, "d = {d}: {drift}");
    }
}

#[test]
fn temperature_follows_exact_law() {
    let f = gaussian(3, 6.0, 20, &[1.4, 0.9, 0.7]);
    let cfg = SolverConfig { t_end: 0.1, record_every: 0.02, ..SolverConfig::default() };
    let run = simulate(&f, &cfg, &DiagnosticsOptions::default()).unwrap();
    for r in &run.records {
        let exact = exact_temperature(f.temperature(), r.t, 3).unwrap().diag();
        for (a, b) in r.temperature.iter().zip(&exact) {
            assert!((a - b).abs() < 5e-3, "t = {}: {a} vs {b}", r.t);
        }
        let trace: f64 = r.temperature.iter().sum();
        assert!((trace - f.temperature().trace()).abs() < 1e-12);
    }
}

#[test]
fn radial_mixture_matches_closed_form() {
    let comps = [(0.5, 1.5), (0.5, 0.5)];
    let grid = Arc::new(build_grid(2, 6.0, 48).unwrap());
    let mix = GaussianMixture::new(&comps.map(|(w, s)| (w, vec![0.0; 2], SymMat::scaled_identity(2, s)))).unwrap();
    let (f0, _) = normalize_fn(grid.clone(), |v| mix.eval(v)).unwrap();
    let cfg = SolverConfig { t_end: 0.2, record_every: 0.1, ..SolverConfig::default() };
    let run = simulate(&f0, &cfg, &DiagnosticsOptions::default()).unwrap();
    let exact = ou_exact_radial(grid, &comps, 0.2).unwrap();
    let err = run.final_density.l1_distance(&exact);
    assert!(err < 2e-3, "{err}");
}

/// Error of one solver step against the moment identity, for a Gaussian on an `n`-point grid.
fn moment_identity_error(n: usize, order: f64) -> (f64, f64) {
    let f = gaussian(2, 6.0, n, &[1.6, 0.4]);
    let solver = Solver::new(f.grid().clone(), *f.temperature()).unwrap();
    let dt = 0.1 * solver.max_stable_dt(0.9);
    let plus = solver.step(&f, 0.0, dt).unwrap().density;
    let fd = (moment(&plus, order).unwrap().value - moment(&f, order).unwrap().value) / dt;
    let t1 = solver.temperature_at(dt).unwrap();
    let rhs = 0.5 * (moment_rhs(&f, order, f.temperature()).unwrap() + moment_rhs(&plus, order, &t1).unwrap());
    ((fd - rhs).abs(), rhs)
}

#[test]
fn moment_identity_along_solution() {
    for order in [3.0, 4.0] {
        let (coarse, rhs) = moment_identity_error(48, order);
        let (fine, _) = moment_identity_error(96, order);
        assert!(coarse < 3e-2 * rhs.abs(), "order {order}: {coarse} vs {rhs}");
        assert!(fine < coarse / 3.0, "order {order}: {fine} vs {coarse}");
    }
}

#[test]
fn maxwellian_moments() {
    let grid = Arc::new(build_grid(2, 8.0, 81).unwrap());
    let m = grid_maxwellian(grid).unwrap();
    // 2-d Maxwellian: E|v|^ℓ = 2^{ℓ/2} Γ(1 + ℓ/2)
    assert!((moment(&m, 2.0).unwrap().value - 2.0).abs() < 1e-6);
    assert!((moment(&m, 4.0).unwrap().value - 8.0).abs() < 1e-5);
    let m3 = moment(&m, 3.0).unwrap().value;
    assert!((m3 - 3.0 * (PI / 2.0).sqrt()).abs() < 1e-3, "{m3}");
}

#[test]
fn bound_constants() {
    let cbar = bounds::constant_cbar(3, 3.0, 5.5).unwrap();
    let direct = 9.0 * (2f64.powf(2.5) / 5.0) * (27.0f64 / 5.0).powf(1.5) * 1.0 * 5.5f64.powf(-0.5) * 6.0;
    assert!((cbar - direct).abs() < 1e-12 * cbar);
    let inp = BoundInputs::new(3, 3.0, 4.0 * (2.0 / PI).sqrt(), 2.9);
    let explicit = bounds::t0_explicit(&inp).unwrap();
    let implicit = bounds::t0_implicit(&inp).unwrap();
    assert!(implicit <= explicit);
    let d = 3.0;
    let fixed = (1.0 / (4.0 * d * 0.5))
        * (cbar * inp.mbar * 1.9f64.sqrt() / (2.0 - 1.9 * (-4.0 * d * implicit).exp()).powi(4)).ln();
    assert!((fixed - implicit).abs() < 1e-5);
    assert!((bounds::decay_t1(2, 1.5).unwrap() - 4f64.ln() / 8.0).abs() < 1e-15);
}
