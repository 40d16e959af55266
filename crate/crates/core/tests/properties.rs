use std::sync::Arc;

use landau_core::bounds::{self, BoundInputs};
use landau_core::functionals::{fisher_directional, k_field, MatrixField};
use landau_core::linalg::{projector_a, Vector};
use landau_core::lifted::{self, LiftedField};
use landau_core::{build_grid, normalize, normalize_fn, GaussianMixture, SymMat, TemperatureTensor};
use proptest::prelude::*;

fn vector(d: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-5.0..5.0f64, d).prop_map(|x| {
        let mut v = [0.0; 3];
        v[..x.len()].copy_from_slice(&x);
        v
    })
}

/// Trace-normalized temperature: `R diag(λ) Rᵀ` with `Σλ = d`.
fn temperature(d: usize) -> impl Strategy<Value = TemperatureTensor> {
    (prop::collection::vec(0.05..1.0f64, d), prop::collection::vec(-3.2..3.2f64, 3)).prop_map(move |(w, ang)| {
        let s: f64 = w.iter().sum();
        let lam: Vec<f64> = w.iter().map(|x| x * d as f64 / s).collect();
        let rot = |i: usize, j: usize, a: f64| {
            let mut r = [[0.0; 3]; 3];
            for (k, row) in r.iter_mut().enumerate() {
                row[k] = 1.0;
            }
            r[i][i] = a.cos();
            r[j][j] = a.cos();
            r[i][j] = -a.sin();
            r[j][i] = a.sin();
            r
        };
        let mul = |a: [[f64; 3]; 3], b: [[f64; 3]; 3]| {
            let mut c = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
                }
            }
            c
        };
        let r = if d == 2 { rot(0, 1, ang[0]) } else { mul(mul(rot(0, 1, ang[0]), rot(0, 2, ang[1])), rot(1, 2, ang[2])) };
        let mut m = SymMat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.m[i][j] = (0..d).map(|k| r[i][k] * lam[k] * r[j][k]).sum();
            }
        }
        for i in 0..d {
            for j in 0..i {
                m.m[i][j] = m.m[j][i];
            }
        }
        let tr = m.trace();
        TemperatureTensor::new(m.scale(d as f64 / tr))
    })
}

/// Two-bump mixture in d = 2, wide enough on a half-width 4 box that no
/// two-particle value drops below the positivity floor.
fn mixture() -> impl Strategy<Value = GaussianMixture> {
    (0.2..0.8f64, vector(2), vector(2), 0.8..1.2f64, 0.8..1.2f64, 0.8..1.2f64).prop_map(|(w, c1, c2, s1, s2, s3)| {
        let c = |x: Vector| vec![0.12 * x[0], 0.12 * x[1]];
        GaussianMixture::new(&[
            (w, c(c1), SymMat::from_diag(&[s1, s2])),
            (1.0 - w, c(c2), SymMat::from_diag(&[s3, s1])),
        ])
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn projector_annihilates_its_argument(d in 2usize..=3, z in vector(3)) {
        let mut z = z;
        z[d..].fill(0.0);
        let a = projector_a(&z, d);
        let scale = 1.0 + z.iter().map(|x| x * x).sum::<f64>();
        prop_assert!(a.quad(&z).abs() < 1e-12 * scale * scale);
        for x in a.mul_vec(&z) {
            prop_assert!(x.abs() < 1e-12 * scale * scale);
        }
        prop_assert!(a.min_eigenvalue() > -1e-12 * scale);
        prop_assert!((MatrixField::Projector.quad(&z, &z)).abs() < 1e-12 * scale * scale);
    }

    #[test]
    fn k_dominates_spectral_gap(t in (2usize..=3).prop_flat_map(temperature), v in vector(3)) {
        let d = t.dim();
        let mut v = v;
        v[d..].fill(0.0);
        let k = k_field(&t, d).unwrap().eval(&v, d);
        prop_assert!(k.min_eigenvalue() >= d as f64 - t.max_eigenvalue() - 1e-10);
    }

    #[test]
    fn normalization_is_idempotent(mix in mixture()) {
        let grid = Arc::new(build_grid(2, 6.0, 24).unwrap());
        let (f, _) = normalize_fn(grid, |v| mix.eval(v)).unwrap();
        prop_assert!(f.is_normalized());
        let (g, map) = normalize(&f).unwrap();
        prop_assert!(map.is_identity());
        prop_assert!(g.l1_distance(&f) < 1e-12);
    }

    #[test]
    fn tensorization_identity(mix in mixture(), c in temperature(2)) {
        let grid = Arc::new(build_grid(2, 4.0, 12).unwrap());
        let (f, _) = normalize_fn(grid, |v| mix.eval(v)).unwrap();
        let field = LiftedField::new(&f).unwrap();
        let s = c.deviation();
        let lifted_value = lifted::lifted_fisher(&field, &lifted::lifted_constant(s));
        let single = fisher_directional(&f, &MatrixField::Constant(s));
        prop_assert!((lifted_value - 2.0 * single).abs() < 1e-9 * (1.0 + single.abs()));
    }

    #[test]
    fn bad_term_routes_agree(mix in mixture()) {
        let grid = Arc::new(build_grid(2, 7.0, 24).unwrap());
        let (f, _) = normalize_fn(grid, |v| mix.eval(v)).unwrap();
        let t = *f.temperature();
        let field = LiftedField::new(&f).unwrap();
        let bad = lifted::bad_term(&f, &t).unwrap();
        let route = lifted::bad_term_relative_route(&field, &t);
        // the routes differ by a summation-by-parts remainder that shrinks with h
        prop_assert!((bad - route).abs() < 1e-4 * (1e-2 + bad.abs()), "{} {}", bad, route);
    }

    #[test]
    fn thermalization_times_ordered(
        d in 2usize..=3,
        ell in 2.5..6.0f64,
        mbar in 1.0..50.0f64,
        frac in 0.02..0.95f64,
        bump in 1.01..2.0f64,
    ) {
        let tmax = 1.0 + frac * (d as f64 - 1.0);
        let inp = BoundInputs::new(d, ell, mbar, tmax);
        let explicit = bounds::t0_explicit(&inp).unwrap();
        prop_assert!(explicit >= 0.0);
        if let Ok(implicit) = bounds::t0_implicit(&inp) {
            prop_assert!(implicit <= explicit + 1e-6);
        }
        let larger = bounds::t0_explicit(&BoundInputs::new(d, ell, mbar * bump, tmax)).unwrap();
        prop_assert!(larger >= explicit);
        let hotter = 1.0 + (frac + 0.5 * (1.0 - frac)) * (d as f64 - 1.0);
        let later = bounds::t0_explicit(&BoundInputs::new(d, ell, mbar, hotter)).unwrap();
        prop_assert!(later >= explicit);
    }

    #[test]
    fn trapezoid_exact_on_bilinear(d in 2usize..=3, n in 8usize..16, c in prop::collection::vec(-2.0..2.0f64, 4)) {
        let grid = build_grid(d, 3.0, n).unwrap();
        // multilinear functions are integrated exactly: ∫ (c0 + c1 x + c2 y + c3 x y) = c0 · 6^d
        let value = grid.integrate(|_, v| c[0] + c[1] * v[0] + c[2] * v[1] + c[3] * v[0] * v[1]);
        let exact = c[0] * 6f64.powi(d as i32);
        prop_assert!((value - exact).abs() < 1e-10 * (1.0 + exact.abs()));
    }
}
