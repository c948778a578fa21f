use dirac1d::evolution::evolve_crank_nicolson;
use dirac1d::free::free_evolve_fourier;
use dirac1d::gauge::{gauge_conjugation_check, verify_factorization};
use dirac1d::resolvent::{Frame, PerturbedDirac};
use dirac1d::free::SpectralPoint;
use dirac1d::{Complex64 as C64, Grid, PotentialSpec, SpinorField};
use proptest::prelude::*;

fn bump(grid: Grid, c: f64, w: f64, a: C64, b: C64) -> SpinorField {
    SpinorField::from_fn(grid, |x| {
        let g = (-((x - c) / w).powi(2)).exp();
        [a * g, b * g]
    })
}

fn spec() -> impl Strategy<Value = PotentialSpec> {
    (-0.6f64..0.6, -0.6f64..0.6, -0.6f64..0.6, 0.0f64..6.3, 0.7f64..1.8).prop_map(|(u, l, c, phase, width)| {
        PotentialSpec::FullHermitianGaussian { upper: u, lower: l, coupling: c, phase, width }
    })
}

fn field() -> impl Strategy<Value = (f64, f64, C64, C64)> {
    (-2.0f64..2.0, 0.6f64..2.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_map(|(c, w, a, b, d, e)| (c, w, C64::new(a, b), C64::new(d, e)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauge_identities_hold(s in spec(), (c, w, a, b) in field(), re in -3.0f64..3.0, im in 0.05f64..1.0) {
        let grid = Grid::new(20.0, 512).unwrap();
        let v = s.build(grid).unwrap();
        let f = bump(grid, c, w, a, b);
        prop_assume!(f.norm() > 1e-3);
        prop_assert!(verify_factorization(&v, 1.0, C64::new(re, im), &f).unwrap() < 1e-6);
        prop_assert!(gauge_conjugation_check(&v, 1.0, &f).unwrap() < 1e-6);
    }

    #[test]
    fn crank_nicolson_is_unitary(s in spec(), (c, w, a, b) in field(), dt in 0.005f64..0.05) {
        let grid = Grid::new(30.0, 512).unwrap();
        let v = s.build(grid).unwrap();
        let f = bump(grid, c, w, a, b);
        prop_assume!(f.norm() > 1e-3);
        let t = (2.0 / dt).round() * dt;
        let tr = evolve_crank_nicolson(&f, &v, 1.0, dt, &[t]).unwrap();
        prop_assert!(tr.norm_drift < 1e-11, "{}", tr.norm_drift);
    }

    #[test]
    fn free_flow_is_a_unitary_group((c, w, a, b) in field(), t in -5.0f64..5.0, s in -5.0f64..5.0, m in 0.2f64..2.0) {
        let grid = Grid::new(30.0, 512).unwrap();
        let f = bump(grid, c, w, a, b);
        let two = free_evolve_fourier(&free_evolve_fourier(&f, t, m), s, m);
        let one = free_evolve_fourier(&f, t + s, m);
        prop_assert!(two.distance(&one) < 1e-12 * f.norm().max(1.0));
        prop_assert!((one.norm() - f.norm()).abs() < 1e-12 * f.norm().max(1.0));
    }

    #[test]
    fn resolvent_inverts_the_operator(s in spec(), (c, w, a, b) in field(), re in -3.0f64..3.0, im in 0.5f64..1.0) {
        // the kernel quadrature converges at 6th order against the spectral derivative; at this
        // spacing the residual floor for the narrowest bumps is about 4e-7. Im ω ≥ 0.5 keeps
        // Im k ≥ 0.5, so the outgoing kernel is below 1e-6 at the box edge and the periodic
        // derivative sees no wrap-around
        let grid = Grid::new(30.0, 1024).unwrap();
        let v = s.build(grid).unwrap();
        let ctx = PerturbedDirac::new(&v, 1.0).unwrap();
        let f = bump(grid, c, w, a, b);
        prop_assume!(f.norm() > 1e-3);
        let omega = C64::new(re, im);
        let u = ctx.apply(SpectralPoint::interior(omega), &f, Frame::Original).unwrap();
        prop_assert!(ctx.residual(omega, &u, &f).unwrap() < 1e-5);
    }
}
