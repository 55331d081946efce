//! Property tests for the invariants of potentials, immersions, duality,
//! relaxation and contact flows.

use proptest::prelude::*;
use thermoaffine_core::contact::{field_difference, ContactState};
use thermoaffine_core::duality::{divergence_report, round_trip_error};
use thermoaffine_core::immersion::DEFAULT_RANK_TOL;
use thermoaffine_core::potentials::*;
use thermoaffine_core::relaxation::closed_form_single;
use thermoaffine_core::*;

fn spd(entries: &[f64], n: usize) -> Matrix {
    // B Bᵀ + n I is symmetric positive definite
    let mut b = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = entries[i * n + j];
        }
    }
    let mut a = b.mul(&b.transpose());
    for i in 0..n {
        a[(i, i)] += n as f64;
    }
    a.symmetrize();
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn entropy_equation_of_state_at_gradient_level(u in 0.01f64..50.0, v in 0.01f64..50.0, r in 0.1f64..10.0) {
        let s = ideal_gas_entropy(r, 1.5).unwrap();
        let y = s.gradient(&[u, v]).unwrap();
        prop_assert!((y[1] * v - r).abs() <= 2.0 * f64::EPSILON * r);
    }

    #[test]
    fn ising_gradient_is_tanh(x in -30.0f64..30.0) {
        let p = ising_free_energy();
        prop_assert_eq!(p.gradient(&[x]).unwrap()[0], libm::tanh(x));
    }

    #[test]
    fn quadratic_hessian_is_constant(entries in prop::collection::vec(-2.0f64..2.0, 9), x in prop::collection::vec(-5.0f64..5.0, 3)) {
        let a = spd(&entries, 3);
        let p = quadratic(a.clone(), None, 0.0).unwrap();
        prop_assert_eq!(p.hessian(&x).unwrap(), a);
    }

    #[test]
    fn builtin_hessians_symmetric_and_match_fd(u in 0.3f64..5.0, v in 0.5f64..5.0) {
        for (p, x) in [
            (ideal_gas_entropy(1.0, 1.5).unwrap(), vec![u, v]),
            (ideal_gas_helmholtz(1.0, 2.0).unwrap(), vec![u]),
            (vdw_helmholtz(0.9).unwrap(), vec![v]),
            (ising_free_energy(), vec![u - 2.0]),
        ] {
            let h = p.hessian(&x).unwrap();
            prop_assert!(h.is_symmetric());
            let report = p.validate_derivatives(&x, 1e-6).unwrap();
            prop_assert!(report.pass, "{} at {:?}: {:?}", p.label(), x, report);
        }
    }

    #[test]
    fn conormal_annihilates_tangents(u in 0.05f64..20.0, v in 0.05f64..20.0) {
        let g = GraphImmersion::new(ideal_gas_entropy(1.0, 1.5).unwrap());
        let (xi, tangent) = g.check_conormal_conditions(&[u, v]).unwrap();
        prop_assert!(xi <= 1e-12 && tangent <= 1e-12);
        let f = g.fundamental_form(&[u, v], DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(f.matrix, g.potential().hessian(&[u, v]).unwrap());
    }

    #[test]
    fn helmholtz_never_degenerate(x in 1e-3f64..1e3) {
        let g = GraphImmersion::new(ideal_gas_helmholtz(1.0, 1.0).unwrap());
        let f = g.fundamental_form(&[x], DEFAULT_RANK_TOL).unwrap();
        prop_assert!(f.det < 0.0);
        prop_assert_eq!(f.classification, Classification::Nondegenerate);
    }

    #[test]
    fn triple_identity_and_round_trip(u in 0.2f64..8.0, v in 0.2f64..8.0, du in 0.8f64..1.25, dv in 0.8f64..1.25) {
        let c = DualChart::new(ideal_gas_entropy(1.0, 1.5).unwrap());
        prop_assert!(c.triple_identity_residual(&[u, v]).unwrap().abs() <= 1e-10);
        prop_assert!(round_trip_error(&c, &[u, v], &[u * du, v * dv]).unwrap() <= 1e-9);
    }

    #[test]
    fn divergence_sign_law(entries in prop::collection::vec(-2.0f64..2.0, 4),
                           x1 in prop::collection::vec(-3.0f64..3.0, 2),
                           x2 in prop::collection::vec(-3.0f64..3.0, 2),
                           u1 in 0.2f64..5.0, u2 in 0.2f64..5.0) {
        let convex = quadratic(spd(&entries, 2), None, 0.0).unwrap();
        let c = DualChart::new(convex.clone());
        let r = divergence_report(&c, &GraphImmersion::new(convex), &x1, &x2).unwrap();
        prop_assert!(r.canonical >= 0.0 && r.discrepancy <= 1e-10);

        let concave = ideal_gas_helmholtz(1.0, 1.0).unwrap();
        let c = DualChart::new(concave.clone());
        let r = divergence_report(&c, &GraphImmersion::new(concave), &[u1], &[u2]).unwrap();
        prop_assert!(r.canonical <= 0.0 && r.discrepancy <= 1e-12);
    }

    #[test]
    fn contact_field_equals_lifted_field(x in -3.0f64..3.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
        let f = ising_free_energy();
        let ch = ContactHamiltonian::from_f(f.clone());
        let gen = RelaxationGenerator::single(f);
        let s = ContactState { x: vec![x], y: vec![y], z };
        prop_assert_eq!(field_difference(&ch, &gen, &s).unwrap(), 0.0);

        let lower = ising_free_energy();
        let upper = quadratic(Matrix::identity(1), None, 2.0).unwrap();
        let ch = ContactHamiltonian::from_pair(lower.clone(), upper.clone()).unwrap();
        let gen = RelaxationGenerator::two(lower, upper).unwrap();
        prop_assert_eq!(field_difference(&ch, &gen, &s).unwrap(), 0.0);
    }

    #[test]
    fn exponential_contraction(x in -3.0f64..3.0, z0 in -5.0f64..5.0) {
        let f = ising_free_energy();
        let gen = RelaxationGenerator::single(f.clone());
        let traj = gen.integrate(&LiftedState::new(vec![x], vec![0.0], z0),
                                 &IntegratorConfig::new(1e-3, 5.0).record_every(500).run_to_end()).unwrap();
        let fx = f.eval(&[x]).unwrap();
        for s in &traj.samples {
            let expected = libm::exp(-s.t) * (z0 - fx).abs();
            prop_assert!(((s.z - fx).abs() - expected).abs() <= 1e-8);
            prop_assert!((s.z - closed_form_single(&f, &[x], z0, s.t).unwrap()).abs() <= 1e-8);
        }
    }
}
