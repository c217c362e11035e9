use gaussconvex::body::SupportBody;
use gaussconvex::cli::RunConfig;
use gaussconvex::cylinder::{phi_k, ps_cylinder, radius_of_measure};
use gaussconvex::gaussmoments::{measure, SphereRule};
use gaussconvex::specfun::{g, j_lower, phi, phi_inv, psi, psi_inv};
use gaussconvex::torsion::{torsion_radial, Source};
use gaussconvex::transform::Transform;
use gaussconvex::verify::{concavity_check, t_grid, Verdict};
use proptest::prelude::*;
use std::path::PathBuf;

fn rule() -> SphereRule {
    SphereRule::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normal_inverses_round_trip(a in 1e-12f64..1.0) {
        prop_assume!(a < 1.0 - 1e-12);
        prop_assert!((psi(psi_inv(a).unwrap()) - a).abs() <= 1e-12 * a.max(1e-3));
        prop_assert!((phi(phi_inv(a).unwrap()).unwrap() - a).abs() <= 1e-12);
    }

    #[test]
    fn incomplete_integral_recurrence(p in 0.0f64..6.0, r in 0.05f64..9.0) {
        let lhs = j_lower(p + 2.0, r).unwrap();
        let rhs = (p + 1.0) * j_lower(p, r).unwrap() - g(p + 1.0, r).unwrap();
        prop_assert!(((lhs - rhs) / lhs).abs() < 1e-9, "{} {}", lhs, rhs);
    }

    #[test]
    fn cylinder_power_identity(k in 1usize..6, a in 0.001f64..0.999) {
        let ps = ps_cylinder(k, a).unwrap();
        prop_assert!((ps - 1.0 - a * phi_k(k, a).unwrap()).abs() < 1e-9);
        let r = radius_of_measure(k, a).unwrap();
        let back = SupportBody::cylinder(k, k, r).unwrap();
        prop_assert!((measure(&back, &rule()).unwrap().value - a).abs() < 1e-10);
    }

    #[test]
    fn interpolation_support_is_affine(
        a in prop::collection::vec(0.1f64..3.0, 2),
        r in 0.1f64..3.0,
        t in 0.0f64..1.0,
        ang in 0.0f64..std::f64::consts::TAU,
    ) {
        let k = SupportBody::boxed(&a).unwrap();
        let l = SupportBody::ball(2, r).unwrap();
        let kt = SupportBody::interpolate(&k, &l, t).unwrap();
        let u = [ang.cos(), ang.sin()];
        let want = (1.0 - t) * k.support(&u) + t * l.support(&u);
        prop_assert!((kt.support(&u) - want).abs() < 1e-12 * want.max(1.0));
    }

    #[test]
    fn gauge_is_homogeneous(c in prop::collection::vec(0.2f64..3.0, 3), x in prop::collection::vec(-2.0f64..2.0, 3), s in 0.1f64..5.0) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        let e = SupportBody::ellipsoid(&c).unwrap();
        let sx: Vec<f64> = x.iter().map(|v| s * v).collect();
        let (g1, g2) = (e.gauge(&x).unwrap(), e.gauge(&sx).unwrap());
        prop_assert!((g2 - s * g1).abs() < 1e-12 * g2.max(1.0));
        let direct = x.iter().zip(&c).map(|(v, c)| (v / c).powi(2)).sum::<f64>().sqrt();
        prop_assert!((g1 - direct).abs() < 1e-12 * direct.max(1.0));
    }

    #[test]
    fn measure_grows_under_dilation(a in prop::collection::vec(0.1f64..2.0, 2), s in 1.0f64..3.0) {
        let k = SupportBody::boxed(&a).unwrap();
        let g0 = measure(&k, &rule()).unwrap().value;
        let g1 = measure(&k.scale(s).unwrap(), &rule()).unwrap().value;
        prop_assert!(g0 > 0.0 && g1 <= 1.0 && g1 >= g0);
    }

    #[test]
    fn transforms_are_increasing(a in 0.01f64..0.98, d in 1e-4f64..0.01) {
        for t in [Transform::psi_inv(), Transform::phi_inv(), Transform::power(0.5), Transform::power(-1.0)] {
            prop_assert!(t.value(a + d).unwrap() > t.value(a).unwrap());
        }
    }

    #[test]
    fn torsion_is_quadratic_in_the_source(k in 1usize..4, r in 0.2f64..2.5, c in 0.1f64..4.0) {
        let t1 = torsion_radial(k, r, 3, &Source::one()).unwrap().value;
        let tc = torsion_radial(k, r, 3, &Source::Constant(c)).unwrap().value;
        prop_assert!((tc - c * c * t1).abs() < 1e-10 * tc.max(1e-12));
    }

    #[test]
    fn config_round_trips(
        n in 1usize..6,
        tol in 1e-15f64..1e-3,
        panels in 1usize..100_000,
        seed in any::<u64>(),
        dir in "[a-z]{1,8}(/[a-z]{1,8}){0,2}",
        bodies in prop::collection::vec("(ball:R=[0-9]\\.[0-9]|strip:w=[0-9]|box:a=1/2)", 0..3),
    ) {
        let c = RunConfig { n, tol, max_panels: panels, seed, out_dir: PathBuf::from(dir), bodies, ..RunConfig::default() };
        prop_assert_eq!(RunConfig::from_kv(&c.to_kv()).unwrap(), c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ehrhard_on_random_box_pairs(a in prop::collection::vec(0.1f64..2.5, 2), b in prop::collection::vec(0.1f64..2.5, 2)) {
        let k = SupportBody::boxed(&a).unwrap();
        let l = SupportBody::boxed(&b).unwrap();
        let r = concavity_check(&Transform::psi_inv(), &k, &l, &t_grid(9), &rule()).unwrap();
        prop_assert_eq!(r.verdict, Verdict::ConcaveWithinTol, "{:?}", r);
    }

    #[test]
    fn violation_only_above_five_budgets(r0 in 0.05f64..1.0, r1 in 0.05f64..3.0) {
        let k = SupportBody::ball(2, r0).unwrap();
        let l = SupportBody::ball(2, r1).unwrap();
        let rep = concavity_check(&Transform::phi_inv(), &k, &l, &t_grid(9), &rule()).unwrap();
        let over = rep.second_differences.iter().zip(&rep.budgets).any(|(s, b)| *s > 5.0 * b);
        if rep.verdict == Verdict::Violation {
            prop_assert!(over && rep.confirmed == Some(true));
        }
        if !over {
            prop_assert_ne!(rep.verdict, Verdict::Violation);
        }
    }
}
