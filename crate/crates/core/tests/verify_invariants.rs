use gaussconvex::body::{parse, SupportBody};
use gaussconvex::cylinder::{ps_cylinder, radius_of_measure};
use gaussconvex::gaussmoments::{measure, MultiPoly, SphereRule};
use gaussconvex::torsion::{torsion_radial, Source};
use gaussconvex::transform::Transform;
use gaussconvex::verify::*;

fn rule() -> SphereRule {
    SphereRule::default()
}

fn b(s: &str, n: usize) -> SupportBody {
    parse(s, n).unwrap()
}

#[test]
fn max_power_does_not_grow_under_refinement() {
    let pairs = [
        ("box:a=0.5/1.5", "ball:R=1"),
        ("ball:R=0.3", "ball:R=2"),
        ("strip:w=0.4", "ball:R=1.5"),
        ("lp:r=1,p=1", "box:a=1/0.6"),
        ("ellipsoid:c=0.5/2", "ball:R=0.8"),
    ];
    for (k, l) in pairs {
        let (k, l) = (b(k, 2), b(l, 2));
        let mut last = f64::INFINITY;
        for m in [9, 19, 39] {
            let p = max_power(&k, &l, &t_grid(m), &rule()).unwrap();
            assert!(
                p.power <= last + 2.0 * p.bracket,
                "{k}|{l} grid {m}: {} after {last}",
                p.power
            );
            last = p.power;
        }
    }
}

#[test]
fn max_power_has_log_concavity_floor() {
    for (k, l) in [
        ("ball:R=0.2", "ball:R=3"),
        ("strip:w=0.1", "box:a=2/2"),
        ("box:a=0.1/3", "box:a=3/0.1"),
    ] {
        let p = max_power(&b(k, 2), &b(l, 2), &t_grid(9), &rule()).unwrap();
        assert!(p.lower >= 0.0, "{k}|{l}: {p:?}");
    }
}

#[test]
fn max_power_along_cylinder_dilates_exceeds_ps() {
    for (k, a0, a1) in [(1, 0.3, 0.5), (2, 0.4, 0.7)] {
        let c0 = SupportBody::cylinder(2, k, radius_of_measure(k, a0).unwrap()).unwrap();
        let c1 = SupportBody::cylinder(2, k, radius_of_measure(k, a1).unwrap()).unwrap();
        let grid = t_grid(17);
        let path = measure_path(&c0, &c1, &grid, &rule()).unwrap();
        let floor = path
            .measures
            .iter()
            .map(|e| ps_cylinder(k, e.value).unwrap())
            .fold(f64::INFINITY, f64::min);
        let p = max_power_on(&path).unwrap();
        assert!(p.power >= floor - 1e-6, "k={k}: {} vs {floor}", p.power);
    }
}

#[test]
fn gauss_main_bound_below_dilation_power() {
    for s in [
        "box:a=0.5/1.5",
        "ball:R=1",
        "lp:r=1,p=1",
        "ellipsoid:c=0.6/1.4",
        "cylinder:k=1,R=0.8",
    ] {
        let k = b(s, 2);
        let g = gauss_main_bound(&k, &rule()).unwrap();
        let p = max_power(&k, &k.scale(1.02).unwrap(), &t_grid(9), &rule()).unwrap();
        // 1e-3 covers the drift of the bound itself along the 2% dilation.
        assert!(
            g.bound <= p.power + g.err + p.bracket + 1e-3,
            "{s}: bound {} power {}",
            g.bound,
            p.power
        );
        assert!(g.sweep_dominated);
    }
}

#[test]
fn quoted_alpha_never_beats_the_maximizer() {
    for s in ["box:a=0.5/1.5", "ball:R=1.3", "lp:r=1,p=1"] {
        let g = gauss_main_bound(&b(s, 2), &rule()).unwrap();
        assert!(g.bound_at_quoted <= g.bound + 1e-12, "{s}: {g:?}");
    }
}

#[test]
fn torsion_power_bound() {
    for (k, a) in [(1, 0.3), (2, 0.5), (2, 0.9)] {
        let c = SupportBody::cylinder(2, k, radius_of_measure(k, a).unwrap()).unwrap();
        let r = cor_t1_bound(&c, &rule()).unwrap();
        assert!(r.value > 0.0);
        assert!(
            r.value <= ps_cylinder(k, a).unwrap() + 1e-6,
            "k={k} a={a}: {}",
            r.value
        );
    }
    let ball = SupportBody::ball(2, 1.0).unwrap();
    let r = cor_t1_bound(&ball, &rule()).unwrap();
    let t = torsion_radial(2, 1.0, 2, &Source::one()).unwrap();
    let e = (-0.5f64).exp();
    let m2 = 2.0 - e / (1.0 - e); // E|X|^2 on the unit disc
    assert!((r.value - (2.0 * t.value + 1.0 / (2.0 - m2))).abs() < 1e-6);
    assert!(cor_t1_bound(&b("box:a=0.5/1", 2), &rule()).unwrap().value > 0.0);
}

#[test]
fn conjecture_transform_is_affine_on_cylinder_dilates() {
    // In the plane phi_2 is the minimum below the phi_1/phi_2 crossing, so
    // discs of measure 0.2 and 0.4 lie in one stretch.
    let n = 2;
    let t = Transform::conjecture(n, 0.5).unwrap();
    let c0 = SupportBody::cylinder(n, 2, radius_of_measure(2, 0.2).unwrap()).unwrap();
    let c1 = SupportBody::cylinder(n, 2, radius_of_measure(2, 0.4).unwrap()).unwrap();
    let r = concavity_check(&t, &c0, &c1, &t_grid(9), &rule()).unwrap();
    assert_eq!(r.verdict, Verdict::ConcaveWithinTol);
    let scale = r.transformed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(
        r.max_second_difference.abs() < 1e-6 * scale.max(1.0),
        "{r:?}"
    );
}

#[test]
fn minkowski_pairs() {
    let r = minkowski_first_check(&b("strip:w=0.6", 2), &b("ball:R=1", 2), &rule()).unwrap();
    assert!(r.slack_stated >= -r.budget);
    let r = minkowski_first_check(&b("ball:R=0.8", 2), &b("ball:R=1.6", 2), &rule()).unwrap();
    assert!(r.slack_stated >= -r.budget && r.slack >= -r.budget);
    let k = b("ball:R=0.8", 2);
    let r = minkowski_first_check(&k, &k, &rule()).unwrap();
    assert!(r.slack.abs() <= r.budget + 1e-5 * r.rhs_sharp);
}

#[test]
fn brascamp_lieb_cases() {
    let k = b("box:a=0.6/1.2", 2);
    let r =
        brascamp_lieb_check(&k, &MultiPoly::constant(2, 3.0), BlMode::Gaussian, &rule()).unwrap();
    assert!(r.variance.value.abs() < 1e-12 && r.grad_sq.value == 0.0);
    let x1sq = MultiPoly::monomial(2, &[2, 0], 1.0);
    let r = brascamp_lieb_check(&k, &x1sq, BlMode::GaussianEvenHalf, &rule()).unwrap();
    assert!(r.slack >= -r.budget);
    let odd = MultiPoly::var(2, 0);
    assert!(brascamp_lieb_check(&k, &odd, BlMode::GaussianEvenHalf, &rule()).is_err());
}

#[test]
fn propgauss_equality_and_strict_cases() {
    let cyl = b("cylinder:k=1,R=0.7", 2);
    for u in [
        MultiPoly::monomial(2, &[0, 2], 1.0),
        MultiPoly::monomial(2, &[2, 0], 1.0),
    ] {
        let r = propgauss_check(&cyl, &u, &rule()).unwrap();
        assert!(r.slack.abs() < 1e-9, "{r:?}");
    }
    let u = MultiPoly::monomial(2, &[2, 0], 1.0).add(&MultiPoly::monomial(2, &[0, 2], 2.0));
    let r = propgauss_check(&b("ball:R=1", 2), &u, &rule()).unwrap();
    assert!(r.slack > 1e-3, "{r:?}");
}

#[test]
fn s_inequality_on_disc() {
    let r = s_inequality_check(&b("ball:R=1.1", 2), &rule()).unwrap();
    assert!(r.margins[0].abs() <= r.budgets[0]);
    for (m, e) in r.margins.iter().zip(&r.budgets) {
        assert!(*m >= -e, "{r:?}");
    }
}

#[test]
fn moment_suite_on_translated_body() {
    let k = b("translate:v=0.4/0.1;box:a=0.7/1.2", 2);
    let r = moment_inequality_suite(&k, &[1.0, 0.0], &rule()).unwrap();
    assert!(r.alpha.is_none() && r.cfm_margin.is_none());
    assert!(r.eta_margin >= -1e-8, "{r:?}");
    assert!(r.directional_margin >= -1e-8);
}

#[test]
fn halfspace_alpha_tends_to_minus_eta() {
    for a in [0.05, 0.5, 0.95] {
        let h = halfspace_alpha(a).unwrap();
        assert!(
            (h.alpha - h.minus_eta).abs() < 1e-9 * h.alpha.abs().max(1.0),
            "{h:?}"
        );
    }
}

#[test]
fn saint_venant_on_boxes() {
    for s in ["box:a=0.5/1.5", "lp:r=1,p=1"] {
        let r = saint_venant_check(&b(s, 2), &rule()).unwrap();
        assert!(r.margin >= -r.budget, "{r:?}");
    }
}

#[test]
fn log_concavity_of_measure() {
    let m = log_concavity_margin(&b("box:a=0.2/2", 2), &b("ball:R=1.5", 2), &rule()).unwrap();
    assert!(m.value >= -m.err);
    let k = b("ball:R=1", 2);
    let m = log_concavity_margin(&k, &k, &rule()).unwrap();
    assert!(m.value.abs() <= m.err + 1e-15);
}

#[test]
fn confirmed_violations_survive_refinement() {
    let r = concavity_check(
        &Transform::phi_inv(),
        &b("ball:R=0.2", 2),
        &b("ball:R=0.6", 2),
        &t_grid(9),
        &rule(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Violation);
    assert_eq!(r.confirmed, Some(true));
    let g = measure(&b("ball:R=0.2", 2), &rule()).unwrap();
    assert!(g.value < 0.05);
}
