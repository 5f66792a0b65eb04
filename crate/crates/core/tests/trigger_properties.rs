use etclab_core::linalg::dot;
use etclab_core::trigger::{directional_evaluate, halfspace_normal, isotropic_evaluate};
use etclab_core::{PlantDesign, TriggerPolicy};
use proptest::prelude::*;

fn pair() -> impl Strategy<Value = ([f64; 2], [f64; 2])> {
    (
        prop::array::uniform2(-5.0f64..5.0),
        prop::array::uniform2(-5.0f64..5.0),
    )
        .prop_filter("x away from origin", |(x, _)| {
            x[0].abs() + x[1].abs() > 1e-3
        })
}

/// Unit vector orthogonal to `v` in the plane.
fn orthogonal(v: &[f64]) -> [f64; 2] {
    let n = dot(v, v).sqrt();
    [-v[1] / n, v[0] / n]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn orthogonal_errors_do_not_change_decision(
        (x, e) in pair(),
        shifts in prop::collection::vec(-50.0f64..50.0, 100),
        sigma in 0.01f64..0.55,
    ) {
        let d = PlantDesign::reference();
        let v = halfspace_normal(&x, d.pbk());
        prop_assume!(dot(&v, &v) > 1e-12);
        let w = orthogonal(&v);
        let base = directional_evaluate(&x, &e, sigma, d.p(), d.pbk());
        for c in shifts {
            let moved = [e[0] + c * w[0], e[1] + c * w[1]];
            let other = directional_evaluate(&x, &moved, sigma, d.p(), d.pbk());
            prop_assert_eq!(other.fire, base.fire);
            prop_assert!((other.margin - base.margin).abs() <= 1e-9);
        }
    }

    #[test]
    fn firing_persists_along_normal(
        (x, e) in pair(),
        steps in prop::collection::vec(0.0f64..100.0, 20),
        sigma in 0.01f64..0.55,
    ) {
        let d = PlantDesign::reference();
        let v = halfspace_normal(&x, d.pbk());
        let vv = dot(&v, &v);
        prop_assume!(vv > 1e-12);
        // push e across the boundary along the normal if it starts inside
        let start = directional_evaluate(&x, &e, sigma, d.p(), d.pbk()).margin;
        let c0 = (start / (2.0 * vv)).max(0.0) * (1.0 + 1e-9) + 1e-9;
        let e = [e[0] + c0 * v[0], e[1] + c0 * v[1]];
        let base = directional_evaluate(&x, &e, sigma, d.p(), d.pbk());
        prop_assert!(base.fire);
        for c in steps {
            let moved = [e[0] + c * v[0], e[1] + c * v[1]];
            let next = directional_evaluate(&x, &moved, sigma, d.p(), d.pbk());
            prop_assert!(next.fire);
            prop_assert!(next.margin <= base.margin + 1e-9 * base.margin.abs().max(1.0));
        }
    }

    #[test]
    fn margins_scale_quadratically((x, e) in pair(), c in 0.01f64..100.0, sigma in 0.01f64..0.99) {
        let d = PlantDesign::reference();
        let cx = [c * x[0], c * x[1]];
        let ce = [c * e[0], c * e[1]];
        let a = directional_evaluate(&x, &e, sigma, d.p(), d.pbk());
        let b = directional_evaluate(&cx, &ce, sigma, d.p(), d.pbk());
        let tol = 1e-9 * (c * c) * (1.0 + a.margin.abs());
        prop_assert!((b.margin - c * c * a.margin).abs() <= tol);
        if a.margin.abs() > 1e-9 {
            prop_assert_eq!(a.fire, b.fire);
        }

        let a = isotropic_evaluate(&x, &e, sigma);
        let b = isotropic_evaluate(&cx, &ce, sigma);
        prop_assert!((b.margin - c * c * a.margin).abs() <= tol);
        if a.margin.abs() > 1e-9 {
            prop_assert_eq!(a.fire, b.fire);
        }
    }

    #[test]
    fn stateless_rules_ignore_time((x, e) in pair(), t1 in 0.0f64..100.0, t2 in 0.0f64..100.0) {
        let d = PlantDesign::reference();
        for policy in [
            TriggerPolicy::Directional { sigma: 0.1 },
            TriggerPolicy::Isotropic { sigma: 0.7 },
        ] {
            let trig = policy.arm(&d).unwrap();
            prop_assert_eq!(trig.evaluate(&x, &e, t1).unwrap(), trig.evaluate(&x, &e, t2).unwrap());
        }
    }

    #[test]
    fn zero_error_never_fires(x in prop::array::uniform2(-5.0f64..5.0), dt in 0.0f64..50.0) {
        prop_assume!(x[0].hypot(x[1]) > 1e-6);
        let d = PlantDesign::reference();
        for policy in [
            TriggerPolicy::Directional { sigma: 0.1 },
            TriggerPolicy::Isotropic { sigma: 0.7 },
            TriggerPolicy::TimeVarying { alpha: 0.5 },
        ] {
            let mut trig = policy.arm(&d).unwrap();
            trig.record_event(&x, 0.0);
            prop_assert!(!trig.evaluate(&x, &[0.0, 0.0], 0.0).unwrap().fire);
        }
        // the envelope rule also holds while V sits below the decaying envelope
        let mut trig = TriggerPolicy::TimeVarying { alpha: 0.5 }.arm(&d).unwrap();
        trig.record_event(&x, 0.0);
        let shrunk = [x[0] * (-dt).exp(), x[1] * (-dt).exp()];
        prop_assert!(!trig.evaluate(&shrunk, &[0.0, 0.0], dt).unwrap().fire);
    }
}
