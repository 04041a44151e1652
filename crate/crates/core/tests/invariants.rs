use std::f64::consts::{PI, TAU};

use focustwist_core::lattice::{period_lattice, to_momentum_chart, window_point, TorusOptions};
use focustwist_core::rotation::log_form_remainder;
use focustwist_core::systems::{builtin, champagne_bottle, EMValue, IntegrableSystem};
use focustwist_core::twist::{twist, twist_jchart};
use proptest::prelude::*;

fn opts() -> TorusOptions {
    TorusOptions::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frequencies_and_rotation_number(u in 0.0..1.0f64, v in 0.0..1.0f64, pendulum in any::<bool>()) {
        let sys = if pendulum { builtin("pendulum", 0.0) } else { builtin("champagne", 0.5) }.unwrap();
        let c = window_point(&*sys, u, v);
        if let Ok(s) = period_lattice(&*sys, c, None, &opts()) {
            let (w1, w2) = s.frequencies();
            prop_assert!(w1 > 0.0);
            prop_assert!((w2 / w1 - s.rotation_number()).abs() < 1e-10);
            let k = sys.constants();
            prop_assert!((TAU * s.rotation_number() - (k.a0 * s.tau1 - s.tau2)).abs() < 1e-10);
        }
    }

    #[test]
    fn reflection_without_rotation(h in -0.1..0.1f64, l in 0.001..0.1f64) {
        let sys = champagne_bottle(0.0).unwrap();
        let a = period_lattice(&sys, EMValue::new(h, l), None, &opts());
        let b = period_lattice(&sys, EMValue::new(h, -l), None, &opts());
        if let (Ok(a), Ok(b)) = (a, b) {
            let s = a.rotation_number() + b.rotation_number();
            prop_assert!((s - s.round()).abs() < 1e-10);
            prop_assert!((a.t - b.t).abs() < 1e-10 * a.t);
        }
    }

    #[test]
    fn twist_in_both_charts(u in 0.2..0.9f64, v in 0.0..1.0f64) {
        let sys = champagne_bottle(0.5).unwrap();
        let c = window_point(&sys, u, v);
        if let (Ok(a), Ok(b)) = (twist(&sys, c, &opts()), twist_jchart(&sys, c, &opts())) {
            prop_assert!((a - b).abs() <= 1e-4 * a.abs().max(1e-3), "{} {}", a, b);
        }
    }
}

fn remainder_spread(sys: &dyn IntegrableSystem, r_in: f64, r_out: f64) -> f64 {
    let a0 = sys.constants().a0;
    let mut values = Vec::new();
    for i in 0..4 {
        let r = r_in * (r_out / r_in).powf(i as f64 / 3.0);
        for k in 0..8 {
            let arg = (k as f64 + 0.5) * PI / 4.0;
            let c = focustwist_core::lattice::from_momentum_chart(sys, focustwist_core::MomentumValue::from_polar(r, arg));
            let s = period_lattice(sys, c, None, &opts()).unwrap();
            values.push(log_form_remainder(s.rotation_number(), to_momentum_chart(sys, c), arg, a0));
        }
    }
    values.iter().cloned().fold(f64::MIN, f64::max) - values.iter().cloned().fold(f64::MAX, f64::min)
}

#[test]
fn rotation_number_has_bounded_remainder() {
    let sys = champagne_bottle(0.5).unwrap();
    assert!(remainder_spread(&sys, 1e-4, 1e-3) < 0.2);
    assert!(remainder_spread(&sys, 1e-4, 1e-2) < 0.2);
}
