use focustwist_core::lattice::{cross_check, window_point, TorusOptions};
use focustwist_core::rotation::rotation_number;
use focustwist_core::systems::{builtin, EMValue};
use focustwist_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn agreement(name: &str, gamma: f64, seed: u64, wanted: usize) {
    let sys = builtin(name, gamma).unwrap();
    let o = TorusOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    while checked < wanted {
        let c = window_point(&*sys, rng.gen(), rng.gen());
        match cross_check(&*sys, c, &o) {
            Ok(cc) => {
                assert!(cc.discrepancy() <= 1e-7, "{name} at {c:?}: {cc:?}");
                checked += 1;
            }
            Err(Error::OutsideWindow { .. }) => {}
            Err(e) => panic!("{name} at {c:?}: {e}"),
        }
    }
}

#[test]
fn champagne_engines_agree() {
    agreement("champagne", 0.5, 11, 12);
}

#[test]
fn champagne_without_rotation_engines_agree() {
    agreement("champagne", 0.0, 12, 8);
}

#[test]
fn pendulum_engines_agree() {
    agreement("pendulum", 0.0, 13, 12);
}

#[test]
fn rotation_number_from_either_engine() {
    let sys = builtin("champagne", 0.5).unwrap();
    let o = TorusOptions::default();
    let c = EMValue::new(0.1, 0.05);
    let cc = cross_check(&*sys, c, &o).unwrap();
    let w = rotation_number(&*sys, c, None, &o).unwrap();
    let tau = std::f64::consts::TAU;
    assert!((w - cc.quadrature.1 / tau).abs() < 1e-7);
    assert!((w - cc.flow.1 / tau).abs() < 1e-7);
}
