//! Frequency map and the Jacobian of frequencies with respect to actions.
//!
//! `det ∂ω/∂I = ω₁·det ∂(ω₁, ω₂)/∂(h, l)` since `dI₁ = (dh − ω₂ dl)/ω₁`
//! and `dI₂ = dl`. Near the focus-focus value it behaves like
//! `−(2πα/(|j|τ₁²))²`.

use alloc::vec::Vec;
use core::f64::consts::TAU;

#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::{check_window, from_momentum_chart, log_space, period_lattice, MomentumValue, PeriodLatticeSample, TorusOptions};
use crate::numerics::{fd_derivative_with_step, FdScheme};
use crate::systems::{EMValue, IntegrableSystem};
use crate::{Error, Result};

/// `(ω₁, ω₂) = (2π/T, Θ/T)` on the principal sheet.
pub fn frequency_map(system: &dyn IntegrableSystem, c: EMValue, opts: &TorusOptions) -> Result<(f64, f64)> {
    period_lattice(system, c, None, opts).map(|s| s.frequencies())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencySample {
    pub c: EMValue,
    pub j_mod: f64,
    pub tau1: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// `∂(ω₁, ω₂)/∂(h, l)`, rows indexed by frequency.
    pub jacobian_c: [[f64; 2]; 2],
    pub det_c: f64,
    /// `det_c·ω₁`
    pub det_i: f64,
    /// `−(2πα/(|j|τ₁²))²`
    pub asymptote: f64,
    pub ratio: f64,
}

/// Step used for the frequency and lattice Jacobians.
pub fn jacobian_step(j: MomentumValue) -> f64 {
    1e-2 * j.modulus()
}

fn lifted(system: &dyn IntegrableSystem, c: EMValue, centre: &PeriodLatticeSample, opts: &TorusOptions) -> Result<PeriodLatticeSample> {
    period_lattice(system, c, Some(centre), opts)
}

/// Frequencies, their `(h, l)` Jacobian and the action determinant at `c`.
pub fn frequency_jacobian_det(system: &dyn IntegrableSystem, c: EMValue, opts: &TorusOptions) -> Result<FrequencySample> {
    let j = check_window(system, c)?;
    let centre = period_lattice(system, c, None, opts)?;
    let (omega1, omega2) = centre.frequencies();
    if !(omega1 > 0.0 && omega1.is_finite()) {
        return Err(Error::IllConditioned("non-positive first frequency on a regular torus"));
    }
    let step = jacobian_step(j);
    let mut jac = [[0.0; 2]; 2];
    for (row, pick) in [|s: PeriodLatticeSample| s.frequencies().0, |s: PeriodLatticeSample| s.frequencies().1].iter().enumerate() {
        jac[row][0] = fd_derivative_with_step(|h| lifted(system, EMValue::new(h, c.l), &centre, opts).map(pick), c.h, FdScheme::Richardson, step)?;
        jac[row][1] = fd_derivative_with_step(|l| lifted(system, EMValue::new(c.h, l), &centre, opts).map(pick), c.l, FdScheme::Richardson, step)?;
    }
    let det_c = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let det_i = det_c * omega1;
    let alpha = system.constants().alpha;
    let r = j.modulus();
    let asymptote = -(TAU * alpha / (r * centre.tau1 * centre.tau1)).powi(2);
    Ok(FrequencySample {
        c,
        j_mod: r,
        tau1: centre.tau1,
        omega1,
        omega2,
        jacobian_c: jac,
        det_c,
        det_i,
        asymptote,
        ratio: det_i / asymptote,
    })
}

/// Samples along the ray `arg ζ = ray_angle` at `n` log-spaced radii from
/// `r_max` down to `r_min`.
pub fn asymptote_sweep(
    system: &dyn IntegrableSystem,
    ray_angle: f64,
    r_min: f64,
    r_max: f64,
    n: usize,
    opts: &TorusOptions,
) -> Vec<Result<FrequencySample>> {
    (0..n)
        .map(|i| {
            let r = log_space(r_max, r_min, n, i);
            frequency_jacobian_det(system, from_momentum_chart(system, MomentumValue::from_polar(r, ray_angle)), opts)
        })
        .collect()
}

/// `∂(τ₁, τ₂)/∂(j₁, j₂)` with every stencil point on the sheet of `c`.
pub fn lattice_jacobian(system: &dyn IntegrableSystem, c: EMValue, opts: &TorusOptions) -> Result<[[f64; 2]; 2]> {
    let j = check_window(system, c)?;
    let centre = period_lattice(system, c, None, opts)?;
    let step = jacobian_step(j);
    let at = |j1: f64, j2: f64| lifted(system, from_momentum_chart(system, MomentumValue { j1, j2 }), &centre, opts);
    let mut jac = [[0.0; 2]; 2];
    for (row, pick) in [|s: PeriodLatticeSample| s.tau1, |s: PeriodLatticeSample| s.tau2].iter().enumerate() {
        jac[row][0] = fd_derivative_with_step(|x| at(x, j.j2).map(pick), j.j1, FdScheme::Richardson, step)?;
        jac[row][1] = fd_derivative_with_step(|y| at(j.j1, y).map(pick), j.j2, FdScheme::Richardson, step)?;
    }
    Ok(jac)
}

/// `|j|²·det ∂τ/∂j`, which tends to `−1`.
pub fn scaled_lattice_det(system: &dyn IntegrableSystem, c: EMValue, opts: &TorusOptions) -> Result<f64> {
    let m = lattice_jacobian(system, c, opts)?;
    let r = crate::lattice::to_momentum_chart(system, c).modulus();
    Ok(r * r * (m[0][0] * m[1][1] - m[0][1] * m[1][0]))
}

/// Relative mismatch `|∂₁τ₂ − ∂₂τ₁| / max(|∂₁τ₂|, |∂₂τ₁|)`.
pub fn mixed_partial_mismatch(system: &dyn IntegrableSystem, c: EMValue, opts: &TorusOptions) -> Result<f64> {
    let m = lattice_jacobian(system, c, opts)?;
    Ok((m[1][0] - m[0][1]).abs() / m[1][0].abs().max(m[0][1].abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{champagne_bottle, spherical_pendulum};

    #[test]
    fn stored_quantities_are_consistent() {
        let sys = champagne_bottle(0.5).unwrap();
        let o = TorusOptions::default();
        let f = frequency_jacobian_det(&sys, EMValue::new(0.01, 0.005), &o).unwrap();
        assert_eq!(f.det_i, f.det_c * f.omega1);
        assert_eq!(f.ratio, f.det_i / f.asymptote);
        assert!(f.asymptote < 0.0 && f.omega1 > 0.0);
        let w = period_lattice(&sys, f.c, None, &o).unwrap().rotation_number();
        assert!((f.omega2 / f.omega1 - w).abs() < 1e-12);
    }

    #[test]
    fn determinant_is_negative_near_the_fibre() {
        let o = TorusOptions::default();
        for sys in [&champagne_bottle(0.5).unwrap() as &dyn IntegrableSystem, &spherical_pendulum()] {
            for r in asymptote_sweep(sys, 2.0, 1e-4, 1e-2, 3, &o).into_iter().chain(asymptote_sweep(sys, 5.0, 1e-4, 1e-2, 3, &o)) {
                let r = r.unwrap();
                assert!(r.det_i < 0.0);
                assert!((r.ratio - 1.0).abs() < 0.3);
            }
        }
    }

    #[test]
    fn determinant_does_not_depend_on_the_sheet() {
        let sys = champagne_bottle(0.5).unwrap();
        let o = TorusOptions::default();
        let on = frequency_jacobian_det(&sys, EMValue::new(0.01, 0.0), &o).unwrap();
        let off = frequency_jacobian_det(&sys, EMValue::new(0.01, 1e-9), &o).unwrap();
        assert!((on.det_i / off.det_i - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lattice_jacobian_structure() {
        let sys = champagne_bottle(0.5).unwrap();
        let o = TorusOptions::default();
        let c = from_momentum_chart(&sys, MomentumValue::from_polar(1e-3, 1.0));
        assert!((scaled_lattice_det(&sys, c, &o).unwrap() + 1.0).abs() < 0.1);
        assert!(mixed_partial_mismatch(&sys, c, &o).unwrap() < 1e-5);
    }
}
