//! Twist `S = ∂W/∂l` along the isoenergy curves `C_h = {H = h}` and the
//! twistless tori where it vanishes.

use alloc::vec::Vec;
use core::f64::consts::TAU;

#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::{check_window, from_momentum_chart, period_lattice, to_momentum_chart, MomentumValue, PeriodLatticeSample, TorusOptions};
use crate::numerics::{fd_derivative_with_step, find_root_bracketed, least_squares, FdScheme};
use crate::systems::{EMValue, IntegrableSystem};
use crate::{Error, Result};

/// Step used for derivatives in `l`: relative to `|l|`, floored at `1e-6`,
/// and capped at `1e-2·|j|` so the stencil stays in the logarithmic regime.
pub fn twist_step(j: MomentumValue) -> f64 {
    1e-6f64.max(1e-3 * j.j2.abs()).min(1e-2 * j.modulus())
}

fn lifted_w(system: &dyn IntegrableSystem, c: EMValue, centre: &PeriodLatticeSample, opts: &TorusOptions) -> Result<f64> {
    period_lattice(system, c, Some(centre), opts).map(|s| s.rotation_number())
}

/// `S = ∂W/∂l` at fixed `h`, Richardson-extrapolated central differences
/// with every stencil point on the sheet of the centre.
pub fn twist(system: &dyn IntegrableSystem, c: EMValue, opts: &TorusOptions) -> Result<f64> {
    let j = check_window(system, c)?;
    twist_with_step(system, c, twist_step(j), opts)
}

pub fn twist_with_step(system: &dyn IntegrableSystem, c: EMValue, step: f64, opts: &TorusOptions) -> Result<f64> {
    let centre = period_lattice(system, c, None, opts)?;
    fd_derivative_with_step(|l| lifted_w(system, EMValue::new(c.h, l), &centre, opts), c.l, FdScheme::Richardson, step)
}

/// `S` through the momentum chart, `−A(0)·∂₁W + ∂₂W`.
pub fn twist_jchart(system: &dyn IntegrableSystem, c: EMValue, opts: &TorusOptions) -> Result<f64> {
    let (d1, d2) = w_gradient_jchart(system, c, opts)?;
    Ok(-system.constants().a0 * d1 + d2)
}

/// `(∂W/∂j₁, ∂W/∂j₂)` by Richardson differences with step `1e-2·|j|`.
pub fn w_gradient_jchart(system: &dyn IntegrableSystem, c: EMValue, opts: &TorusOptions) -> Result<(f64, f64)> {
    let j = check_window(system, c)?;
    let centre = period_lattice(system, c, None, opts)?;
    let step = 1e-2 * j.modulus();
    let at = |j1: f64, j2: f64| lifted_w(system, from_momentum_chart(system, MomentumValue { j1, j2 }), &centre, opts);
    let d1 = fd_derivative_with_step(|x| at(x, j.j2), j.j1, FdScheme::Richardson, step)?;
    let d2 = fd_derivative_with_step(|y| at(j.j1, y), j.j2, FdScheme::Richardson, step)?;
    Ok((d1, d2))
}

/// `S̃ = 2π|j|²·S`
pub fn tilde_s(system: &dyn IntegrableSystem, c: EMValue, opts: &TorusOptions) -> Result<f64> {
    let j = to_momentum_chart(system, c);
    Ok(TAU * j.modulus().powi(2) * twist(system, c, opts)?)
}

/// Gradient of `S̃` at the origin from symmetric differences at distance
/// `delta` along the chart axes (`S̃(0) = 0`).
pub fn tilde_s_gradient_at_origin(system: &dyn IntegrableSystem, delta: f64, opts: &TorusOptions) -> Result<(f64, f64)> {
    let at = |j1: f64, j2: f64| tilde_s(system, from_momentum_chart(system, MomentumValue { j1, j2 }), opts);
    let d1 = (at(delta, 0.0)? - at(-delta, 0.0)?) / (2.0 * delta);
    let d2 = (at(0.0, delta)? - at(0.0, -delta)?) / (2.0 * delta);
    Ok((d1, d2))
}

/// Values of `l` on `C_h` whose chart point lies inside the window radius.
pub fn isoenergy_range(system: &dyn IntegrableSystem, h: f64) -> Option<(f64, f64)> {
    let k = system.constants();
    let r = system.window().j_max;
    // ((h − ωl)/α)² + l² = r²
    let a = k.omega * k.omega + k.alpha * k.alpha;
    let b = -2.0 * h * k.omega;
    let c = h * h - (r * k.alpha).powi(2);
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // shrink slightly so the end points are strictly inside
    let (lo, hi) = ((-b - s) / (2.0 * a), (-b + s) / (2.0 * a));
    let pad = 1e-9 * (hi - lo);
    Some((lo + pad, hi - pad))
}

const SCAN_POINTS: usize = 64;
const REFINE: usize = 4;

/// All sign changes of `S` along `C_h` inside the window, each refined to a
/// root. `scan` points cover the admissible range of `l`; intervals with a
/// sign change are rescanned `×4` before bracketing.
pub fn twistless_roots(system: &dyn IntegrableSystem, h: f64, scan: usize, opts: &TorusOptions) -> Result<Vec<f64>> {
    let (lo, hi) = isoenergy_range(system, h).ok_or(Error::NoTwistlessTorus { h })?;
    let s_at = |l: f64| twist(system, EMValue::new(h, l), opts);
    let grid = |a: f64, b: f64, n: usize| (0..n).map(move |k| a + (b - a) * k as f64 / (n - 1) as f64);

    let values: Vec<(f64, f64)> = grid(lo, hi, scan).filter_map(|l| s_at(l).ok().map(|s| (l, s))).collect();
    let mut roots = Vec::new();
    for pair in values.windows(2) {
        let ((la, sa), (lb, sb)) = (pair[0], pair[1]);
        if sa.signum() == sb.signum() {
            continue;
        }
        let fine: Vec<(f64, f64)> = grid(la, lb, REFINE + 1).filter_map(|l| s_at(l).ok().map(|s| (l, s))).collect();
        for q in fine.windows(2) {
            let ((a, fa), (b, fb)) = (q[0], q[1]);
            if fa.signum() == fb.signum() {
                continue;
            }
            let tol = 1e-12 * (hi - lo);
            let root = find_root_bracketed(|l| s_at(l).unwrap_or(f64::NAN), a, b, tol)?;
            roots.push(root);
        }
    }
    Ok(roots)
}

/// The unique twistless torus on `C_h`.
pub fn twistless_point(system: &dyn IntegrableSystem, h: f64, opts: &TorusOptions) -> Result<f64> {
    if h == 0.0 {
        return Err(Error::InvalidArgument("the critical energy has no isoenergy circle of regular tori"));
    }
    let roots = twistless_roots(system, h, SCAN_POINTS, opts)?;
    match roots.len() {
        0 => Err(Error::NoTwistlessTorus { h }),
        1 => Ok(roots[0]),
        count => Err(Error::MultipleTwistlessTori { h, count }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistlessSample {
    pub h: f64,
    pub l_star: f64,
    pub j: MomentumValue,
    /// `S` at the root.
    pub s_residual: f64,
}

/// Twistless tori across energies and the tangent of their curve at the
/// origin.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistlessCurve {
    /// Ordered by `h`.
    pub samples: Vec<TwistlessSample>,
    pub failures: Vec<(f64, Error)>,
    /// Weighted slope `dh/dj₂` over the four smallest `|h|`; `None` for `ω = 0`.
    pub tangent_slope_fit: Option<f64>,
    /// `ω(ω²+α²)/(ω²−α²)`
    pub expected_slope: f64,
    /// For `ω = 0`: `(|h|, |h|/|l*|)` by increasing `|h|`, using every root found.
    pub degenerate_ratios: Vec<(f64, f64)>,
}

/// Twistless tori for each `h`.
///
/// With `ω ≠ 0` each energy must carry exactly one root. With `ω = 0` the
/// transversality to `{h = const}` is lost; every root is kept and the trend
/// of `|h|/|l*|` is reported instead of a slope.
pub fn twistless_curve(system: &dyn IntegrableSystem, h_values: &[f64], opts: &TorusOptions) -> Result<TwistlessCurve> {
    let k = system.constants();
    let degenerate = k.is_degenerate();
    let mut hs: Vec<f64> = h_values.to_vec();
    hs.sort_by(f64::total_cmp);

    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for &h in &hs {
        let found = if degenerate {
            twistless_roots(system, h, SCAN_POINTS, opts).and_then(|r| if r.is_empty() { Err(Error::NoTwistlessTorus { h }) } else { Ok(r) })
        } else {
            twistless_point(system, h, opts).map(|l| alloc::vec![l])
        };
        match found {
            Ok(roots) => {
                for l in roots {
                    let c = EMValue::new(h, l);
                    let s_residual = twist(system, c, opts).unwrap_or(f64::NAN);
                    samples.push(TwistlessSample { h, l_star: l, j: to_momentum_chart(system, c), s_residual });
                }
            }
            Err(e) => failures.push((h, e)),
        }
    }

    let mut curve = TwistlessCurve {
        samples,
        failures,
        tangent_slope_fit: None,
        expected_slope: k.twistless_slope(),
        degenerate_ratios: Vec::new(),
    };
    if degenerate {
        let mut r: Vec<(f64, f64)> = curve.samples.iter().map(|s| (s.h.abs(), (s.h / s.l_star).abs())).collect();
        r.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        curve.degenerate_ratios = r;
        return Ok(curve);
    }
    if curve.samples.len() < 4 {
        return Err(Error::InsufficientData("tangent fit needs at least 4 twistless tori"));
    }
    let mut near: Vec<&TwistlessSample> = curve.samples.iter().collect();
    near.sort_by(|a, b| a.h.abs().total_cmp(&b.h.abs()));
    near.truncate(4);
    // weights 1/h² applied as 1/|h| to both sides of the normal equations
    let rows: Vec<Vec<f64>> = near.iter().map(|s| alloc::vec![s.j.j2 / s.h.abs(), 1.0 / s.h.abs()]).collect();
    let y: Vec<f64> = near.iter().map(|s| s.h / s.h.abs()).collect();
    curve.tangent_slope_fit = Some(least_squares(&rows, &y)?.coefficients[0]);
    Ok(curve)
}

/// Torus data used by the twist and frequency analyses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusInvariants {
    pub w: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub s: f64,
    /// `2π|j|²·s`
    pub s_tilde: f64,
    pub det_freq_jac: f64,
}

pub fn torus_invariants(system: &dyn IntegrableSystem, c: EMValue, opts: &TorusOptions) -> Result<TorusInvariants> {
    let j = check_window(system, c)?;
    let sample = period_lattice(system, c, None, opts)?;
    let (omega1, omega2) = sample.frequencies();
    let s = twist(system, c, opts)?;
    let det = crate::kolmogorov::frequency_jacobian_det(system, c, opts)?;
    Ok(TorusInvariants {
        w: sample.rotation_number(),
        omega1,
        omega2,
        s,
        s_tilde: TAU * j.modulus().powi(2) * s,
        det_freq_jac: det.det_i,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{champagne_bottle, spherical_pendulum};

    #[test]
    fn twist_is_step_stable_and_matches_chart_form() {
        let sys = champagne_bottle(0.5).unwrap();
        let o = TorusOptions::default();
        let c = EMValue::new(0.05, 0.02);
        let s = twist(&sys, c, &o).unwrap();
        let half = twist_with_step(&sys, c, 0.5 * twist_step(to_momentum_chart(&sys, c)), &o).unwrap();
        let chart = twist_jchart(&sys, c, &o).unwrap();
        assert!((s - half).abs() <= 1e-4 * s.abs());
        assert!((s - chart).abs() <= 1e-4 * s.abs());
    }

    // leading part of 2πS is (A²j₁ − 2Aj₂ − j₁)/|j|²
    fn leading_twist(sys: &dyn IntegrableSystem, c: EMValue) -> f64 {
        let a = sys.constants().a0;
        let j = to_momentum_chart(sys, c);
        (a * a * j.j1 - 2.0 * a * j.j2 - j.j1) / (TAU * j.modulus().powi(2))
    }

    #[test]
    fn twist_follows_the_leading_form() {
        let sys = champagne_bottle(0.0).unwrap();
        let o = TorusOptions::default();
        // bounded as l → 0 at fixed h > 0, with the growth the leading term predicts
        let (far, near) = (EMValue::new(0.1, 0.05), EMValue::new(0.1, 0.005));
        let growth = twist(&sys, near, &o).unwrap() / twist(&sys, far, &o).unwrap();
        let predicted = leading_twist(&sys, near) / leading_twist(&sys, far);
        assert!((growth / predicted - 1.0).abs() < 0.05, "{growth} {predicted}");
        // divergent like 1/|j| along a ray
        let s1 = twist(&sys, EMValue::new(0.01, 0.005), &o).unwrap();
        let s2 = twist(&sys, EMValue::new(0.001, 0.0005), &o).unwrap();
        assert!(s2.abs() >= 9.0 * s1.abs(), "{s1} {s2}");
    }

    #[test]
    fn twist_is_continuous_across_the_cut() {
        let sys = champagne_bottle(0.5).unwrap();
        let o = TorusOptions::default();
        let on = twist(&sys, EMValue::new(0.05, 0.0), &o).unwrap();
        let above = twist(&sys, EMValue::new(0.05, 1e-6), &o).unwrap();
        let below = twist(&sys, EMValue::new(0.05, -1e-6), &o).unwrap();
        assert!((on - above).abs() < 1e-3 * on.abs() && (on - below).abs() < 1e-3 * on.abs());
    }

    #[test]
    fn tilde_s_vanishes_at_the_origin() {
        let sys = champagne_bottle(0.5).unwrap();
        let o = TorusOptions::default();
        for k in 0..4 {
            let arg = 0.3 + 1.5 * k as f64;
            let v: Vec<f64> = [1e-2, 1e-3, 1e-4]
                .iter()
                .map(|&r| tilde_s(&sys, from_momentum_chart(&sys, MomentumValue::from_polar(r, arg)), &o).unwrap().abs())
                .collect();
            assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
        }
        let a = sys.constants().a0;
        let (g1, g2) = tilde_s_gradient_at_origin(&sys, 1e-4, &o).unwrap();
        assert!((g1 - (a * a - 1.0)).abs() < 1e-3 && (g2 + 2.0 * a).abs() < 1e-3, "{g1} {g2}");
    }

    #[test]
    fn one_twistless_torus_per_energy() {
        let sys = champagne_bottle(0.5).unwrap();
        let o = TorusOptions::default();
        for h in [-0.05, -0.02, 0.02, 0.05] {
            let l = twistless_point(&sys, h, &o).unwrap();
            assert!(twist(&sys, EMValue::new(h, l), &o).unwrap().abs() < 1e-8);
            assert_eq!(twistless_roots(&sys, h, 128, &o).unwrap().len(), 1);
        }
        assert!(matches!(twistless_point(&sys, 0.0, &o), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn twistless_tangent_matches_linearisation() {
        let sys = champagne_bottle(0.5).unwrap();
        let o = TorusOptions::default();
        let curve = twistless_curve(&sys, &[0.02, -0.02, 0.01, -0.01, 0.005, -0.005], &o).unwrap();
        let slope = curve.tangent_slope_fit.unwrap();
        assert!((curve.expected_slope + 9.0 / 14.0).abs() < 1e-12);
        assert!((slope / curve.expected_slope - 1.0).abs() < 0.15, "{slope}");
        assert!(curve.samples.windows(2).all(|w| w[0].h <= w[1].h));
    }

    #[test]
    fn degenerate_mode_without_rotation() {
        let o = TorusOptions::default();
        let sys = spherical_pendulum();
        let curve = twistless_curve(&sys, &[0.005, 0.01, 0.02], &o).unwrap();
        assert!(curve.tangent_slope_fit.is_none());
        let r = &curve.degenerate_ratios;
        assert!(!r.is_empty());
        assert!(r.windows(2).all(|w| w[0].0 == w[1].0 || w[0].1 < w[1].1), "{r:?}");
    }
}
