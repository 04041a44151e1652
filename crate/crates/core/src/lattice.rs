//! Period-lattice data of regular tori.
//!
//! `T` is the first-return time of the reduced flow and `Θ` the continuous
//! azimuth increment over one return. With the linear chart
//! `(h, l) = (α j₁ + ω j₂, j₂)` they give `τ₁ = αT` and `τ₂ = ωT − Θ`.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::numerics::{least_squares, quad_jacobi_weight, OdeOptions, QuadOptions};
use crate::systems::{Anchored, EMValue, IntegrableSystem, TurningPoints};
use crate::{Error, Result};

/// Point of the linearised momentum chart, identified with `ζ = j₁ + i j₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumValue {
    pub j1: f64,
    pub j2: f64,
}

impl MomentumValue {
    pub fn from_polar(modulus: f64, arg: f64) -> Self {
        let (s, c) = arg.sin_cos();
        Self { j1: modulus * c, j2: modulus * s }
    }

    pub fn zeta(&self) -> Complex64 {
        Complex64::new(self.j1, self.j2)
    }

    pub fn modulus(&self) -> f64 {
        self.j1.hypot(self.j2)
    }

    /// Argument in `[0, 2π)`; the cut sits on the reference ray `arg ζ = 0`.
    pub fn arg_principal(&self) -> f64 {
        let a = self.j2.atan2(self.j1);
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    }
}

pub fn to_momentum_chart(system: &dyn IntegrableSystem, c: EMValue) -> MomentumValue {
    let k = system.constants();
    MomentumValue { j1: (c.h - k.omega * c.l) / k.alpha, j2: c.l }
}

pub fn from_momentum_chart(system: &dyn IntegrableSystem, j: MomentumValue) -> EMValue {
    let k = system.constants();
    EMValue { h: k.alpha * j.j1 + k.omega * j.j2, l: j.j2 }
}

/// Rejects values outside the system's regular window.
pub fn check_window(system: &dyn IntegrableSystem, c: EMValue) -> Result<MomentumValue> {
    let j = to_momentum_chart(system, c);
    let w = system.window();
    let m = j.modulus();
    if m < w.j_min {
        return Err(Error::TooCloseToFocusFocus { h: c.h, l: c.l, modulus: m });
    }
    if m > w.j_max {
        return Err(Error::OutsideWindow { h: c.h, l: c.l, reason: "|j| above the window cap" });
    }
    Ok(j)
}

/// Maps `(u, v) ∈ [0, 1]²` into the window: `|j|` log-uniform between the
/// window radii, `arg ζ = 2πv`.
pub fn window_point(system: &dyn IntegrableSystem, u: f64, v: f64) -> EMValue {
    let w = system.window();
    let r = (w.j_min.ln() + u * (w.j_max.ln() - w.j_min.ln())).exp();
    from_momentum_chart(system, MomentumValue::from_polar(r, TAU * v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Quadrature,
    Flow,
}

/// Tolerances shared by the torus computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusOptions {
    pub quad: QuadOptions,
    pub ode: OdeOptions,
    /// Multiplier in the integration budget `k·(1 + |ln|j||)/α`.
    pub budget_factor: f64,
}

impl Default for TorusOptions {
    fn default() -> Self {
        Self {
            quad: QuadOptions { rel_tol: 1e-13, abs_tol: 1e-300, max_intervals: 4000 },
            ode: OdeOptions { rtol: 1e-13, atol: 1e-15, ..OdeOptions::default() },
            budget_factor: 50.0,
        }
    }
}

const POLE_TOUCH: f64 = 1e-12;

fn quadrature_engine(system: &dyn IntegrableSystem, c: EMValue, tp: &TurningPoints, opts: &QuadOptions) -> Result<(f64, f64)> {
    let profile = system.profile(c);
    let (a, b) = (tp.lower_at, tp.upper_at);
    let norm = 1.0 / profile.cubic[0].abs().sqrt();
    // distance from x = a + da = b − db to a point outside (a, b)
    let dist = move |p: &Anchored, da: f64, db: f64| {
        if p.value() <= a.value() {
            a.minus(p) + da
        } else {
            p.minus(&b) + db
        }
    };
    let outer = tp.outer_at;
    let inv_outer = move |da: f64, db: f64| 1.0 / dist(&outer, da, db).sqrt();

    let period = 2.0 * norm * quad_jacobi_weight(|_, da, db| inv_outer(da, db), tp.lower, tp.upper, opts)?;

    let mut theta = 0.0;
    if profile.rate_constant != 0.0 {
        theta += profile.rate_constant * period;
    }
    let width = b.minus(&a);
    for pole in profile.poles.iter().filter(|p| p.weight != 0.0) {
        let p = Anchored { base: pole.position, offset: 0.0 };
        let below = p.value() <= a.value();
        let d0 = if below { a.minus(&p) } else { p.minus(&b) };
        // ∫ dx / ((d0 + u)·√((x − a)(b − x))) = π/√(d0(d0 + L)) with u the
        // distance to the nearer end point; only the bounded remainder
        // is left to the quadrature
        let g_end = if below { inv_outer(0.0, width) } else { inv_outer(width, 0.0) };
        let singular = PI * g_end / (d0 * (d0 + width)).sqrt();
        let remainder = quad_jacobi_weight(
            |_, da, db| {
                let (g, u) = (inv_outer(da, db), if below { da } else { db });
                (g - g_end) / (d0 + u)
            },
            tp.lower,
            tp.upper,
            &QuadOptions { abs_tol: opts.abs_tol.max(opts.rel_tol * singular), ..*opts },
        )?;
        theta += 2.0 * norm * pole.weight * (singular + remainder);
    }
    if profile.poles.iter().all(|p| p.weight == 0.0) && c.l == 0.0 {
        // the orbit runs through each pole it touches: the azimuth jumps by π
        // there, taken with the sign of the l > 0 limit
        let touching = profile
            .poles
            .iter()
            .filter(|p| (p.position - tp.lower).abs() <= POLE_TOUCH || (p.position - tp.upper).abs() <= POLE_TOUCH)
            .count();
        theta += PI * touching as f64;
    }
    Ok((period, theta))
}

/// `(T, Θ)` of the torus over `c` by the chosen engine.
///
/// The quadrature engine returns `Θ` on the principal sheet (values on the
/// reference ray are the limits from `l > 0`); the flow engine returns the
/// same continuous value.
pub fn reduced_period_rotation(system: &dyn IntegrableSystem, c: EMValue, engine: Engine, opts: &TorusOptions) -> Result<(f64, f64)> {
    let j = check_window(system, c)?;
    let profile = system.profile(c);
    let tp = profile.turning_points(c)?;
    let (t, theta) = match engine {
        Engine::Quadrature => quadrature_engine(system, c, &tp, &opts.quad)?,
        Engine::Flow => {
            let alpha = system.constants().alpha;
            let budget = opts.budget_factor * (1.0 + j.modulus().ln().abs()) / alpha;
            system.flow_return(c, &tp, budget, &opts.ode)?
        }
    };
    // orbits through a regular pole have Θ jumping by 2π across l = 0 with
    // no monodromy behind it; shifting l < 0 by 2π removes the jump
    let regular = profile.poles.iter().filter(|p| p.regular_point).count();
    let shift = if c.l < 0.0 { TAU * regular as f64 } else { 0.0 };
    Ok((t, theta + shift))
}

/// Result of running both engines on one torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheck {
    pub c: EMValue,
    pub quadrature: (f64, f64),
    pub flow: (f64, f64),
    pub rel_period: f64,
    pub rel_rotation: f64,
}

impl CrossCheck {
    pub fn discrepancy(&self) -> f64 {
        self.rel_period.max(self.rel_rotation)
    }
}

/// Runs both engines; `Θ` discrepancies are measured relative to `max(1, |Θ|)`.
pub fn cross_check(system: &dyn IntegrableSystem, c: EMValue, opts: &TorusOptions) -> Result<CrossCheck> {
    let q = reduced_period_rotation(system, c, Engine::Quadrature, opts)?;
    let f = reduced_period_rotation(system, c, Engine::Flow, opts)?;
    Ok(CrossCheck {
        c,
        quadrature: q,
        flow: f,
        rel_period: (q.0 - f.0).abs() / q.0,
        rel_rotation: (q.1 - f.1).abs() / q.1.abs().max(1.0),
    })
}

/// Like [`cross_check`] but fails when the engines disagree beyond `cross_tol`.
pub fn cross_checked(system: &dyn IntegrableSystem, c: EMValue, cross_tol: f64, opts: &TorusOptions) -> Result<CrossCheck> {
    let cc = cross_check(system, c, opts)?;
    if cc.discrepancy() > cross_tol {
        return Err(Error::EngineDisagreement { h: c.h, l: c.l, discrepancy: cc.discrepancy() });
    }
    Ok(cc)
}

/// Period-lattice data of one torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodLatticeSample {
    pub t: f64,
    /// Branch-tracked azimuth increment.
    pub theta: f64,
    pub tau1: f64,
    pub tau2: f64,
    /// Number of `2π` shifts applied to the principal `Θ`.
    pub branch: i64,
}

impl PeriodLatticeSample {
    /// Rotation number `W = Θ/2π`.
    pub fn rotation_number(&self) -> f64 {
        self.theta / TAU
    }

    /// `(ω₁, ω₂) = (2π/T, Θ/T)`
    pub fn frequencies(&self) -> (f64, f64) {
        (TAU / self.t, self.theta / self.t)
    }
}

/// Largest admissible change of `W` between a sample and its branch anchor.
pub const MAX_BRANCH_STEP: f64 = 0.4;

/// Lifts a principal `Θ` to the sheet continuous with `anchor_theta`.
pub fn lift_theta(principal: f64, anchor_theta: Option<f64>) -> Result<(f64, i64)> {
    let Some(anchor) = anchor_theta else {
        return Ok((principal, 0));
    };
    let k = ((anchor - principal) / TAU).round();
    let theta = principal + TAU * k;
    let jump = (theta - anchor) / TAU;
    if jump.abs() > MAX_BRANCH_STEP {
        return Err(Error::BranchJump { jump });
    }
    Ok((theta, k as i64))
}

/// `τ₁ = αT`, `τ₂ = ωT − Θ` on the sheet continuous with `anchor`.
pub fn period_lattice(
    system: &dyn IntegrableSystem,
    c: EMValue,
    anchor: Option<&PeriodLatticeSample>,
    opts: &TorusOptions,
) -> Result<PeriodLatticeSample> {
    let (t, principal) = reduced_period_rotation(system, c, Engine::Quadrature, opts)?;
    let (theta, shift) = lift_theta(principal, anchor.map(|a| a.theta))?;
    let k = system.constants();
    Ok(PeriodLatticeSample {
        t,
        theta,
        tau1: k.alpha * t,
        tau2: k.omega * t - theta,
        branch: shift,
    })
}

/// A lattice sample with its chart position and the argument of `ζ`
/// unwrapped along the same path as `Θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticePoint {
    pub c: EMValue,
    pub j: MomentumValue,
    pub arg: f64,
    pub sample: PeriodLatticeSample,
}

/// Samples the circle `|j| = radius` at `arg = start + k·step` for
/// `k = 0..n`, branch-tracking each point against the last success.
///
/// The first point sits on the principal sheet unless `anchor` is given.
/// Failed points are returned as errors and skipped for tracking.
pub fn ring_sweep(
    system: &dyn IntegrableSystem,
    radius: f64,
    start: f64,
    step: f64,
    n: usize,
    anchor: Option<&PeriodLatticeSample>,
    opts: &TorusOptions,
) -> Vec<Result<LatticePoint>> {
    let mut last = anchor.copied();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let arg = start + step * k as f64;
        let j = MomentumValue::from_polar(radius, arg);
        let c = from_momentum_chart(system, j);
        let res = period_lattice(system, c, last.as_ref(), opts).map(|sample| LatticePoint { c, j, arg, sample });
        if let Ok(p) = &res {
            last = Some(p.sample);
        }
        out.push(res);
    }
    out
}

/// Samples an annulus `[r_in, r_out]` on the principal sheet: `n_radii`
/// log-spaced rings, each with `n_sectors` points at half-step offsets from
/// the reference ray.
pub fn annulus_samples(
    system: &dyn IntegrableSystem,
    r_in: f64,
    r_out: f64,
    n_radii: usize,
    n_sectors: usize,
    opts: &TorusOptions,
) -> Vec<Result<LatticePoint>> {
    let step = TAU / n_sectors as f64;
    let mut out = Vec::with_capacity(n_radii * n_sectors);
    for i in 0..n_radii {
        let r = log_space(r_in, r_out, n_radii, i);
        out.extend(ring_sweep(system, r, 0.5 * step, step, n_sectors, None, opts));
    }
    out
}

pub(crate) fn log_space(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n <= 1 {
        return lo;
    }
    (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()
}

/// Coefficients of `τ₁ ≈ a·(−ln|j|) + σ₁` and `τ₂ ≈ b·arg ζ + σ₂` with
/// linear smooth parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticModel {
    pub log_coeff_tau1: f64,
    pub log_coeff_tau2: f64,
    pub sigma1_0: f64,
    pub sigma2_0: f64,
    pub a0_fit: f64,
    /// `A(0)·σ₁(0) − σ₂(0)`
    pub sigma_0: f64,
    pub residual_tau1: f64,
    pub residual_tau2: f64,
    pub samples: usize,
}

impl AsymptoticModel {
    pub fn residual_norm(&self) -> f64 {
        self.residual_tau1.hypot(self.residual_tau2)
    }
}

/// Least-squares fit of the logarithmic model to branch-consistent samples.
pub fn fit_asymptotic_model(points: &[LatticePoint], a0: f64) -> Result<AsymptoticModel> {
    if points.len() < 8 {
        return Err(Error::InsufficientData("need at least 8 samples"));
    }
    let mut sectors = [false; 8];
    for p in points {
        let s = ((p.j.arg_principal() / TAU) * 8.0) as usize;
        sectors[s.min(7)] = true;
    }
    if sectors.iter().filter(|s| **s).count() < 8 {
        return Err(Error::InsufficientData("samples must cover 8 angular sectors"));
    }
    // τ₂ − arg ζ is single valued; a 2π offset between samples means the
    // inputs came from different sheets.
    let offsets: Vec<f64> = points.iter().map(|p| p.sample.tau2 - p.arg).collect();
    let mean = offsets.iter().sum::<f64>() / offsets.len() as f64;
    if offsets.iter().any(|o| (o - mean).abs() > PI) {
        return Err(Error::InvalidArgument("branch inconsistency among samples"));
    }

    let rows1: Vec<Vec<f64>> = points.iter().map(|p| alloc::vec![-p.j.modulus().ln(), 1.0, p.j.j1, p.j.j2]).collect();
    let y1: Vec<f64> = points.iter().map(|p| p.sample.tau1).collect();
    let rows2: Vec<Vec<f64>> = points.iter().map(|p| alloc::vec![p.arg, 1.0, p.j.j1, p.j.j2]).collect();
    let y2: Vec<f64> = points.iter().map(|p| p.sample.tau2).collect();
    let f1 = least_squares(&rows1, &y1)?;
    let f2 = least_squares(&rows2, &y2)?;
    if f1.condition > 1e10 || f2.condition > 1e10 {
        return Err(Error::IllConditioned("annulus too thin for the fit"));
    }
    let (s1, s2) = (f1.coefficients[1], f2.coefficients[1]);
    Ok(AsymptoticModel {
        log_coeff_tau1: f1.coefficients[0],
        log_coeff_tau2: f2.coefficients[0],
        sigma1_0: s1,
        sigma2_0: s2,
        a0_fit: a0,
        sigma_0: a0 * s1 - s2,
        residual_tau1: f1.residual_norm,
        residual_tau2: f2.residual_norm,
        samples: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{champagne_bottle, spherical_pendulum};

    #[test]
    fn chart_arithmetic() {
        let sys = champagne_bottle(0.5).unwrap();
        let j = to_momentum_chart(&sys, EMValue::new(0.0, 0.0));
        assert_eq!((j.j1, j.j2), (0.0, 0.0));
        let s2 = 2f64.sqrt();
        let j = to_momentum_chart(&sys, EMValue::new(s2, 1.0));
        assert!((j.j1 - (s2 - 0.5) / s2).abs() < 1e-15);
        assert_eq!(j.j2, 1.0);
        let p = spherical_pendulum();
        let j = to_momentum_chart(&p, EMValue::new(0.07, 0.01));
        assert_eq!(j.j1, 0.07);
        let back = from_momentum_chart(&sys, to_momentum_chart(&sys, EMValue::new(0.03, -0.02)));
        assert!((back.h - 0.03).abs() < 1e-15 && (back.l + 0.02).abs() < 1e-15);
    }

    #[test]
    fn lattice_identity() {
        let sys = champagne_bottle(0.5).unwrap();
        let s = period_lattice(&sys, EMValue::new(0.1, 0.05), None, &TorusOptions::default()).unwrap();
        let a0 = sys.constants().a0;
        assert!((TAU * s.rotation_number() - (s.tau1 * a0 - s.tau2)).abs() < 1e-12);
        let (w1, w2) = s.frequencies();
        assert!((w2 / w1 - s.rotation_number()).abs() < 1e-12);
    }

    #[test]
    fn theta_is_odd_in_l_without_rotation() {
        let sys = champagne_bottle(0.0).unwrap();
        let o = TorusOptions::default();
        for &(h, l) in &[(0.1, 0.05), (-0.05, 0.02), (0.02, 0.1)] {
            let (t1, a) = reduced_period_rotation(&sys, EMValue::new(h, l), Engine::Quadrature, &o).unwrap();
            let (t2, b) = reduced_period_rotation(&sys, EMValue::new(h, -l), Engine::Quadrature, &o).unwrap();
            assert!((a + b).abs() < 1e-12);
            assert!((t1 - t2).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_ray_takes_upper_limit() {
        let sys = champagne_bottle(0.0).unwrap();
        let o = TorusOptions::default();
        let (_, on) = reduced_period_rotation(&sys, EMValue::new(0.1, 0.0), Engine::Quadrature, &o).unwrap();
        let (_, above) = reduced_period_rotation(&sys, EMValue::new(0.1, 1e-7), Engine::Quadrature, &o).unwrap();
        assert!((on - PI).abs() < 1e-12);
        assert!((on - above).abs() < 1e-4, "{on} {above}");
    }

    #[test]
    fn principal_sheet_jumps_only_on_the_reference_ray() {
        let o = TorusOptions::default();
        let p = spherical_pendulum();
        let at = |h: f64, l: f64| reduced_period_rotation(&p, EMValue::new(h, l), Engine::Quadrature, &o).unwrap().1;
        assert!((at(-0.05, 1e-7) - at(-0.05, -1e-7)).abs() < 1e-5);
        assert!((at(0.05, 1e-7) - at(0.05, -1e-7) - TAU).abs() < 1e-5);
        // orbits grazing a pole at |l| far below any quadrature resolution
        assert!((at(-0.05, 1e-17) - at(-0.05, 0.0)).abs() < 1e-12);
        assert!((at(0.05, 1e-17) - at(0.05, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn window_errors_are_distinct() {
        let sys = champagne_bottle(0.5).unwrap();
        let o = TorusOptions::default();
        assert!(matches!(
            reduced_period_rotation(&sys, EMValue::new(1e-7, 0.0), Engine::Quadrature, &o),
            Err(Error::TooCloseToFocusFocus { .. })
        ));
        assert!(matches!(
            reduced_period_rotation(&sys, EMValue::new(0.6, 0.0), Engine::Quadrature, &o),
            Err(Error::OutsideWindow { .. })
        ));
    }

    #[test]
    fn lifting() {
        let (t, k) = lift_theta(0.1, Some(TAU + 0.05)).unwrap();
        assert_eq!(k, 1);
        assert!((t - TAU - 0.1).abs() < 1e-15);
        assert!(lift_theta(0.0, Some(0.45 * TAU)).is_err());
    }

    #[test]
    fn recovers_synthetic_model() {
        let mut pts = Vec::new();
        for i in 0..6 {
            let r = log_space(1e-4, 1e-2, 6, i);
            for s in 0..16 {
                let arg = (s as f64 + 0.5) * TAU / 16.0;
                let j = MomentumValue::from_polar(r, arg);
                let tau1 = 2.0 + j.j1 - r.ln();
                let tau2 = -0.3 + 0.5 * j.j2 + arg;
                let sample = PeriodLatticeSample { t: tau1, theta: 0.0, tau1, tau2, branch: 0 };
                pts.push(LatticePoint { c: EMValue::new(0.0, 0.0), j, arg, sample });
            }
        }
        let m = fit_asymptotic_model(&pts, 0.25).unwrap();
        assert!((m.sigma1_0 - 2.0).abs() < 1e-6);
        assert!((m.sigma2_0 + 0.3).abs() < 1e-6);
        assert!((m.log_coeff_tau1 - 1.0).abs() < 1e-9);
        assert!((m.log_coeff_tau2 - 1.0).abs() < 1e-9);
        assert!((m.sigma_0 - (0.25 * 2.0 + 0.3)).abs() < 1e-6);
        assert!(fit_asymptotic_model(&pts[..4], 0.25).is_err());
    }
}
