//! Integrable systems with a focus-focus equilibrium.
//!
//! Phase points are ordered `(x, y, p_x, p_y)`; all `(h, l)` values are
//! measured relative to the focus-focus critical value.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::numerics::{cubic_real_roots, integrate_flow, Crossing, Event, OdeOptions};
use crate::{Error, Result};

/// Point `c = (h, l)` in the image of the energy-momentum map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EMValue {
    pub h: f64,
    pub l: f64,
}

impl EMValue {
    pub const fn new(h: f64, l: f64) -> Self {
        Self { h, l }
    }
}

/// Eigenvalue data `±α ± iω` of the linearisation at the equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocusFocusData {
    pub alpha: f64,
    pub omega: f64,
    pub lambda: Complex64,
    /// `ω/α`
    pub a0: f64,
}

impl FocusFocusData {
    pub fn new(alpha: f64, omega: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(omega >= 0.0) {
            return Err(Error::NotFocusFocus("need alpha > 0 and omega >= 0"));
        }
        Ok(Self { alpha, omega, lambda: Complex64::new(alpha, omega), a0: omega / alpha })
    }

    /// Slope `dh/dj₂` of the twistless curve at the origin, `ω(ω²+α²)/(ω²−α²)`.
    pub fn twistless_slope(&self) -> f64 {
        let (a2, w2) = (self.alpha * self.alpha, self.omega * self.omega);
        self.omega * (w2 + a2) / (w2 - a2)
    }

    pub fn is_degenerate(&self) -> bool {
        self.omega == 0.0
    }
}

/// Annulus `j_min ≤ |j| ≤ j_max` in the momentum chart where tori are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularWindow {
    pub j_min: f64,
    pub j_max: f64,
}

/// S¹-reduced radial dynamics `ẋ² = P(x)` with cubic `P`, and the angular
/// rate `φ̇ = constant + Σ wₖ / |x − pₖ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedProfile {
    /// `[c3, c2, c1, c0]`
    pub cubic: [f64; 4],
    /// Physically admissible coordinate range.
    pub domain: (f64, f64),
    pub rate_constant: f64,
    pub poles: Vec<Pole>,
}

/// Singular point of the angular rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Pole {
    pub position: f64,
    /// Weight of `1/|x − position|` in the rate; vanishes with `l`.
    pub weight: f64,
    /// Coefficients of `w ↦ P(position + w)`, formed analytically so that
    /// roots close to the pole keep their relative precision.
    pub local_cubic: [f64; 4],
    /// The flow is regular there and only the angle coordinate degenerates,
    /// as at the lower pole of a sphere.
    pub regular_point: bool,
}

/// A coordinate stored as `base + offset`, where `base` is exact (a pole or
/// zero); differences between nearby points are then free of cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchored {
    pub base: f64,
    pub offset: f64,
}

impl Anchored {
    pub fn plain(x: f64) -> Self {
        Self { base: 0.0, offset: x }
    }

    pub fn value(&self) -> f64 {
        self.base + self.offset
    }

    pub fn minus(&self, other: &Anchored) -> f64 {
        (self.base - other.base) + (self.offset - other.offset)
    }
}

/// Adjacent simple roots bounding the reduced orbit, plus the remaining root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoints {
    pub lower: f64,
    pub upper: f64,
    pub outer: f64,
    pub lower_at: Anchored,
    pub upper_at: Anchored,
    pub outer_at: Anchored,
}

const ROOT_DEGENERACY_TOL: f64 = 1e-9;
const DOMAIN_SLACK: f64 = 1e-12;
const POLE_NEIGHBOURHOOD: f64 = 1e-2;

impl ReducedProfile {
    pub fn eval(&self, x: f64) -> f64 {
        let [c3, c2, c1, c0] = self.cubic;
        ((c3 * x + c2) * x + c1) * x + c0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let [c3, c2, c1, _] = self.cubic;
        (3.0 * c3 * x + 2.0 * c2) * x + c1
    }

    pub fn rate(&self, x: f64) -> f64 {
        self.rate_constant + self.poles.iter().map(|p| p.weight / (x - p.position).abs()).sum::<f64>()
    }

    /// Re-expresses a root relative to a nearby pole, Newton-refined on the
    /// pole's local cubic.
    fn anchor(&self, x: f64) -> Anchored {
        let Some(pole) = self
            .poles
            .iter()
            .filter(|p| (x - p.position).abs() < POLE_NEIGHBOURHOOD)
            .min_by(|a, b| (x - a.position).abs().total_cmp(&(x - b.position).abs()))
        else {
            return Anchored::plain(x);
        };
        let [c3, c2, c1, c0] = pole.local_cubic;
        let mut w = x - pole.position;
        for _ in 0..8 {
            let f = ((c3 * w + c2) * w + c1) * w + c0;
            let d = (3.0 * c3 * w + 2.0 * c2) * w + c1;
            if d == 0.0 {
                break;
            }
            let next = w - f / d;
            if !next.is_finite() || next == w {
                break;
            }
            w = next;
        }
        Anchored { base: pole.position, offset: w }
    }

    /// The finite interval inside the domain on which `P > 0`.
    pub fn turning_points(&self, c: EMValue) -> Result<TurningPoints> {
        let [c3, c2, c1, c0] = self.cubic;
        let (r, n) = cubic_real_roots(c3, c2, c1, c0);
        if n < 3 {
            return Err(Error::OutsideWindow { h: c.h, l: c.l, reason: "no classically allowed region" });
        }
        // P → sign(c3)·∞ as x → ∞, so the bounded positive interval is
        // (r1, r2) for c3 < 0 and (r0, r1) for c3 > 0.
        let (lower, upper, outer) = if c3 < 0.0 { (r[1], r[2], r[0]) } else { (r[0], r[1], r[2]) };
        let tp = TurningPoints {
            lower,
            upper,
            outer,
            lower_at: self.anchor(lower),
            upper_at: self.anchor(upper),
            outer_at: self.anchor(outer),
        };
        let (lo, hi) = self.domain;
        if tp.lower < lo - DOMAIN_SLACK || tp.upper > hi + DOMAIN_SLACK {
            return Err(Error::OutsideWindow { h: c.h, l: c.l, reason: "allowed region leaves the domain" });
        }
        let scale = c3.abs().max(c2.abs()).max(c1.abs());
        if self.derivative(tp.lower).abs() <= ROOT_DEGENERACY_TOL * scale
            || self.derivative(tp.upper).abs() <= ROOT_DEGENERACY_TOL * scale
            || tp.upper - tp.lower <= ROOT_DEGENERACY_TOL
        {
            return Err(Error::DegenerateTurningPoints { h: c.h, l: c.l });
        }
        Ok(TurningPoints { lower: tp.lower.max(lo), upper: tp.upper.min(hi), ..tp })
    }
}

/// A Liouville-integrable system `F = (H, L)` with a focus-focus point and an
/// S¹ action generated by `L`.
pub trait IntegrableSystem: Send + Sync {
    fn name(&self) -> &str;
    fn hamiltonian(&self, p: &[f64; 4]) -> f64;
    fn second_integral(&self, p: &[f64; 4]) -> f64;
    fn grad_hamiltonian(&self, p: &[f64; 4]) -> [f64; 4];
    fn grad_second_integral(&self, p: &[f64; 4]) -> [f64; 4];
    fn equilibrium(&self) -> [f64; 4];
    /// Hessian of `H` at the equilibrium.
    fn hessian_at_equilibrium(&self) -> [[f64; 4]; 4];
    fn constants(&self) -> FocusFocusData;
    fn window(&self) -> RegularWindow;
    fn profile(&self, c: EMValue) -> ReducedProfile;
    /// Map from the profile coordinate to the radial quantity reported to users.
    fn radial(&self, x: f64) -> f64 {
        x
    }
    /// First-return time and unwrapped azimuth increment by integrating the
    /// full flow. Seeds sit at the midpoint of the reduced interval, away from
    /// the coordinate poles where turning points are ill-conditioned.
    fn flow_return(&self, c: EMValue, tp: &TurningPoints, budget: f64, opts: &OdeOptions) -> Result<(f64, f64)>;
    /// A phase point near the equilibrium from coordinates in `[-1, 1]⁴`.
    fn sample_phase_point(&self, u: [f64; 4]) -> [f64; 4];

    fn vector_field(&self, p: &[f64; 4]) -> [f64; 4] {
        let g = self.grad_hamiltonian(p);
        [g[2], g[3], -g[0], -g[1]]
    }

    fn poisson_bracket(&self, p: &[f64; 4]) -> f64 {
        let dh = self.grad_hamiltonian(p);
        let dl = self.grad_second_integral(p);
        dh[0] * dl[2] + dh[1] * dl[3] - dh[2] * dl[0] - dh[3] * dl[1]
    }
}

/// Focus-focus constants from the Hessian at the equilibrium.
///
/// The eigenvalues `λ` of `J·d²H` satisfy `μ² − (tr M²/2) μ + det M = 0` with
/// `μ = λ²`, so only similarity invariants of `M` enter.
pub fn focus_focus_from_hessian(hessian: &[[f64; 4]; 4]) -> Result<FocusFocusData> {
    let hess = Matrix4::from_fn(|i, j| hessian[i][j]);
    let mut jmat = Matrix4::zeros();
    jmat[(0, 2)] = 1.0;
    jmat[(1, 3)] = 1.0;
    jmat[(2, 0)] = -1.0;
    jmat[(3, 1)] = -1.0;
    let m = jmat * hess;
    let scale = hess.abs().max().max(f64::MIN_POSITIVE);
    let tol = 1e-8;
    let m3 = m * m * m;
    if m.trace().abs() > tol * scale || m3.trace().abs() > tol * scale.powi(3) {
        return Err(Error::NotFocusFocus("linearisation is not Hamiltonian"));
    }
    let half_tr2 = 0.5 * (m * m).trace();
    let det = m.determinant();
    let disc = half_tr2 * half_tr2 - 4.0 * det;
    let s2 = scale.powi(4);
    if disc < -tol * s2 {
        let mu = Complex64::new(0.5 * half_tr2, 0.5 * (-disc).sqrt());
        let lambda = mu.sqrt();
        FocusFocusData::new(lambda.re.abs(), lambda.im.abs())
    } else if disc.abs() <= tol * s2 {
        let mu = 0.5 * half_tr2;
        if mu > 0.0 {
            FocusFocusData::new(mu.sqrt(), 0.0)
        } else {
            Err(Error::NotFocusFocus("eigenvalues are not hyperbolic/loxodromic"))
        }
    } else {
        Err(Error::NotFocusFocus("two distinct real eigenvalue pairs"))
    }
}

/// `eval_constants`: focus-focus data of a system from its Hessian.
pub fn eval_constants(system: &dyn IntegrableSystem) -> Result<FocusFocusData> {
    focus_focus_from_hessian(&system.hessian_at_equilibrium())
}

/// Turning points reported in the system's radial coordinate.
pub fn turning_points(system: &dyn IntegrableSystem, c: EMValue) -> Result<(f64, f64)> {
    let tp = system.profile(c).turning_points(c)?;
    Ok((system.radial(tp.lower), system.radial(tp.upper)))
}

fn first_return<F, const N: usize>(
    field: F,
    seed: [f64; N],
    section: &dyn Fn(&[f64; N]) -> f64,
    azimuth: &dyn Fn(&[f64; N]) -> f64,
    budget: f64,
    opts: &OdeOptions,
) -> Result<(f64, f64)>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    // measured from the seed so the start is an exact zero, never a crossing
    let g0 = section(&seed);
    let shifted = |y: &[f64; N]| section(y) - g0;
    let events = [Event { function: &shifted, crossing: Crossing::Rising, stop_after: Some(1) }];
    let opts = OdeOptions { record_samples: true, ..*opts };
    let traj = integrate_flow(field, seed, budget, &events, &opts)?;
    let hit = traj.events[0];
    let unwrap = |from: f64, to: f64| {
        let mut d = to - from;
        while d > PI {
            d -= 2.0 * PI;
        }
        while d <= -PI {
            d += 2.0 * PI;
        }
        d
    };
    let mut theta = 0.0;
    let mut prev = azimuth(&seed);
    for (t, s) in traj.times.iter().zip(&traj.states).skip(1) {
        if *t >= hit.time {
            break;
        }
        let a = azimuth(s);
        theta += unwrap(prev, a);
        prev = a;
    }
    theta += unwrap(prev, azimuth(&hit.state));
    Ok((hit.time, theta))
}

/// The rotating champagne bottle
/// `H = |p|²/2 + γ(x p_y − y p_x) − |q|² + |q|⁴`, `L = ±(x p_y − y p_x)`.
///
/// `L` is oriented so that `H = … + |γ| L`, which keeps `ω = |γ| ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChampagneBottle {
    gamma: f64,
    orientation: f64,
    constants: FocusFocusData,
    window: RegularWindow,
}

pub fn champagne_bottle(gamma: f64) -> Result<ChampagneBottle> {
    if !(gamma.abs() < 2.0) {
        return Err(Error::InvalidArgument("champagne bottle requires |gamma| < 2"));
    }
    let mut sys = ChampagneBottle {
        gamma,
        orientation: if gamma < 0.0 { -1.0 } else { 1.0 },
        constants: FocusFocusData::new(1.0, 0.0)?,
        window: RegularWindow { j_min: 1e-5, j_max: 0.3 },
    };
    sys.constants = eval_constants(&sys)?;
    Ok(sys)
}

impl ChampagneBottle {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_window(mut self, window: RegularWindow) -> Self {
        self.window = window;
        self
    }

    /// `ṙ² = 2(h − γl) − l²/r² + 2r² − 2r⁴`
    pub fn radial_profile(&self, c: EMValue, r: f64) -> f64 {
        2.0 * (c.h - self.gamma.abs() * c.l) - c.l * c.l / (r * r) + 2.0 * r * r - 2.0 * r.powi(4)
    }
}

impl IntegrableSystem for ChampagneBottle {
    fn name(&self) -> &str {
        "champagne"
    }

    fn hamiltonian(&self, p: &[f64; 4]) -> f64 {
        let q2 = p[0] * p[0] + p[1] * p[1];
        0.5 * (p[2] * p[2] + p[3] * p[3]) + self.gamma * (p[0] * p[3] - p[1] * p[2]) - q2 + q2 * q2
    }

    fn second_integral(&self, p: &[f64; 4]) -> f64 {
        self.orientation * (p[0] * p[3] - p[1] * p[2])
    }

    fn grad_hamiltonian(&self, p: &[f64; 4]) -> [f64; 4] {
        let q2 = p[0] * p[0] + p[1] * p[1];
        let radial = -2.0 + 4.0 * q2;
        [
            self.gamma * p[3] + radial * p[0],
            -self.gamma * p[2] + radial * p[1],
            p[2] - self.gamma * p[1],
            p[3] + self.gamma * p[0],
        ]
    }

    fn grad_second_integral(&self, p: &[f64; 4]) -> [f64; 4] {
        let o = self.orientation;
        [o * p[3], -o * p[2], -o * p[1], o * p[0]]
    }

    fn equilibrium(&self) -> [f64; 4] {
        [0.0; 4]
    }

    fn hessian_at_equilibrium(&self) -> [[f64; 4]; 4] {
        let g = self.gamma;
        [[-2.0, 0.0, 0.0, g], [0.0, -2.0, -g, 0.0], [0.0, -g, 1.0, 0.0], [g, 0.0, 0.0, 1.0]]
    }

    fn constants(&self) -> FocusFocusData {
        self.constants
    }

    fn window(&self) -> RegularWindow {
        self.window
    }

    /// In `s = r²`: `ṡ² = 8(h − |γ|l)s − 4l² + 8s² − 8s³`, `φ̇ = l/s + |γ|`.
    fn profile(&self, c: EMValue) -> ReducedProfile {
        let g = self.gamma.abs();
        ReducedProfile {
            cubic: [-8.0, 8.0, 8.0 * (c.h - g * c.l), -4.0 * c.l * c.l],
            domain: (0.0, f64::INFINITY),
            rate_constant: g,
            poles: alloc::vec![Pole {
                position: 0.0,
                weight: c.l,
                local_cubic: [-8.0, 8.0, 8.0 * (c.h - g * c.l), -4.0 * c.l * c.l],
                regular_point: false,
            }],
        }
    }

    fn radial(&self, s: f64) -> f64 {
        s.max(0.0).sqrt()
    }

    fn flow_return(&self, c: EMValue, tp: &TurningPoints, budget: f64, opts: &OdeOptions) -> Result<(f64, f64)> {
        if c.l == 0.0 && tp.lower <= 0.0 {
            return Err(Error::InvalidArgument("flow engine needs l != 0 (orbit through the centre)"));
        }
        let sm = 0.5 * (tp.lower + tp.upper);
        let r = sm.sqrt();
        // ṙ = √Q(s)/(2r) on the outward leg; L = o·x·p_y on y = 0
        let rdot = self.profile(c).eval(sm).max(0.0).sqrt() / (2.0 * r);
        let seed = [r, 0.0, rdot, self.orientation * c.l / r];
        let section = move |y: &[f64; 4]| y[0] * y[0] + y[1] * y[1] - sm;
        let azimuth = |y: &[f64; 4]| self.orientation * y[1].atan2(y[0]);
        first_return(|_t, y| self.vector_field(y), seed, &section, &azimuth, budget, opts)
    }

    fn sample_phase_point(&self, u: [f64; 4]) -> [f64; 4] {
        u
    }
}

/// Spherical pendulum of unit length and gravity, linearised about the
/// upright equilibrium. `h = E − 1` so the focus-focus value sits at `(0, 0)`.
///
/// The 4-dimensional chart is the graph `z = √(1 − x² − y²)` over the upper
/// hemisphere; the flow engine integrates the constrained motion in ℝ³.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalPendulum {
    constants: FocusFocusData,
    window: RegularWindow,
}

pub fn spherical_pendulum() -> SphericalPendulum {
    let mut sys = SphericalPendulum {
        constants: FocusFocusData::new(1.0, 0.0).expect("valid constants"),
        window: RegularWindow { j_min: 1e-5, j_max: 0.2 },
    };
    sys.constants = eval_constants(&sys).expect("upright pendulum is focus-focus");
    sys
}

impl SphericalPendulum {
    pub fn with_window(mut self, window: RegularWindow) -> Self {
        self.window = window;
        self
    }
}

impl IntegrableSystem for SphericalPendulum {
    fn name(&self) -> &str {
        "pendulum"
    }

    fn hamiltonian(&self, p: &[f64; 4]) -> f64 {
        let q2 = p[0] * p[0] + p[1] * p[1];
        let qp = p[0] * p[2] + p[1] * p[3];
        0.5 * (p[2] * p[2] + p[3] * p[3] - qp * qp) + (1.0 - q2).sqrt() - 1.0
    }

    fn second_integral(&self, p: &[f64; 4]) -> f64 {
        p[0] * p[3] - p[1] * p[2]
    }

    fn grad_hamiltonian(&self, p: &[f64; 4]) -> [f64; 4] {
        let z = (1.0 - p[0] * p[0] - p[1] * p[1]).sqrt();
        let qp = p[0] * p[2] + p[1] * p[3];
        [
            -qp * p[2] - p[0] / z,
            -qp * p[3] - p[1] / z,
            p[2] - qp * p[0],
            p[3] - qp * p[1],
        ]
    }

    fn grad_second_integral(&self, p: &[f64; 4]) -> [f64; 4] {
        [p[3], -p[2], -p[1], p[0]]
    }

    fn equilibrium(&self) -> [f64; 4] {
        [0.0; 4]
    }

    fn hessian_at_equilibrium(&self) -> [[f64; 4]; 4] {
        [[-1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
    }

    fn constants(&self) -> FocusFocusData {
        self.constants
    }

    fn window(&self) -> RegularWindow {
        self.window
    }

    /// `ż² = 2(E − z)(1 − z²) − l²`, `φ̇ = l/(1 − z²)` with `E = h + 1`.
    fn profile(&self, c: EMValue) -> ReducedProfile {
        let e = c.h + 1.0;
        ReducedProfile {
            cubic: [2.0, -2.0 * e, -2.0, 2.0 * e - c.l * c.l],
            domain: (-1.0, 1.0),
            rate_constant: 0.0,
            poles: alloc::vec![
                // w = z − 1: 2w³ + (4 − 2h)w² − 4h·w − l²
                Pole {
                    position: 1.0,
                    weight: 0.5 * c.l,
                    local_cubic: [2.0, 4.0 - 2.0 * c.h, -4.0 * c.h, -c.l * c.l],
                    regular_point: false,
                },
                // w = z + 1: 2w³ − 2(E + 3)w² + 4(E + 1)w − l²
                Pole {
                    position: -1.0,
                    weight: 0.5 * c.l,
                    local_cubic: [2.0, -2.0 * (e + 3.0), 4.0 * (e + 1.0), -c.l * c.l],
                    regular_point: true,
                },
            ],
        }
    }

    fn flow_return(&self, c: EMValue, tp: &TurningPoints, budget: f64, opts: &OdeOptions) -> Result<(f64, f64)> {
        let z = 0.5 * (tp.lower + tp.upper);
        let rho = (1.0 - z * z).sqrt();
        let zdot = self.profile(c).eval(z).max(0.0).sqrt();
        // position (ρ, 0, z); horizontal radial speed −z·ż/ρ, azimuthal speed l/ρ
        let seed = [rho, 0.0, z, -z * zdot / rho, c.l / rho, zdot];
        let field = |_t: f64, s: &[f64; 6]| -> [f64; 6] {
            let q2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
            let v2 = s[3] * s[3] + s[4] * s[4] + s[5] * s[5];
            let mu = (s[2] - v2) / q2;
            [s[3], s[4], s[5], mu * s[0], mu * s[1], -1.0 + mu * s[2]]
        };
        let section = move |s: &[f64; 6]| s[2] - z;
        let azimuth = |s: &[f64; 6]| s[1].atan2(s[0]);
        first_return(field, seed, &section, &azimuth, budget, opts)
    }

    fn sample_phase_point(&self, u: [f64; 4]) -> [f64; 4] {
        [0.6 * u[0], 0.6 * u[1], u[2], u[3]]
    }
}

/// Built-in system selected by name.
pub fn builtin(name: &str, gamma: f64) -> Result<Box<dyn IntegrableSystem>> {
    match name {
        "champagne" => Ok(Box::new(champagne_bottle(gamma)?)),
        "pendulum" => Ok(Box::new(spherical_pendulum())),
        _ => Err(Error::InvalidArgument("unknown system (expected champagne or pendulum)")),
    }
}
