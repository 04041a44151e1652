//! The acceptance criteria, evaluated for one configured system.
//!
//! Criteria whose radii fall outside the configured window report
//! `insufficient range`; systems without rotation (`ω = 0`) report the
//! twistless criterion in `degenerate mode`.

use focustwist_core::kolmogorov::{mixed_partial_mismatch, scaled_lattice_det};
use focustwist_core::lattice::{annulus_samples, fit_asymptotic_model, from_momentum_chart, period_lattice, MomentumValue};
use focustwist_core::rotation::{log_form_remainder, monodromy_index, Orientation};
use focustwist_core::systems::{EMValue, IntegrableSystem};
use focustwist_core::twist::{tilde_s, tilde_s_gradient_at_origin, twistless_curve, twistless_point};
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::{compute_grid, cross_checks, grid_csv, kolmogorov_samples, ray_angle, spiral_from_grid, CliError};
use crate::config::RunConfig;
use crate::output::par_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "insufficient range")]
    InsufficientRange,
    #[serde(rename = "degenerate mode")]
    DegenerateMode,
}

impl Status {
    /// Degenerate mode is the expected outcome for `ω = 0` and counts as a pass.
    pub fn ok(self) -> bool {
        matches!(self, Status::Pass | Status::DegenerateMode)
    }

    fn from_bool(b: bool) -> Self {
        if b {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::InsufficientRange => "INSUFFICIENT RANGE",
            Status::DegenerateMode => "PASS (degenerate mode)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub system: String,
    pub status: Status,
    pub measured: Value,
}

pub const NAMES: [&str; 9] = [
    "cross-engine oracle",
    "monodromy index",
    "period asymptotics",
    "rotation-number form",
    "spiral level sets",
    "vanishing twist",
    "tilde-S asymptotics",
    "Kolmogorov determinant",
    "determinism",
];

fn system_label(cfg: &RunConfig) -> String {
    match cfg.system.as_str() {
        "pendulum" => "pendulum".into(),
        _ => format!("champagne gamma={}", cfg.gamma),
    }
}

fn covers(sys: &dyn IntegrableSystem, lo: f64, hi: f64) -> bool {
    let w = sys.window();
    w.j_min <= lo && w.j_max >= hi
}

fn report(id: u8, cfg: &RunConfig, status: Status, measured: Value) -> CriterionReport {
    CriterionReport { id, name: NAMES[id as usize - 1], system: system_label(cfg), status, measured }
}

fn insufficient(id: u8, cfg: &RunConfig, lo: f64, hi: f64) -> CriterionReport {
    report(id, cfg, Status::InsufficientRange, json!({ "needs_window": [lo, hi] }))
}

fn at(sys: &dyn IntegrableSystem, r: f64, arg: f64) -> EMValue {
    from_momentum_chart(sys, MomentumValue::from_polar(r, arg))
}

pub fn cross_engine(sys: &dyn IntegrableSystem, cfg: &RunConfig) -> CriterionReport {
    let checks = cross_checks(sys, cfg);
    let failures = checks.iter().filter(|c| c.is_err()).count();
    let worst = checks.iter().filter_map(|c| c.as_ref().ok()).map(|c| c.discrepancy()).fold(0.0, f64::max);
    let status = Status::from_bool(failures == 0 && worst <= cfg.tol.cross);
    report(1, cfg, status, json!({ "tori": checks.len(), "failures": failures, "max_rel_discrepancy": worst, "tolerance": cfg.tol.cross }))
}

pub fn monodromy(sys: &dyn IntegrableSystem, cfg: &RunConfig) -> CriterionReport {
    const RADII: [f64; 2] = [0.05, 0.1];
    if !covers(sys, RADII[0], RADII[1]) {
        return insufficient(2, cfg, RADII[0], RADII[1]);
    }
    let o = cfg.torus_options();
    let cases: Vec<(f64, Orientation)> = RADII.iter().flat_map(|&r| [(r, Orientation::Positive), (r, Orientation::Negative)]).collect();
    let values = par_map(cfg.jobs, cases.clone(), |(r, or)| monodromy_index(sys, EMValue::new(0.0, 0.0), r, cfg.monodromy_points, or, &o));
    let mut ok = true;
    let mut measured = Vec::new();
    for ((r, or), v) in cases.iter().zip(&values) {
        let want = if *or == Orientation::Positive { 1.0 } else { -1.0 };
        let got = v.as_ref().ok().copied();
        ok &= got.is_some_and(|g| (g - want).abs() <= 1e-3);
        measured.push(json!({ "radius": r, "reversed": *or == Orientation::Negative, "index": got }));
    }
    report(2, cfg, Status::from_bool(ok), json!(measured))
}

pub fn period_asymptotics(sys: &dyn IntegrableSystem, cfg: &RunConfig) -> CriterionReport {
    let (lo, hi) = (1e-4, 1e-2);
    if !covers(sys, lo, hi) {
        return insufficient(3, cfg, lo, hi);
    }
    let o = cfg.torus_options();
    let rings = par_map(cfg.jobs, (0..9).collect(), |i| {
        let r = (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / 8.0).exp();
        annulus_samples(sys, r, r, 1, 16, &o)
    });
    let points: Vec<_> = rings.into_iter().flatten().filter_map(Result::ok).collect();
    match fit_asymptotic_model(&points, sys.constants().a0) {
        Ok(m) => {
            let ok = (m.log_coeff_tau1 - 1.0).abs() <= 0.05 && (m.log_coeff_tau2 - 1.0).abs() <= 0.05;
            report(3, cfg, Status::from_bool(ok), json!({ "coeff_tau1": m.log_coeff_tau1, "coeff_tau2": m.log_coeff_tau2, "samples": m.samples }))
        }
        Err(e) => report(3, cfg, Status::Fail, json!({ "error": e.to_string() })),
    }
}

pub fn rotation_form(sys: &dyn IntegrableSystem, cfg: &RunConfig) -> CriterionReport {
    let (lo, hi) = (1e-4, 1e-3);
    if !covers(sys, lo, hi) {
        return insufficient(4, cfg, lo, hi);
    }
    let o = cfg.torus_options();
    let a0 = sys.constants().a0;
    let nodes: Vec<(f64, f64)> =
        (0..5).flat_map(|i| (0..16).map(move |k| ((lo.ln() + (hi.ln() - lo.ln()) * i as f64 / 4.0).exp(), ray_angle(k, 16)))).collect();
    let values = par_map(cfg.jobs, nodes, |(r, arg)| {
        let c = at(sys, r, arg);
        period_lattice(sys, c, None, &o).map(|s| log_form_remainder(s.rotation_number(), MomentumValue::from_polar(r, arg), arg, a0))
    });
    if values.iter().any(|v| v.is_err()) {
        return report(4, cfg, Status::Fail, json!({ "error": "torus failure on the annulus" }));
    }
    let v: Vec<f64> = values.into_iter().map(Result::unwrap).collect();
    let spread = v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    report(4, cfg, Status::from_bool(spread < 0.2), json!({ "spread": spread, "samples": v.len() }))
}

pub fn spiral(sys: &dyn IntegrableSystem, cfg: &RunConfig) -> CriterionReport {
    let (lo, hi) = (1e-4, 1e-2);
    if !covers(sys, lo, hi) {
        return insufficient(5, cfg, lo, hi);
    }
    let mut c = cfg.clone();
    c.grid_r_in = lo;
    c.grid_r_out = hi;
    let fit = compute_grid(sys, &c).and_then(|g| spiral_from_grid(sys, &g));
    match fit {
        Ok((curve, fit)) => {
            let ok = if sys.constants().is_degenerate() {
                fit.slope_fit.abs() <= 0.02
            } else {
                (fit.slope_fit / fit.expected_slope - 1.0).abs() <= 0.1
            };
            report(
                5,
                cfg,
                Status::from_bool(ok),
                json!({ "slope_fit": fit.slope_fit, "expected_slope": fit.expected_slope, "residual": fit.residual, "points": curve.points.len() }),
            )
        }
        Err(e) => report(5, cfg, Status::Fail, json!({ "error": e.to_string() })),
    }
}

pub fn vanishing_twist(sys: &dyn IntegrableSystem, cfg: &RunConfig) -> CriterionReport {
    let (lo, hi) = (1e-3, 0.1);
    if !covers(sys, lo, hi) {
        return insufficient(6, cfg, lo, hi);
    }
    let o = cfg.torus_options();
    let curve = match twistless_curve(sys, &cfg.twistless_h, &o) {
        Ok(c) => c,
        Err(e) => return report(6, cfg, Status::Fail, json!({ "error": e.to_string() })),
    };
    if sys.constants().is_degenerate() {
        // |h|/|l*| must fall as |h| → 0
        let mut by_h: Vec<(f64, f64)> = Vec::new();
        for &(h, r) in &curve.degenerate_ratios {
            match by_h.last_mut() {
                Some(last) if last.0 == h => last.1 = last.1.max(r),
                _ => by_h.push((h, r)),
            }
        }
        let ok = by_h.len() >= 2 && by_h.windows(2).all(|w| w[0].1 < w[1].1);
        let status = if ok { Status::DegenerateMode } else { Status::Fail };
        let without: Vec<f64> = curve.failures.iter().map(|(h, _)| *h).collect();
        return report(6, cfg, status, json!({ "ratios": by_h, "energies_without_roots": without }));
    }
    let hs = [-0.05, -0.02, 0.02, 0.05];
    let unique = par_map(cfg.jobs, hs.to_vec(), |h| twistless_point(sys, h, &o));
    let unique_ok = unique.iter().all(|r| r.is_ok());
    let slope = curve.tangent_slope_fit.unwrap_or(f64::NAN);
    let slope_ok = (slope / curve.expected_slope - 1.0).abs() <= 0.15;
    let roots: Vec<Value> =
        hs.iter().zip(&unique).map(|(h, r)| json!({ "h": h, "l_star": r.as_ref().ok(), "error": r.as_ref().err().map(|e| e.to_string()) })).collect();
    report(6, cfg, Status::from_bool(unique_ok && slope_ok), json!({ "roots": roots, "slope_fit": slope, "expected_slope": curve.expected_slope }))
}

pub fn tilde_s_asymptotics(sys: &dyn IntegrableSystem, cfg: &RunConfig) -> CriterionReport {
    let (lo, hi) = (1e-4, 1e-2);
    if !covers(sys, lo, hi) {
        return insufficient(7, cfg, lo, hi);
    }
    let o = cfg.torus_options();
    let rays: Vec<Vec<f64>> = par_map(cfg.jobs, (0..8).collect(), |k| {
        [1e-2, 1e-3, 1e-4].iter().map(|&r| tilde_s(sys, at(sys, r, ray_angle(k, 8)), &o).map(f64::abs).unwrap_or(f64::NAN)).collect()
    });
    let monotone = rays.iter().all(|v| v[0] > v[1] && v[1] > v[2]);
    let a = sys.constants().a0;
    let expected = [a * a - 1.0, -2.0 * a];
    let norm = expected[0].hypot(expected[1]);
    let grad = tilde_s_gradient_at_origin(sys, 1e-4, &o);
    let grad_ok = grad.as_ref().is_ok_and(|g| {
        [g.0, g.1].iter().zip(expected).all(|(x, e)| {
            // componentwise 10%, measured against the gradient norm where the component vanishes
            let scale = if e != 0.0 { e.abs() } else { norm };
            (x - e).abs() <= 0.1 * scale
        })
    });
    report(
        7,
        cfg,
        Status::from_bool(monotone && grad_ok),
        json!({ "abs_tilde_s_by_ray": rays, "gradient": grad.ok().map(|g| [g.0, g.1]), "expected_gradient": expected }),
    )
}

pub fn kolmogorov(sys: &dyn IntegrableSystem, cfg: &RunConfig) -> CriterionReport {
    let (lo, hi) = (1e-4, 1e-2);
    if !covers(sys, lo, hi) {
        return insufficient(8, cfg, lo, hi);
    }
    let o = cfg.torus_options();
    let mut c = cfg.clone();
    c.kolmogorov_r_min = lo;
    c.kolmogorov_r_max = hi;
    // three decades at the ends and midpoints
    c.kolmogorov_samples = 5;
    let mut negative = true;
    let mut inner_ok = true;
    let mut trend_ok = true;
    let mut evaluated = 0;
    let mut rays = Vec::new();
    for k in 0..4 {
        let samples = kolmogorov_samples(sys, &c, ray_angle(k, 4));
        let ok: Vec<_> = samples.iter().filter_map(|s| s.as_ref().ok()).collect();
        evaluated += ok.len();
        negative &= ok.len() == samples.len() && ok.iter().all(|s| s.det_i < 0.0);
        let dev: Vec<f64> = [0, 2, 4].iter().filter_map(|&i| samples[i].as_ref().ok()).map(|s| (s.ratio - 1.0).abs()).collect();
        inner_ok &= dev.len() == 3 && dev[2] <= 0.3;
        trend_ok &= dev.len() == 3 && dev[0] > dev[1] && dev[1] > dev[2];
        rays.push(json!({ "ray": ray_angle(k, 4), "ratio_deviation_by_decade": dev }));
    }
    let lattice: Vec<(f64, f64)> = par_map(cfg.jobs, (0..4).collect(), |k| {
        let p = at(sys, 1e-3, ray_angle(k, 4));
        (scaled_lattice_det(sys, p, &o).unwrap_or(f64::NAN), mixed_partial_mismatch(sys, p, &o).unwrap_or(f64::NAN))
    });
    let det_ok = lattice.iter().all(|(d, _)| (d + 1.0).abs() <= 0.1);
    let mixed_ok = lattice.iter().all(|(_, m)| *m <= 1e-5);
    report(
        8,
        cfg,
        Status::from_bool(negative && inner_ok && trend_ok && det_ok && mixed_ok),
        json!({
            "evaluated": evaluated,
            "all_negative": negative,
            "rays": rays,
            "scaled_lattice_det": lattice.iter().map(|x| x.0).collect::<Vec<_>>(),
            "mixed_partial_mismatch": lattice.iter().map(|x| x.1).collect::<Vec<_>>(),
        }),
    )
}

/// Grid CSVs rendered with one thread and with several must be identical.
pub fn determinism(sys: &dyn IntegrableSystem, cfg: &RunConfig) -> CriterionReport {
    let mut bytes = Vec::new();
    for jobs in [1, cfg.jobs.max(4)] {
        let mut c = cfg.clone();
        c.jobs = jobs;
        bytes.push(compute_grid(sys, &c).map(|g| grid_csv(&g)).map_err(|e| e.to_string()));
    }
    let ok = bytes[0].is_ok() && bytes[0] == bytes[1];
    report(9, cfg, Status::from_bool(ok), json!({ "bytes": bytes[0].as_ref().map(Vec::len).ok(), "identical": ok }))
}

/// All criteria for the configured system.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<CriterionReport>, CliError> {
    let sys = cfg.build_system()?;
    let sys = &*sys;
    Ok(vec![
        cross_engine(sys, cfg),
        monodromy(sys, cfg),
        period_asymptotics(sys, cfg),
        rotation_form(sys, cfg),
        spiral(sys, cfg),
        vanishing_twist(sys, cfg),
        tilde_s_asymptotics(sys, cfg),
        kolmogorov(sys, cfg),
        determinism(sys, cfg),
    ])
}

pub fn summary(cfg: &RunConfig, reports: &[CriterionReport]) -> Value {
    json!({
        "all_pass": reports.iter().all(|r| r.status.ok()),
        "criteria": reports,
        "config": serde_json::to_value(cfg).expect("serialisable config"),
    })
}
