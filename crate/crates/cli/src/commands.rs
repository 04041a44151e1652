//! Subcommands. Each returns its CSV files and a JSON summary embedding the
//! resolved configuration.

use std::f64::consts::TAU;

use focustwist_core::kolmogorov::{frequency_jacobian_det, FrequencySample};
use focustwist_core::lattice::{cross_check, from_momentum_chart, window_point, CrossCheck, MomentumValue};
use focustwist_core::rotation::{
    extract_level_curve, fit_log_spiral, monodromy_index, rotation_grid_row, CellStatus, GridCell, GridRegion, LevelCurve, Orientation,
    RotationGrid, SpiralFit,
};
use focustwist_core::systems::{eval_constants, turning_points, EMValue, IntegrableSystem};
use focustwist_core::twist::twistless_curve;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{ConfigError, RunConfig};
use crate::output::{csv_bytes, num, par_map, CommandOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("acceptance failed: {0}")]
    Acceptance(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Acceptance(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn numerical(e: focustwist_core::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

fn with_config(cfg: &RunConfig, mut v: Value) -> Value {
    v["config"] = serde_json::to_value(cfg).expect("serialisable config");
    v
}

pub fn constants(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let sys = cfg.build_system()?;
    let k = eval_constants(&*sys).map_err(numerical)?;
    let slope = if k.is_degenerate() { json!("degenerate (omega = 0)") } else { json!(k.twistless_slope()) };
    let summary = json!({
        "alpha": k.alpha,
        "omega": k.omega,
        "lambda": [k.lambda.re, k.lambda.im],
        "A0": k.a0,
        "expected_twistless_slope": slope,
    });
    Ok(CommandOutput { files: vec![], summary: with_config(cfg, summary) })
}

fn mask_name(s: CellStatus) -> &'static str {
    match s {
        CellStatus::Regular => "regular",
        CellStatus::TooClose => "too_close",
        CellStatus::Failed => "failed",
    }
}

/// Annulus grid of `W`, rows evaluated in parallel.
pub fn compute_grid(sys: &dyn IntegrableSystem, cfg: &RunConfig) -> Result<RotationGrid, CliError> {
    let region = GridRegion::Annulus { r_in: cfg.grid_r_in, r_out: cfg.grid_r_out };
    let res = (cfg.grid_radii, cfg.grid_sectors);
    let o = cfg.torus_options();
    let rows: Vec<Vec<GridCell>> = par_map(cfg.jobs, (0..cfg.grid_radii).collect(), |i| rotation_grid_row(sys, region, res, i, &o));
    let grid = RotationGrid::from_rows(region, cfg.grid_sectors, rows);
    if grid.cells.iter().all(|c| c.status == CellStatus::Failed) {
        return Err(CliError::Numerical("every grid cell failed".into()));
    }
    Ok(grid)
}

pub fn grid_csv(grid: &RotationGrid) -> Vec<u8> {
    csv_bytes(
        &["h", "l", "j1", "j2", "W", "branch", "mask"],
        grid.cells.iter().map(|c| {
            vec![num(c.c.h), num(c.c.l), num(c.j.j1), num(c.j.j2), num(c.w), c.branch.to_string(), mask_name(c.status).into()]
        }),
    )
}

pub fn lattice_csv(grid: &RotationGrid) -> Vec<u8> {
    csv_bytes(
        &["h", "l", "T", "Theta", "tau1", "tau2", "branch"],
        grid.cells.iter().filter_map(|c| {
            c.sample.map(|s| vec![num(c.c.h), num(c.c.l), num(s.t), num(s.theta), num(s.tau1), num(s.tau2), s.branch.to_string()])
        }),
    )
}

fn grid_summary(grid: &RotationGrid) -> Value {
    let count = |s: CellStatus| grid.cells.iter().filter(|c| c.status == s).count();
    json!({
        "rows": grid.rows,
        "cols": grid.cols,
        "regular": count(CellStatus::Regular),
        "too_close": count(CellStatus::TooClose),
        "failed": count(CellStatus::Failed),
        "masked_fraction": grid.masked_fraction(),
    })
}

pub fn grid(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let sys = cfg.build_system()?;
    let g = compute_grid(&*sys, cfg)?;
    Ok(CommandOutput {
        files: vec![("grid.csv".into(), grid_csv(&g)), ("lattice.csv".into(), lattice_csv(&g))],
        summary: with_config(cfg, grid_summary(&g)),
    })
}

/// Level of the middle grid node, which every row attains.
pub fn middle_level(grid: &RotationGrid) -> Result<f64, CliError> {
    let w = grid.cell(grid.rows / 2, grid.cols / 2).w;
    if w.is_nan() {
        return Err(CliError::Numerical("middle grid node is masked".into()));
    }
    Ok(w)
}

pub fn spiral_from_grid(sys: &dyn IntegrableSystem, grid: &RotationGrid) -> Result<(LevelCurve, SpiralFit), CliError> {
    let level = middle_level(grid)?;
    let curve = extract_level_curve(grid, level).map_err(numerical)?;
    let fit = fit_log_spiral(&curve, sys.constants().a0).map_err(numerical)?;
    Ok((curve, fit))
}

pub fn spiral(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let sys = cfg.build_system()?;
    let g = compute_grid(&*sys, cfg)?;
    let (curve, fit) = spiral_from_grid(&*sys, &g)?;
    let contour = csv_bytes(
        &["j1", "j2", "ln_rho", "arg"],
        curve.points.iter().map(|p| vec![num(p.j1), num(p.j2), num(p.modulus().ln()), num(p.arg_principal())]),
    );
    let summary = json!({
        "level": fit.level,
        "slope_fit": fit.slope_fit,
        "expected_slope": fit.expected_slope,
        "residual": fit.residual,
        "log_radius_span": fit.log_radius_span,
        "arg_span": fit.arg_span,
        "points": curve.points.len(),
        "touches_mask": curve.touches_mask,
        "grid": grid_summary(&g),
    });
    Ok(CommandOutput { files: vec![("grid.csv".into(), grid_csv(&g)), ("contour.csv".into(), contour)], summary: with_config(cfg, summary) })
}

pub fn monodromy(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let sys = cfg.build_system()?;
    let o = cfg.torus_options();
    let (r, n) = (cfg.monodromy_radius, cfg.monodromy_points);
    let both = par_map(cfg.jobs, vec![Orientation::Positive, Orientation::Negative], |or| {
        monodromy_index(&*sys, EMValue::new(0.0, 0.0), r, n, or, &o)
    });
    let mut it = both.into_iter();
    let index = it.next().unwrap().map_err(numerical)?;
    let reversed = it.next().unwrap().map_err(numerical)?;
    let summary = json!({ "index": index, "reversed_index": reversed, "radius": r, "n_points": n });
    Ok(CommandOutput { files: vec![], summary: with_config(cfg, summary) })
}

pub fn twistless(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let sys = cfg.build_system()?;
    let curve = twistless_curve(&*sys, &cfg.twistless_h, &cfg.torus_options()).map_err(numerical)?;
    if curve.samples.is_empty() {
        return Err(CliError::Numerical("no twistless torus found at any energy".into()));
    }
    let csv = csv_bytes(
        &["h", "l_star", "j1", "j2", "S_residual"],
        curve.samples.iter().map(|s| vec![num(s.h), num(s.l_star), num(s.j.j1), num(s.j.j2), num(s.s_residual)]),
    );
    let failures: Vec<Value> = curve.failures.iter().map(|(h, e)| json!({ "h": h, "error": e.to_string() })).collect();
    let summary = json!({
        "mode": if curve.tangent_slope_fit.is_some() { "transversal" } else { "degenerate" },
        "tangent_slope_fit": curve.tangent_slope_fit,
        "expected_slope": curve.expected_slope,
        "degenerate_ratios": curve.degenerate_ratios,
        "failures": failures,
    });
    Ok(CommandOutput { files: vec![("twistless.csv".into(), csv)], summary: with_config(cfg, summary) })
}

/// Log-spaced samples along the configured ray, from the outer radius inwards.
pub fn kolmogorov_samples(sys: &dyn IntegrableSystem, cfg: &RunConfig, ray: f64) -> Vec<Result<FrequencySample, focustwist_core::Error>> {
    let n = cfg.kolmogorov_samples.max(2);
    let (lo, hi) = (cfg.kolmogorov_r_min.ln(), cfg.kolmogorov_r_max.ln());
    let radii: Vec<f64> = (0..n).map(|i| (hi + (lo - hi) * i as f64 / (n - 1) as f64).exp()).collect();
    let o = cfg.torus_options();
    par_map(cfg.jobs, radii, |r| frequency_jacobian_det(sys, from_momentum_chart(sys, MomentumValue::from_polar(r, ray)), &o))
}

pub fn kolmogorov(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let sys = cfg.build_system()?;
    let samples = kolmogorov_samples(&*sys, cfg, cfg.kolmogorov_ray);
    let ok: Vec<&FrequencySample> = samples.iter().filter_map(|s| s.as_ref().ok()).collect();
    if ok.is_empty() {
        return Err(CliError::Numerical("every frequency sample failed".into()));
    }
    let csv = csv_bytes(
        &["j_mod", "tau1", "det_I", "asymptote", "ratio"],
        ok.iter().map(|s| vec![num(s.j_mod), num(s.tau1), num(s.det_i), num(s.asymptote), num(s.ratio)]),
    );
    let failures: Vec<String> = samples.iter().filter_map(|s| s.as_ref().err().map(|e| e.to_string())).collect();
    let summary = json!({
        "ray_angle": cfg.kolmogorov_ray,
        "samples": ok.len(),
        "all_negative": ok.iter().all(|s| s.det_i < 0.0),
        "innermost_ratio": ok.last().map(|s| s.ratio),
        "failures": failures,
    });
    Ok(CommandOutput { files: vec![("kolmogorov.csv".into(), csv)], summary: with_config(cfg, summary) })
}

/// Seeded regular values: log-uniform `|j|` and uniform `arg ζ` in the
/// window, skipping draws outside the image of the energy-momentum map and
/// the reference ray itself.
pub fn random_regular_values(sys: &dyn IntegrableSystem, n: usize, seed: u64) -> Vec<EMValue> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let c = window_point(sys, rng.gen(), rng.gen());
        if c.l != 0.0 && turning_points(sys, c).is_ok() {
            out.push(c);
        }
    }
    out
}

pub fn cross_checks(sys: &dyn IntegrableSystem, cfg: &RunConfig) -> Vec<Result<CrossCheck, focustwist_core::Error>> {
    let o = cfg.torus_options();
    par_map(cfg.jobs, random_regular_values(sys, cfg.crosscheck_tori, cfg.seed), |c| cross_check(sys, c, &o))
}

pub fn crosscheck(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let sys = cfg.build_system()?;
    let checks = cross_checks(&*sys, cfg);
    let ok: Vec<&CrossCheck> = checks.iter().filter_map(|c| c.as_ref().ok()).collect();
    if ok.is_empty() {
        return Err(CliError::Numerical("every torus failed".into()));
    }
    let csv = csv_bytes(
        &["h", "l", "T_quadrature", "T_flow", "Theta_quadrature", "Theta_flow", "rel_T", "rel_Theta"],
        ok.iter().map(|c| {
            vec![num(c.c.h), num(c.c.l), num(c.quadrature.0), num(c.flow.0), num(c.quadrature.1), num(c.flow.1), num(c.rel_period), num(c.rel_rotation)]
        }),
    );
    let max = |f: fn(&CrossCheck) -> f64| ok.iter().map(|c| f(c)).fold(0.0, f64::max);
    let worst = max(|c| c.discrepancy());
    let failures: Vec<String> = checks.iter().filter_map(|c| c.as_ref().err().map(|e| e.to_string())).collect();
    let summary = json!({
        "tori": ok.len(),
        "max_rel_period": max(|c| c.rel_period),
        "max_rel_rotation": max(|c| c.rel_rotation),
        "max_discrepancy": worst,
        "within_tolerance": worst <= cfg.tol.cross,
        "failures": failures,
    });
    Ok(CommandOutput { files: vec![("crosscheck.csv".into(), csv)], summary: with_config(cfg, summary) })
}

/// Angle of the `k`-th of `n` rays, offset half a step from the reference ray.
pub fn ray_angle(k: usize, n: usize) -> f64 {
    (k as f64 + 0.5) * TAU / n as f64
}
