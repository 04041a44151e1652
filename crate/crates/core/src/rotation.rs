//! Rotation numbers on a fixed sheet, monodromy, level curves of `W`.
//!
//! Every grid row and loop starts on the principal sheet at the reference
//! ray `arg ζ = 0` and is continued by [`lift_theta`](crate::lattice::lift_theta).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::{from_momentum_chart, log_space, period_lattice, MomentumValue, PeriodLatticeSample, TorusOptions};
use crate::numerics::least_squares;
use crate::systems::{EMValue, IntegrableSystem};
use crate::{Error, Result};

/// `W = Θ/2π` on the sheet continuous with `anchor` (principal sheet if `None`).
pub fn rotation_number(
    system: &dyn IntegrableSystem,
    c: EMValue,
    anchor: Option<&PeriodLatticeSample>,
    opts: &TorusOptions,
) -> Result<f64> {
    period_lattice(system, c, anchor, opts).map(|s| s.rotation_number())
}

/// `2πW + A(0)·ln|j| + arg ζ`, bounded near the focus-focus value.
pub fn log_form_remainder(w: f64, j: MomentumValue, arg: f64, a0: f64) -> f64 {
    TAU * w + a0 * j.modulus().ln() + arg
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridRegion {
    /// Rows are log-spaced radii in `[r_in, r_out]`, columns the arguments
    /// `2πk/n` of the momentum chart.
    Annulus { r_in: f64, r_out: f64 },
    /// Rows are values of `l`, columns values of `h`, both inclusive.
    Rectangle { h: (f64, f64), l: (f64, f64) },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Regular,
    TooClose,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub c: EMValue,
    pub j: MomentumValue,
    /// Grid-plane coordinates: `(ln ρ, arg)` on an annulus, `(l, h)` on a rectangle.
    pub row_coord: f64,
    pub col_coord: f64,
    /// `NaN` unless `status` is `Regular`.
    pub w: f64,
    pub branch: i64,
    pub status: CellStatus,
    pub sample: Option<PeriodLatticeSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationGrid {
    pub region: GridRegion,
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub cells: Vec<GridCell>,
}

impl RotationGrid {
    pub fn cell(&self, row: usize, col: usize) -> &GridCell {
        &self.cells[row * self.cols + col]
    }

    /// Assembles a grid from rows produced by [`rotation_grid_row`].
    pub fn from_rows(region: GridRegion, cols: usize, rows: Vec<Vec<GridCell>>) -> Self {
        let n = rows.len();
        Self { region, rows: n, cols, cells: rows.into_iter().flatten().collect() }
    }

    pub fn masked_fraction(&self) -> f64 {
        let masked = self.cells.iter().filter(|c| c.status != CellStatus::Regular).count();
        masked as f64 / self.cells.len() as f64
    }
}

fn grid_node(system: &dyn IntegrableSystem, region: GridRegion, rows: usize, cols: usize, i: usize, k: usize) -> (EMValue, MomentumValue, f64, f64) {
    match region {
        GridRegion::Annulus { r_in, r_out } => {
            let r = log_space(r_in, r_out, rows, i);
            let arg = TAU * k as f64 / cols as f64;
            let j = MomentumValue::from_polar(r, arg);
            let j = if k == 0 { MomentumValue { j1: r, j2: 0.0 } } else { j };
            (from_momentum_chart(system, j), j, r.ln(), arg)
        }
        GridRegion::Rectangle { h, l } => {
            let lin = |(a, b): (f64, f64), n: usize, i: usize| if n <= 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 };
            let c = EMValue::new(lin(h, cols, k), lin(l, rows, i));
            (c, crate::lattice::to_momentum_chart(system, c), c.l, c.h)
        }
    }
}

/// One grid row, anchored on the principal sheet at its first regular
/// cell and continued along the row.
///
/// A failure of the anchor marks the whole row as failed. Later failures
/// are recorded per cell; tracking resumes from the last success.
pub fn rotation_grid_row(
    system: &dyn IntegrableSystem,
    region: GridRegion,
    resolution: (usize, usize),
    row: usize,
    opts: &TorusOptions,
) -> Vec<GridCell> {
    let (rows, cols) = resolution;
    let mut out = Vec::with_capacity(cols);
    let mut last: Option<PeriodLatticeSample> = None;
    for k in 0..cols {
        let (c, j, row_coord, col_coord) = grid_node(system, region, rows, cols, row, k);
        let mut cell = GridCell { c, j, row_coord, col_coord, w: f64::NAN, branch: 0, status: CellStatus::Failed, sample: None };
        match period_lattice(system, c, last.as_ref(), opts) {
            Ok(s) => {
                cell.w = s.rotation_number();
                cell.branch = s.branch;
                cell.status = CellStatus::Regular;
                cell.sample = Some(s);
                last = Some(s);
            }
            Err(Error::TooCloseToFocusFocus { .. }) => cell.status = CellStatus::TooClose,
            Err(_) if last.is_none() => {
                out.push(cell);
                for k in k + 1..cols {
                    let (c, j, row_coord, col_coord) = grid_node(system, region, rows, cols, row, k);
                    out.push(GridCell { c, j, row_coord, col_coord, w: f64::NAN, branch: 0, status: CellStatus::Failed, sample: None });
                }
                for c in out.iter_mut() {
                    c.status = CellStatus::Failed;
                }
                return out;
            }
            Err(_) => {}
        }
        out.push(cell);
    }
    out
}

/// Branch-consistent `W` over `region` with `resolution = (rows, cols)`.
pub fn rotation_grid(system: &dyn IntegrableSystem, region: GridRegion, resolution: (usize, usize), opts: &TorusOptions) -> Result<RotationGrid> {
    let (rows, cols) = resolution;
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 rows and 2 columns"));
    }
    let all = (0..rows).map(|i| rotation_grid_row(system, region, resolution, i, opts)).collect();
    Ok(RotationGrid::from_rows(region, cols, all))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Positive,
    Negative,
}

/// Lattice-basis change after transporting around the circle of the given
/// radius about `center` in the momentum chart.
///
/// `W` decreases by one on a positively oriented loop around a simple
/// focus-focus value while `τ₂` grows by `2π`; the returned index is that
/// growth over `2π`, i.e. `−ΔW`.
pub fn monodromy_index(
    system: &dyn IntegrableSystem,
    center: EMValue,
    radius: f64,
    n_points: usize,
    orientation: Orientation,
    opts: &TorusOptions,
) -> Result<f64> {
    if n_points < 64 {
        return Err(Error::InvalidArgument("monodromy loop needs at least 64 points"));
    }
    let j0 = crate::lattice::to_momentum_chart(system, center);
    let dir = match orientation {
        Orientation::Positive => 1.0,
        Orientation::Negative => -1.0,
    };
    let mut first: Option<PeriodLatticeSample> = None;
    let mut last: Option<PeriodLatticeSample> = None;
    for k in 0..=n_points {
        let arg = dir * TAU * k as f64 / n_points as f64;
        let d = MomentumValue::from_polar(radius, arg);
        let j = MomentumValue { j1: j0.j1 + d.j1, j2: j0.j2 + d.j2 };
        let s = period_lattice(system, from_momentum_chart(system, j), last.as_ref(), opts)?;
        first.get_or_insert(s);
        last = Some(s);
    }
    let (a, b) = (first.unwrap(), last.unwrap());
    Ok(a.rotation_number() - b.rotation_number())
}

/// Contour of `W` in the momentum chart.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCurve {
    pub level: f64,
    pub points: Vec<MomentumValue>,
    /// The contour ran into a masked or failed cell and may be partial.
    pub touches_mask: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EdgeId {
    // between (row, col) and (row, col + 1)
    Along(usize, usize),
    // between (row, col) and (row + 1, col)
    Across(usize, usize),
}

/// Marching squares on the grid plane with linear interpolation.
///
/// Only cells whose four corners are regular contribute. The longest
/// connected piece is returned.
pub fn extract_level_curve(grid: &RotationGrid, level: f64) -> Result<LevelCurve> {
    let regular = |i: usize, k: usize| grid.cell(i, k).status == CellStatus::Regular;
    let val = |i: usize, k: usize| grid.cell(i, k).w;
    let point_on = |e: EdgeId| -> MomentumValue {
        let (pa, pb) = match e {
            EdgeId::Along(i, k) => (grid.cell(i, k), grid.cell(i, k + 1)),
            EdgeId::Across(i, k) => (grid.cell(i, k), grid.cell(i + 1, k)),
        };
        let t = (level - pa.w) / (pb.w - pa.w);
        let mix = |a: f64, b: f64| a + t * (b - a);
        match grid.region {
            GridRegion::Annulus { .. } => {
                MomentumValue::from_polar(mix(pa.row_coord, pb.row_coord).exp(), mix(pa.col_coord, pb.col_coord))
            }
            // the chart map is affine in (h, l)
            GridRegion::Rectangle { .. } => MomentumValue { j1: mix(pa.j.j1, pb.j.j1), j2: mix(pa.j.j2, pb.j.j2) },
        }
    };

    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    let mut touches_mask = false;
    for i in 0..grid.rows - 1 {
        for k in 0..grid.cols - 1 {
            let corners = [(i, k), (i, k + 1), (i + 1, k + 1), (i + 1, k)];
            if !corners.iter().all(|&(a, b)| regular(a, b)) {
                let vals: Vec<f64> = corners.iter().filter(|&&(a, b)| regular(a, b)).map(|&(a, b)| val(a, b)).collect();
                let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let masked_neighbour = corners.iter().any(|&(a, b)| !regular(a, b));
                if masked_neighbour && !vals.is_empty() && (lo - level) * (hi - level) <= 0.0 {
                    touches_mask = true;
                }
                continue;
            }
            let edges = [EdgeId::Along(i, k), EdgeId::Across(i, k + 1), EdgeId::Along(i + 1, k), EdgeId::Across(i, k)];
            let above: Vec<bool> = corners.iter().map(|&(a, b)| val(a, b) >= level).collect();
            let crossed: Vec<EdgeId> = (0..4).filter(|&e| above[e] != above[(e + 1) % 4]).map(|e| edges[e]).collect();
            match crossed.len() {
                2 => segments.push((crossed[0], crossed[1])),
                4 => {
                    let centre = corners.iter().map(|&(a, b)| val(a, b)).sum::<f64>() / 4.0;
                    // pair each crossing with its neighbour on the side the centre agrees with
                    if (centre >= level) == above[0] {
                        segments.push((crossed[0], crossed[3]));
                        segments.push((crossed[1], crossed[2]));
                    } else {
                        segments.push((crossed[0], crossed[1]));
                        segments.push((crossed[2], crossed[3]));
                    }
                }
                _ => {}
            }
        }
    }
    if segments.is_empty() {
        return Err(Error::LevelNotAttained { level });
    }

    let mut by_edge: BTreeMap<EdgeId, Vec<usize>> = BTreeMap::new();
    for (n, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(n);
        by_edge.entry(b).or_default().push(n);
    }
    let mut used = alloc::vec![false; segments.len()];
    let mut best: Vec<EdgeId> = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut chain = alloc::collections::VecDeque::from([a, b]);
        for forward in [true, false] {
            loop {
                let end = if forward { *chain.back().unwrap() } else { *chain.front().unwrap() };
                let Some(&next) = by_edge[&end].iter().find(|&&n| !used[n]) else { break };
                used[next] = true;
                let (p, q) = segments[next];
                let other = if p == end { q } else { p };
                if forward {
                    chain.push_back(other);
                } else {
                    chain.push_front(other);
                }
            }
        }
        if chain.len() > best.len() {
            best = chain.into_iter().collect();
        }
    }

    let points = best.into_iter().map(point_on).collect();
    Ok(LevelCurve { level, points, touches_mask })
}

/// Slope of `arg ζ` against `ln|ζ|` along a level curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiralFit {
    pub level: f64,
    pub slope_fit: f64,
    /// `−A(0) = −ω/α`
    pub expected_slope: f64,
    /// RMS residual of the linear fit.
    pub residual: f64,
    pub log_radius_span: f64,
    pub arg_span: f64,
}

/// Least-squares `θ = a·ln ρ + b` along `curve`, with `θ` unwrapped along
/// the polyline.
pub fn fit_log_spiral(curve: &LevelCurve, a0: f64) -> Result<SpiralFit> {
    let pts = &curve.points;
    if pts.len() < 3 {
        return Err(Error::InsufficientData("contour has fewer than 3 points"));
    }
    let mut theta = Vec::with_capacity(pts.len());
    let mut prev = pts[0].j2.atan2(pts[0].j1);
    theta.push(prev);
    for p in &pts[1..] {
        let a = p.j2.atan2(p.j1);
        let lifted = a + TAU * ((prev - a) / TAU).round();
        theta.push(lifted);
        prev = lifted;
    }
    let ln_rho: Vec<f64> = pts.iter().map(|p| p.modulus().ln()).collect();
    let span = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min);
    let (log_radius_span, arg_span) = (span(&ln_rho), span(&theta));
    if log_radius_span < core::f64::consts::LN_10 && arg_span < 0.5 * PI {
        return Err(Error::InsufficientData("contour spans less than a decade in radius and a quarter turn"));
    }
    let rows: Vec<Vec<f64>> = ln_rho.iter().map(|&x| alloc::vec![x, 1.0]).collect();
    let fit = least_squares(&rows, &theta)?;
    Ok(SpiralFit {
        level: curve.level,
        slope_fit: fit.coefficients[0],
        expected_slope: 0.0 - a0,
        residual: fit.rms,
        log_radius_span,
        arg_span,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::champagne_bottle;

    fn synthetic_grid(rows: usize, cols: usize, f: impl Fn(f64, f64) -> f64) -> RotationGrid {
        let region = GridRegion::Annulus { r_in: 1e-4, r_out: 1e-2 };
        let mut cells = Vec::new();
        for i in 0..rows {
            for k in 0..cols {
                let lr = log_space(1e-4, 1e-2, rows, i).ln();
                let th = TAU * k as f64 / cols as f64;
                cells.push(GridCell {
                    c: EMValue::new(0.0, 0.0),
                    j: MomentumValue::from_polar(lr.exp(), th),
                    row_coord: lr,
                    col_coord: th,
                    w: f(lr, th),
                    branch: 0,
                    status: CellStatus::Regular,
                    sample: None,
                });
            }
        }
        RotationGrid { region, rows, cols, cells }
    }

    #[test]
    fn exact_spiral_slope() {
        let points = (0..50)
            .map(|k| {
                let lr = -9.0 + 0.1 * k as f64;
                MomentumValue::from_polar(lr.exp(), -0.4 * lr + 1.0)
            })
            .collect();
        let fit = fit_log_spiral(&LevelCurve { level: 0.0, points, touches_mask: false }, 0.4).unwrap();
        assert!((fit.slope_fit + 0.4).abs() < 1e-10);
        assert!(fit.residual < 1e-10);
        assert_eq!(fit.expected_slope, -0.4);
    }

    #[test]
    fn short_contour_is_rejected() {
        let points = (0..5).map(|k| MomentumValue::from_polar(1e-3 * (1.0 + 0.1 * k as f64), 1.0)).collect();
        let r = fit_log_spiral(&LevelCurve { level: 0.0, points, touches_mask: false }, 0.4);
        assert!(matches!(r, Err(Error::InsufficientData(_))));
    }

    #[test]
    fn planar_field_contour_is_exact() {
        // W linear in the grid plane, so the interpolated contour is exact
        let a = 0.35;
        let grid = synthetic_grid(21, 40, |lr, th| (-a * lr - th) / TAU);
        let level = (-a * (1e-3f64).ln() - PI) / TAU;
        let curve = extract_level_curve(&grid, level).unwrap();
        assert!(!curve.touches_mask);
        assert!(curve.points.len() > 20);
        for p in &curve.points {
            let w = (-a * p.modulus().ln() - p.arg_principal()) / TAU;
            assert!((w - level).abs() < 1e-12, "{w} {level}");
        }
        let fit = fit_log_spiral(&curve, a).unwrap();
        assert!((fit.slope_fit + a).abs() < 1e-9);
    }

    #[test]
    fn level_outside_range_is_reported() {
        let grid = synthetic_grid(5, 8, |lr, _| lr);
        assert!(matches!(extract_level_curve(&grid, 3.0), Err(Error::LevelNotAttained { .. })));
    }

    #[test]
    fn masked_corners_flag_the_contour() {
        let mut grid = synthetic_grid(6, 12, |lr, th| lr + th);
        for k in 0..12 {
            grid.cells[k].status = CellStatus::TooClose;
            grid.cells[k].w = f64::NAN;
        }
        let level = grid.cell(1, 6).w;
        let curve = extract_level_curve(&grid, level).unwrap();
        assert!(curve.touches_mask);
    }

    #[test]
    fn monodromy_both_orientations() {
        let sys = champagne_bottle(0.5).unwrap();
        let o = TorusOptions::default();
        let c0 = EMValue::new(0.0, 0.0);
        let plus = monodromy_index(&sys, c0, 0.1, 64, Orientation::Positive, &o).unwrap();
        let minus = monodromy_index(&sys, c0, 0.1, 64, Orientation::Negative, &o).unwrap();
        assert!((plus - 1.0).abs() < 1e-3, "{plus}");
        assert!((minus + 1.0).abs() < 1e-3, "{minus}");
        assert!(monodromy_index(&sys, c0, 0.1, 32, Orientation::Positive, &o).is_err());
    }

    #[test]
    fn loop_not_enclosing_the_critical_value_is_trivial() {
        let sys = champagne_bottle(0.5).unwrap();
        let o = TorusOptions::default();
        let j = MomentumValue::from_polar(0.12, 0.0);
        let idx = monodromy_index(&sys, from_momentum_chart(&sys, j), 0.05, 64, Orientation::Positive, &o).unwrap();
        assert!(idx.abs() < 1e-9, "{idx}");
    }

    #[test]
    fn refined_grid_reproduces_coincident_nodes() {
        let sys = champagne_bottle(0.5).unwrap();
        let o = TorusOptions::default();
        let region = GridRegion::Annulus { r_in: 1e-3, r_out: 1e-2 };
        let coarse = rotation_grid(&sys, region, (3, 16), &o).unwrap();
        let fine = rotation_grid(&sys, region, (5, 32), &o).unwrap();
        for i in 0..3 {
            for k in 0..16 {
                let (a, b) = (coarse.cell(i, k), fine.cell(2 * i, 2 * k));
                assert_eq!(a.status, CellStatus::Regular);
                assert!((a.w - b.w).abs() < 1e-7, "{i} {k}: {} {}", a.w, b.w);
            }
        }
        // rows are continuous along arg
        for i in 0..5 {
            for k in 1..32 {
                assert!((fine.cell(i, k).w - fine.cell(i, k - 1).w).abs() < 0.5);
            }
        }
    }

    #[test]
    fn floor_masks_inner_rows() {
        let base = champagne_bottle(0.5).unwrap();
        let o = TorusOptions::default();
        let region = GridRegion::Annulus { r_in: 1e-4, r_out: 1e-1 };
        let mut last = -1.0;
        for floor in [1e-5, 1e-3, 1e-2] {
            let w = base.window();
            let sys = champagne_bottle(0.5).unwrap().with_window(crate::systems::RegularWindow { j_min: floor, ..w });
            let g = rotation_grid(&sys, region, (4, 8), &o).unwrap();
            let m = g.masked_fraction();
            assert!(m >= last);
            last = m;
            for cell in &g.cells {
                assert_eq!(cell.status == CellStatus::TooClose, cell.j.modulus() < floor);
            }
        }
        assert!(last > 0.0);
    }

    #[test]
    fn rectangle_rows_follow_l() {
        let sys = champagne_bottle(0.0).unwrap();
        let o = TorusOptions::default();
        let region = GridRegion::Rectangle { h: (-0.05, 0.05), l: (-0.05, 0.05) };
        let g = rotation_grid(&sys, region, (5, 5), &o).unwrap();
        assert_eq!(g.cell(2, 2).status, CellStatus::TooClose);
        // without rotation Θ is odd in l; rows are anchored independently on the principal sheet
        for k in 0..5 {
            let (a, b) = (g.cell(0, k), g.cell(4, k));
            let s = a.w + b.w;
            assert!((s - s.round()).abs() < 1e-9, "{s}");
        }
    }
}
