//! Read-only analyses of fields and solved level problems: the grid
//! measure-theoretic boundary decomposition, level-set separation between
//! distinct thresholds, refinement-trend continuity reports (including the
//! boundary stickiness detector), cellwise ordering checks between two
//! solutions, and a distinct-superlevel sanity gate for scenario data.
//!
//! Everything here is pure and read-only; the heavier routines parallelize
//! across threshold pairs and refinement levels.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FracError, Result};
use crate::grid::{CellIndex, CellSet, FarField, ScalarField};
use crate::solver::LevelSolution;

/// Trend verdict over a refinement ladder. Trend-based by construction:
/// pointwise continuity is not decidable at a single resolution, so the
/// verdict compares the finest level against the coarsest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendVerdict {
    /// The measured quantity vanishes or decays under refinement, consistent
    /// with a continuous limit.
    ContinuousTrend,
    /// The measured quantity stagnates under refinement: a genuine jump at
    /// the scale of the data range.
    DiscontinuityDetected,
}

/// Continuity/stickiness report across a refinement ladder of solved fields.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    /// Cell size h of each ladder level, strictly decreasing.
    pub refinement_levels: Vec<f64>,
    /// Per level: max |Δu| over Chebyshev-adjacent cell pairs inside the
    /// domain. Always ≥ 0.
    pub interior_osc: Vec<f64>,
    /// Per level: max |u(interior cell) − datum(exterior cell)| over
    /// Chebyshev-adjacent pairs straddling the domain boundary (one cell
    /// layer). Always ≥ 0.
    pub boundary_jump: Vec<f64>,
    /// Cells in the domain where the grid boundaries of two distinct
    /// superlevel sets of the finest solution meet, as (t, τ, cell) with
    /// t < τ. Thresholds are quartile points between consecutive distinct
    /// data levels, evenly subsampled to a bounded probe set when the datum
    /// takes many values. Collisions between thresholds closer together
    /// than the measured oscillation are expected even for fields with a
    /// continuous limit; the verdicts below never read this list.
    pub levelset_collisions: Vec<(f64, f64, CellIndex)>,
    /// Trend of `interior_osc`.
    pub verdict_interior: TrendVerdict,
    /// Trend of `boundary_jump` (stickiness detector: stagnation at the data
    /// range means the solution does not attain its datum at the boundary).
    pub verdict_boundary: TrendVerdict,
}

/// Outcome of [`comparison_check`]: cellwise ordering of two solutions.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonVerdict {
    /// True when both extremal solutions of the first problem dominate those
    /// of the second cellwise (exactly, no tolerance) and the far constants
    /// are ordered.
    pub ordered: bool,
    /// Largest violation max(u₂ − u₁, 0) observed over both extremal fields
    /// and all cells; 0 when `ordered`.
    pub worst_violation: f64,
    /// A cell attaining `worst_violation`, when the violation happened on a
    /// grid cell (a far-constant violation leaves this `None`).
    pub worst_cell: Option<CellIndex>,
}

/// Outcome of [`distinct_levels_check`]: whether two thresholds cut the
/// datum into genuinely different superlevel sets on the exterior ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistinctLevelsVerdict {
    /// True when the two superlevel sets differ on the ring (or the check
    /// was vacuous).
    pub distinct: bool,
    /// True when the datum is constant on the ring, so no threshold pair is
    /// admissible and the check passes vacuously.
    pub vacuous: bool,
    /// Number of ring cells in the symmetric difference of the two
    /// superlevel sets.
    pub symmetric_difference_cells: usize,
    /// Number of face-connected components of the ring; scenarios with a
    /// disconnected ring are flagged by this count rather than rejected.
    pub ring_components: usize,
}

impl DistinctLevelsVerdict {
    /// Whether the exterior ring is face-connected.
    pub fn ring_connected(&self) -> bool {
        self.ring_components == 1
    }
}

/// Classification of one cell by its 3ⁿ neighborhood: 0 = interior,
/// 1 = exterior, 2 = boundary. Off-grid neighbors resolve by far-field
/// direction, matching the set's own extended membership rule.
fn classify_cell(e: &CellSet, ix: usize, iy: usize, dim: usize) -> u8 {
    let ys: &[i64] = if dim == 1 { &[0] } else { &[-1, 0, 1] };
    let mut any_in = false;
    let mut any_out = false;
    for &dy in ys {
        for dx in [-1i64, 0, 1] {
            if e.contains_extended(ix as i64 + dx, iy as i64 + dy) {
                any_in = true;
            } else {
                any_out = true;
            }
        }
    }
    match (any_in, any_out) {
        (true, false) => 0,
        (false, true) => 1,
        _ => 2,
    }
}

/// Splits the grid into the measure-theoretic interior, exterior, and
/// boundary of `e` at scale h: a cell is interior when its whole 3ⁿ
/// neighborhood (radius-1 Chebyshev, the smallest stencil that can
/// distinguish the three classes) lies in `e`, exterior when none of it
/// does, boundary otherwise. The three parts partition the grid exactly.
/// Far fields of the parts: the interior keeps `e`'s far field, the
/// exterior gets its complement, and the boundary is bounded.
pub fn measure_boundary(e: &CellSet) -> (CellSet, CellSet, CellSet) {
    let grid = *e.grid();
    let n = grid.num_cells();
    let classes: Vec<u8> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = grid.coords(i);
            classify_cell(e, ix, iy, grid.dim)
        })
        .collect();
    let mut interior = CellSet::empty(grid);
    let mut exterior = CellSet::empty(grid);
    let mut boundary = CellSet::empty(grid);
    for (i, c) in classes.iter().enumerate() {
        match c {
            0 => interior.insert(i),
            1 => exterior.insert(i),
            _ => boundary.insert(i),
        }
    }
    (
        interior.with_far(e.far().clone()),
        exterior.with_far(e.far().complement()),
        boundary.with_far(FarField::Empty),
    )
}

/// For every pair t < τ of the given thresholds, intersects the grid
/// boundaries of the two superlevel sets of `u` inside the domain and
/// reports each nonempty meeting as (t, τ, cell) triples. An empty result
/// for thresholds separated by more than the field's oscillation is
/// consistent with a continuous limit; a jump of `u` inside the domain
/// makes every pair of thresholds straddled by the jump collide along it.
///
/// Requires at least two finite thresholds; duplicates are merged.
pub fn levelset_separation(
    u: &ScalarField,
    thresholds: &[f64],
) -> Result<Vec<(f64, f64, CellIndex)>> {
    if thresholds.iter().any(|t| !t.is_finite()) {
        return Err(FracError::InvalidParameter {
            name: "thresholds",
            reason: "all thresholds must be finite".into(),
        });
    }
    let mut ts = thresholds.to_vec();
    ts.sort_by(|a, b| a.partial_cmp(b).expect("finite thresholds"));
    ts.dedup();
    if ts.len() < 2 {
        return Err(FracError::InvalidParameter {
            name: "thresholds",
            reason: format!("need at least two distinct thresholds, got {}", ts.len()),
        });
    }

    // One boundary per threshold, then all pairs. Superlevel sets are
    // nested, which the debug build re-checks here.
    let boundaries: Vec<CellSet> = ts
        .par_iter()
        .map(|&t| measure_boundary(&u.superlevel(t)).2)
        .collect();
    #[cfg(debug_assertions)]
    for w in ts.windows(2) {
        debug_assert!(
            u.superlevel(w[1]).is_subset_on_grid(&u.superlevel(w[0])),
            "superlevel sets must be nested"
        );
    }

    let pairs: Vec<(usize, usize)> =
        (0..ts.len()).flat_map(|i| (i + 1..ts.len()).map(move |j| (i, j))).collect();
    let per_pair: Vec<Vec<(f64, f64, CellIndex)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let meet = boundaries[i].intersect(&boundaries[j]).intersect(&u.omega);
            meet.iter().map(|cell| (ts[i], ts[j], cell)).collect()
        })
        .collect();
    Ok(per_pair.into_iter().flatten().collect())
}

/// Max |Δu| over Chebyshev-adjacent cell pairs that both lie in the domain.
/// Zero for fields constant on the domain; decays like h for fields with a
/// Lipschitz limit; stagnates at the jump height across an interior jump.
pub fn interior_oscillation(u: &ScalarField) -> f64 {
    let grid = &u.grid;
    let ys: &[i64] = if grid.dim == 1 { &[0] } else { &[-1, 0, 1] };
    let mut worst = 0.0f64;
    for i in u.omega.iter() {
        let (ix, iy) = grid.coords(i);
        for &dy in ys {
            for dx in [-1i64, 0, 1] {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                if grid.in_bounds(jx, jy) {
                    let j = grid.index(jx as usize, jy as usize);
                    if u.omega.contains(j) {
                        worst = worst.max((u.values[i] - u.values[j]).abs());
                    }
                }
            }
        }
    }
    worst
}

/// Max |u(interior) − datum(exterior)| over Chebyshev-adjacent pairs with
/// one cell in the domain and the other on the exterior ring: the one-cell-
/// layer trace mismatch. Zero when the solution attains its datum; pinned
/// at the datum height when the solution sticks to a constant inside.
pub fn boundary_jump(u: &ScalarField, phi: &ScalarField) -> f64 {
    let grid = &u.grid;
    let ys: &[i64] = if grid.dim == 1 { &[0] } else { &[-1, 0, 1] };
    let mut worst = 0.0f64;
    for i in u.omega.iter() {
        let (ix, iy) = grid.coords(i);
        for &dy in ys {
            for dx in [-1i64, 0, 1] {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                if grid.in_bounds(jx, jy) {
                    let j = grid.index(jx as usize, jy as usize);
                    if !u.omega.contains(j) {
                        worst = worst.max((u.values[i] - phi.values[j]).abs());
                    }
                }
            }
        }
    }
    worst
}

/// Cap on the separation-probe count. All-pairs collision scans are
/// quadratic in the probe count, and a datum with one distinct value per
/// cell (a smooth bump, say) would otherwise produce thousands of probes
/// worth of redundant, unreadable output.
const MAX_SEPARATION_PROBES: usize = 32;

/// Quartile thresholds between consecutive distinct data levels: for each
/// gap (v, w) the points v + (w−v)/4 and v + 3(w−v)/4. These straddle every
/// jump the datum can induce while staying away from the levels themselves.
/// When the datum has many distinct levels the list is subsampled evenly
/// (first and last probes kept) down to [`MAX_SEPARATION_PROBES`].
fn quartile_thresholds(levels: &[f64]) -> Vec<f64> {
    let mut ts = Vec::with_capacity(2 * levels.len());
    for w in levels.windows(2) {
        let gap = w[1] - w[0];
        ts.push(w[0] + 0.25 * gap);
        ts.push(w[0] + 0.75 * gap);
    }
    if ts.len() > MAX_SEPARATION_PROBES {
        // ts ascends (gap probes stay inside their gap), so even index
        // strides subsample it evenly; strides are ≥ 1 here, so no repeats.
        let m = ts.len();
        ts = (0..MAX_SEPARATION_PROBES)
            .map(|k| ts[k * (m - 1) / (MAX_SEPARATION_PROBES - 1)])
            .collect();
    }
    ts
}

/// Frozen trend rule: the series is consistent with a continuous limit when
/// the finest value is zero (up to `zero_tol`) or has dropped below 0.9× the
/// coarsest value; anything else counts as stagnation, i.e. a detected jump.
fn trend_verdict(series: &[f64], zero_tol: f64) -> TrendVerdict {
    let first = series[0];
    let last = *series.last().expect("nonempty series");
    if last <= zero_tol || last < 0.9 * first {
        TrendVerdict::ContinuousTrend
    } else {
        TrendVerdict::DiscontinuityDetected
    }
}

/// Builds a [`ContinuityReport`] from a refinement ladder of solved fields.
///
/// `solutions[k]` is the solved field at ladder level k and `data[k]` the
/// datum it was solved against, on the same grid; levels must share the box
/// (origin, extent, dimension) and be strictly refining. At least three
/// levels are required — a trend needs more than two points. Solutions must
/// carry their datum verbatim on the exterior ring; anything else is a
/// mismatched scenario and is rejected.
pub fn continuity_report(
    solutions: &[ScalarField],
    data: &[ScalarField],
) -> Result<ContinuityReport> {
    if solutions.len() != data.len() {
        return Err(FracError::InvalidParameter {
            name: "solutions",
            reason: format!(
                "ladder lengths differ: {} solutions vs {} data fields",
                solutions.len(),
                data.len()
            ),
        });
    }
    if solutions.len() < 3 {
        return Err(FracError::InvalidParameter {
            name: "solutions",
            reason: format!("a trend needs at least 3 refinement levels, got {}", solutions.len()),
        });
    }
    let base = &data[0].grid;
    for (k, (u, phi)) in solutions.iter().zip(data).enumerate() {
        if u.grid != phi.grid {
            return Err(FracError::GridMismatch(format!(
                "level {k}: solution and datum grids differ"
            )));
        }
        if u.omega != phi.omega {
            return Err(FracError::GridMismatch(format!(
                "level {k}: solution and datum domains differ"
            )));
        }
        if u.grid.dim != base.dim || u.grid.origin != base.origin || u.grid.extent != base.extent {
            return Err(FracError::GridMismatch(format!(
                "level {k}: ladder levels must share the same box"
            )));
        }
        if k > 0 && u.grid.cells <= solutions[k - 1].grid.cells {
            return Err(FracError::InvalidParameter {
                name: "solutions",
                reason: format!("ladder must refine strictly: level {k} does not shrink h"),
            });
        }
        if phi.far_value != data[0].far_value {
            return Err(FracError::InvalidParameter {
                name: "data",
                reason: format!("level {k}: far constant differs across the ladder"),
            });
        }
        if u.far_value != phi.far_value {
            return Err(FracError::InvalidParameter {
                name: "solutions",
                reason: format!("level {k}: solution and datum far constants differ"),
            });
        }
        if u.values.iter().any(|v| !v.is_finite()) || phi.values.iter().any(|v| !v.is_finite()) {
            return Err(FracError::InvalidParameter {
                name: "solutions",
                reason: format!("level {k}: non-finite values"),
            });
        }
        for i in 0..u.grid.num_cells() {
            if !u.omega.contains(i) && u.values[i] != phi.values[i] {
                return Err(FracError::InvalidParameter {
                    name: "solutions",
                    reason: format!(
                        "level {k}: solution does not carry its datum verbatim on the ring"
                    ),
                });
            }
        }
    }

    let metrics: Vec<(f64, f64)> = solutions
        .par_iter()
        .zip(data.par_iter())
        .map(|(u, phi)| (interior_oscillation(u), boundary_jump(u, phi)))
        .collect();
    let interior_osc: Vec<f64> = metrics.iter().map(|m| m.0).collect();
    let jump: Vec<f64> = metrics.iter().map(|m| m.1).collect();

    let finest_data = data.last().expect("nonempty ladder");
    let finest_sol = solutions.last().expect("nonempty ladder");
    let collision_ts = quartile_thresholds(&finest_data.exterior_levels());
    let levelset_collisions = if collision_ts.len() >= 2 {
        levelset_separation(finest_sol, &collision_ts)?
    } else {
        Vec::new()
    };

    let (lo, hi) = finest_data.exterior_range();
    let zero_tol = 1e-9 * f64::max(1.0, hi.abs().max(lo.abs()));
    Ok(ContinuityReport {
        refinement_levels: solutions.iter().map(|u| u.grid.h()).collect(),
        verdict_interior: trend_verdict(&interior_osc, zero_tol),
        verdict_boundary: trend_verdict(&jump, zero_tol),
        interior_osc,
        boundary_jump: jump,
        levelset_collisions,
    })
}

/// Checks the cellwise ordering of two solved level problems: with data
/// ordered φ₁ ≥ φ₂ (verified here first, rejected otherwise as a
/// misconfiguration rather than reported as a violation), both extremal
/// solutions of the first problem must dominate those of the second exactly,
/// cell by cell. Violations are reported, not rejected — they indicate a
/// solver failure, and the verdict carries the worst one.
///
/// Both solutions must live on the same grid and domain; using the same
/// kernel for both is the caller's obligation (a solution does not carry
/// its kernel).
pub fn comparison_check(
    sol1: &LevelSolution,
    sol2: &LevelSolution,
) -> Result<ComparisonVerdict> {
    let u1 = &sol1.u_max;
    let u2 = &sol2.u_max;
    if u1.grid != u2.grid {
        return Err(FracError::GridMismatch("solutions live on different grids".into()));
    }
    if u1.omega != u2.omega {
        return Err(FracError::GridMismatch("solutions have different domains".into()));
    }

    // Datum ordering gate: exterior cells and the far constant. The solved
    // fields carry their data verbatim outside the domain.
    for i in 0..u1.grid.num_cells() {
        if !u1.omega.contains(i) && u1.values[i] < u2.values[i] {
            return Err(FracError::InvalidParameter {
                name: "datum",
                reason: format!(
                    "data are not ordered: cell {i} has {} < {}",
                    u1.values[i], u2.values[i]
                ),
            });
        }
    }
    if u1.far_value < u2.far_value {
        return Err(FracError::InvalidParameter {
            name: "datum",
            reason: format!(
                "data are not ordered at infinity: {} < {}",
                u1.far_value, u2.far_value
            ),
        });
    }

    let mut worst = 0.0f64;
    let mut worst_cell = None;
    for (a, b) in [(&sol1.u_max, &sol2.u_max), (&sol1.u_min, &sol2.u_min)] {
        for i in 0..a.grid.num_cells() {
            let violation = b.values[i] - a.values[i];
            if violation > worst {
                worst = violation;
                worst_cell = Some(i);
            }
        }
        let far_violation = b.far_value - a.far_value;
        if far_violation > worst {
            worst = far_violation;
            worst_cell = None;
        }
    }
    Ok(ComparisonVerdict { ordered: worst == 0.0, worst_violation: worst, worst_cell })
}

/// Verifies that two thresholds produce genuinely different superlevel sets
/// of the datum on the exterior ring — the sanity gate that distinguishes
/// data able to separate solution levels from data that cannot (a jumpy
/// datum on a disconnected ring can make distinct thresholds cut the same
/// set, and this check is the detector for exactly that).
///
/// `omega_ring` is the set of exterior grid cells carrying the datum; it
/// must be bounded, nonempty, and disjoint from the field's domain. The
/// thresholds must differ and lie strictly between the ring minimum and
/// maximum of the datum; a datum constant on the ring has no admissible
/// thresholds and passes vacuously. A disconnected ring is flagged in the
/// verdict's component count, never rejected.
pub fn distinct_levels_check(
    phi: &ScalarField,
    omega_ring: &CellSet,
    t1: f64,
    t2: f64,
) -> Result<DistinctLevelsVerdict> {
    if omega_ring.grid() != &phi.grid {
        return Err(FracError::GridMismatch("ring lives on a different grid".into()));
    }
    if omega_ring.far() != &FarField::Empty {
        return Err(FracError::InvalidParameter {
            name: "omega_ring",
            reason: "the ring must be bounded (far field Empty)".into(),
        });
    }
    if omega_ring.is_empty_on_grid() {
        return Err(FracError::EmptyDomain("the exterior ring has no cells".into()));
    }
    if !omega_ring.intersect(&phi.omega).is_empty_on_grid() {
        return Err(FracError::InvalidParameter {
            name: "omega_ring",
            reason: "the ring must be disjoint from the domain".into(),
        });
    }
    if !t1.is_finite() || !t2.is_finite() {
        return Err(FracError::InvalidParameter {
            name: "thresholds",
            reason: "thresholds must be finite".into(),
        });
    }
    if t1 == t2 {
        return Err(FracError::InvalidParameter {
            name: "thresholds",
            reason: format!("thresholds must differ, both are {t1}"),
        });
    }

    let ring_components = omega_ring.component_count();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in omega_ring.iter() {
        lo = lo.min(phi.values[i]);
        hi = hi.max(phi.values[i]);
    }
    if lo == hi {
        // Constant datum on the ring: no admissible thresholds exist, and
        // there is nothing for a threshold pair to separate.
        return Ok(DistinctLevelsVerdict {
            distinct: true,
            vacuous: true,
            symmetric_difference_cells: 0,
            ring_components,
        });
    }
    for t in [t1, t2] {
        if t <= lo || t >= hi {
            return Err(FracError::InvalidParameter {
                name: "thresholds",
                reason: format!(
                    "threshold {t} must lie strictly between the ring minimum {lo} and maximum {hi}"
                ),
            });
        }
    }

    let diff = omega_ring
        .iter()
        .filter(|&i| (phi.values[i] >= t1) != (phi.values[i] >= t2))
        .count();
    Ok(DistinctLevelsVerdict {
        distinct: diff > 0,
        vacuous: false,
        symmetric_difference_cells: diff,
        ring_components,
    })
}
