//! Deterministic text artifacts: 0/1 rasters, CSV tables, and JSON
//! summaries. Every float is rendered by the shared 12-significant-digit
//! formatter (or by the serializer's shortest-roundtrip form in JSON), and
//! all iteration orders are fixed, so identical inputs produce byte-identical
//! files.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::curvature::CurvatureSample;
use crate::diagnostics::ContinuityReport;
use crate::error::{FracError, Result};
use crate::grid::{CellIndex, CellSet, GridSpec, ScalarField};
use crate::perimeter::PerimeterBreakdown;
use crate::solver::{LevelSolution, Verdict, VerifyReport};
use crate::util::fmt_g;

/// Renders a cell set as a text raster, one row per grid line of `0`/`1`
/// characters. Rows are emitted top line first (highest y), so the text
/// reads like a plot of the plane; 1D grids emit a single row. Each row
/// ends with a newline.
pub fn raster_lines(e: &CellSet) -> String {
    let g = e.grid();
    let mut out = String::with_capacity(g.num_cells() + g.cells);
    let rows: Vec<usize> =
        if g.dim == 1 { vec![0] } else { (0..g.cells).rev().collect() };
    for iy in rows {
        for ix in 0..g.cells {
            out.push(if e.contains(g.index(ix, iy)) { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

/// CSV of the included cell indices, ascending, with a header row.
pub fn cells_csv(e: &CellSet) -> String {
    let g = e.grid();
    let mut out = String::from("ix,iy\n");
    for i in e.iter() {
        let (ix, iy) = g.coords(i);
        out.push_str(&format!("{ix},{iy}\n"));
    }
    out
}

/// CSV dump of a solved pair of extremal fields: one row per grid cell with
/// its index, coordinates, center, region tag (`omega` for domain cells,
/// `ring` for exterior data cells), and both extremal values. The two
/// fields must live on the same grid and domain.
pub fn field_csv(u_max: &ScalarField, u_min: &ScalarField) -> Result<String> {
    if u_max.grid != u_min.grid || u_max.omega != u_min.omega {
        return Err(FracError::GridMismatch(
            "the extremal fields live on different grids or domains".into(),
        ));
    }
    let g = &u_max.grid;
    let mut out = String::from("cell,ix,iy,x,y,region,u_max,u_min\n");
    for i in 0..g.num_cells() {
        let (ix, iy) = g.coords(i);
        let [x, y] = g.center(i);
        let region = if u_max.omega.contains(i) { "omega" } else { "ring" };
        out.push_str(&format!(
            "{i},{ix},{iy},{},{},{region},{},{}\n",
            fmt_g(x),
            fmt_g(y),
            fmt_g(u_max.values[i]),
            fmt_g(u_min.values[i]),
        ));
    }
    Ok(out)
}

/// CSV of a curvature profile along a boundary: cell coordinates, center,
/// signed value, both non-cancellation gauges, and the far tail.
pub fn profile_csv(samples: &[CurvatureSample], grid: &GridSpec) -> String {
    let mut out = String::from("ix,iy,x,y,value,pv_error,near_error,tail\n");
    for s in samples {
        let (ix, iy) = grid.coords(s.point);
        let [x, y] = grid.center(s.point);
        out.push_str(&format!(
            "{ix},{iy},{},{},{},{},{},{}\n",
            fmt_g(x),
            fmt_g(y),
            fmt_g(s.value),
            fmt_g(s.pv_pairing_error),
            fmt_g(s.near_pairing_error),
            fmt_g(s.tail_part),
        ));
    }
    out
}

/// CSV of level-set boundary collisions (threshold pair plus the meeting
/// cell's coordinates).
pub fn collisions_csv(collisions: &[(f64, f64, CellIndex)], grid: &GridSpec) -> String {
    let mut out = String::from("t,tau,ix,iy\n");
    for &(t, tau, cell) in collisions {
        let (ix, iy) = grid.coords(cell);
        out.push_str(&format!("{},{},{ix},{iy}\n", fmt_g(t), fmt_g(tau)));
    }
    out
}

/// Generic numeric CSV: a verbatim header line plus one formatted row per
/// entry. Every row must have as many entries as the header has fields.
pub fn table_csv(header: &str, rows: &[Vec<f64>]) -> String {
    let arity = header.split(',').count();
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), arity, "row arity must match the header");
        let cells: Vec<String> = row.iter().map(|&v| fmt_g(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// One JSON record of a relative-perimeter breakdown: the order, the three
/// constituent interaction terms, their total, and the grid resolution.
#[derive(Debug, Clone, Serialize)]
pub struct PerimeterRecord {
    /// Fractional order.
    pub s: f64,
    /// The three interactions: in/out inside the domain, inside-E against
    /// the exterior complement, inside-complement against exterior E.
    pub terms: [f64; 3],
    /// Sum of the three terms.
    pub total: f64,
    /// Cell size of the grid the breakdown was computed on.
    pub grid_h: f64,
}

impl PerimeterRecord {
    /// Packages a breakdown with its grid resolution.
    pub fn new(b: &PerimeterBreakdown, grid_h: f64) -> Self {
        PerimeterRecord {
            s: b.s,
            terms: [b.term_in_out, b.term_in_extout, b.term_out_inext],
            total: b.total,
            grid_h,
        }
    }
}

/// Serializes perimeter records as a pretty-printed JSON array.
pub fn perimeter_json(records: &[PerimeterRecord]) -> String {
    serde_json::to_string_pretty(records).expect("plain structs always serialize")
}

/// Machine-readable summary of one solved scenario instance. This struct is
/// the JSON schema: field names below appear verbatim as the JSON keys.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    /// Scenario name the instance belongs to.
    pub scenario: String,
    /// Fractional order solved at.
    pub s: f64,
    /// Cells per axis.
    pub grid_cells: usize,
    /// Cell size.
    pub grid_h: f64,
    /// Energy of the pointwise largest minimizer.
    pub energy_max: f64,
    /// Energy of the pointwise smallest minimizer.
    pub energy_min: f64,
    /// max |u_max − u_min| over domain cells — the spread between the
    /// extremal minimizers, reported without interpretation.
    pub minimizer_gap: f64,
    /// Thresholds the level problems were solved at, ascending.
    pub thresholds: Vec<f64>,
    /// Minimum-cut value per threshold, aligned with `thresholds`.
    pub per_level_cut_values: Vec<f64>,
    /// Worst competitor margin against u_max (≥ −tolerance when minimal).
    pub verify_margin_max: f64,
    /// Worst competitor margin against u_min.
    pub verify_margin_min: f64,
    /// Number of competitors the verifier evaluated against u_max.
    pub verify_competitors_max: usize,
    /// Number of competitors the verifier evaluated against u_min.
    pub verify_competitors_min: usize,
    /// "minimal" or "not_minimal" for u_max.
    pub verify_verdict_max: String,
    /// "minimal" or "not_minimal" for u_min.
    pub verify_verdict_min: String,
    /// Max adjacent-cell oscillation inside the domain, when a continuity
    /// diagnostic was requested (null otherwise).
    pub interior_osc: Option<f64>,
    /// Max one-layer trace mismatch across the domain boundary, when
    /// requested (null otherwise).
    pub boundary_jump: Option<f64>,
}

fn verdict_name(v: Verdict) -> String {
    match v {
        Verdict::Minimal => "minimal".to_string(),
        Verdict::NotMinimal => "not_minimal".to_string(),
    }
}

impl SolveSummary {
    /// Assembles the summary from a solved level problem plus the verifier
    /// reports for its two extremal fields. Diagnostic fields start as
    /// `None` and can be filled in by the caller.
    pub fn new(
        scenario: &str,
        s: f64,
        sol: &LevelSolution,
        verify_max: &VerifyReport,
        verify_min: &VerifyReport,
    ) -> SolveSummary {
        let gap = sol
            .u_max
            .omega
            .iter()
            .map(|i| (sol.u_max.values[i] - sol.u_min.values[i]).abs())
            .fold(0.0f64, f64::max);
        SolveSummary {
            scenario: scenario.to_string(),
            s,
            grid_cells: sol.u_max.grid.cells,
            grid_h: sol.u_max.grid.h(),
            energy_max: sol.energy_max,
            energy_min: sol.energy_min,
            minimizer_gap: gap,
            thresholds: sol.thresholds.clone(),
            per_level_cut_values: sol.per_level_cut_values.clone(),
            verify_margin_max: verify_max.worst_margin,
            verify_margin_min: verify_min.worst_margin,
            verify_competitors_max: verify_max.competitors,
            verify_competitors_min: verify_min.competitors,
            verify_verdict_max: verdict_name(verify_max.verdict),
            verify_verdict_min: verdict_name(verify_min.verdict),
            interior_osc: None,
            boundary_jump: None,
        }
    }
}

/// Serializes a solve summary as pretty-printed JSON.
pub fn summary_json(summary: &SolveSummary) -> String {
    serde_json::to_string_pretty(summary).expect("plain structs always serialize")
}

/// Serializes a continuity report as pretty-printed JSON (verdicts appear
/// as `"continuous_trend"` / `"discontinuity_detected"`).
pub fn report_json(report: &ContinuityReport) -> String {
    serde_json::to_string_pretty(report).expect("plain structs always serialize")
}

/// Writes a text artifact, creating parent directories as needed.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content)?;
    Ok(())
}
