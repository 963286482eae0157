//! Nonlocal set interactions, fractional perimeters, and their asymptotic
//! functionals at the two endpoints of the order range.
//!
//! The basic object is the truncated interaction
//!
//! ```text
//!   L(A, B) = Σ_{i ∈ A, j ∈ B} w_ij  (+ analytic far cross terms)
//! ```
//!
//! with weights from a [`KernelTable`]. The fractional perimeter of E
//! relative to a bounded domain Ω splits into the three interactions that
//! involve Ω — (E∩Ω)×(Ω\E), (E∩Ω)×(CE\Ω), (Ω\E)×(E\Ω) — and the global
//! perimeter of a bounded set is L(E, CE) with the far field accounting for
//! everything beyond the truncation radius.
//!
//! Orientation of each interaction is canonicalized internally, so
//! `interaction(A, B)` and `interaction(B, A)` return bit-identical values
//! and complement symmetry of the perimeter holds exactly, not just up to
//! rounding.

use crate::error::{FracError, Result};
use crate::grid::{CellIndex, CellSet, FarField};
use crate::kernel::KernelTable;
use crate::util::pairwise_sum;

/// Surface measure of the unit sphere in the ambient dimension: 2 points in
/// 1D, 2π in 2D. Far-field cones are weighted by their share of this.
pub fn sphere_measure(dim: usize) -> f64 {
    if dim == 1 {
        2.0
    } else {
        std::f64::consts::TAU
    }
}

/// Directional measure of a far field, in sphere-measure units
/// (`sphere_measure(dim)` for a full far field).
pub fn far_measure(dim: usize, far: &FarField) -> f64 {
    match far {
        FarField::Empty => 0.0,
        FarField::Full => sphere_measure(dim),
        FarField::Cone(sec) => {
            if dim == 1 {
                let mut m = 0.0;
                if sec.contains(0.0) {
                    m += 1.0;
                }
                if sec.contains(std::f64::consts::PI) {
                    m += 1.0;
                }
                m
            } else {
                sec.measure()
            }
        }
    }
}

/// Truncated interaction L(A, B) between disjoint cell sets: the sum of
/// pair weights over A × B, plus the analytic cross term when one side has
/// a nonempty far field (the far region beyond the truncation radius
/// carries mass `h^n · far_mass`, weighted by the cone's directional
/// share). Both sides having far mass is rejected — such cone × cone
/// interactions are never needed and have no analytic closure here.
pub fn interaction(a: &CellSet, b: &CellSet, kt: &KernelTable) -> Result<f64> {
    if a.grid() != kt.grid() || b.grid() != kt.grid() {
        return Err(FracError::GridMismatch("interaction operands on a different grid".into()));
    }
    if a.intersect(b).count() != 0 {
        return Err(FracError::InvalidParameter {
            name: "a,b",
            reason: "interaction requires disjoint cell sets".into(),
        });
    }
    let a_far = !matches!(a.far(), FarField::Empty);
    let b_far = !matches!(b.far(), FarField::Empty);
    if a_far && b_far {
        return Err(FracError::InvalidParameter {
            name: "a,b",
            reason: "interaction supports a far field on at most one side".into(),
        });
    }

    // Canonical orientation so the value is bitwise symmetric in (A, B).
    let (first, second) = if swap_for_canonical(a, b) { (b, a) } else { (a, b) };

    let grid = *kt.grid();
    let cells: Vec<CellIndex> = first.cells();
    let parts: Vec<f64> = cells
        .iter()
        .map(|&i| {
            let (ix, iy) = grid.coords(i);
            let mut acc = 0.0;
            for o in kt.offsets() {
                let jx = ix as i64 + o.dx;
                let jy = iy as i64 + o.dy;
                if grid.in_bounds(jx, jy) && second.contains(grid.index(jx as usize, jy as usize))
                {
                    acc += o.w;
                }
            }
            acc
        })
        .collect();
    let pair_sum = pairwise_sum(&parts);

    let hn = grid.cell_measure();
    let omega_n = sphere_measure(grid.dim);
    let far_cross = if !matches!(second.far(), FarField::Empty) {
        first.count() as f64 * hn * kt.far_mass() * far_measure(grid.dim, second.far()) / omega_n
    } else if !matches!(first.far(), FarField::Empty) {
        second.count() as f64 * hn * kt.far_mass() * far_measure(grid.dim, first.far()) / omega_n
    } else {
        0.0
    };
    Ok(pair_sum + far_cross)
}

/// Deterministic total order on cell sets used to canonicalize interaction
/// arguments: fewer cells first, ties broken by the first differing cell.
fn swap_for_canonical(a: &CellSet, b: &CellSet) -> bool {
    match a.count().cmp(&b.count()) {
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => {
            for (ca, cb) in a.iter().zip(b.iter()) {
                if ca != cb {
                    return cb < ca;
                }
            }
            false
        }
    }
}

/// The three interactions composing the fractional perimeter of E relative
/// to a bounded domain Ω, and their sum.
#[derive(Debug, Clone)]
pub struct PerimeterBreakdown {
    /// L(E∩Ω, Ω\E): transitions with both cells inside the domain.
    pub term_in_out: f64,
    /// L(E∩Ω, CE\Ω): inside-E cells against the exterior complement.
    pub term_in_extout: f64,
    /// L(Ω\E, E\Ω): inside-complement cells against the exterior part of E.
    pub term_out_inext: f64,
    /// Sum of the three terms.
    pub total: f64,
    /// Fractional order the kernel was built with.
    pub s: f64,
}

/// Fractional perimeter of E relative to the bounded domain Ω the kernel
/// table was built for: the weighted count of transition pairs with at
/// least one cell in Ω, split into its three constituent interactions.
pub fn perimeter_in(e: &CellSet, omega: &CellSet, kt: &KernelTable) -> Result<PerimeterBreakdown> {
    if e.grid() != kt.grid() || omega.grid() != kt.grid() {
        return Err(FracError::GridMismatch("perimeter operands on a different grid".into()));
    }
    if omega != kt.omega() {
        return Err(FracError::GridMismatch(
            "kernel table was built for a different domain".into(),
        ));
    }
    if !matches!(omega.far(), FarField::Empty) {
        return Err(FracError::InvalidParameter {
            name: "omega",
            reason: "domain must be bounded (empty far field)".into(),
        });
    }
    let ce = e.complement();
    let e_in = e.intersect(omega);
    let out_in = omega.difference(e); // Ω \ E (bounded)
    let ext_out = ce.difference(omega); // CE \ Ω, carries CE's far field
    let ext_in = e.difference(omega); // E \ Ω, carries E's far field

    let term_in_out = interaction(&e_in, &out_in, kt)?;
    let term_in_extout = interaction(&e_in, &ext_out, kt)?;
    let term_out_inext = interaction(&out_in, &ext_in, kt)?;
    // total as t1 + (t2 + t3): IEEE addition is commutative, so the value is
    // invariant under complementing E (which maps t2 ↔ t3 and fixes t1).
    let total = term_in_out + (term_in_extout + term_out_inext);
    Ok(PerimeterBreakdown { term_in_out, term_in_extout, term_out_inext, total, s: kt.s() })
}

/// Global fractional perimeter of a bounded set: L(E, CE) with far closure.
/// The kernel table must have been built with Ω = E (which also enforces
/// R ≥ diam E, so no interior pair is lost to truncation).
pub fn global_perimeter(e: &CellSet, kt: &KernelTable) -> Result<f64> {
    if !matches!(e.far(), FarField::Empty) {
        return Err(FracError::InvalidParameter {
            name: "e",
            reason: "global perimeter requires a bounded set".into(),
        });
    }
    Ok(perimeter_in(e, e, kt)?.total)
}

/// Grid BV perimeter: h^{n−1} × (number of cell faces separating E from its
/// complement). For smooth shapes this converges to the ℓ¹ (staircase)
/// perimeter — 8r for a disc of radius r, not 2πr.
pub fn classical_perimeter(e: &CellSet) -> Result<f64> {
    if !matches!(e.far(), FarField::Empty) {
        return Err(FracError::InvalidParameter {
            name: "e",
            reason: "classical perimeter requires a bounded set".into(),
        });
    }
    let grid = *e.grid();
    let offs: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    let dirs = if grid.dim == 1 { &offs[..2] } else { &offs[..] };
    let mut faces = 0usize;
    for i in e.iter() {
        let (ix, iy) = grid.coords(i);
        for &(dx, dy) in dirs {
            let jx = ix as i64 + dx;
            let jy = iy as i64 + dy;
            let inside = grid.in_bounds(jx, jy) && e.contains(grid.index(jx as usize, jy as usize));
            if !inside {
                faces += 1;
            }
        }
    }
    let n = grid.dim as i32;
    Ok(grid.h().powi(n - 1) * faces as f64)
}

/// One row of a perimeter-ratio sweep.
#[derive(Debug, Clone, Copy)]
pub struct RatioRow {
    pub s: f64,
    pub ratio: f64,
}

/// Result of [`asymptotic_ratio`]: the per-order ratio table, the grid BV
/// perimeter ratio it should approach as s → 1, and whether the sweep
/// actually trends that way.
#[derive(Debug, Clone)]
pub struct RatioTable {
    /// Rows sorted by ascending s.
    pub rows: Vec<RatioRow>,
    /// Per(E)/Per(F) in the grid BV convention (staircase bias cancels for
    /// comparably oriented sets).
    pub classical_ratio: f64,
    /// Whether the ratio at the largest s is closer to `classical_ratio`
    /// than the ratio at the smallest s.
    pub trending_toward_classical: bool,
}

/// Sweeps the global-perimeter ratio Per_s(E)/Per_s(F) over orders,
/// reporting the trend toward the classical (grid BV) ratio as s → 1. The
/// factory builds the kernel table for a given (order, domain) pair — the
/// two sets generally live at different diameters, so each needs its own
/// table per order.
pub fn asymptotic_ratio(
    e: &CellSet,
    f: &CellSet,
    s_list: &[f64],
    mut kt_for: impl FnMut(f64, &CellSet) -> Result<KernelTable>,
) -> Result<RatioTable> {
    if s_list.is_empty() {
        return Err(FracError::InvalidParameter {
            name: "s_list",
            reason: "at least one order required".into(),
        });
    }
    let per_f_classical = classical_perimeter(f)?;
    if f.is_empty_on_grid() || per_f_classical <= 0.0 {
        return Err(FracError::EmptyDomain("reference set has no perimeter".into()));
    }
    let classical_ratio = classical_perimeter(e)? / per_f_classical;
    let mut rows = Vec::with_capacity(s_list.len());
    let mut orders = s_list.to_vec();
    orders.sort_by(|a, b| a.partial_cmp(b).expect("orders must not be NaN"));
    orders.dedup();
    for &s in &orders {
        let kt_e = kt_for(s, e)?;
        let kt_f = kt_for(s, f)?;
        let pe = global_perimeter(e, &kt_e)?;
        let pf = global_perimeter(f, &kt_f)?;
        if pf <= 0.0 {
            return Err(FracError::EmptyDomain("reference set has zero perimeter".into()));
        }
        rows.push(RatioRow { s, ratio: pe / pf });
    }
    let trending_toward_classical = if rows.len() >= 2 {
        let first = rows.first().expect("nonempty");
        let last = rows.last().expect("nonempty");
        (last.ratio - classical_ratio).abs() <= (first.ratio - classical_ratio).abs()
    } else {
        true
    };
    Ok(RatioTable { rows, classical_ratio, trending_toward_classical })
}

/// Result of [`alpha_bar`]: the per-order values of the rescaled exterior
/// density s·∫_{CB₁} χ_{E₀}(x) |x|^{−n−s} dx and their extrapolated s → 0
/// limit.
#[derive(Debug, Clone)]
pub struct AlphaReport {
    /// (s, value) rows in the order evaluated (descending s).
    pub per_s: Vec<(f64, f64)>,
    /// Linear extrapolation to s = 0 from the two smallest orders (equals
    /// the single value if only one order was given).
    pub extrapolated: f64,
}

/// The rescaled exterior mass functional of a far-reaching set E₀, whose
/// s → 0 limit measures the asymptotic directional density of E₀ (its cone
/// opening for cone-like sets: the full sphere measure for all of space,
/// half of it for a half-plane). Cells with |x| ≤ 1 are excluded (the
/// functional integrates over the complement of the unit ball); everything
/// beyond `r_trunc` is integrated analytically from the set's far cone.
pub fn alpha_bar(e0: &CellSet, s_list: &[f64], r_trunc: f64) -> Result<AlphaReport> {
    if s_list.is_empty() {
        return Err(FracError::InvalidParameter {
            name: "s_list",
            reason: "at least one order required".into(),
        });
    }
    if !(r_trunc > 1.0) {
        return Err(FracError::InvalidParameter {
            name: "r_trunc",
            reason: format!("truncation radius must exceed the unit ball, got {r_trunc}"),
        });
    }
    let grid = *e0.grid();
    let n = grid.dim as f64;
    let hn = grid.cell_measure();
    // Radii of member cells in the annulus 1 < |x| ≤ R, fixed order.
    let mut radii = Vec::new();
    for i in e0.iter() {
        let c = grid.center(i);
        let r = if grid.dim == 1 { c[0].abs() } else { (c[0] * c[0] + c[1] * c[1]).sqrt() };
        if r > 1.0 && r <= r_trunc {
            radii.push(r);
        }
    }
    let cone = far_measure(grid.dim, e0.far());

    let mut orders: Vec<f64> = s_list.to_vec();
    orders.sort_by(|a, b| b.partial_cmp(a).expect("orders must not be NaN"));
    orders.dedup();
    let mut per_s = Vec::with_capacity(orders.len());
    for &s in &orders {
        if !(s > 0.0 && s < 1.0) {
            return Err(FracError::InvalidParameter {
                name: "s_list",
                reason: format!("orders must lie in (0,1), got {s}"),
            });
        }
        let parts: Vec<f64> = radii.iter().map(|&r| hn * r.powf(-n - s)).collect();
        // s·(ring quadrature) + cone·R^{−s}: the tail s·∫_R^∞ r^{−1−s} dr
        // per unit direction equals R^{−s}.
        let value = s * pairwise_sum(&parts) + cone * r_trunc.powf(-s);
        per_s.push((s, value));
    }
    let extrapolated = if per_s.len() >= 2 {
        // Two smallest orders sit at the end of the descending list.
        let (s2, a2) = per_s[per_s.len() - 2];
        let (s1, a1) = per_s[per_s.len() - 1];
        a1 - s1 * (a2 - a1) / (s2 - s1)
    } else {
        per_s[0].1
    };
    Ok(AlphaReport { per_s, extrapolated })
}

/// Radius of the exterior tangent ball that the small-s regularity argument
/// requires: δ = exp(−(1/s₀)·log((ω_n + 2β)/(ω_n + β))), with ω_n the
/// sphere measure of the ambient dimension. Defined for s₀ ∈ (0, ½), β > 0;
/// increasing in s₀ and approaching 1 as β → 0.
pub fn small_s_ball_radius(dim: usize, beta: f64, s0: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(FracError::InvalidParameter {
            name: "beta",
            reason: format!("beta must be positive, got {beta}"),
        });
    }
    if !(s0 > 0.0 && s0 < 0.5) {
        return Err(FracError::InvalidParameter {
            name: "s0",
            reason: format!("s0 must lie in (0, 1/2), got {s0}"),
        });
    }
    let omega_n = sphere_measure(dim);
    Ok((-(1.0 / s0) * ((omega_n + 2.0 * beta) / (omega_n + beta)).ln()).exp())
}
