//! Discrete principal-value fractional mean curvature with certified
//! cancellation bounds.
//!
//! At a boundary cell x of a set E, the curvature is the signed kernel mass
//! of the complement minus the set,
//!
//! ```text
//!   H(x) = Σ_j (χ_CE(j) − χ_E(j)) · h^n · |x_j − x|^{−n−s}  +  far tail,
//! ```
//!
//! evaluated with the midpoint rule over the truncation window and arranged
//! as a principal value: antipodal cells x ± z are grouped so symmetric
//! contributions cancel exactly instead of accumulating O(h^{−s}) halves.
//! Cells closer than the inner cutoff ρ enter only as matched antipodal
//! pairs; cells beyond ρ enter individually; the constant-membership region
//! beyond the truncation radius contributes an analytic net tail.
//!
//! Two error gauges accompany the value:
//!
//! * `pv_pairing_error` — the total non-cancelling antipodal mass over the
//!   whole window plus the same-sign share of the far tail. It is a strict
//!   triangle-inequality regrouping, so |value| ≤ pv_pairing_error always
//!   holds, with equality when nothing cancels; a half-plane sampled on its
//!   boundary row is certified to zero exactly by it ((|value| −
//!   pv_pairing_error)₊ = 0), something no ρ-local bound can do, because the
//!   sample sits half a cell inside E and the boundary-parallel row of
//!   cells through x is antipodally self-mapped with equal signs — even the
//!   continuum principal value is −O(h^{−s}) there, and the row's tail
//!   extends across the entire window.
//! * `near_pairing_error` — the same gauge restricted to the pairs inside
//!   B_ρ(x). It is strictly smaller (it certifies less) and is NOT an upper
//!   bound for |value| in general; it is the meaningful yardstick for
//!   Euler–Lagrange residuals of computed minimizers, where the claim is
//!   that the residual is indistinguishable from local pairing noise.

use crate::error::{FracError, Result};
use crate::grid::{CellIndex, CellSet, FarField};
use crate::kernel::KernelTable;
use crate::perimeter::{far_measure, sphere_measure};
use crate::util::pairwise_sum;

/// Default inner-cutoff multiple of the grid spacing.
pub const DEFAULT_RHO_FACTOR: f64 = 2.0;

/// Curvature estimate at one boundary cell.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureSample {
    /// The boundary cell the curvature is evaluated at.
    pub point: CellIndex,
    /// Inner principal-value cutoff (length units).
    pub rho: f64,
    /// Signed curvature estimate, far tail included.
    pub value: f64,
    /// The analytic far contribution alone.
    pub tail_part: f64,
    /// Whole-window antipodal non-cancellation mass; always ≥ |value|.
    pub pv_pairing_error: f64,
    /// Non-cancellation mass of the pairs inside B_ρ only.
    pub near_pairing_error: f64,
}

/// Measure of far directions whose antipode carries the same membership
/// sign, in sphere-measure units.
fn same_sign_far_measure(dim: usize, far: &FarField) -> f64 {
    match far {
        FarField::Empty | FarField::Full => sphere_measure(dim),
        FarField::Cone(sec) => {
            if dim == 1 {
                let a = sec.contains(0.0);
                let b = sec.contains(std::f64::consts::PI);
                if a == b {
                    2.0
                } else {
                    0.0
                }
            } else {
                let rot = sec.rotate_half_turn();
                let both = sec.intersect(&rot).measure();
                let neither = sec.union(&rot).complement().measure();
                both + neither
            }
        }
    }
}

/// Principal-value curvature of E at boundary cell `x` with inner cutoff
/// `rho`, using the truncation radius, order, and far mass of `kt` (pair
/// weights are not involved — curvature is a point evaluation, so the
/// midpoint kernel is the consistent rule at every distance).
pub fn mean_curvature(
    e: &CellSet,
    x: CellIndex,
    rho: f64,
    kt: &KernelTable,
) -> Result<CurvatureSample> {
    let grid = *kt.grid();
    if e.grid() != &grid {
        return Err(FracError::GridMismatch("set grid differs from kernel grid".into()));
    }
    if !e.is_inner_boundary(x) {
        return Err(FracError::InvalidParameter {
            name: "x",
            reason: "curvature is defined at inner-boundary cells only".into(),
        });
    }
    let h = grid.h();
    if !(rho >= h && rho < kt.r_trunc()) {
        return Err(FracError::InvalidParameter {
            name: "rho",
            reason: format!(
                "inner cutoff must lie in [h, R) = [{h}, {}), got {rho}",
                kt.r_trunc()
            ),
        });
    }
    Ok(pv_core(e, x, rho, kt))
}

/// The evaluation itself, with validation already done. Kept separate so the
/// exact complement antisymmetry — every summand negates when E and CE swap —
/// can be verified at a shared evaluation cell, which is never an inner
/// boundary cell of both sets at once.
fn pv_core(e: &CellSet, x: CellIndex, rho: f64, kt: &KernelTable) -> CurvatureSample {
    let grid = *kt.grid();
    let h = grid.h();
    let dim = grid.dim;
    let n = dim as f64;
    let hn = grid.cell_measure();
    let s = kt.s();
    let r_trunc = kt.r_trunc();
    let wmax = kt.window_radius_cells();
    let (xx, xy) = grid.coords(x);

    // Membership sign at offset z from x: +1 on the complement, −1 on E.
    // Off-grid positions resolve by far-field direction, so every antipodal
    // pair in the window is matched.
    let sigma = |dx: i64, dy: i64| -> f64 {
        if e.contains_extended(xx as i64 + dx, xy as i64 + dy) {
            -1.0
        } else {
            1.0
        }
    };

    let mut value_parts = Vec::new();
    let mut pv_parts = Vec::new();
    let mut near_parts = Vec::new();
    // Canonical half of the window: (dy > 0) or (dy == 0 and dx > 0); the
    // antipode of each canonical offset is its negation.
    let ys: Vec<i64> = if dim == 1 { vec![0] } else { (0..=wmax).collect() };
    for &dy in &ys {
        let xs_lo = if dy == 0 { 1 } else { -wmax };
        for dx in xs_lo..=wmax {
            let d = (((dx * dx + dy * dy) as f64).sqrt()) * h;
            if d > r_trunc {
                continue;
            }
            let k = hn * d.powf(-n - s);
            let sp = sigma(dx, dy);
            let sm = sigma(-dx, -dy);
            let resid = (sp + sm).abs() * k;
            pv_parts.push(resid);
            if d < rho {
                value_parts.push((sp + sm) * k);
                near_parts.push(resid);
            } else {
                value_parts.push(sp * k);
                value_parts.push(sm * k);
            }
        }
    }

    let omega_n = sphere_measure(dim);
    let m_far = far_measure(dim, e.far());
    let tail_part = hn * kt.far_mass() * (omega_n - 2.0 * m_far) / omega_n;
    let far_same = hn * kt.far_mass() * same_sign_far_measure(dim, e.far()) / omega_n;
    pv_parts.push(far_same);

    let value = pairwise_sum(&value_parts) + tail_part;
    CurvatureSample {
        point: x,
        rho,
        value,
        tail_part,
        pv_pairing_error: pairwise_sum(&pv_parts),
        near_pairing_error: pairwise_sum(&near_parts),
    }
}

/// Curvature samples at every inner-boundary cell of E that lies inside
/// `omega`, in ascending cell order. An empty profile is valid — it is the
/// expected outcome when the solution's level sets avoid the domain
/// entirely (boundary stickiness).
pub fn curvature_profile(
    e: &CellSet,
    omega: &CellSet,
    rho: f64,
    kt: &KernelTable,
) -> Result<Vec<CurvatureSample>> {
    if e.grid() != kt.grid() || omega.grid() != kt.grid() {
        return Err(FracError::GridMismatch("profile operands on a different grid".into()));
    }
    let mut samples = Vec::new();
    for i in e.iter() {
        if omega.contains(i) && e.is_inner_boundary(i) {
            samples.push(mean_curvature(e, i, rho, kt)?);
        }
    }
    Ok(samples)
}

/// Largest |H[E](x) + H[CE](x)| over the inner-boundary cells of E inside
/// `omega` — the complement-antisymmetry defect. Swapping a set with its
/// complement negates every summand of the principal value (including the
/// analytic tail, whose far field swaps Empty↔Full), so the defect is
/// exactly +0.0; this function exposes the identity as something callers
/// can check rather than trust. Evaluation happens at inner-boundary cells
/// of E, where the complement's sample is taken at the same cell via the
/// shared core evaluation (a cell is never an inner-boundary cell of both
/// sets at once, so the complement side bypasses the boundary-cell guard
/// deliberately).
pub fn antisymmetry_defect(
    e: &CellSet,
    omega: &CellSet,
    rho: f64,
    kt: &KernelTable,
) -> Result<f64> {
    if e.grid() != kt.grid() || omega.grid() != kt.grid() {
        return Err(FracError::GridMismatch("operands on a different grid".into()));
    }
    let h = kt.grid().h();
    if !(rho >= h && rho < kt.r_trunc()) {
        return Err(FracError::InvalidParameter {
            name: "rho",
            reason: format!(
                "inner cutoff must lie in [h, R) = [{h}, {}), got {rho}",
                kt.r_trunc()
            ),
        });
    }
    let ce = e.complement();
    let mut worst = 0.0f64;
    for i in e.iter() {
        if omega.contains(i) && e.is_inner_boundary(i) {
            let a = pv_core(e, i, rho, kt);
            let b = pv_core(&ce, i, rho, kt);
            worst = worst.max((a.value + b.value).abs());
        }
    }
    Ok(worst)
}

/// Largest |value| in a profile (0 for an empty profile).
pub fn max_abs_value(samples: &[CurvatureSample]) -> f64 {
    samples.iter().map(|c| c.value.abs()).fold(0.0, f64::max)
}

/// Largest certified residual (|value| − near_pairing_error)₊ in a profile:
/// the part of the Euler–Lagrange defect that local antipodal cancellation
/// noise cannot explain. 0 for an empty profile.
pub fn max_certified_residual(samples: &[CurvatureSample]) -> f64 {
    samples
        .iter()
        .map(|c| (c.value.abs() - c.near_pairing_error).max(0.0))
        .fold(0.0, f64::max)
}
