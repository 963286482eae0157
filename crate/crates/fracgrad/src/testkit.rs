//! Seeded scenario generators and brute-force reference computations for
//! the randomized property and acceptance suites. Everything here is
//! deterministic given the seed, and nothing here is used by the solvers
//! themselves — these are the independent fixtures the solvers are checked
//! against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FracError, Result};
use crate::grid::{CellIndex, CellSet, GridSpec, ScalarField};
use crate::kernel::{KernelTable, NearRule};
use crate::perimeter::perimeter_in;
use crate::shape::Shape;

/// A grid whose domain is a 3×3 cell block: small enough that every level
/// problem can be checked against exhaustive enumeration of all 2⁹
/// indicator configurations.
pub fn tiny_oracle_instance(s: f64) -> Result<(GridSpec, CellSet, KernelTable)> {
    let grid = GridSpec::new(2, [-1.05, -1.05], 2.1, 21)?;
    let omega = Shape::Rect { min: [-0.16, -0.16], max: [0.16, 0.16] }.rasterize(grid);
    debug_assert_eq!(omega.count(), 9);
    let kt = KernelTable::build(grid, &omega, 0.5, s, NearRule::Graded(8))?;
    Ok((grid, omega, kt))
}

/// Uniform random datum in [lo, hi) on every exterior cell and at infinity;
/// interior cells start at `lo` (they are unknowns anyway).
pub fn random_datum(
    grid: GridSpec,
    omega: &CellSet,
    rng: &mut ChaCha8Rng,
    lo: f64,
    hi: f64,
) -> ScalarField {
    let far = rng.gen_range(lo..hi);
    let mut phi = ScalarField::constant(grid, omega.clone(), lo, far)
        .expect("generator domains are valid");
    for c in 0..grid.num_cells() {
        if !omega.contains(c) {
            phi.values[c] = rng.gen_range(lo..hi);
        }
    }
    phi
}

/// Random datum quantized to `levels` evenly spaced values spanning
/// [lo, hi]: keeps the threshold count (and hence solve time) small while
/// still exercising every code path.
pub fn quantized_random_datum(
    grid: GridSpec,
    omega: &CellSet,
    rng: &mut ChaCha8Rng,
    levels: usize,
    lo: f64,
    hi: f64,
) -> ScalarField {
    assert!(levels >= 2, "need at least two distinct levels");
    let step = (hi - lo) / (levels - 1) as f64;
    let draw = |rng: &mut ChaCha8Rng| lo + step * rng.gen_range(0..levels) as f64;
    let far = draw(rng);
    let mut phi = ScalarField::constant(grid, omega.clone(), lo, far)
        .expect("generator domains are valid");
    for c in 0..grid.num_cells() {
        if !omega.contains(c) {
            phi.values[c] = draw(rng);
        }
    }
    phi
}

/// Brute-force reference solution of one level problem, by enumerating all
/// 2^|Ω| indicator configurations and scoring each with the relative
/// nonlocal perimeter.
#[derive(Debug, Clone, Copy)]
pub struct BruteForceLevel {
    /// Minimal relative perimeter over all configurations.
    pub cut_value: f64,
    /// Bitwise AND over all optimal configurations (bit b ↔ the b-th domain
    /// cell in ascending index order): the inclusion-minimal minimizer.
    pub meet_mask: u64,
    /// Bitwise OR over all optimal configurations: the inclusion-maximal
    /// minimizer.
    pub join_mask: u64,
}

/// Enumerates every indicator configuration on the domain at threshold `t`
/// (exterior fixed to the datum superlevel) and returns the exact minimum
/// and the lattice meet/join of the argmin family. Limited to domains of at
/// most 20 cells — this is an oracle, not a solver.
pub fn brute_force_level(
    t: f64,
    phi: &ScalarField,
    kt: &KernelTable,
    omega: &CellSet,
) -> Result<BruteForceLevel> {
    let cells = omega.cells();
    let m = cells.len();
    if m > 20 {
        return Err(FracError::InvalidParameter {
            name: "omega",
            reason: format!("brute force is capped at 20 domain cells, got {m}"),
        });
    }
    // Exterior part of every competitor: the datum superlevel off the
    // domain (including its far field).
    let mut exterior = phi.superlevel(t);
    for &c in &cells {
        exterior.remove(c);
    }

    let mut best = f64::INFINITY;
    let mut values = Vec::with_capacity(1 << m);
    for mask in 0..(1_u64 << m) {
        let mut e = exterior.clone();
        for (b, &c) in cells.iter().enumerate() {
            if mask >> b & 1 == 1 {
                e.insert(c);
            }
        }
        let val = perimeter_in(&e, omega, kt)?.total;
        best = best.min(val);
        values.push(val);
    }
    let tol = 1e-9 * best.max(1.0);
    let mut meet = (1_u64 << m) - 1;
    let mut join = 0_u64;
    for (mask, &val) in values.iter().enumerate() {
        if (val - best).abs() <= tol {
            meet &= mask as u64;
            join |= mask as u64;
        }
    }
    Ok(BruteForceLevel { cut_value: best, meet_mask: meet, join_mask: join })
}

/// Packs a set's membership pattern on the listed cells into a mask (bit b
/// ↔ `cells[b]`), for comparison against brute-force masks.
pub fn mask_of(set: &CellSet, cells: &[CellIndex]) -> u64 {
    cells
        .iter()
        .enumerate()
        .map(|(b, &c)| (set.contains(c) as u64) << b)
        .sum()
}

/// A randomized 16² scenario: box [−1.6, 1.6]², truncation radius 1.0, a
/// random ball or rectangle domain sized to respect both the truncation
/// window (domain diameter ≤ R) and the edge margin, and a quantized random
/// datum with values in a random range. Deterministic in the seed.
pub fn random_instance(seed: u64, s: f64) -> Result<(ScalarField, KernelTable)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = GridSpec::new(2, [-1.6, -1.6], 3.2, 16)?;
    let shape = if rng.gen::<bool>() {
        Shape::Ball {
            center: [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)],
            radius: rng.gen_range(0.2..0.34),
        }
    } else {
        let half_x = rng.gen_range(0.15..0.35);
        let half_y = rng.gen_range(0.15..0.35);
        Shape::Rect { min: [-half_x, -half_y], max: [half_x, half_y] }
    };
    let omega = shape.rasterize(grid);
    debug_assert!(omega.count() > 0);
    let kt = KernelTable::build(grid, &omega, 1.0, s, NearRule::Graded(8))?;
    let lo = rng.gen_range(-2.0..0.0);
    let hi = lo + rng.gen_range(0.5..2.5);
    let levels = rng.gen_range(3..7);
    let phi = quantized_random_datum(grid, &omega, &mut rng, levels, lo, hi);
    Ok((phi, kt))
}

/// A cellwise-ordered pair of data on the same random instance: the first
/// dominates the second everywhere (with exact ties on a random subset of
/// cells). Returns the pair plus the kernel table they share.
pub fn ordered_datum_pair(
    seed: u64,
    s: f64,
) -> Result<(ScalarField, ScalarField, KernelTable)> {
    let (phi_low, kt) = random_instance(seed, s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x07d3_7ed1);
    let step = 0.25;
    let mut phi_high = phi_low.clone();
    for c in 0..phi_high.grid.num_cells() {
        if !phi_high.omega.contains(c) {
            phi_high.values[c] += step * rng.gen_range(0..4) as f64;
        }
    }
    phi_high.far_value += step * rng.gen_range(0..4) as f64;
    Ok((phi_high, phi_low, kt))
}
