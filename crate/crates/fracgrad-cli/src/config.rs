//! Scenario configuration: a strict TOML schema (sections of `key = value`
//! pairs) describing a grid, a domain shape, exterior data, solver options,
//! requested diagnostics, and a list of machine-checkable assertions.
//!
//! The schema rejects unknown keys at every nesting level, so a typo in a
//! config file is a parse error rather than a silently ignored setting.

use anyhow::{bail, Context, Result};
use fracgrad::{NearRule, Shape, ThresholdRule};
use serde::Deserialize;
use std::path::Path;

/// Which pipeline a scenario drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Exterior-data minimization on a domain: kernel build, per-threshold
    /// cuts, extremal fields, diagnostics, per-instance artifacts.
    Solve,
    /// Global perimeter of two bounded sets across orders and resolutions,
    /// reported as ratio rows (scaled-copy and shared-grid modes).
    PerimeterRatio,
    /// Small-order angular-density evaluation of far-reaching sets.
    Alpha,
}

/// Grid box and refinement ladder.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Ambient dimension (1 or 2). Defaults to 2.
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Lower-left corner of the grid box.
    pub origin: [f64; 2],
    /// Side length of the (square) grid box.
    pub extent: f64,
    /// Cells per axis for each refinement level, strictly increasing.
    pub levels: Vec<usize>,
}

fn default_dim() -> usize {
    2
}

/// Geometry description; nests via `parts` for composite shapes.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeDesc {
    Ball(BallDesc),
    Rect(RectDesc),
    Halfplane(HalfplaneDesc),
    NotchedDisc(NotchedDiscDesc),
    Union(PartsDesc),
    Intersection(PartsDesc),
    /// First part minus the union of the remaining parts.
    Difference(PartsDesc),
    Complement(ComplementDesc),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallDesc {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectDesc {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfplaneDesc {
    pub normal: [f64; 2],
    pub offset: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NotchedDiscDesc {
    pub slope: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartsDesc {
    pub parts: Vec<ShapeDesc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplementDesc {
    pub part: Box<ShapeDesc>,
}

impl ShapeDesc {
    /// Builds the analytic shape, validating part counts.
    pub fn to_shape(&self) -> Result<Shape> {
        Ok(match self {
            ShapeDesc::Ball(b) => {
                if !(b.radius > 0.0) {
                    bail!("ball radius must be positive, got {}", b.radius);
                }
                Shape::Ball { center: b.center, radius: b.radius }
            }
            ShapeDesc::Rect(r) => {
                if !(r.min[0] < r.max[0] && r.min[1] < r.max[1]) {
                    bail!("rect needs min < max on both axes");
                }
                Shape::Rect { min: r.min, max: r.max }
            }
            ShapeDesc::Halfplane(h) => {
                if h.normal[0] == 0.0 && h.normal[1] == 0.0 {
                    bail!("halfplane normal must be nonzero");
                }
                Shape::Halfplane { normal: h.normal, offset: h.offset }
            }
            ShapeDesc::NotchedDisc(n) => {
                if !(n.slope > 0.0) {
                    bail!("notched_disc slope must be positive, got {}", n.slope);
                }
                Shape::NotchedDisc { slope: n.slope }
            }
            ShapeDesc::Union(p) => {
                if p.parts.is_empty() {
                    bail!("union needs at least one part");
                }
                Shape::Union(p.parts.iter().map(|s| s.to_shape()).collect::<Result<_>>()?)
            }
            ShapeDesc::Intersection(p) => {
                if p.parts.is_empty() {
                    bail!("intersection needs at least one part");
                }
                Shape::Intersection(p.parts.iter().map(|s| s.to_shape()).collect::<Result<_>>()?)
            }
            ShapeDesc::Difference(p) => {
                if p.parts.len() < 2 {
                    bail!("difference needs a base part and at least one part to remove");
                }
                let base = p.parts[0].to_shape()?;
                let removed: Vec<Shape> =
                    p.parts[1..].iter().map(|s| s.to_shape()).collect::<Result<_>>()?;
                Shape::Intersection(vec![
                    base,
                    Shape::Complement(Box::new(Shape::Union(removed))),
                ])
            }
            ShapeDesc::Complement(c) => Shape::Complement(Box::new(c.part.to_shape()?)),
        })
    }
}

/// Exterior data description.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatumDesc {
    /// The same value everywhere outside the domain (and beyond the
    /// truncation radius).
    Constant(ConstantDatum),
    /// 1 inside the shape, 0 outside; the beyond-truncation value follows
    /// the shape's behavior at infinity (which must be constant).
    Indicator(IndicatorDatum),
    /// Radial tent `height · (1 − |x − center|/radius)₊`; 0 beyond the
    /// truncation radius.
    Bump(BumpDatum),
    /// Last containing piece wins; `default` where no piece contains the
    /// point; explicit beyond-truncation constant.
    Piecewise(PiecewiseDatum),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantDatum {
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorDatum {
    pub shape: ShapeDesc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpDatum {
    pub center: [f64; 2],
    pub radius: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseDatum {
    pub default: f64,
    pub far: f64,
    pub pieces: Vec<PieceDesc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceDesc {
    pub shape: ShapeDesc,
    pub value: f64,
}

/// Quadrature rule for touching cell pairs.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NearRuleDesc {
    Graded(GradedDesc),
    Subdivided(SubdividedDesc),
    Exact1d(Exact1dDesc),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradedDesc {
    pub points: u32,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubdividedDesc {
    pub points: u32,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exact1dDesc {}

impl NearRuleDesc {
    pub fn to_rule(self) -> NearRule {
        match self {
            NearRuleDesc::Graded(g) => NearRule::Graded(g.points),
            NearRuleDesc::Subdivided(s) => NearRule::Subdivided(s.points),
            NearRuleDesc::Exact1d(_) => NearRule::Exact1d,
        }
    }
}

fn default_near_rule() -> NearRuleDesc {
    NearRuleDesc::Graded(GradedDesc { points: 8 })
}

/// Threshold family selection for the level problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRuleDesc {
    DataLevels,
    Midpoint,
}

impl ThresholdRuleDesc {
    pub fn to_rule(self) -> ThresholdRule {
        match self {
            ThresholdRuleDesc::DataLevels => ThresholdRule::DataLevels,
            ThresholdRuleDesc::Midpoint => ThresholdRule::Midpoint,
        }
    }
}

fn default_threshold_rule() -> ThresholdRuleDesc {
    ThresholdRuleDesc::DataLevels
}

fn default_verify_trials() -> usize {
    16
}

fn default_seed() -> u64 {
    0x5eed
}

/// Solver options for `kind = "solve"` scenarios.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Fractional orders to solve at, each in (0, 1).
    pub s_list: Vec<f64>,
    /// Truncation radius of the kernel; must cover the domain diameter and
    /// fit inside the grid box around every domain cell.
    pub r_trunc: f64,
    #[serde(default = "default_near_rule")]
    pub near_rule: NearRuleDesc,
    #[serde(default = "default_threshold_rule")]
    pub threshold_rule: ThresholdRuleDesc,
    /// Random-bump competitors per field in the minimality check.
    #[serde(default = "default_verify_trials")]
    pub verify_trials: usize,
    /// Seed for the minimality check's perturbation stream.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

/// One side of a perimeter-ratio scenario: a bounded shape on its own box.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioSide {
    pub shape: ShapeDesc,
    pub origin: [f64; 2],
    pub extent: f64,
    pub r_trunc: f64,
}

/// Settings for `kind = "perimeter_ratio"` scenarios.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioSection {
    /// Fractional orders, each in (0, 1).
    pub s_list: Vec<f64>,
    /// Cells per axis for each refinement level (both sides use the same
    /// cell count, so scaled boxes keep geometrically similar grids).
    pub levels: Vec<usize>,
    pub numerator: RatioSide,
    pub denominator: RatioSide,
    #[serde(default = "default_near_rule")]
    pub near_rule: NearRuleDesc,
    /// Also evaluate both shapes on the numerator's box (one shared cell
    /// size), reported as `same_h` rows.
    #[serde(default)]
    pub same_h: bool,
}

/// Settings for `kind = "alpha"` scenarios.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSection {
    /// Fractional orders, each in (0, 1); evaluated in descending order.
    pub s_list: Vec<f64>,
    /// Ring-quadrature truncation radius; must exceed 1.
    pub r_trunc: f64,
    /// Named far-reaching sets to evaluate.
    pub sets: Vec<NamedSet>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSet {
    pub name: String,
    pub shape: ShapeDesc,
}

/// Extra per-run artifacts.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticDesc {
    /// Refinement-ladder continuity report per order (needs ≥ 3 levels):
    /// `report.json` under the order's directory, plus level-set collision
    /// coordinates `collisions.csv`.
    Continuity(EmptyDesc),
    /// Curvature samples along the boundary of the solution's superlevel
    /// set at threshold `t`, per instance: `profile.csv`.
    Curvature(CurvatureDesc),
    /// Neighborhood-classified boundary raster of the solution's superlevel
    /// set at threshold `t`, finest level per order: `boundary.txt`.
    MeasureBoundary(MeasureBoundaryDesc),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmptyDesc {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureDesc {
    pub t: f64,
    /// Inner cutoff as a multiple of the cell size.
    pub rho_factor: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureBoundaryDesc {
    pub t: f64,
}

/// A machine-checkable claim about the scenario's outputs. Each produces
/// one PASS/FAIL line with a detail string.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssertionDesc {
    /// Every solved field equals `value` at every domain cell, bitwise.
    ConstantSolution(ConstantSolutionA),
    /// Every instance's minimized energy is exactly 0.
    ZeroEnergy(EmptyDesc),
    /// Both extremal fields vanish on the domain at order `s`, every level.
    UZeroInOmega(OrderA),
    /// max |u_max| over the domain at the finest level of order `s` is at
    /// least `min_max_abs`.
    UNonzeroInOmega(UNonzeroA),
    /// The one-layer boundary jump at the finest level of order `s` is
    /// within `rtol` of `value`; all levels reported.
    BoundaryJumpNear(BoundaryJumpA),
    /// Ladder verdict: interior oscillation vanishing under refinement.
    InteriorContinuity(OrderA),
    /// Ladder verdict: interior oscillation persists under refinement.
    InteriorDiscontinuity(OrderA),
    /// Ladder verdict: boundary jump vanishing under refinement.
    BoundaryContinuity(OrderA),
    /// Ladder verdict: boundary jump persists under refinement.
    BoundaryDiscontinuity(OrderA),
    /// The perturbation check certifies both extremal fields of every
    /// instance as minimal.
    Minimal(EmptyDesc),
    /// The solution's superlevel set at threshold `t` (order `s`, finest
    /// level) covers part but not all of the domain.
    LevelSetProper(LevelSetProperA),
    /// The candidate's domain-relative perimeter is strictly below every
    /// competitor's; all sets must share the candidate's exterior trace.
    PerimeterStrictlySmallest(PerimeterSmallestA),
    /// Domain-relative perimeter equals global perimeter minus the core ×
    /// complement-of-hull interaction, within `rtol`, for each listed set.
    DecompositionIdentity(DecompositionA),
    /// The smoothed descent solver reproduces the cut solver's energy within
    /// `rtol` on one (order, level) instance.
    SmoothedMatches(SmoothedA),
    /// Certified curvature residual along the solution's superlevel boundary
    /// is nonincreasing across the refinement ladder.
    ElResidualMonotone(ElResidualA),
    /// Scaled-copy perimeter ratios match the scale factor to the power
    /// `dim − s`, within `rtol`, at every order and level.
    RatioMatchesScaling(RtolA),
    /// Shared-grid perimeter ratios at the finest level match the same
    /// power law within `rtol` at the listed orders (coarser levels and
    /// other orders reported, not asserted).
    SameHWithin(SameHA),
    /// The named set's angular density at the smallest order is within
    /// `rtol` of `value`.
    AlphaEquals(AlphaEqualsA),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantSolutionA {
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderA {
    pub s: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UNonzeroA {
    pub s: f64,
    pub min_max_abs: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryJumpA {
    pub s: f64,
    pub value: f64,
    pub rtol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSetProperA {
    pub s: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerimeterSmallestA {
    pub s: f64,
    pub candidate: ShapeDesc,
    pub competitors: Vec<ShapeDesc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionA {
    pub s: f64,
    pub rtol: f64,
    pub sets: Vec<ShapeDesc>,
    pub core: ShapeDesc,
    pub hull: ShapeDesc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothedA {
    pub s: f64,
    pub level: usize,
    pub eps: f64,
    pub rtol: f64,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElResidualA {
    pub s: f64,
    pub t: f64,
    pub rho_factor: f64,
    /// Additionally require the raw (uncertified) residual maximum to be
    /// nonincreasing across the ladder.
    #[serde(default)]
    pub assert_raw: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtolA {
    pub rtol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SameHA {
    pub rtol: f64,
    pub s_values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaEqualsA {
    pub set: String,
    pub value: f64,
    pub rtol: f64,
}

/// One scenario file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Scenario name; becomes the output subdirectory.
    pub name: String,
    pub kind: ScenarioKind,
    pub grid: Option<GridSection>,
    pub domain: Option<ShapeDesc>,
    pub datum: Option<DatumDesc>,
    pub solver: Option<SolverSection>,
    pub ratio: Option<RatioSection>,
    pub alpha: Option<AlphaSection>,
    #[serde(default)]
    pub diagnostics: Vec<DiagnosticDesc>,
    #[serde(default)]
    pub assertions: Vec<AssertionDesc>,
}

fn check_orders(list: &[f64], what: &str) -> Result<()> {
    for &s in list {
        if !(s > 0.0 && s < 1.0) {
            bail!("{what} orders must lie strictly between 0 and 1, got {s}");
        }
    }
    Ok(())
}

fn check_levels(levels: &[usize], what: &str) -> Result<()> {
    for pair in levels.windows(2) {
        if pair[1] <= pair[0] {
            bail!("{what} levels must be strictly increasing, got {levels:?}");
        }
    }
    for &n in levels {
        if n < 4 {
            bail!("{what} levels must have at least 4 cells per axis, got {n}");
        }
    }
    Ok(())
}

impl ScenarioFile {
    /// Parses and validates a scenario from TOML text.
    pub fn from_toml(text: &str) -> Result<ScenarioFile> {
        let cfg: ScenarioFile = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses and validates a scenario file from disk.
    pub fn load(path: &Path) -> Result<ScenarioFile> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading scenario config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in scenario config {}", path.display()))
    }

    /// Cross-field coherence checks that the type system cannot express.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
        {
            bail!(
                "scenario name must be nonempty lowercase [a-z0-9_-], got {:?}",
                self.name
            );
        }
        let forbid = |absent: bool, section: &str| -> Result<()> {
            if !absent {
                bail!("section [{section}] does not apply to this scenario kind");
            }
            Ok(())
        };
        match self.kind {
            ScenarioKind::Solve => {
                let grid = self.grid.as_ref().context("solve scenarios need a [grid] section")?;
                self.domain.as_ref().context("solve scenarios need a [domain] section")?;
                self.datum.as_ref().context("solve scenarios need a [datum] section")?;
                let solver =
                    self.solver.as_ref().context("solve scenarios need a [solver] section")?;
                forbid(self.ratio.is_none(), "ratio")?;
                forbid(self.alpha.is_none(), "alpha")?;
                if !(grid.dim == 1 || grid.dim == 2) {
                    bail!("grid dim must be 1 or 2, got {}", grid.dim);
                }
                if !(grid.extent > 0.0) {
                    bail!("grid extent must be positive, got {}", grid.extent);
                }
                check_levels(&grid.levels, "grid")?;
                check_orders(&solver.s_list, "solver")?;
                if !(solver.r_trunc > 0.0) {
                    bail!("solver r_trunc must be positive, got {}", solver.r_trunc);
                }
                self.validate_solve_assertions(grid, solver)?;
            }
            ScenarioKind::PerimeterRatio => {
                let ratio =
                    self.ratio.as_ref().context("perimeter_ratio scenarios need a [ratio] section")?;
                forbid(self.grid.is_none(), "grid")?;
                forbid(self.domain.is_none(), "domain")?;
                forbid(self.datum.is_none(), "datum")?;
                forbid(self.solver.is_none(), "solver")?;
                forbid(self.alpha.is_none(), "alpha")?;
                if !self.diagnostics.is_empty() {
                    bail!("diagnostics apply to solve scenarios only");
                }
                check_orders(&ratio.s_list, "ratio")?;
                check_levels(&ratio.levels, "ratio")?;
                for (side, name) in
                    [(&ratio.numerator, "numerator"), (&ratio.denominator, "denominator")]
                {
                    if !(side.extent > 0.0 && side.r_trunc > 0.0) {
                        bail!("ratio {name} extent and r_trunc must be positive");
                    }
                    side.shape.to_shape()?;
                }
                for a in &self.assertions {
                    match a {
                        AssertionDesc::RatioMatchesScaling(r) => {
                            if !(r.rtol > 0.0) {
                                bail!("ratio_matches_scaling rtol must be positive");
                            }
                        }
                        AssertionDesc::SameHWithin(sh) => {
                            if !ratio.same_h {
                                bail!("same_h_within requires `same_h = true` in [ratio]");
                            }
                            for s in &sh.s_values {
                                if !ratio.s_list.contains(s) {
                                    bail!("same_h_within order {s} is not in the ratio s_list");
                                }
                            }
                        }
                        other => bail!(
                            "assertion {:?} does not apply to perimeter_ratio scenarios",
                            kind_name(other)
                        ),
                    }
                }
            }
            ScenarioKind::Alpha => {
                let alpha =
                    self.alpha.as_ref().context("alpha scenarios need an [alpha] section")?;
                let grid = self.grid.as_ref().context("alpha scenarios need a [grid] section")?;
                forbid(self.domain.is_none(), "domain")?;
                forbid(self.datum.is_none(), "datum")?;
                forbid(self.solver.is_none(), "solver")?;
                forbid(self.ratio.is_none(), "ratio")?;
                if !self.diagnostics.is_empty() {
                    bail!("diagnostics apply to solve scenarios only");
                }
                check_orders(&alpha.s_list, "alpha")?;
                check_levels(&grid.levels, "grid")?;
                if !(alpha.r_trunc > 1.0) {
                    bail!("alpha r_trunc must exceed 1, got {}", alpha.r_trunc);
                }
                if alpha.sets.is_empty() {
                    bail!("alpha scenarios need at least one named set");
                }
                for set in &alpha.sets {
                    set.shape.to_shape()?;
                }
                for a in &self.assertions {
                    match a {
                        AssertionDesc::AlphaEquals(ae) => {
                            if !alpha.sets.iter().any(|s| s.name == ae.set) {
                                bail!("alpha_equals names unknown set {:?}", ae.set);
                            }
                            if !(ae.rtol > 0.0) {
                                bail!("alpha_equals rtol must be positive");
                            }
                        }
                        other => bail!(
                            "assertion {:?} does not apply to alpha scenarios",
                            kind_name(other)
                        ),
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_solve_assertions(&self, grid: &GridSection, solver: &SolverSection) -> Result<()> {
        let has_order = |s: f64| solver.s_list.contains(&s);
        let need_order = |s: f64, kind: &str| -> Result<()> {
            if !has_order(s) {
                bail!("assertion {kind} references order {s}, which is not in the solver s_list");
            }
            Ok(())
        };
        for a in &self.assertions {
            match a {
                AssertionDesc::ConstantSolution(_) | AssertionDesc::ZeroEnergy(_) => {}
                AssertionDesc::Minimal(_) => {
                    if solver.verify_trials == 0 {
                        bail!("the minimal assertion needs solver verify_trials > 0");
                    }
                }
                AssertionDesc::UZeroInOmega(o) => need_order(o.s, "u_zero_in_omega")?,
                AssertionDesc::UNonzeroInOmega(u) => {
                    need_order(u.s, "u_nonzero_in_omega")?;
                    if !(u.min_max_abs > 0.0) {
                        bail!("u_nonzero_in_omega min_max_abs must be positive");
                    }
                }
                AssertionDesc::BoundaryJumpNear(b) => {
                    need_order(b.s, "boundary_jump_near")?;
                    if !(b.rtol > 0.0) {
                        bail!("boundary_jump_near rtol must be positive");
                    }
                }
                AssertionDesc::InteriorContinuity(o)
                | AssertionDesc::InteriorDiscontinuity(o)
                | AssertionDesc::BoundaryContinuity(o)
                | AssertionDesc::BoundaryDiscontinuity(o) => {
                    need_order(o.s, "a ladder-verdict assertion")?;
                    if grid.levels.len() < 3 {
                        bail!("ladder-verdict assertions need at least 3 refinement levels");
                    }
                }
                AssertionDesc::LevelSetProper(l) => need_order(l.s, "level_set_proper")?,
                AssertionDesc::PerimeterStrictlySmallest(p) => {
                    need_order(p.s, "perimeter_strictly_smallest")?;
                    if p.competitors.is_empty() {
                        bail!("perimeter_strictly_smallest needs at least one competitor");
                    }
                    p.candidate.to_shape()?;
                    for c in &p.competitors {
                        c.to_shape()?;
                    }
                }
                AssertionDesc::DecompositionIdentity(d) => {
                    need_order(d.s, "decomposition_identity")?;
                    if !(d.rtol > 0.0) {
                        bail!("decomposition_identity rtol must be positive");
                    }
                    if d.sets.is_empty() {
                        bail!("decomposition_identity needs at least one set");
                    }
                    for x in &d.sets {
                        x.to_shape()?;
                    }
                    d.core.to_shape()?;
                    d.hull.to_shape()?;
                }
                AssertionDesc::SmoothedMatches(m) => {
                    need_order(m.s, "smoothed_matches")?;
                    if !grid.levels.contains(&m.level) {
                        bail!(
                            "smoothed_matches level {} is not in the grid levels",
                            m.level
                        );
                    }
                    if !(m.eps > 0.0 && m.rtol > 0.0 && m.tol > 0.0 && m.max_iter > 0) {
                        bail!("smoothed_matches needs positive eps, rtol, tol, max_iter");
                    }
                }
                AssertionDesc::ElResidualMonotone(e) => {
                    need_order(e.s, "el_residual_monotone")?;
                    if !(e.rho_factor >= 1.0) {
                        bail!("el_residual_monotone rho_factor must be at least 1");
                    }
                }
                AssertionDesc::RatioMatchesScaling(_)
                | AssertionDesc::SameHWithin(_)
                | AssertionDesc::AlphaEquals(_) => {
                    bail!(
                        "assertion {:?} does not apply to solve scenarios",
                        kind_name(a)
                    );
                }
            }
        }
        Ok(())
    }
}

/// Snake-case tag of an assertion, for labels and error messages.
pub fn kind_name(a: &AssertionDesc) -> &'static str {
    match a {
        AssertionDesc::ConstantSolution(_) => "constant_solution",
        AssertionDesc::ZeroEnergy(_) => "zero_energy",
        AssertionDesc::UZeroInOmega(_) => "u_zero_in_omega",
        AssertionDesc::UNonzeroInOmega(_) => "u_nonzero_in_omega",
        AssertionDesc::BoundaryJumpNear(_) => "boundary_jump_near",
        AssertionDesc::InteriorContinuity(_) => "interior_continuity",
        AssertionDesc::InteriorDiscontinuity(_) => "interior_discontinuity",
        AssertionDesc::BoundaryContinuity(_) => "boundary_continuity",
        AssertionDesc::BoundaryDiscontinuity(_) => "boundary_discontinuity",
        AssertionDesc::Minimal(_) => "minimal",
        AssertionDesc::LevelSetProper(_) => "level_set_proper",
        AssertionDesc::PerimeterStrictlySmallest(_) => "perimeter_strictly_smallest",
        AssertionDesc::DecompositionIdentity(_) => "decomposition_identity",
        AssertionDesc::SmoothedMatches(_) => "smoothed_matches",
        AssertionDesc::ElResidualMonotone(_) => "el_residual_monotone",
        AssertionDesc::RatioMatchesScaling(_) => "ratio_matches_scaling",
        AssertionDesc::SameHWithin(_) => "same_h_within",
        AssertionDesc::AlphaEquals(_) => "alpha_equals",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = r#"
        name = "mini"
        kind = "solve"

        [grid]
        origin = [-1.05, -1.05]
        extent = 2.1
        levels = [21]

        [domain]
        kind = "rect"
        min = [-0.16, -0.16]
        max = [0.16, 0.16]

        [datum]
        kind = "constant"
        value = 2.0

        [solver]
        s_list = [0.5]
        r_trunc = 0.5

        [[assertions]]
        kind = "constant_solution"
        value = 2.0
    "#;

    #[test]
    fn parses_a_minimal_solve_scenario() {
        let cfg = ScenarioFile::from_toml(MINI).unwrap();
        assert_eq!(cfg.name, "mini");
        assert_eq!(cfg.kind, ScenarioKind::Solve);
        assert_eq!(cfg.grid.as_ref().unwrap().dim, 2);
        assert_eq!(cfg.solver.as_ref().unwrap().verify_trials, 16);
        assert_eq!(cfg.assertions.len(), 1);
    }

    #[test]
    fn rejects_unknown_keys_at_every_level() {
        // Top level.
        let top = MINI.replace("name = \"mini\"", "name = \"mini\"\nbogus = 1");
        assert!(ScenarioFile::from_toml(&top).is_err());
        // Inside a section.
        let sect = MINI.replace("r_trunc = 0.5", "r_trunc = 0.5\nbogus = 1");
        assert!(ScenarioFile::from_toml(&sect).is_err());
        // Inside a tagged shape table.
        let shape = MINI.replace("min = [-0.16, -0.16]", "min = [-0.16, -0.16]\nbogus = 1");
        assert!(ScenarioFile::from_toml(&shape).is_err());
        // Inside a tagged assertion table.
        let asrt = MINI.replace("value = 2.0\n    \"#", "value = 2.0\n        bogus = 1\n    \"#");
        // (string replace above is a no-op if the anchor moved; guard below)
        if asrt != MINI {
            assert!(ScenarioFile::from_toml(&asrt).is_err());
        }
        let asrt2 = format!("{MINI}\nbogus = 1");
        assert!(ScenarioFile::from_toml(&asrt2).is_err());
    }

    #[test]
    fn rejects_unknown_keys_in_nested_shape_parts() {
        let cfg = r#"
            name = "nested"
            kind = "solve"

            [grid]
            origin = [-1.0, -1.0]
            extent = 2.0
            levels = [16]

            [domain]
            kind = "difference"
            parts = [
                { kind = "ball", center = [0.0, 0.0], radius = 0.9 },
                { kind = "ball", center = [0.0, 0.0], radius = 0.3, bogus = 1 },
            ]

            [datum]
            kind = "constant"
            value = 0.0

            [solver]
            s_list = [0.5]
            r_trunc = 2.0
        "#;
        let err = ScenarioFile::from_toml(cfg).unwrap_err().to_string();
        assert!(err.contains("bogus"), "error should name the offending key: {err}");
    }

    #[test]
    fn rejects_cross_kind_sections_and_bad_values() {
        // A ratio section on a solve scenario.
        let mixed = format!(
            "{MINI}\n[ratio]\ns_list = [0.5]\nlevels = [8]\nsame_h = false\n\
             [ratio.numerator]\nshape = {{ kind = \"ball\", center = [0.0, 0.0], radius = 1.0 }}\n\
             origin = [-2.0, -2.0]\nextent = 4.0\nr_trunc = 2.0\n\
             [ratio.denominator]\nshape = {{ kind = \"ball\", center = [0.0, 0.0], radius = 1.0 }}\n\
             origin = [-2.0, -2.0]\nextent = 4.0\nr_trunc = 2.0\n"
        );
        assert!(ScenarioFile::from_toml(&mixed).is_err());
        // Order outside (0, 1).
        let bad_s = MINI.replace("s_list = [0.5]", "s_list = [1.5]");
        assert!(ScenarioFile::from_toml(&bad_s).is_err());
        // Assertion referencing an order that is not run.
        let bad_ref = MINI.replace(
            "kind = \"constant_solution\"\n        value = 2.0",
            "kind = \"u_zero_in_omega\"\n        s = 0.25",
        );
        assert!(ScenarioFile::from_toml(&bad_ref).is_err());
        // Uppercase scenario name.
        let bad_name = MINI.replace("name = \"mini\"", "name = \"Mini\"");
        assert!(ScenarioFile::from_toml(&bad_name).is_err());
    }

    #[test]
    fn shape_descriptions_build_the_intended_geometry() {
        let desc: ShapeDesc = toml::from_str(
            r#"
            kind = "difference"
            parts = [
                { kind = "ball", center = [0.0, 0.0], radius = 2.0 },
                { kind = "notched_disc", slope = 5.0 },
            ]
            "#,
        )
        .unwrap();
        let shape = desc.to_shape().unwrap();
        // Inside the big ball, outside the notched disc: the channel point
        // (0, 0.5) sits above the notch slope, so it stays in the difference.
        assert!(shape.contains(0.0, 0.5));
        // Inside both: removed.
        assert!(!shape.contains(0.5, 0.0));
        // Outside the big ball: not in the difference.
        assert!(!shape.contains(2.5, 0.0));
    }
}
