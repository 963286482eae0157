//! Constructive geometry: analytic shapes, their rasterization to cell sets,
//! and the far-field cones they induce.
//!
//! A cell belongs to the raster of a shape iff the shape contains the cell's
//! center. Rasters carry the shape's asymptotic far field so that set
//! algebra and truncation-tail terms remain meaningful for unbounded shapes
//! (half-planes and their intersections).

use crate::grid::{CellSet, FarField, GridSpec, Sectors};

/// An analytic region of the plane (or line, in 1D: the second coordinate is
/// fixed at 0).
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Closed ball { |x − center| ≤ radius }.
    Ball { center: [f64; 2], radius: f64 },
    /// Closed axis-aligned box [min₀, max₀] × [min₁, max₁].
    Rect { min: [f64; 2], max: [f64; 2] },
    /// Closed half-plane { x : normal·x ≤ offset }.
    Halfplane { normal: [f64; 2], offset: f64 },
    /// Unit disc with an upward wedge removed:
    /// { x² + y² ≤ 1 and y ≤ slope·|x| }. The removed notch
    /// { y > slope·|x| } is a channel from the disc center to its boundary.
    NotchedDisc { slope: f64 },
    /// Union of shapes.
    Union(Vec<Shape>),
    /// Intersection of shapes.
    Intersection(Vec<Shape>),
    /// Complement of a shape.
    Complement(Box<Shape>),
}

impl Shape {
    /// Pointwise membership.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Shape::Ball { center, radius } => {
                let dx = x - center[0];
                let dy = y - center[1];
                dx * dx + dy * dy <= radius * radius
            }
            Shape::Rect { min, max } => {
                x >= min[0] && x <= max[0] && y >= min[1] && y <= max[1]
            }
            Shape::Halfplane { normal, offset } => normal[0] * x + normal[1] * y <= *offset,
            Shape::NotchedDisc { slope } => x * x + y * y <= 1.0 && y <= slope * x.abs(),
            Shape::Union(parts) => parts.iter().any(|s| s.contains(x, y)),
            Shape::Intersection(parts) => parts.iter().all(|s| s.contains(x, y)),
            Shape::Complement(inner) => !inner.contains(x, y),
        }
    }

    /// The far field induced by the shape: membership of points arbitrarily
    /// far away, as a cone of directions. Bounded shapes give `Empty`,
    /// half-planes give half-circle cones, and composites combine them.
    pub fn far_field(&self) -> FarField {
        match self {
            Shape::Ball { .. } | Shape::Rect { .. } | Shape::NotchedDisc { .. } => FarField::Empty,
            Shape::Halfplane { normal, .. } => {
                // Far points in direction θ satisfy normal·x ≤ offset iff
                // cos(θ − θ_normal) < 0, a half circle opposite the normal.
                let theta_n = GridSpec::angle_of(normal[0], normal[1]);
                FarField::Cone(Sectors::from_intervals([(
                    theta_n + 0.5 * std::f64::consts::PI,
                    theta_n + 1.5 * std::f64::consts::PI,
                )]))
            }
            Shape::Union(parts) => {
                let mut s = Sectors::empty();
                for p in parts {
                    s = s.union(&p.far_field().sectors());
                }
                FarField::from_sectors(s)
            }
            Shape::Intersection(parts) => {
                let mut s = Sectors::full();
                for p in parts {
                    s = s.intersect(&p.far_field().sectors());
                }
                FarField::from_sectors(s)
            }
            Shape::Complement(inner) => inner.far_field().complement(),
        }
    }

    /// Rasterizes by the cell-center rule and attaches the shape's far
    /// field.
    pub fn rasterize(&self, grid: GridSpec) -> CellSet {
        let mut set = CellSet::empty(grid);
        for i in 0..grid.num_cells() {
            let c = grid.center(i);
            if self.contains(c[0], c[1]) {
                set.insert(i);
            }
        }
        set.with_far(self.far_field())
    }

    /// Convenience: `self \ other`.
    pub fn minus(self, other: Shape) -> Shape {
        Shape::Intersection(vec![self, Shape::Complement(Box::new(other))])
    }

    /// Convenience union of two shapes.
    pub fn union(self, other: Shape) -> Shape {
        Shape::Union(vec![self, other])
    }

    /// Convenience intersection of two shapes.
    pub fn intersect(self, other: Shape) -> Shape {
        Shape::Intersection(vec![self, other])
    }
}
