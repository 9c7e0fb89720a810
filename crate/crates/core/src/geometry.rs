//! Convex feasible sets with projection and membership oracles.
//!
//! A [`ConvexBody`] is a shape scaled about the origin. Shapes are balls, boxes,
//! the corner simplex (translated so its centroid sits at the origin),
//! ellipsoids, and invertible affine images of any of those. Every body
//! contains the origin in its interior and records radii `r <= R` with
//! `r B ⊆ S ⊆ R B`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{check_dim, invalid, Error, Result};
use crate::{Point, MEMBERSHIP_TOL};

/// Fixed-point tolerance of the iterative projection onto affine images.
pub const AFFINE_PROJECTION_TOL: f64 = 1e-10;
/// Iteration cap of the iterative projection onto affine images.
pub const AFFINE_PROJECTION_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Ball,
    Box,
    Simplex,
    Ellipsoid,
    Affine,
}

#[derive(Debug)]
pub(crate) enum Shape {
    Ball {
        radius: f64,
    },
    Box {
        half_widths: Point,
    },
    /// `{y >= 0, sum(y) <= 1} - centroid`, centroid `= 1/(d+1)` per coordinate.
    Simplex {
        centroid: f64,
    },
    /// `{x : x^T A x <= 1}` with `A = V diag(eigenvalues) V^T`.
    Ellipsoid {
        matrix: DMatrix<f64>,
        axes: DMatrix<f64>,
        eigenvalues: Point,
    },
    /// `{T y + shift : y in base}`.
    Affine {
        map: DMatrix<f64>,
        inverse: DMatrix<f64>,
        shift: Point,
        base: ConvexBody,
        sigma_max: f64,
        sigma_min: f64,
    },
}

/// A convex body `scale * shape` in `R^d`.
#[derive(Debug, Clone)]
pub struct ConvexBody {
    shape: Arc<Shape>,
    scale: f64,
    dim: usize,
    // radii of the unscaled shape
    inner: f64,
    outer: f64,
}

impl ConvexBody {
    fn from_shape(shape: Shape, dim: usize, inner: f64, outer: f64) -> Self {
        Self {
            shape: Arc::new(shape),
            scale: 1.0,
            dim,
            inner,
            outer,
        }
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "dimension must be at least 1"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", format!("must be positive, got {radius}")));
        }
        Ok(Self::from_shape(
            Shape::Ball { radius },
            dim,
            radius,
            radius,
        ))
    }

    pub fn unit_ball(dim: usize) -> Result<Self> {
        Self::ball(dim, 1.0)
    }

    /// Axis-aligned box `prod [-h_i, h_i]`.
    pub fn cuboid(half_widths: Point) -> Result<Self> {
        let dim = half_widths.len();
        if dim == 0 {
            return Err(invalid("half_widths", "dimension must be at least 1"));
        }
        if half_widths.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(invalid("half_widths", "every half-width must be positive"));
        }
        let inner = half_widths.min();
        let outer = half_widths.norm();
        Ok(Self::from_shape(
            Shape::Box { half_widths },
            dim,
            inner,
            outer,
        ))
    }

    /// The cube `[-h, h]^d`.
    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::cuboid(Point::from_element(dim, half_width))
    }

    /// The corner simplex `{y >= 0, sum(y) <= 1}` translated so that its
    /// centroid is the origin.
    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "dimension must be at least 1"));
        }
        let d = dim as f64;
        let centroid = 1.0 / (d + 1.0);
        // distance from the centroid to the facets y_i = 0 and sum(y) = 1
        let inner = centroid.min(centroid / d.sqrt());
        // distance to the vertices 0 and e_i
        let to_origin = d.sqrt() * centroid;
        let to_unit = (d * d + d - 1.0).sqrt() * centroid;
        let outer = to_origin.max(to_unit);
        Ok(Self::from_shape(
            Shape::Simplex { centroid },
            dim,
            inner,
            outer,
        ))
    }

    /// The ellipsoid `{x : x^T A x <= 1}` for symmetric positive-definite `A`.
    pub fn ellipsoid(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim {
            return Err(invalid(
                "matrix",
                "ellipsoid matrix must be square and non-empty",
            ));
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        if (&sym - &matrix).amax() > 1e-12 * matrix.amax().max(1.0) {
            return Err(invalid("matrix", "ellipsoid matrix must be symmetric"));
        }
        let eig = SymmetricEigen::new(sym.clone());
        let lo = eig.eigenvalues.min();
        let hi = eig.eigenvalues.max();
        if !(lo > 0.0) {
            return Err(invalid(
                "matrix",
                "ellipsoid matrix must be positive definite",
            ));
        }
        let inner = 1.0 / hi.sqrt();
        let outer = 1.0 / lo.sqrt();
        Ok(Self::from_shape(
            Shape::Ellipsoid {
                matrix: sym,
                axes: eig.eigenvectors,
                eigenvalues: eig.eigenvalues,
            },
            dim,
            inner,
            outer,
        ))
    }

    /// The affine image `{T y + shift : y in base}`.
    ///
    /// Nested affine images are flattened. Radii are conservative bounds from
    /// the extreme singular values of `T`; the image must still contain the
    /// origin in its interior.
    pub fn affine(map: DMatrix<f64>, shift: Point, base: &ConvexBody) -> Result<Self> {
        let dim = base.dim;
        check_dim(dim, map.nrows())?;
        check_dim(dim, map.ncols())?;
        check_dim(dim, shift.len())?;
        let (map, shift, base) = match &*base.shape {
            Shape::Affine {
                map: inner_map,
                shift: inner_shift,
                base: inner_base,
                ..
            } => (
                &map * inner_map * base.scale,
                &map * inner_shift * base.scale + &shift,
                inner_base.clone(),
            ),
            _ => (map, shift, base.clone()),
        };
        let svd = map.clone().svd(false, false);
        let sigma_max = svd.singular_values.max();
        let sigma_min = svd.singular_values.min();
        if !(sigma_min > 1e-12 * sigma_max) {
            return Err(invalid("map", "affine map must be invertible"));
        }
        let inverse = map
            .clone()
            .try_inverse()
            .ok_or_else(|| invalid("map", "affine map must be invertible"))?;
        let (r, big_r) = base.radii();
        let inner = sigma_min * r - shift.norm();
        let outer = sigma_max * big_r + shift.norm();
        if !(inner > 0.0) {
            return Err(Error::OriginNotInterior);
        }
        Ok(Self::from_shape(
            Shape::Affine {
                map,
                inverse,
                shift,
                base,
                sigma_max,
                sigma_min,
            },
            dim,
            inner,
            outer,
        ))
    }

    /// Image under `x -> diag(factors) x`. Boxes stay boxes and balls or
    /// ellipsoids stay ellipsoids; other shapes become affine images.
    pub fn stretched(&self, factors: &Point) -> Result<Self> {
        check_dim(self.dim, factors.len())?;
        if factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(invalid("factors", "stretch factors must be positive"));
        }
        let s = self.scale;
        match &*self.shape {
            Shape::Box { half_widths } => Self::cuboid(half_widths.component_mul(factors) * s),
            Shape::Ball { radius } => {
                let r = radius * s;
                let diag = factors.map(|f| 1.0 / (f * f * r * r));
                Self::ellipsoid(DMatrix::from_diagonal(&diag))
            }
            Shape::Ellipsoid { matrix, .. } => {
                let inv = factors.map(|f| 1.0 / (f * s));
                let scaled = DMatrix::from_diagonal(&inv) * matrix * DMatrix::from_diagonal(&inv);
                Self::ellipsoid(scaled)
            }
            _ => Self::affine(
                DMatrix::from_diagonal(factors),
                Point::zeros(self.dim),
                self,
            ),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ShapeKind {
        match &*self.shape {
            Shape::Ball { .. } => ShapeKind::Ball,
            Shape::Box { .. } => ShapeKind::Box,
            Shape::Simplex { .. } => ShapeKind::Simplex,
            Shape::Ellipsoid { .. } => ShapeKind::Ellipsoid,
            Shape::Affine { .. } => ShapeKind::Affine,
        }
    }

    pub(crate) fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Scale factor relative to the underlying shape (`1 - alpha` after a shrink).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `(r, R)` with `r B ⊆ S ⊆ R B`.
    pub fn radii(&self) -> (f64, f64) {
        (self.scale * self.inner, self.scale * self.outer)
    }

    pub fn diameter(&self) -> f64 {
        let unscaled = match &*self.shape {
            Shape::Ball { radius } => 2.0 * radius,
            Shape::Box { half_widths } => 2.0 * half_widths.norm(),
            Shape::Simplex { .. } => {
                if self.dim == 1 {
                    1.0
                } else {
                    2f64.sqrt()
                }
            }
            _ => 2.0 * self.outer,
        };
        self.scale * unscaled
    }

    /// `(1 - alpha) S`, scaled about the origin.
    pub fn shrink(&self, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(invalid("alpha", format!("must lie in [0, 1), got {alpha}")));
        }
        Ok(self.scaled(1.0 - alpha))
    }

    /// `factor * S` for `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor > 0.0, "scale factor must be positive");
        let mut out = self.clone();
        out.scale *= factor;
        out
    }

    /// Membership with absolute slack [`MEMBERSHIP_TOL`] on the defining inequalities.
    pub fn membership(&self, x: &Point) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        Ok(self.contains(x, MEMBERSHIP_TOL))
    }

    /// Membership with a caller-chosen slack (0 for strict containment).
    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        if self.scale == 1.0 {
            self.shape.contains(x, tol)
        } else {
            self.shape.contains(&(x / self.scale), tol / self.scale)
        }
    }

    /// Euclidean projection `argmin_{z in S} |x - z|`.
    pub fn project(&self, x: &Point) -> Result<Point> {
        check_dim(self.dim, x.len())?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &Point) -> Point {
        if self.scale == 1.0 {
            self.shape.project(x)
        } else {
            self.shape.project(&(x / self.scale)) * self.scale
        }
    }

    /// Translation back to the shape's original coordinates: a point `x` of
    /// this body is `x + offset` originally. Nonzero only for the simplex,
    /// which is stored recentered at its centroid.
    pub fn original_offset(&self) -> Point {
        match &*self.shape {
            Shape::Simplex { centroid } => Point::from_element(self.dim, centroid * self.scale),
            _ => Point::zeros(self.dim),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        let (lo, hi) = self.shape.bounding_box(self.dim);
        (lo * self.scale, hi * self.scale)
    }
}

impl Shape {
    fn contains(&self, x: &Point, tol: f64) -> bool {
        match self {
            Shape::Ball { radius } => x.norm() - radius <= tol,
            Shape::Box { half_widths } => x
                .iter()
                .zip(half_widths.iter())
                .all(|(v, h)| v.abs() - h <= tol),
            Shape::Simplex { centroid } => {
                let mut total = 0.0;
                for v in x.iter() {
                    let y = v + centroid;
                    if y < -tol {
                        return false;
                    }
                    total += y;
                }
                total - 1.0 <= tol
            }
            Shape::Ellipsoid { matrix, .. } => x.dot(&(matrix * x)) - 1.0 <= tol,
            Shape::Affine {
                inverse,
                shift,
                base,
                ..
            } => base.contains(&(inverse * (x - shift)), tol),
        }
    }

    fn project(&self, x: &Point) -> Point {
        if self.contains(x, 0.0) {
            return x.clone();
        }
        match self {
            Shape::Ball { radius } => {
                let norm = x.norm();
                if norm <= *radius {
                    x.clone()
                } else {
                    x * (radius / norm)
                }
            }
            Shape::Box { half_widths } => {
                Point::from_fn(x.len(), |i, _| x[i].clamp(-half_widths[i], half_widths[i]))
            }
            Shape::Simplex { centroid } => {
                let y = x.add_scalar(*centroid);
                project_corner_simplex(&y).add_scalar(-centroid)
            }
            Shape::Ellipsoid {
                matrix,
                axes,
                eigenvalues,
            } => project_ellipsoid(x, matrix, axes, eigenvalues),
            Shape::Affine {
                map,
                inverse,
                shift,
                base,
                sigma_max,
                sigma_min,
            } => project_affine_image(x, map, inverse, shift, base, *sigma_max, *sigma_min),
        }
    }

    fn bounding_box(&self, dim: usize) -> (Point, Point) {
        match self {
            Shape::Ball { radius } => (
                Point::from_element(dim, -radius),
                Point::from_element(dim, *radius),
            ),
            Shape::Box { half_widths } => (-half_widths.clone(), half_widths.clone()),
            Shape::Simplex { centroid } => (
                Point::from_element(dim, -centroid),
                Point::from_element(dim, 1.0 - centroid),
            ),
            Shape::Ellipsoid { matrix, .. } => {
                let inv = matrix
                    .clone()
                    .try_inverse()
                    .expect("positive-definite matrix is invertible");
                let half = Point::from_fn(dim, |i, _| inv[(i, i)].sqrt());
                (-half.clone(), half)
            }
            Shape::Affine {
                map, shift, base, ..
            } => {
                let (lo, hi) = base.bounding_box();
                let mid = (&lo + &hi) * 0.5;
                let half = (&hi - &lo) * 0.5;
                let center = map * mid + shift;
                let spread = map.abs() * half;
                (&center - &spread, &center + &spread)
            }
        }
    }
}

/// Projection onto `{y >= 0, sum(y) <= 1}`: clamp at zero when that already
/// satisfies the sum constraint, otherwise sort-and-threshold onto the face
/// `sum(y) = 1`.
pub(crate) fn project_corner_simplex(y: &Point) -> Point {
    let clamped = y.map(|v| v.max(0.0));
    if clamped.sum() <= 1.0 {
        return clamped;
    }
    project_probability_simplex(y)
}

/// Sort-and-threshold projection onto `{y >= 0, sum(y) = 1}`.
pub fn project_probability_simplex(y: &Point) -> Point {
    let mut sorted: Vec<f64> = y.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (k as f64 + 1.0);
        if v - candidate > 0.0 {
            theta = candidate;
        }
    }
    y.map(|v| (v - theta).max(0.0))
}

fn project_ellipsoid(
    x: &Point,
    matrix: &DMatrix<f64>,
    axes: &DMatrix<f64>,
    eigenvalues: &Point,
) -> Point {
    if x.dot(&(matrix * x)) <= 1.0 {
        return x.clone();
    }
    // In the eigenbasis the projection is z_i = x_i / (1 + lambda a_i) with the
    // multiplier chosen so that sum a_i z_i^2 = 1.
    let xt = axes.transpose() * x;
    let level = |lambda: f64| -> f64 {
        xt.iter()
            .zip(eigenvalues.iter())
            .map(|(v, a)| {
                let z = v / (1.0 + lambda * a);
                a * z * z
            })
            .sum()
    };
    let mut lo = 0.0;
    let mut hi = 1.0 / eigenvalues.min();
    while level(hi) > 1.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if level(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let zt = Point::from_fn(xt.len(), |i, _| xt[i] / (1.0 + hi * eigenvalues[i]));
    let z = axes * zt;
    let q = z.dot(&(matrix * &z));
    if q > 1.0 {
        z / q.sqrt()
    } else {
        z
    }
}

/// Minimizes `|T y + shift - x|^2` over `y` in the base body with accelerated
/// projected gradient steps, and returns `T y + shift`.
fn project_affine_image(
    x: &Point,
    map: &DMatrix<f64>,
    inverse: &DMatrix<f64>,
    shift: &Point,
    base: &ConvexBody,
    sigma_max: f64,
    sigma_min: f64,
) -> Point {
    let lipschitz = sigma_max * sigma_max;
    let condition = sigma_max / sigma_min;
    let momentum = (condition - 1.0) / (condition + 1.0);
    let gram = map.transpose() * map;
    let target = map.transpose() * (x - shift);

    let mut y = base.project_unchecked(&(inverse * (x - shift)));
    let mut prev = y.clone();
    for _ in 0..AFFINE_PROJECTION_MAX_ITERS {
        let z = &y + (&y - &prev) * momentum;
        let grad = &gram * &z - &target;
        let next = base.project_unchecked(&(&z - grad / lipschitz));
        let moved = (&next - &y).norm();
        prev = std::mem::replace(&mut y, next);
        if moved <= AFFINE_PROJECTION_TOL {
            break;
        }
    }
    map * y + shift
}

impl fmt::Display for ConvexBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.shape {
            Shape::Ball { radius } => write!(f, "ball(d={}, radius={})", self.dim, radius)?,
            Shape::Box { half_widths } => {
                write!(f, "box(half_widths=[")?;
                for (i, h) in half_widths.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{h}")?;
                }
                write!(f, "])")?;
            }
            Shape::Simplex { .. } => write!(f, "simplex(d={})", self.dim)?,
            Shape::Ellipsoid { .. } => write!(f, "ellipsoid(d={})", self.dim)?,
            Shape::Affine { base, .. } => write!(f, "affine({base})")?,
        }
        if self.scale != 1.0 {
            write!(f, " x {}", self.scale)?;
        }
        Ok(())
    }
}
