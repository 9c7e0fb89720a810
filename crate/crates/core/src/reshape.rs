//! Uniform sampling of bodies and sample-covariance whitening.
//!
//! Whitening estimates the covariance `Σ` of uniform samples from the body
//! and maps `x -> Σ^{-1/2} (x - mean)`, which leaves the body roughly
//! isotropic: `B ⊆ T(S) ⊆ κ d B` for a slack `κ` near one. The slack is
//! measured, not assumed.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::adversary::CostSequence;
use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::{ConvexBody, Shape};
use crate::sampling::RandomStream;
use crate::Point;

/// Largest dimension accepted by [`sample_uniform`].
pub const MAX_SAMPLING_DIM: usize = 8;
const MIN_ACCEPTANCE_RATE: f64 = 1e-6;
/// Relative eigenvalue floor below which the sample covariance is singular.
pub const SINGULAR_EIGEN_RATIO: f64 = 1e-12;
/// Factor on the measured outer radius when declaring `R'`.
pub const NEAR_ISOTROPIC_FACTOR: f64 = 1.01;

/// One uniform draw from the body.
///
/// Balls and ellipsoids are sampled directly, affine images by mapping a draw
/// from their base, boxes coordinatewise, and the simplex by rejection from
/// its bounding box.
pub fn sample_uniform(body: &ConvexBody, stream: &mut RandomStream) -> Result<Point> {
    let d = body.dim();
    if d > MAX_SAMPLING_DIM {
        return Err(Error::RejectionSampling { dim: d });
    }
    let point = match body.shape() {
        Shape::Ball { radius } => stream.unit_ball(d)? * *radius,
        Shape::Box { half_widths } => {
            Point::from_fn(d, |i, _| stream.uniform_in(-half_widths[i], half_widths[i]))
        }
        Shape::Ellipsoid {
            axes, eigenvalues, ..
        } => {
            let v = stream.unit_ball(d)?;
            axes * v.component_div(&eigenvalues.map(f64::sqrt))
        }
        Shape::Simplex { centroid } => {
            // acceptance rate of the unit cube is 1/d!
            let rate = (1..=d).fold(1.0, |acc, k| acc / k as f64);
            if rate < MIN_ACCEPTANCE_RATE {
                return Err(Error::RejectionSampling { dim: d });
            }
            loop {
                let y = Point::from_fn(d, |_, _| stream.uniform());
                if y.sum() <= 1.0 {
                    break y.add_scalar(-centroid);
                }
            }
        }
        Shape::Affine {
            map, shift, base, ..
        } => map * sample_uniform(base, stream)? + shift,
    };
    Ok(point * body.scale())
}

/// The map `x -> T (x - center)` with `T` invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineTransform {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    center: Point,
    condition: f64,
}

impl AffineTransform {
    pub fn new(matrix: DMatrix<f64>, center: Point) -> Result<Self> {
        let d = center.len();
        check_dim(d, matrix.nrows())?;
        check_dim(d, matrix.ncols())?;
        let svd = matrix.clone().svd(false, false);
        let (hi, lo) = (svd.singular_values.max(), svd.singular_values.min());
        if !(lo > SINGULAR_EIGEN_RATIO * hi) {
            return Err(invalid("matrix", "transform must be invertible"));
        }
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| invalid("matrix", "transform must be invertible"))?;
        if (&matrix * &inverse - DMatrix::identity(d, d)).amax() > 1e-9 {
            return Err(invalid(
                "matrix",
                "transform is too ill-conditioned to invert",
            ));
        }
        Ok(Self {
            matrix,
            inverse,
            center,
            condition: hi / lo,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim), Point::zeros(dim)).expect("identity is invertible")
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    /// Ratio of extreme singular values of `T`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn apply(&self, x: &Point) -> Point {
        &self.matrix * (x - &self.center)
    }

    pub fn invert(&self, u: &Point) -> Point {
        &self.inverse * u + &self.center
    }

    /// `T(S)` as an affine-image body.
    pub fn image(&self, body: &ConvexBody) -> Result<ConvexBody> {
        let shift = -(&self.matrix * &self.center);
        ConvexBody::affine(self.matrix.clone(), shift, body)
    }
}

/// Whitening transform `Σ^{-1/2} (x - mean)` estimated from `m >= 1000 d^2`
/// uniform samples.
pub fn isotropic_transform(
    body: &ConvexBody,
    stream: &mut RandomStream,
    m: usize,
) -> Result<AffineTransform> {
    let d = body.dim();
    if m < 1000 * d * d {
        return Err(invalid(
            "m",
            format!("need at least {} samples", 1000 * d * d),
        ));
    }
    let samples = (0..m)
        .map(|_| sample_uniform(body, stream))
        .collect::<Result<Vec<_>>>()?;
    let mean = samples.iter().fold(Point::zeros(d), |acc, x| acc + x) / m as f64;
    let mut cov = DMatrix::zeros(d, d);
    for x in &samples {
        let c = x - &mean;
        cov.ger(1.0, &c, &c, 1.0);
    }
    cov /= (m - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if !(lo > SINGULAR_EIGEN_RATIO * hi) {
        return Err(Error::SingularCovariance { min: lo, max: hi });
    }
    let scale = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let whitening = &eig.eigenvectors * scale * eig.eigenvectors.transpose();
    AffineTransform::new(whitening, mean)
}

/// A body put into near-isotropic position, with the measured slack.
#[derive(Debug, Clone)]
pub struct IsotropicPosition {
    pub transform: AffineTransform,
    /// `T(S)`.
    pub body: ConvexBody,
    /// Largest `|T x|` over uniform samples.
    pub max_radius: f64,
    /// Smallest boundary distance over probed directions.
    pub min_radius: f64,
    /// `max(1, max_radius / d)`.
    pub kappa: f64,
    /// Declared inner radius `r' = min(1, min_radius)`.
    pub inner_radius: f64,
    /// Declared outer radius `R' = 1.01 κ d`.
    pub outer_radius: f64,
}

/// Whitens `body` from `m` samples and measures the achieved slack with
/// `radius_samples` uniform draws and `directions` boundary probes.
pub fn isotropic_position(
    body: &ConvexBody,
    stream: &mut RandomStream,
    m: usize,
    radius_samples: usize,
    directions: usize,
) -> Result<IsotropicPosition> {
    let transform = isotropic_transform(body, stream, m)?;
    let image = transform.image(body)?;
    let d = body.dim();

    let mut max_radius = 0.0f64;
    for _ in 0..radius_samples {
        let x = sample_uniform(body, stream)?;
        max_radius = max_radius.max(transform.apply(&x).norm());
    }

    let (_, outer_bound) = image.radii();
    let mut min_radius = f64::INFINITY;
    for _ in 0..directions.max(1) {
        let w = stream.unit_sphere(d)?;
        let (mut lo, mut hi) = (0.0, outer_bound * 1.5);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if image.contains(&(&w * mid), 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        min_radius = min_radius.min(lo);
    }

    let kappa = (max_radius / d as f64).max(1.0);
    Ok(IsotropicPosition {
        transform,
        body: image,
        max_radius,
        min_radius,
        kappa,
        inner_radius: min_radius.min(1.0),
        outer_radius: NEAR_ISOTROPIC_FACTOR * kappa * d as f64,
    })
}

/// `c'_t(u) = c_t(T^{-1} u)` on `T(S)`, with `C' = C` and `L' = L R` where
/// `R` is the outer radius of the original body.
pub fn transform_costs(costs: &CostSequence, transform: &AffineTransform) -> Result<CostSequence> {
    let image = transform.image(costs.body())?;
    let (_, big_r) = costs.body().radii();
    costs.pulled_back(transform, &image, costs.lipschitz().map(|l| l * big_r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::MeanAccumulator;

    fn p(v: &[f64]) -> Point {
        Point::from_row_slice(v)
    }

    #[test]
    fn ball_samples_match_radial_moment() {
        let mut s = RandomStream::new(1, 0);
        for d in [2usize, 3] {
            let body = ConvexBody::unit_ball(d).unwrap();
            let mut acc = MeanAccumulator::new(1);
            for _ in 0..100_000 {
                let x = sample_uniform(&body, &mut s).unwrap();
                assert!(body.membership(&x).unwrap());
                acc.push_scalar(x.norm_squared());
            }
            let expected = d as f64 / (d as f64 + 2.0);
            assert!((acc.mean()[0] - expected).abs() <= 3.0 * acc.std_error()[0]);
        }
    }

    #[test]
    fn box_samples_have_interval_variance() {
        let mut s = RandomStream::new(2, 0);
        let body = ConvexBody::cube(2, 1.0).unwrap();
        let mut acc = MeanAccumulator::new(2);
        for _ in 0..100_000 {
            let x = sample_uniform(&body, &mut s).unwrap();
            assert!(body.membership(&x).unwrap());
            acc.push(&x.map(|v| v * v));
        }
        let (mean, se) = (acc.mean(), acc.std_error());
        for i in 0..2 {
            assert!((mean[i] - 1.0 / 3.0).abs() <= 3.0 * se[i]);
        }
    }

    #[test]
    fn simplex_and_affine_samples_are_members() {
        let mut s = RandomStream::new(3, 0);
        let simplex = ConvexBody::simplex(4).unwrap();
        let skew = ConvexBody::affine(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.4, -0.3, 0.8]),
            p(&[0.1, 0.0]),
            &ConvexBody::cube(2, 1.0).unwrap(),
        )
        .unwrap();
        let ellipsoid =
            ConvexBody::ellipsoid(DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0])).unwrap();
        for body in [&simplex, &skew, &ellipsoid, &ellipsoid.shrink(0.3).unwrap()] {
            for _ in 0..5000 {
                assert!(body
                    .membership(&sample_uniform(body, &mut s).unwrap())
                    .unwrap());
            }
        }
    }

    #[test]
    fn high_dimensions_are_refused() {
        let mut s = RandomStream::new(4, 0);
        let body = ConvexBody::simplex(9).unwrap();
        assert_eq!(
            sample_uniform(&body, &mut s),
            Err(Error::RejectionSampling { dim: 9 })
        );
    }

    #[test]
    fn whitening_the_unit_disk_gives_twice_identity() {
        let mut s = RandomStream::new(5, 0);
        let body = ConvexBody::unit_ball(2).unwrap();
        let t = isotropic_transform(&body, &mut s, 100_000).unwrap();
        assert!((t.matrix() - DMatrix::identity(2, 2) * 2.0).amax() <= 0.05);

        // applying to its own output is close to identity
        let image = t.image(&body).unwrap();
        let again = isotropic_transform(&image, &mut s, 100_000).unwrap();
        assert!((again.matrix() - DMatrix::identity(2, 2)).amax() <= 0.05);
    }

    #[test]
    fn whitening_the_square_gives_sqrt3_identity() {
        let mut s = RandomStream::new(6, 0);
        let body = ConvexBody::cube(2, 1.0).unwrap();
        let t = isotropic_transform(&body, &mut s, 100_000).unwrap();
        assert!((t.matrix() - DMatrix::identity(2, 2) * 3f64.sqrt()).amax() <= 0.05);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let mut s = RandomStream::new(7, 0);
        let body = ConvexBody::unit_ball(2).unwrap();
        assert!(isotropic_transform(&body, &mut s, 3999).is_err());
    }

    #[test]
    fn transform_roundtrip() {
        let t = AffineTransform::new(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.0, 0.5]),
            p(&[0.1, -0.2]),
        )
        .unwrap();
        let x = p(&[0.7, 0.4]);
        assert!((t.invert(&t.apply(&x)) - x).norm() < 1e-14);
        assert!(AffineTransform::new(DMatrix::zeros(2, 2), Point::zeros(2)).is_err());
    }

    #[test]
    fn identity_transform_keeps_costs_and_scales_lipschitz() {
        let body = ConvexBody::cube(2, 1.0).unwrap();
        let costs = CostSequence::fixed_quadratic(&body, &p(&[0.2, 0.1]), 0.5, 20).unwrap();
        let t = AffineTransform::identity(2);
        let moved = transform_costs(&costs, &t).unwrap();
        let x = p(&[0.3, -0.6]);
        for k in 0..20 {
            assert_eq!(moved.value(k, &x), costs.value(k, &x));
        }
        let (_, big_r) = body.radii();
        assert_eq!(moved.lipschitz(), Some(costs.lipschitz().unwrap() * big_r));
        assert_eq!(moved.bound(), costs.bound());
    }
}
