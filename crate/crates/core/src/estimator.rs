//! One-point gradient estimates and ball-smoothed values.
//!
//! For a uniform unit vector `u`, `(d / delta) f(x + delta u) u` is an unbiased
//! estimate of the gradient of the smoothed function
//! `f_hat(x) = E_{v in B} f(x + delta v)`. Only one function value is needed.

use crate::adversary::Cost;
use crate::error::{check_dim, invalid, Error, Result};
use crate::sampling::RandomStream;
use crate::{MeanAccumulator, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub gradient: Point,
    pub query: Point,
    pub direction: Point,
    pub delta: f64,
    pub observed: f64,
}

/// `(d / delta) f(x + delta u) u`.
pub fn one_point_gradient<F>(f: F, x: &Point, delta: f64, u: &Point) -> Result<GradientEstimate>
where
    F: Fn(&Point) -> f64,
{
    if !(delta > 0.0) {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    check_dim(x.len(), u.len())?;
    let query = x + u * delta;
    let observed = f(&query);
    if !observed.is_finite() {
        return Err(Error::Domain);
    }
    let d = x.len() as f64;
    Ok(GradientEstimate {
        gradient: u * (d / delta * observed),
        query,
        direction: u.clone(),
        delta,
        observed,
    })
}

/// Monte Carlo estimate of a ball-smoothed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedValue {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Estimates `E_{v in B} f(x + delta v)` from `m` uniform ball draws.
///
/// A non-finite function value is reported as a domain violation.
pub fn smoothed_value<F>(
    f: F,
    x: &Point,
    delta: f64,
    stream: &mut RandomStream,
    m: usize,
) -> Result<SmoothedValue>
where
    F: Fn(&Point) -> f64,
{
    if m == 0 {
        return Err(invalid("m", "need at least one sample"));
    }
    let d = x.len();
    let mut offsets = Vec::with_capacity(m);
    for _ in 0..m {
        offsets.push(stream.unit_ball(d)?);
    }
    smoothed_value_with(f, x, delta, offsets)
}

/// Same as [`smoothed_value`] but with caller-supplied offsets in the unit ball.
pub fn smoothed_value_with<F, I>(f: F, x: &Point, delta: f64, offsets: I) -> Result<SmoothedValue>
where
    F: Fn(&Point) -> f64,
    I: IntoIterator<Item = Point>,
{
    if !(delta > 0.0) {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    let mut acc = MeanAccumulator::new(1);
    for v in offsets {
        check_dim(x.len(), v.len())?;
        let value = f(&(x + v * delta));
        if !value.is_finite() {
            return Err(Error::Domain);
        }
        acc.push_scalar(value);
    }
    if acc.count() == 0 {
        return Err(invalid("offsets", "need at least one sample"));
    }
    Ok(SmoothedValue {
        mean: acc.mean()[0],
        std_error: acc.std_error()[0],
        samples: acc.count() as usize,
    })
}

/// Analytic gradient of the smoothed function for costs whose smoothing has
/// a closed form (constants, linear and quadratic forms). For these the
/// smoothing only adds a constant, so the result equals the plain gradient.
pub fn smoothed_gradient_reference(f: &Cost, x: &Point, delta: f64) -> Result<Point> {
    if !(delta > 0.0) {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    match f.as_form() {
        Some(form) => {
            check_dim(form.dim(), x.len())?;
            Ok(form.smoothed_gradient(x))
        }
        None => Err(Error::Unsupported(
            "smoothed gradient is only known for quadratic forms".into(),
        )),
    }
}

/// Spall's simultaneous-perturbation estimate
/// `f(x + delta p) / delta * [1/p_1, ..., 1/p_d]`.
pub fn spall_gradient<F>(f: F, x: &Point, delta: f64, p: &Point) -> Result<Point>
where
    F: Fn(&Point) -> f64,
{
    if !(delta > 0.0) {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    check_dim(x.len(), p.len())?;
    if p.iter().any(|v| *v == 0.0) {
        return Err(invalid("p", "perturbation entries must be nonzero"));
    }
    let value = f(&(x + p * delta));
    if !value.is_finite() {
        return Err(Error::Domain);
    }
    Ok(p.map(|pi| value / (delta * pi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::QuadraticForm;
    use nalgebra::DMatrix;

    fn p(v: &[f64]) -> Point {
        Point::from_row_slice(v)
    }

    #[test]
    fn constant_function_estimate() {
        let g = one_point_gradient(|_| 5.0, &p(&[0.3, 0.1]), 0.1, &p(&[1.0, 0.0])).unwrap();
        assert!((g.gradient - p(&[100.0, 0.0])).norm() < 1e-12);
        assert_eq!(g.observed, 5.0);

        let mut s = RandomStream::new(1, 0);
        let mut acc = MeanAccumulator::new(2);
        for _ in 0..100_000 {
            let u = s.unit_sphere(2).unwrap();
            acc.push(
                &one_point_gradient(|_| 5.0, &p(&[0.0, 0.0]), 0.1, &u)
                    .unwrap()
                    .gradient,
            );
        }
        let (mean, se) = (acc.mean(), acc.std_error());
        for i in 0..2 {
            assert!(mean[i].abs() <= 3.0 * se[i]);
        }
    }

    #[test]
    fn one_dimensional_average_is_central_difference() {
        let f = |x: &Point| x[0].powi(3) + 2.0 * x[0];
        let x = p(&[0.7]);
        let delta = 0.05;
        let plus = one_point_gradient(f, &x, delta, &p(&[1.0]))
            .unwrap()
            .gradient[0];
        let minus = one_point_gradient(f, &x, delta, &p(&[-1.0]))
            .unwrap()
            .gradient[0];
        let central = (f(&p(&[0.75])) - f(&p(&[0.65]))) / (2.0 * delta);
        assert!((0.5 * (plus + minus) - central).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_delta() {
        assert!(one_point_gradient(|_| 1.0, &p(&[0.0]), 0.0, &p(&[1.0])).is_err());
        assert!(spall_gradient(|_| 1.0, &p(&[0.0]), -1.0, &p(&[1.0])).is_err());
    }

    #[test]
    fn norm_bound_holds_exactly() {
        let c = 2.0;
        let f = |x: &Point| (x[0] * 3.0).sin() * c;
        let mut s = RandomStream::new(2, 0);
        for d in [1usize, 3, 6] {
            for _ in 0..1000 {
                let u = s.unit_sphere(d).unwrap();
                let x = Point::from_fn(d, |i, _| 0.1 * i as f64);
                let g = one_point_gradient(f, &x, 0.05, &u).unwrap();
                assert!(g.gradient.norm() <= d as f64 * c / 0.05);
            }
        }
    }

    #[test]
    fn smoothed_value_of_linear_is_identity() {
        let a = p(&[1.0, -2.0, 0.5]);
        let f = |x: &Point| a.dot(x) + 1.0;
        let x = p(&[0.2, 0.3, -0.4]);
        let mut s = RandomStream::new(3, 0);
        let v = smoothed_value(f, &x, 0.1, &mut s, 100_000).unwrap();
        assert!((v.mean - f(&x)).abs() <= 3.0 * v.std_error);
    }

    #[test]
    fn smoothed_value_hook_with_zero_offset() {
        let f = |x: &Point| x.norm_squared() + 3.0;
        let x = p(&[1.0, 2.0]);
        let v = smoothed_value_with(f, &x, 0.5, [Point::zeros(2)]).unwrap();
        assert_eq!(v.mean, f(&x));
        assert_eq!(v.samples, 1);
    }

    #[test]
    fn smoothed_value_reports_domain_violation() {
        let f = |x: &Point| (1.0 - x.norm()).ln();
        let mut s = RandomStream::new(4, 0);
        assert_eq!(
            smoothed_value(f, &p(&[0.95, 0.0]), 0.1, &mut s, 10_000),
            Err(Error::Domain)
        );
    }

    #[test]
    fn reference_gradients() {
        let a = p(&[1.0, 2.0]);
        let lin = Cost::from_form(QuadraticForm::linear(a.clone()));
        assert_eq!(
            smoothed_gradient_reference(&lin, &p(&[3.0, 4.0]), 0.1).unwrap(),
            a
        );

        let q = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = p(&[0.5, -1.0]);
        let quad = Cost::from_form(QuadraticForm::new(q.clone(), b.clone(), 0.0).unwrap());
        let x = p(&[0.3, -0.2]);
        let expected = &q * &x * 2.0 + &b;
        assert!((smoothed_gradient_reference(&quad, &x, 0.1).unwrap() - expected).norm() < 1e-14);

        let constant = Cost::from_form(QuadraticForm::constant(2, 7.0));
        assert_eq!(
            smoothed_gradient_reference(&constant, &x, 0.1).unwrap(),
            Point::zeros(2)
        );

        let opaque = Cost::custom(|x: &Point| x[0].abs());
        assert!(matches!(
            smoothed_gradient_reference(&opaque, &x, 0.1),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn spall_examples() {
        let g = spall_gradient(|_| 3.0, &p(&[0.0, 0.0]), 0.5, &p(&[1.0, 1.0])).unwrap();
        assert_eq!(g, p(&[6.0, 6.0]));
        let f = |x: &Point| 2.0 * x[0] + 1.0;
        let g = spall_gradient(f, &p(&[0.25]), 0.5, &p(&[1.0])).unwrap();
        assert_eq!(g[0], f(&p(&[0.75])) / 0.5);
        assert!(spall_gradient(|_| 1.0, &p(&[0.0, 0.0]), 0.5, &p(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn spall_is_unbiased_for_linear() {
        let a = p(&[1.5, -0.5, 2.0]);
        let f = |x: &Point| a.dot(x);
        let x = p(&[0.1, 0.2, 0.3]);
        let mut s = RandomStream::new(8, 0);
        let mut acc = MeanAccumulator::new(3);
        for _ in 0..1_000_000 {
            let pert = s.rademacher(3);
            acc.push(&spall_gradient(f, &x, 0.1, &pert).unwrap());
        }
        let (mean, se) = (acc.mean(), acc.std_error());
        for i in 0..3 {
            assert!((mean[i] - a[i]).abs() <= 3.0 * se[i], "coord {i}");
        }
    }
}
