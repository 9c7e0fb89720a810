//! Projected gradient descent `x_{t+1} = P_S(x_t - η g_t)` from `x_1 = 0`.
//!
//! The gradients may be exact (full information) or any unbiased estimate
//! with norm at most `G`. With `η = R / (G sqrt(n))` the expected regret is at
//! most `R G sqrt(n)`.

use crate::adversary::CostSequence;
use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::ConvexBody;
use crate::Point;

/// Relative slack on the gradient-norm contract, absorbing rounding only.
const GRADIENT_BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct DescentConfig {
    pub step: f64,
    pub gradient_bound: f64,
    pub body: ConvexBody,
    pub horizon: usize,
}

impl DescentConfig {
    /// Uses the default step `η = R / (G sqrt(n))`.
    pub fn new(body: &ConvexBody, gradient_bound: f64, horizon: usize) -> Result<Self> {
        if !(gradient_bound > 0.0 && gradient_bound.is_finite()) {
            return Err(invalid(
                "G",
                format!("must be positive, got {gradient_bound}"),
            ));
        }
        if horizon == 0 {
            return Err(invalid("n", "horizon must be at least 1"));
        }
        let (_, big_r) = body.radii();
        Ok(Self {
            step: big_r / (gradient_bound * (horizon as f64).sqrt()),
            gradient_bound,
            body: body.clone(),
            horizon,
        })
    }

    pub fn with_step(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid("eta", format!("must be positive, got {step}")));
        }
        self.step = step;
        Ok(self)
    }
}

/// One projected step. Gradients longer than `G` are a contract violation.
pub fn ogd_step(x: &Point, g: &Point, config: &DescentConfig) -> Result<Point> {
    check_dim(config.body.dim(), x.len())?;
    check_dim(config.body.dim(), g.len())?;
    let norm = g.norm();
    if norm > config.gradient_bound * (1.0 + GRADIENT_BOUND_SLACK) {
        return Err(Error::GradientBound {
            norm,
            bound: config.gradient_bound,
        });
    }
    config.body.project(&(x - g * config.step))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentRun {
    /// Played points `x_1, ..., x_n`.
    pub trajectory: Vec<Point>,
    /// `c_t(x_t)`.
    pub costs: Vec<f64>,
}

impl DescentRun {
    pub fn total(&self) -> f64 {
        self.costs.iter().sum()
    }
}

/// Full-information descent with exact gradients over the whole sequence.
pub fn run_full_information(costs: &CostSequence, config: &DescentConfig) -> Result<DescentRun> {
    check_dim(config.body.dim(), costs.dim())?;
    let n = costs.len();
    let mut x = Point::zeros(costs.dim());
    let mut run = DescentRun {
        trajectory: Vec::with_capacity(n),
        costs: Vec::with_capacity(n),
    };
    for t in 0..n {
        let g = costs.gradient(t, &x).ok_or_else(|| {
            Error::Unsupported("full information needs analytic gradients".into())
        })?;
        run.costs.push(costs.value(t, &x));
        let next = ogd_step(&x, &g, config)?;
        run.trajectory.push(std::mem::replace(&mut x, next));
    }
    Ok(run)
}

/// Descent driven by a caller-supplied gradient oracle `(t, x_t) -> g_t`,
/// for `config.horizon` rounds. Returns `x_1, ..., x_n`.
pub fn run_with_gradients<F>(config: &DescentConfig, mut gradient: F) -> Result<Vec<Point>>
where
    F: FnMut(usize, &Point) -> Result<Point>,
{
    let mut x = Point::zeros(config.body.dim());
    let mut trajectory = Vec::with_capacity(config.horizon);
    for t in 0..config.horizon {
        let g = gradient(t, &x)?;
        let next = ogd_step(&x, &g, config)?;
        trajectory.push(std::mem::replace(&mut x, next));
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::Cost;
    use crate::function::QuadraticForm;

    fn p(v: &[f64]) -> Point {
        Point::from_row_slice(v)
    }

    fn disk_config(step: f64) -> DescentConfig {
        DescentConfig::new(&ConvexBody::unit_ball(2).unwrap(), 100.0, 100)
            .unwrap()
            .with_step(step)
            .unwrap()
    }

    #[test]
    fn default_step_is_r_over_g_sqrt_n() {
        let c = DescentConfig::new(&ConvexBody::unit_ball(2).unwrap(), 2.0, 100).unwrap();
        assert!((c.step - 0.05).abs() < 1e-15);
    }

    #[test]
    fn step_examples() {
        let cfg = disk_config(0.1);
        let x = p(&[0.3, 0.2]);
        assert_eq!(ogd_step(&x, &Point::zeros(2), &cfg).unwrap(), x);
        let z = ogd_step(&p(&[0.0, 0.0]), &p(&[1.0, 0.0]), &cfg).unwrap();
        assert!((z - p(&[-0.1, 0.0])).norm() < 1e-15);
        let z = ogd_step(&p(&[1.0, 0.0]), &p(&[-20.0, 0.0]), &cfg).unwrap();
        assert!((z - p(&[1.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn oversized_gradient_aborts() {
        let cfg = disk_config(0.1);
        let err = ogd_step(&Point::zeros(2), &p(&[101.0, 0.0]), &cfg).unwrap_err();
        assert!(matches!(err, Error::GradientBound { .. }));
    }

    #[test]
    fn zero_costs_keep_the_origin() {
        let ball = ConvexBody::unit_ball(2).unwrap();
        let zero = CostSequence::new(
            "zero",
            &ball,
            vec![Cost::from_form(QuadraticForm::constant(2, 0.0))],
            vec![0; 50],
            1.0,
            Some(0.0),
        )
        .unwrap();
        let cfg = DescentConfig::new(&ball, 1.0, 50).unwrap();
        let run = run_full_information(&zero, &cfg).unwrap();
        assert!(run.trajectory.iter().all(|x| *x == Point::zeros(2)));
        assert_eq!(run.total(), 0.0);
    }

    #[test]
    fn converges_to_interior_quadratic_minimum() {
        let ball = ConvexBody::unit_ball(2).unwrap();
        let target = p(&[0.3, -0.4]);
        let n = 10_000;
        let costs = CostSequence::fixed_quadratic(&ball, &target, 1.0, n).unwrap();
        let cfg = DescentConfig::new(&ball, costs.lipschitz().unwrap(), n).unwrap();
        let run = run_full_information(&costs, &cfg).unwrap();
        let last = run.trajectory.last().unwrap();
        assert!((last - &target).norm() < 0.05);
        for x in &run.trajectory {
            assert!(ball.membership(x).unwrap());
        }
    }
}
