//! Hindsight optimum `min_{x in S} sum_t c_t(x)`.
//!
//! Projected gradient descent with backtracking on the average cost, from
//! the origin and from uniform restarts. In `d <= 3` the result is also
//! checked against a grid of membership-passing points.

use bco_core::adversary::CostSequence;
use bco_core::geometry::ConvexBody;
use bco_core::reshape::{sample_uniform, MAX_SAMPLING_DIM};
use bco_core::sampling::RandomStream;
use bco_core::{Point, MEMBERSHIP_TOL};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

const FINITE_DIFFERENCE_STEP: f64 = 1e-6;
const MAX_GRID_REFINEMENTS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    /// Descent starts, including the origin.
    pub restarts: usize,
    /// Stop when the iterate moves less than this.
    pub tolerance: f64,
    pub max_iters: usize,
    /// Minimum number of membership-passing grid points (`d <= 3` only).
    pub grid_points: usize,
    pub grid: bool,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            tolerance: 1e-8,
            max_iters: 20_000,
            grid_points: 1_000_000,
            grid: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub point: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// Best point found, in body coordinates.
    #[serde(skip)]
    pub point: Point,
    pub total: f64,
    pub descent: Candidate,
    /// Present when the grid cross-check ran.
    pub grid: Option<Candidate>,
    /// Why the grid check was skipped, if it was.
    pub grid_skipped: Option<String>,
    /// `1e-4 C n`.
    pub tolerance: f64,
    /// Descent and grid totals differ by more than `tolerance`.
    pub disagreement: bool,
}

/// Minimizes `sum_t c_t` over `body` (which need not be the body the costs
/// were declared on, e.g. a shrunk copy). Always returns the best point found.
pub fn offline_optimum(
    costs: &CostSequence,
    body: &ConvexBody,
    options: &OracleOptions,
) -> Result<OracleResult> {
    let d = body.dim();
    let n = costs.len() as f64;
    let mut stream = RandomStream::new(options.seed, 0);
    let (_, big_r) = body.radii();

    let mut starts = vec![Point::zeros(d)];
    while starts.len() < options.restarts.max(1) {
        let x = if d <= MAX_SAMPLING_DIM {
            sample_uniform(body, &mut stream)?
        } else {
            body.project(&(stream.unit_ball(d)? * big_r))?
        };
        starts.push(x);
    }

    let objective = |x: &Point| costs.total_value(x) / n;
    let gradient = |x: &Point| match costs.total_gradient(x) {
        Some(g) => g / n,
        None => central_difference(&objective, x),
    };

    let mut best: Option<(Point, f64)> = None;
    for start in starts {
        let x = descend(body, start, &objective, &gradient, options)?;
        let v = objective(&x);
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((x, v));
        }
    }
    let (descent_point, descent_avg) = best.expect("at least one start");
    let descent = Candidate {
        point: descent_point.iter().copied().collect(),
        total: descent_avg * n,
    };

    let tolerance = 1e-4 * costs.bound() * n;
    let (grid, grid_skipped) = if !options.grid {
        (None, Some("disabled".to_string()))
    } else if d > 3 {
        (None, Some(format!("dimension {d} > 3")))
    } else if costs.aggregate().is_none() {
        (None, Some("costs have no closed-form sum".to_string()))
    } else {
        let (point, total) = grid_minimum(costs, body, options.grid_points);
        (
            Some(Candidate {
                point: point.iter().copied().collect(),
                total,
            }),
            None,
        )
    };

    let mut result = OracleResult {
        point: descent_point,
        total: descent.total,
        descent,
        grid: None,
        grid_skipped,
        tolerance,
        disagreement: false,
    };
    if let Some(g) = grid {
        result.disagreement = (g.total - result.descent.total).abs() > tolerance;
        if g.total < result.total {
            result.total = g.total;
            result.point = Point::from_vec(g.point.clone());
        }
        result.grid = Some(g);
    }
    Ok(result)
}

fn central_difference(f: &impl Fn(&Point) -> f64, x: &Point) -> Point {
    let h = FINITE_DIFFERENCE_STEP;
    Point::from_fn(x.len(), |i, _| {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[i] += h;
        minus[i] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    })
}

/// Projected descent with Armijo backtracking on the projection arc.
fn descend(
    body: &ConvexBody,
    start: Point,
    f: &impl Fn(&Point) -> f64,
    grad: &impl Fn(&Point) -> Point,
    options: &OracleOptions,
) -> Result<Point> {
    let mut x = body.project(&start)?;
    let mut fx = f(&x);
    let mut step = 1.0;
    for _ in 0..options.max_iters {
        let g = grad(&x);
        let (next, f_next) = loop {
            let candidate = body.project(&(&x - &g * step))?;
            let diff = &candidate - &x;
            let f_candidate = f(&candidate);
            let model = fx + g.dot(&diff) + diff.norm_squared() / (2.0 * step);
            if f_candidate <= model + 1e-15 * fx.abs().max(1.0) || step < 1e-12 {
                break (candidate, f_candidate);
            }
            step *= 0.5;
        };
        let moved = (&next - &x).norm();
        x = next;
        fx = f_next;
        if moved <= options.tolerance {
            break;
        }
        step = (step * 2.0).min(1e6);
    }
    Ok(x)
}

/// Inclusive grid over the bounding box, refined until at least `target`
/// points pass membership. Ties go to the lowest grid index.
fn grid_minimum(costs: &CostSequence, body: &ConvexBody, target: usize) -> (Point, f64) {
    let d = body.dim();
    let (lo, hi) = body.bounding_box();
    let target = target.max(1) as f64;
    let mut k = (target.powf(1.0 / d as f64).ceil() as usize).max(2);
    let mut best = (Point::zeros(d), costs.total_value(&Point::zeros(d)));
    for _ in 0..MAX_GRID_REFINEMENTS {
        let (count, point, value) = scan_grid(costs, body, &lo, &hi, k);
        if let Some(p) = point {
            if value < best.1 {
                best = (p, value);
            }
        }
        if count as f64 >= target {
            break;
        }
        let ratio = target / (count.max(1) as f64);
        k = ((k as f64) * ratio.powf(1.0 / d as f64) * 1.02).ceil() as usize + 1;
    }
    best
}

fn scan_grid(
    costs: &CostSequence,
    body: &ConvexBody,
    lo: &Point,
    hi: &Point,
    k: usize,
) -> (usize, Option<Point>, f64) {
    let d = body.dim();
    let coord =
        |axis: usize, i: usize| lo[axis] + (hi[axis] - lo[axis]) * i as f64 / (k - 1) as f64;
    let rest = k.pow(d as u32 - 1);
    (0..k)
        .into_par_iter()
        .map(|i0| {
            let mut count = 0usize;
            let mut best: Option<(Point, f64)> = None;
            let mut x = Point::zeros(d);
            x[0] = coord(0, i0);
            for mut j in 0..rest {
                for axis in 1..d {
                    x[axis] = coord(axis, j % k);
                    j /= k;
                }
                if !body.contains(&x, MEMBERSHIP_TOL) {
                    continue;
                }
                count += 1;
                let v = costs.total_value(&x);
                if best.as_ref().is_none_or(|(_, b)| v < *b) {
                    best = Some((x.clone(), v));
                }
            }
            (count, best)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(
            (0, None, f64::INFINITY),
            |(count, point, value), (c, b)| match b {
                Some((p, v)) if v < value => (count + c, Some(p), v),
                _ => (count + c, point, value),
            },
        )
}

#[cfg(test)]
mod tests {
    use super::*;
    use bco_core::adversary::DirectionSchedule;

    fn p(v: &[f64]) -> Point {
        Point::from_row_slice(v)
    }

    fn quick() -> OracleOptions {
        OracleOptions {
            grid_points: 20_000,
            ..OracleOptions::default()
        }
    }

    #[test]
    fn interior_quadratic_target() {
        let ball = ConvexBody::unit_ball(2).unwrap();
        let target = p(&[0.3, -0.2]);
        let costs = CostSequence::fixed_quadratic(&ball, &target, 1.0, 100).unwrap();
        let opt = offline_optimum(&costs, &ball, &quick()).unwrap();
        assert!((&opt.point - &target).norm() < 1e-6);
        assert!(opt.total.abs() < 1e-10);
    }

    #[test]
    fn constant_linear_on_ball() {
        let ball = ConvexBody::unit_ball(2).unwrap();
        let w = p(&[0.6, 0.8]);
        let n = 50;
        let costs =
            CostSequence::drifting_linear(&ball, &DirectionSchedule::Constant(w.clone()), 1.0, n)
                .unwrap();
        let opt = offline_optimum(&costs, &ball, &quick()).unwrap();
        assert!((&opt.point + &w).norm() < 1e-6);
        assert!((opt.total + n as f64).abs() < 1e-8);
    }

    #[test]
    fn alternating_cancels() {
        let cube = ConvexBody::cube(2, 1.0).unwrap();
        let costs = CostSequence::drifting_linear(
            &cube,
            &DirectionSchedule::Alternating(p(&[1.0, 0.0])),
            1.0,
            10,
        )
        .unwrap();
        let opt = offline_optimum(&costs, &cube, &quick()).unwrap();
        assert!(opt.total.abs() < 1e-12);
        assert!(!opt.disagreement);
    }

    #[test]
    fn box_corner_matches_grid() {
        let cube = ConvexBody::cube(2, 1.0).unwrap();
        let w = p(&[1.0, 1.0]) / 2f64.sqrt();
        let costs =
            CostSequence::drifting_linear(&cube, &DirectionSchedule::Constant(w), 1.0, 10).unwrap();
        let opt = offline_optimum(&costs, &cube, &quick()).unwrap();
        let grid = opt.grid.as_ref().unwrap();
        assert!((grid.total - opt.descent.total).abs() < 1e-9);
        assert!((opt.point - p(&[-1.0, -1.0])).norm() < 1e-9);
    }

    #[test]
    fn grid_is_skipped_in_high_dimension() {
        let ball = ConvexBody::unit_ball(4).unwrap();
        let costs = CostSequence::fixed_quadratic(&ball, &Point::zeros(4), 1.0, 5).unwrap();
        let opt = offline_optimum(&costs, &ball, &quick()).unwrap();
        assert!(opt.grid.is_none());
        assert!(opt.grid_skipped.is_some());
    }
}
