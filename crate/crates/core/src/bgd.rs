//! Bandit gradient descent.
//!
//! Each round the learner keeps a center `y_t` in the shrunk body
//! `(1 - α) S`, plays `x_t = y_t + δ u_t` for a fresh uniform unit vector
//! `u_t`, observes only `c_t(x_t)`, and moves
//! `y_{t+1} = P_{(1-α)S}(y_t - ν c_t(x_t) u_t)`. This is projected descent on
//! the smoothed costs with gradient estimate `(d/δ) c_t(x_t) u_t` and step
//! `η = ν δ / d`.
//!
//! The learner is split into [`Bgd::query`] and [`Bgd::update`] so the cost
//! observation can come from anywhere.

use crate::adversary::CostSequence;
use crate::error::{check_dim, invalid, Error, Result};
use crate::geometry::ConvexBody;
use crate::sampling::RandomStream;
use crate::Point;

/// Relative slack on `|c_t(x_t)| <= C`, absorbing rounding only.
const COST_BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Bounded convex costs: expected regret `<= 3 C n^{5/6} (dR/r)^{1/3}`.
    General,
    /// `L`-Lipschitz costs: expected regret `<= 2 n^{3/4} sqrt(3 R d C (L + C/r))`.
    Lipschitz,
    /// Caller-chosen `(ν, δ, α)`.
    Manual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BgdParams {
    pub schedule: Schedule,
    pub nu: f64,
    pub delta: f64,
    pub alpha: f64,
    /// `η = ν δ / d`.
    pub step: f64,
    /// `G = d C / δ`.
    pub gradient_bound: f64,
    pub horizon: u64,
    pub dim: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub cost_bound: f64,
    pub lipschitz: Option<f64>,
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(name, format!("must be positive, got {v}")));
    }
    Ok(())
}

fn check_common(n: u64, d: usize, r: f64, big_r: f64, c: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("n", "horizon must be at least 1"));
    }
    if d == 0 {
        return Err(invalid("d", "dimension must be at least 1"));
    }
    check_positive("r", r)?;
    check_positive("R", big_r)?;
    check_positive("C", c)?;
    if r > big_r {
        return Err(invalid("r", "inner radius exceeds outer radius"));
    }
    Ok(())
}

impl BgdParams {
    fn derive(
        schedule: Schedule,
        (nu, delta, alpha): (f64, f64, f64),
        n: u64,
        d: usize,
        (r, big_r, c): (f64, f64, f64),
        lipschitz: Option<f64>,
    ) -> Self {
        let df = d as f64;
        Self {
            schedule,
            nu,
            delta,
            alpha,
            step: nu * delta / df,
            gradient_bound: df * c / delta,
            horizon: n,
            dim: d,
            inner_radius: r,
            outer_radius: big_r,
            cost_bound: c,
            lipschitz,
        }
    }

    /// Explicit parameters, with only `0 <= α <= 1`, `δ >= 0`, `ν > 0` checked.
    /// `r` and `R` are taken from the body at run time.
    pub fn manual(d: usize, nu: f64, delta: f64, alpha: f64, cost_bound: f64) -> Result<Self> {
        check_positive("nu", nu)?;
        check_positive("C", cost_bound)?;
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(invalid(
                "delta",
                format!("must be non-negative, got {delta}"),
            ));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid("alpha", format!("must lie in [0, 1], got {alpha}")));
        }
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        Ok(Self::derive(
            Schedule::Manual,
            (nu, delta, alpha),
            0,
            d,
            (f64::NAN, f64::NAN, cost_bound),
            None,
        ))
    }
}

/// Smallest admissible horizon of the general schedule, `ceil((3Rd / 2r)^2)`.
pub fn general_min_horizon(d: usize, r: f64, big_r: f64) -> u64 {
    let q = 3.0 * big_r * d as f64 / (2.0 * r);
    // shave rounding noise so exact squares are not pushed up by one
    (q * q * (1.0 - 1e-12)).ceil() as u64
}

/// The general schedule: `ν = R / (C sqrt n)`, `δ = (r R^2 d^2 / 12n)^{1/3}`,
/// `α = (3Rd / (2r sqrt n))^{1/3}`, valid for `n >= (3Rd/2r)^2`.
pub fn params_general(n: u64, d: usize, r: f64, big_r: f64, c: f64) -> Result<BgdParams> {
    check_common(n, d, r, big_r, c)?;
    let min_n = general_min_horizon(d, r, big_r);
    if n < min_n {
        return Err(Error::HorizonTooSmall { n, min_n });
    }
    let nf = n as f64;
    let df = d as f64;
    let nu = big_r / (c * nf.sqrt());
    let delta = (r * big_r * big_r * df * df / (12.0 * nf)).cbrt();
    // at n = (3Rd/2r)^2 exactly the shrink fraction reaches one
    let alpha = (3.0 * big_r * df / (2.0 * r * nf.sqrt())).cbrt().min(1.0);
    Ok(BgdParams::derive(
        Schedule::General,
        (nu, delta, alpha),
        n,
        d,
        (r, big_r, c),
        None,
    ))
}

/// The Lipschitz schedule: `ν = R / (C sqrt n)`,
/// `δ = n^{-1/4} sqrt(R d C r / (3 (L r + C)))`, `α = δ / r`; needs `α < 1`.
pub fn params_lipschitz(n: u64, d: usize, r: f64, big_r: f64, c: f64, l: f64) -> Result<BgdParams> {
    check_common(n, d, r, big_r, c)?;
    check_positive("L", l)?;
    let nf = n as f64;
    let df = d as f64;
    let nu = big_r / (c * nf.sqrt());
    let delta = nf.powf(-0.25) * (big_r * df * c * r / (3.0 * (l * r + c))).sqrt();
    let alpha = delta / r;
    if alpha >= 1.0 {
        // α < 1  <=>  n > (R d C / (3 r (L r + C)))^2
        let q = big_r * df * c / (3.0 * r * (l * r + c));
        let min_n = ((q * q).floor() as u64 + 1).max(n + 1);
        return Err(Error::HorizonTooSmall { n, min_n });
    }
    Ok(BgdParams::derive(
        Schedule::Lipschitz,
        (nu, delta, alpha),
        n,
        d,
        (r, big_r, c),
        Some(l),
    ))
}

/// How the unit perturbation `u_t` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Perturbation {
    /// Uniform on the unit sphere.
    #[default]
    Sphere,
    /// Random vertex of the cube scaled to unit length, `p / sqrt(d)` for
    /// Rademacher `p`. This turns the update into Spall's simultaneous
    /// perturbation estimate with the same gradient bound `d C / δ`.
    Rademacher,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BgdState {
    /// `y_t`.
    pub center: Point,
    /// Number of completed rounds.
    pub round: u64,
    /// `u_t` of the pending round.
    pub direction: Option<Point>,
    /// `x_t` of the pending round.
    pub query: Option<Point>,
}

#[derive(Debug, Clone)]
pub struct Bgd {
    params: BgdParams,
    body: ConvexBody,
    /// `None` when `α = 1`: the shrunk body is the origin alone.
    shrunk: Option<ConvexBody>,
    perturbation: Perturbation,
    state: BgdState,
}

impl Bgd {
    /// Starts at `y_1 = 0`. Requires `δ <= α r` so that every query stays in
    /// the body, with `r` the declared inner radius (or the body's own for
    /// manual parameters).
    pub fn new(body: &ConvexBody, params: &BgdParams) -> Result<Self> {
        check_dim(body.dim(), params.dim)?;
        let shrunk = if params.alpha == 1.0 {
            None
        } else {
            Some(body.shrink(params.alpha)?)
        };
        let r = if params.inner_radius.is_nan() {
            body.radii().0
        } else {
            params.inner_radius
        };
        if params.delta > params.alpha * r * (1.0 + 1e-12) {
            return Err(invalid(
                "delta",
                format!(
                    "queries may leave the body: delta = {} > alpha r = {}",
                    params.delta,
                    params.alpha * r
                ),
            ));
        }
        Ok(Self {
            params: params.clone(),
            body: body.clone(),
            shrunk,
            perturbation: Perturbation::Sphere,
            state: BgdState {
                center: Point::zeros(body.dim()),
                round: 0,
                direction: None,
                query: None,
            },
        })
    }

    pub fn with_perturbation(mut self, perturbation: Perturbation) -> Self {
        self.perturbation = perturbation;
        self
    }

    pub fn params(&self) -> &BgdParams {
        &self.params
    }

    pub fn state(&self) -> &BgdState {
        &self.state
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    /// `(1 - α) S`, or `None` when `α = 1` and it degenerates to the origin.
    pub fn shrunk_body(&self) -> Option<&ConvexBody> {
        self.shrunk.as_ref()
    }

    /// Draws `u_t` and returns `x_t = y_t + δ u_t`.
    pub fn query(&mut self, stream: &mut RandomStream) -> Result<Point> {
        let d = self.params.dim;
        let u = match self.perturbation {
            Perturbation::Sphere => stream.unit_sphere(d)?,
            Perturbation::Rademacher => stream.rademacher(d) / (d as f64).sqrt(),
        };
        self.query_with(u)
    }

    /// Like [`Bgd::query`] with a caller-chosen unit direction.
    pub fn query_with(&mut self, direction: Point) -> Result<Point> {
        check_dim(self.params.dim, direction.len())?;
        if (direction.norm() - 1.0).abs() > 1e-9 {
            return Err(invalid("direction", "perturbation must be a unit vector"));
        }
        let x = &self.state.center + &direction * self.params.delta;
        self.state.direction = Some(direction);
        self.state.query = Some(x.clone());
        Ok(x)
    }

    /// `y_{t+1} = P_{(1-α)S}(y_t - ν c_t(x_t) u_t)`. Observations outside
    /// `[-C, C]` abort.
    pub fn update(&mut self, observed: f64) -> Result<()> {
        let bound = self.params.cost_bound;
        if !(observed.abs() <= bound * (1.0 + COST_BOUND_SLACK)) {
            return Err(Error::CostBound {
                value: observed,
                bound,
            });
        }
        let u = self.state.direction.take().ok_or(Error::NoPendingQuery)?;
        self.state.query = None;
        let moved = &self.state.center - u * (self.params.nu * observed);
        self.state.center = match &self.shrunk {
            Some(shrunk) => shrunk.project(&moved)?,
            None => Point::zeros(moved.len()),
        };
        self.state.round += 1;
        Ok(())
    }
}

/// Per-round record of a bandit run.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditRun {
    /// Played points `x_t`.
    pub queries: Vec<Point>,
    /// Centers `y_t`.
    pub centers: Vec<Point>,
    /// `c_t(x_t)`, the costs charged to the learner.
    pub costs: Vec<f64>,
    /// `c_t(y_t)`, diagnostic only.
    pub center_costs: Vec<f64>,
}

impl BanditRun {
    pub fn total(&self) -> f64 {
        self.costs.iter().sum()
    }

    pub fn center_total(&self) -> f64 {
        self.center_costs.iter().sum()
    }
}

/// Runs BGD over the whole sequence from `y_1 = 0`.
pub fn run_bgd(
    costs: &CostSequence,
    body: &ConvexBody,
    params: &BgdParams,
    stream: &mut RandomStream,
) -> Result<BanditRun> {
    run_bgd_with(costs, body, params, stream, Perturbation::Sphere)
}

pub fn run_bgd_with(
    costs: &CostSequence,
    body: &ConvexBody,
    params: &BgdParams,
    stream: &mut RandomStream,
    perturbation: Perturbation,
) -> Result<BanditRun> {
    check_dim(body.dim(), costs.dim())?;
    let mut learner = Bgd::new(body, params)?.with_perturbation(perturbation);
    let n = costs.len();
    let mut run = BanditRun {
        queries: Vec::with_capacity(n),
        centers: Vec::with_capacity(n),
        costs: Vec::with_capacity(n),
        center_costs: Vec::with_capacity(n),
    };
    for t in 0..n {
        let y = learner.state().center.clone();
        let x = learner.query(stream)?;
        let observed = costs.value(t, &x);
        learner.update(observed)?;
        run.center_costs.push(costs.value(t, &y));
        run.costs.push(observed);
        run.centers.push(y);
        run.queries.push(x);
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descent::{ogd_step, DescentConfig};

    fn p(v: &[f64]) -> Point {
        Point::from_row_slice(v)
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn general_schedule_worked_values() {
        let prm = params_general(1_000_000, 2, 1.0, 1.0, 1.0).unwrap();
        assert!(rel(prm.nu, 0.001) < 1e-12);
        assert!(rel(prm.delta, (4.0f64 / 1.2e7).cbrt()) < 1e-12);
        assert!(rel(prm.delta, 6.934e-3) < 5e-4);
        assert!(rel(prm.alpha, 0.14422) < 5e-5);
        assert!(rel(prm.step, prm.nu * prm.delta / 2.0) < 1e-15);
        assert!(rel(prm.gradient_bound, 2.0 / prm.delta) < 1e-15);
    }

    #[test]
    fn general_schedule_guard() {
        assert_eq!(general_min_horizon(2, 1.0, 1.0), 9);
        assert_eq!(
            params_general(8, 2, 1.0, 1.0, 1.0),
            Err(Error::HorizonTooSmall { n: 8, min_n: 9 })
        );
        let edge = params_general(9, 2, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(edge.alpha, 1.0);
        assert!(edge.delta <= edge.alpha * edge.inner_radius);
    }

    #[test]
    fn full_shrink_pins_the_center_at_the_origin() {
        let ball = ConvexBody::unit_ball(2).unwrap();
        let prm = params_general(9, 2, 1.0, 1.0, 1.0).unwrap();
        let mut b = Bgd::new(&ball, &prm).unwrap();
        assert!(b.shrunk_body().is_none());
        let mut s = RandomStream::new(1, 0);
        for _ in 0..9 {
            let x = b.query(&mut s).unwrap();
            assert!(ball.membership(&x).unwrap());
            b.update(0.7).unwrap();
            assert_eq!(b.state().center, Point::zeros(2));
        }
    }

    #[test]
    fn lipschitz_schedule_worked_values() {
        let prm = params_lipschitz(10_000, 1, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(rel(prm.nu, 0.01) < 1e-12);
        assert!(rel(prm.delta, 0.1 * (1.0f64 / 6.0).sqrt()) < 1e-12);
        assert!(rel(prm.delta, 0.040825) < 1e-5);
        assert_eq!(prm.alpha, prm.delta / prm.inner_radius);
    }

    #[test]
    fn lipschitz_delta_vanishes_with_large_l() {
        let mut last = f64::INFINITY;
        for l in [1.0, 10.0, 1e3, 1e6, 1e9] {
            let prm = params_lipschitz(10_000, 2, 1.0, 1.0, 1.0, l).unwrap();
            assert!(prm.delta < last);
            last = prm.delta;
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn lipschitz_guard_reports_min_horizon() {
        // huge R/r pushes delta/r above one for small n
        let err = params_lipschitz(10, 2, 0.01, 10.0, 1.0, 0.1).unwrap_err();
        let Error::HorizonTooSmall { min_n, .. } = err else {
            panic!("{err:?}")
        };
        assert!(params_lipschitz(min_n - 1, 2, 0.01, 10.0, 1.0, 0.1).is_err());
        assert!(params_lipschitz(min_n, 2, 0.01, 10.0, 1.0, 0.1).is_ok());
    }

    #[test]
    fn query_examples() {
        let ball = ConvexBody::unit_ball(2).unwrap();
        let prm = BgdParams::manual(2, 0.1, 0.1, 0.5, 1.0).unwrap();
        let mut b = Bgd::new(&ball, &prm).unwrap();
        assert_eq!(b.query_with(p(&[1.0, 0.0])).unwrap(), p(&[0.1, 0.0]));

        let degenerate = BgdParams::manual(2, 0.1, 0.0, 0.5, 1.0).unwrap();
        let mut b = Bgd::new(&ball, &degenerate).unwrap();
        let mut s = RandomStream::new(0, 0);
        assert_eq!(b.query(&mut s).unwrap(), Point::zeros(2));
    }

    #[test]
    fn update_examples() {
        let ball = ConvexBody::unit_ball(2).unwrap();
        let prm = BgdParams::manual(2, 0.1, 0.1, 0.5, 1.0).unwrap();
        let mut b = Bgd::new(&ball, &prm).unwrap();
        b.query_with(p(&[1.0, 0.0])).unwrap();
        b.update(1.0).unwrap();
        assert!((&b.state().center - p(&[-0.1, 0.0])).norm() < 1e-15);

        let y = b.state().center.clone();
        b.query_with(p(&[0.0, 1.0])).unwrap();
        b.update(0.0).unwrap();
        assert_eq!(b.state().center, y);
        assert_eq!(b.state().round, 2);
    }

    #[test]
    fn update_contract_violations() {
        let ball = ConvexBody::unit_ball(2).unwrap();
        let prm = BgdParams::manual(2, 0.1, 0.1, 0.5, 1.0).unwrap();
        let mut b = Bgd::new(&ball, &prm).unwrap();
        assert_eq!(b.update(0.5), Err(Error::NoPendingQuery));
        b.query_with(p(&[1.0, 0.0])).unwrap();
        assert!(matches!(b.update(1.5), Err(Error::CostBound { .. })));
        assert!(matches!(b.update(f64::NAN), Err(Error::CostBound { .. })));
    }

    #[test]
    fn unsafe_delta_is_rejected() {
        let ball = ConvexBody::unit_ball(2).unwrap();
        let prm = BgdParams::manual(2, 0.1, 0.3, 0.2, 1.0).unwrap();
        assert!(Bgd::new(&ball, &prm).is_err());
    }

    #[test]
    fn update_equals_projected_step_on_smoothed_costs() {
        let mut s = RandomStream::new(99, 0);
        for _ in 0..1000 {
            let d = 1 + s.index(4);
            let body = ConvexBody::cube(d, 1.0).unwrap();
            let alpha = s.uniform_in(0.05, 0.9);
            let delta = alpha * s.uniform_in(0.01, 1.0);
            let nu = s.uniform_in(1e-3, 0.5);
            let c = 2.0;
            let prm = BgdParams::manual(d, nu, delta, alpha, c).unwrap();
            let mut b = Bgd::new(&body, &prm).unwrap();
            // move the center somewhere inside the shrunk body first
            b.query(&mut s).unwrap();
            b.update(s.uniform_in(-c, c)).unwrap();
            let y = b.state().center.clone();
            b.query(&mut s).unwrap();
            let u = b.state().direction.clone().unwrap();
            let obs = s.uniform_in(-c, c);
            b.update(obs).unwrap();

            let cfg = DescentConfig {
                step: nu * delta / d as f64,
                gradient_bound: d as f64 * c / delta,
                body: body.shrink(alpha).unwrap(),
                horizon: 1,
            };
            let g = &u * (d as f64 / delta * obs);
            let via_descent = ogd_step(&y, &g, &cfg).unwrap();
            assert!((via_descent - &b.state().center).amax() <= 1e-12);
        }
    }
}
