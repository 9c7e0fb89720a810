//! Oblivious cost sequences.
//!
//! A [`CostSequence`] is fixed at construction: it owns every round's cost and
//! exposes evaluation by round index only, so no cost can depend on the
//! points a learner plays. Each constructor declares the bound `C` (and a
//! Lipschitz constant `L` where one exists) analytically; [`validate`] checks
//! those declarations by sampling.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{check_dim, invalid, Result};
use crate::function::QuadraticForm;
use crate::geometry::ConvexBody;
use crate::reshape::{sample_uniform, AffineTransform};
use crate::sampling::RandomStream;
use crate::{Point, MEMBERSHIP_TOL};

type CostFn = dyn Fn(&Point) -> f64 + Send + Sync;

/// A single convex cost function.
#[derive(Clone)]
pub enum Cost {
    Form(QuadraticForm),
    /// Arbitrary function without an analytic gradient.
    Custom(Arc<CostFn>),
}

impl Cost {
    pub fn from_form(form: QuadraticForm) -> Self {
        Cost::Form(form)
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        Cost::Custom(Arc::new(f))
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self {
            Cost::Form(q) => q.value(x),
            Cost::Custom(f) => f(x),
        }
    }

    pub fn gradient(&self, x: &Point) -> Option<Point> {
        match self {
            Cost::Form(q) => Some(q.gradient(x)),
            Cost::Custom(_) => None,
        }
    }

    pub fn as_form(&self) -> Option<&QuadraticForm> {
        match self {
            Cost::Form(q) => Some(q),
            Cost::Custom(_) => None,
        }
    }
}

impl fmt::Debug for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Form(q) => f.debug_tuple("Form").field(q).finish(),
            Cost::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Direction schedule for drifting linear costs.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectionSchedule {
    Constant(Point),
    /// `+w` on even rounds, `-w` on odd rounds.
    Alternating(Point),
    /// `w_t = cos(theta_t) e_1 + sin(theta_t) e_2` with
    /// `theta_t = 2 pi turns t / n`; needs `d >= 2`.
    Rotating {
        turns: f64,
    },
    Explicit(Vec<Point>),
}

struct Inner {
    name: String,
    body: ConvexBody,
    pieces: Vec<Cost>,
    schedule: Vec<usize>,
    bound: f64,
    lipschitz: Option<f64>,
    pullback: Option<AffineTransform>,
    aggregate: OnceLock<Option<QuadraticForm>>,
}

/// A fixed sequence `c_1, ..., c_n : S -> [-C, C]`.
#[derive(Clone)]
pub struct CostSequence {
    inner: Arc<Inner>,
}

impl CostSequence {
    /// General constructor: round `t` uses `pieces[schedule[t]]`.
    pub fn new(
        name: impl Into<String>,
        body: &ConvexBody,
        pieces: Vec<Cost>,
        schedule: Vec<usize>,
        bound: f64,
        lipschitz: Option<f64>,
    ) -> Result<Self> {
        if schedule.is_empty() {
            return Err(invalid("n", "horizon must be at least 1"));
        }
        if let Some(i) = schedule.iter().find(|&&i| i >= pieces.len()) {
            return Err(invalid("schedule", format!("piece index {i} out of range")));
        }
        for piece in &pieces {
            if let Cost::Form(q) = piece {
                check_dim(body.dim(), q.dim())?;
            }
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(invalid("C", format!("must be positive, got {bound}")));
        }
        if let Some(l) = lipschitz {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(invalid("L", format!("must be non-negative, got {l}")));
            }
        }
        Ok(Self {
            inner: Arc::new(Inner {
                name: name.into(),
                body: body.clone(),
                pieces,
                schedule,
                bound,
                lipschitz,
                pullback: None,
                aggregate: OnceLock::new(),
            }),
        })
    }

    /// One cost per round.
    pub fn from_costs(
        name: impl Into<String>,
        body: &ConvexBody,
        costs: Vec<Cost>,
        bound: f64,
        lipschitz: Option<f64>,
    ) -> Result<Self> {
        let schedule = (0..costs.len()).collect();
        Self::new(name, body, costs, schedule, bound, lipschitz)
    }

    /// `c_t(x) = s |x - x*|^2` for every round, with `C = s (R + |x*|)^2` and
    /// `L = 2 s (R + |x*|)`.
    pub fn fixed_quadratic(
        body: &ConvexBody,
        target: &Point,
        scale: f64,
        n: usize,
    ) -> Result<Self> {
        check_target(body, target)?;
        check_scale(scale)?;
        let (bound, lipschitz) = quadratic_bounds(body, target, scale);
        Self::new(
            "fixed-quadratic",
            body,
            vec![Cost::Form(QuadraticForm::isotropic(scale, target))],
            vec![0; n],
            bound,
            Some(lipschitz),
        )
    }

    /// `c_t(x) = a w_t . x` with `C = a R` and `L = a`.
    pub fn drifting_linear(
        body: &ConvexBody,
        directions: &DirectionSchedule,
        magnitude: f64,
        n: usize,
    ) -> Result<Self> {
        let d = body.dim();
        if !(magnitude > 0.0 && magnitude.is_finite()) {
            return Err(invalid("magnitude", "must be positive"));
        }
        let unit = |w: &Point| -> Result<()> {
            check_dim(d, w.len())?;
            if (w.norm() - 1.0).abs() > 1e-9 {
                return Err(invalid("direction", "directions must be unit vectors"));
            }
            Ok(())
        };
        let linear = |w: &Point| Cost::Form(QuadraticForm::linear(w * magnitude));
        let (name, pieces, schedule) = match directions {
            DirectionSchedule::Constant(w) => {
                unit(w)?;
                ("constant-linear", vec![linear(w)], vec![0; n])
            }
            DirectionSchedule::Alternating(w) => {
                unit(w)?;
                let neg = -w.clone();
                (
                    "alternating-linear",
                    vec![linear(w), linear(&neg)],
                    (0..n).map(|t| t % 2).collect(),
                )
            }
            DirectionSchedule::Rotating { turns } => {
                if d < 2 {
                    return Err(invalid("directions", "rotating schedule needs d >= 2"));
                }
                let pieces = (0..n)
                    .map(|t| {
                        let theta = std::f64::consts::TAU * turns * t as f64 / n as f64;
                        let mut w = Point::zeros(d);
                        w[0] = theta.cos();
                        w[1] = theta.sin();
                        linear(&w)
                    })
                    .collect();
                ("drifting-linear", pieces, (0..n).collect())
            }
            DirectionSchedule::Explicit(ws) => {
                if ws.len() != n {
                    return Err(invalid("directions", "need one direction per round"));
                }
                ws.iter().try_for_each(unit)?;
                (
                    "drifting-linear",
                    ws.iter().map(linear).collect(),
                    (0..n).collect(),
                )
            }
        };
        let (_, big_r) = body.radii();
        Self::new(
            name,
            body,
            pieces,
            schedule,
            magnitude * big_r,
            Some(magnitude),
        )
    }

    /// Quadratic pulled to `early` on rounds `t < switch_round` (0-based) and
    /// to `late` afterwards. Bounds are the maximum over both phases.
    pub fn abrupt_switch(
        body: &ConvexBody,
        early: &Point,
        late: &Point,
        switch_round: usize,
        scale: f64,
        n: usize,
    ) -> Result<Self> {
        check_target(body, early)?;
        check_target(body, late)?;
        check_scale(scale)?;
        let (c1, l1) = quadratic_bounds(body, early, scale);
        let (c2, l2) = quadratic_bounds(body, late, scale);
        Self::new(
            "abrupt-switch",
            body,
            vec![
                Cost::Form(QuadraticForm::isotropic(scale, early)),
                Cost::Form(QuadraticForm::isotropic(scale, late)),
            ],
            (0..n).map(|t| usize::from(t >= switch_round)).collect(),
            c1.max(c2),
            Some(l1.max(l2)),
        )
    }

    /// Costs `u -> c_t(transform^{-1}(u))` on `body` (the transformed body),
    /// declaring `C` unchanged and Lipschitz constant `lipschitz`.
    pub(crate) fn pulled_back(
        &self,
        transform: &AffineTransform,
        body: &ConvexBody,
        lipschitz: Option<f64>,
    ) -> Result<Self> {
        if self.inner.pullback.is_some() {
            return Err(invalid("costs", "sequence is already transformed"));
        }
        check_dim(self.dim(), transform.dim())?;
        Ok(Self {
            inner: Arc::new(Inner {
                name: self.inner.name.clone(),
                body: body.clone(),
                pieces: self.inner.pieces.clone(),
                schedule: self.inner.schedule.clone(),
                bound: self.inner.bound,
                lipschitz,
                pullback: Some(transform.clone()),
                aggregate: OnceLock::new(),
            }),
        })
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn body(&self) -> &ConvexBody {
        &self.inner.body
    }

    pub fn dim(&self) -> usize {
        self.inner.body.dim()
    }

    /// Horizon `n`.
    pub fn len(&self) -> usize {
        self.inner.schedule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.schedule.is_empty()
    }

    /// Declared bound `C`.
    pub fn bound(&self) -> f64 {
        self.inner.bound
    }

    /// Declared Lipschitz constant, if any.
    pub fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz
    }

    pub fn transform(&self) -> Option<&AffineTransform> {
        self.inner.pullback.as_ref()
    }

    pub fn has_gradients(&self) -> bool {
        self.inner.pieces.iter().all(|c| matches!(c, Cost::Form(_)))
    }

    /// `c_t(x)` for the 0-based round `t`.
    pub fn value(&self, t: usize, x: &Point) -> f64 {
        let piece = &self.inner.pieces[self.inner.schedule[t]];
        match &self.inner.pullback {
            None => piece.value(x),
            Some(tr) => piece.value(&tr.invert(x)),
        }
    }

    /// `grad c_t(x)` when the round's cost has an analytic gradient.
    pub fn gradient(&self, t: usize, x: &Point) -> Option<Point> {
        let piece = &self.inner.pieces[self.inner.schedule[t]];
        match &self.inner.pullback {
            None => piece.gradient(x),
            Some(tr) => piece
                .gradient(&tr.invert(x))
                .map(|g| tr.inverse_matrix().transpose() * g),
        }
    }

    /// The sum of all rounds as one quadratic form, when every cost is a form.
    pub fn aggregate(&self) -> Option<&QuadraticForm> {
        self.inner
            .aggregate
            .get_or_init(|| {
                let d = self.dim();
                let mut counts = vec![0usize; self.inner.pieces.len()];
                for &i in &self.inner.schedule {
                    counts[i] += 1;
                }
                let mut total = QuadraticForm::constant(d, 0.0);
                for (piece, &count) in self.inner.pieces.iter().zip(&counts) {
                    if count == 0 {
                        continue;
                    }
                    let form = piece.as_form()?;
                    let weighted = QuadraticForm::new(
                        form.matrix() * count as f64,
                        form.linear_part() * count as f64,
                        form.offset() * count as f64,
                    )
                    .expect("dimensions checked at construction");
                    total.add_assign(&weighted);
                }
                Some(match &self.inner.pullback {
                    None => total,
                    Some(tr) => total.pullback(tr.inverse_matrix(), tr.center()),
                })
            })
            .as_ref()
    }

    /// `sum_t c_t(x)`.
    pub fn total_value(&self, x: &Point) -> f64 {
        match self.aggregate() {
            Some(form) => form.value(x),
            None => (0..self.len()).map(|t| self.value(t, x)).sum(),
        }
    }

    /// `sum_t grad c_t(x)` when available.
    pub fn total_gradient(&self, x: &Point) -> Option<Point> {
        self.aggregate().map(|form| form.gradient(x))
    }
}

impl fmt::Debug for CostSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostSequence")
            .field("name", &self.inner.name)
            .field("n", &self.len())
            .field("C", &self.inner.bound)
            .field("L", &self.inner.lipschitz)
            .field("transformed", &self.inner.pullback.is_some())
            .finish()
    }
}

fn check_target(body: &ConvexBody, target: &Point) -> Result<()> {
    if !body.membership(target)? {
        return Err(invalid("target", "target point lies outside the body"));
    }
    Ok(())
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid("scale", format!("must be positive, got {scale}")));
    }
    Ok(())
}

fn quadratic_bounds(body: &ConvexBody, target: &Point, scale: f64) -> (f64, f64) {
    let (_, big_r) = body.radii();
    let reach = big_r + target.norm();
    (scale * reach * reach, 2.0 * scale * reach)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Bound,
    Lipschitz,
    MidpointConvexity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub check: Check,
    pub round: usize,
    pub witness: Point,
    pub partner: Option<Point>,
    /// Amount by which the inequality failed.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub samples: usize,
    pub violation_count: usize,
    /// The first few violations, with witness points.
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

const MAX_REPORTED_VIOLATIONS: usize = 16;

/// Samples `m` point pairs in the body (half uniform, half on the boundary)
/// at random rounds and checks `|c_t| <= C`, the declared Lipschitz constant,
/// and midpoint convexity, each with slack `1e-9`.
pub fn validate(
    costs: &CostSequence,
    stream: &mut RandomStream,
    m: usize,
) -> Result<ValidationReport> {
    let body = costs.body();
    let (_, big_r) = body.radii();
    let draw = |stream: &mut RandomStream, boundary: bool| -> Result<Point> {
        if boundary {
            let w = stream.unit_sphere(body.dim())?;
            body.project(&(w * (2.0 * big_r)))
        } else {
            sample_uniform(body, stream)
        }
    };
    let mut report = ValidationReport {
        samples: m,
        violation_count: 0,
        violations: Vec::new(),
    };
    let record = |report: &mut ValidationReport, v: Violation| {
        report.violation_count += 1;
        if report.violations.len() < MAX_REPORTED_VIOLATIONS {
            report.violations.push(v);
        }
    };
    let c = costs.bound();
    for k in 0..m {
        let t = stream.index(costs.len());
        let x = draw(stream, k % 2 == 1)?;
        let y = draw(stream, k % 4 == 3)?;
        let (cx, cy) = (costs.value(t, &x), costs.value(t, &y));
        for (point, value) in [(&x, cx), (&y, cy)] {
            let excess = value.abs() - c;
            if excess > MEMBERSHIP_TOL || !value.is_finite() {
                record(
                    &mut report,
                    Violation {
                        check: Check::Bound,
                        round: t,
                        witness: point.clone(),
                        partner: None,
                        excess,
                    },
                );
            }
        }
        if let Some(l) = costs.lipschitz() {
            let excess = (cx - cy).abs() - l * (&x - &y).norm();
            if excess > MEMBERSHIP_TOL {
                record(
                    &mut report,
                    Violation {
                        check: Check::Lipschitz,
                        round: t,
                        witness: x.clone(),
                        partner: Some(y.clone()),
                        excess,
                    },
                );
            }
        }
        let mid = (&x + &y) * 0.5;
        let excess = costs.value(t, &mid) - 0.5 * (cx + cy);
        if excess > MEMBERSHIP_TOL {
            record(
                &mut report,
                Violation {
                    check: Check::MidpointConvexity,
                    round: t,
                    witness: mid,
                    partner: Some(x.clone()),
                    excess,
                },
            );
        }
    }
    Ok(report)
}
