//! Quadratic forms `x^T Q x + b . x + c`.
//!
//! Every benchmark cost (isotropic quadratics, linear costs, and their affine
//! pullbacks) is a quadratic form, so sums over a horizon collapse into a
//! single form and smoothing over a ball has a closed form.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{check_dim, Result};
use crate::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    q: DMatrix<f64>,
    b: Point,
    c: f64,
}

impl QuadraticForm {
    /// Builds `x^T Q x + b . x + c`; `Q` is symmetrized.
    pub fn new(q: DMatrix<f64>, b: Point, c: f64) -> Result<Self> {
        check_dim(b.len(), q.nrows())?;
        check_dim(b.len(), q.ncols())?;
        let q = (&q + q.transpose()) * 0.5;
        Ok(Self { q, b, c })
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self {
            q: DMatrix::zeros(dim, dim),
            b: Point::zeros(dim),
            c,
        }
    }

    pub fn linear(coef: Point) -> Self {
        let d = coef.len();
        Self {
            q: DMatrix::zeros(d, d),
            b: coef,
            c: 0.0,
        }
    }

    /// `scale * |x - target|^2`.
    pub fn isotropic(scale: f64, target: &Point) -> Self {
        let d = target.len();
        Self {
            q: DMatrix::identity(d, d) * scale,
            b: target * (-2.0 * scale),
            c: scale * target.norm_squared(),
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn linear_part(&self) -> &Point {
        &self.b
    }

    pub fn offset(&self) -> f64 {
        self.c
    }

    pub fn value(&self, x: &Point) -> f64 {
        x.dot(&(&self.q * x)) + self.b.dot(x) + self.c
    }

    pub fn gradient(&self, x: &Point) -> Point {
        &self.q * x * 2.0 + &self.b
    }

    /// Exact average of the form over the ball of radius `delta` around `x`:
    /// `f(x) + delta^2 tr(Q) / (d + 2)`.
    pub fn smoothed_value(&self, x: &Point, delta: f64) -> f64 {
        let d = self.dim() as f64;
        self.value(x) + delta * delta * self.q.trace() / (d + 2.0)
    }

    /// Gradient of the smoothed form. The smoothing offset is constant in `x`,
    /// so this is the plain gradient.
    pub fn smoothed_gradient(&self, x: &Point) -> Point {
        self.gradient(x)
    }

    pub fn is_convex(&self) -> bool {
        if self.q.iter().all(|v| *v == 0.0) {
            return true;
        }
        let eig = SymmetricEigen::new(self.q.clone());
        let scale = eig.eigenvalues.amax().max(1.0);
        eig.eigenvalues.min() >= -1e-12 * scale
    }

    pub fn add_assign(&mut self, other: &QuadraticForm) {
        self.q += &other.q;
        self.b += &other.b;
        self.c += other.c;
    }

    /// The form composed with the affine map `u -> A u + shift`.
    pub fn pullback(&self, a: &DMatrix<f64>, shift: &Point) -> QuadraticForm {
        let qa = &self.q * a;
        let q = a.transpose() * &qa;
        let b = a.transpose() * (&self.q * shift * 2.0 + &self.b);
        let c = self.value(shift);
        QuadraticForm {
            q: (&q + q.transpose()) * 0.5,
            b,
            c,
        }
    }
}
