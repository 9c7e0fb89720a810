//! Seeded random streams.
//!
//! A stream is identified by `(seed, stream id)`. The same pair always replays
//! the same sequence; different stream ids select independent ChaCha streams
//! under one key, so trials and sub-tasks never share draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::Point;

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream: u64,
    draws: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            seed,
            stream,
            draws: 0,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Number of primitive draws taken so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        self.rng.random::<f64>()
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.draws += 1;
        self.rng.sample(StandardNormal)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.draws += 1;
        self.rng.random_range(0..n)
    }

    /// Vector of independent `±1` entries.
    pub fn rademacher(&mut self, d: usize) -> Point {
        Point::from_fn(d, |_, _| {
            self.draws += 1;
            if self.rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        })
    }

    /// Uniform draw from the unit sphere in `R^d`: normalized standard normals.
    pub fn unit_sphere(&mut self, d: usize) -> Result<Point> {
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        loop {
            let g = Point::from_fn(d, |_, _| self.normal());
            let norm = g.norm();
            if norm > 0.0 && norm.is_finite() {
                return Ok(g / norm);
            }
        }
    }

    /// Uniform draw from the solid unit ball: a sphere draw scaled by `U^(1/d)`.
    pub fn unit_ball(&mut self, d: usize) -> Result<Point> {
        let u = self.unit_sphere(d)?;
        let radius = self.uniform().powf(1.0 / d as f64);
        Ok(u * radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::MeanAccumulator;

    #[test]
    fn zero_dimension_is_rejected() {
        let mut s = RandomStream::new(1, 0);
        assert!(s.unit_sphere(0).is_err());
        assert!(s.unit_ball(0).is_err());
    }

    #[test]
    fn sphere_in_one_dimension_is_two_points_with_equal_mass() {
        let mut s = RandomStream::new(7, 0);
        let mut plus = 0;
        for _ in 0..10_000 {
            let u = s.unit_sphere(1).unwrap();
            assert!(u[0] == 1.0 || u[0] == -1.0);
            if u[0] > 0.0 {
                plus += 1;
            }
        }
        let freq = plus as f64 / 10_000.0;
        assert!((freq - 0.5).abs() <= 0.01, "freq {freq}");
    }

    #[test]
    fn sphere_draws_have_unit_norm() {
        let mut s = RandomStream::new(3, 1);
        for d in 1..=9 {
            for _ in 0..200 {
                let u = s.unit_sphere(d).unwrap();
                assert!((u.norm() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn sphere_second_moment_is_identity_over_d() {
        // E[u u^T] = I/3 for d = 3; 1e6 draws, entrywise within 3e-3.
        let mut s = RandomStream::new(11, 0);
        let n = 1_000_000;
        let mut m = nalgebra::DMatrix::<f64>::zeros(3, 3);
        let mut mean = Point::zeros(3);
        for _ in 0..n {
            let u = s.unit_sphere(3).unwrap();
            m += &u * u.transpose();
            mean += &u;
        }
        let second = m / n as f64 - nalgebra::DMatrix::<f64>::identity(3, 3) / 3.0;
        assert!(second.amax() <= 3e-3);
        // symmetry smoke test: |mean| <= 3 * 5 / sqrt(n)
        let mean_norm = (mean / n as f64).norm();
        assert!(mean_norm <= 3.0 * 5.0 / (n as f64).sqrt(), "{mean_norm}");
    }

    #[test]
    fn ball_draws_stay_inside_and_match_moments() {
        let mut s = RandomStream::new(5, 2);
        let mut acc = MeanAccumulator::new(1);
        for _ in 0..100_000 {
            let v = s.unit_ball(2).unwrap();
            assert!(v.norm() <= 1.0);
            acc.push_scalar(v.norm_squared());
        }
        // E|v|^2 = d/(d+2) = 0.5
        assert!((acc.mean()[0] - 0.5).abs() <= 0.01);

        let mut acc = MeanAccumulator::new(1);
        for _ in 0..100_000 {
            acc.push_scalar(s.unit_ball(1).unwrap()[0]);
        }
        assert!(acc.mean()[0].abs() <= 0.01);
    }

    #[test]
    fn replay_is_bit_identical() {
        let mut a = RandomStream::new(42, 9);
        let mut b = RandomStream::new(42, 9);
        for _ in 0..100 {
            assert_eq!(a.unit_sphere(4).unwrap(), b.unit_sphere(4).unwrap());
        }
        let mut c = RandomStream::new(42, 10);
        assert_ne!(
            RandomStream::new(42, 9).unit_sphere(4).unwrap(),
            c.unit_sphere(4).unwrap()
        );
    }
}
